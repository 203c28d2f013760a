"""Binary waveform files and delimited-text tables.

The waveform container is a minimal little-endian format:

    magic   5 bytes  b"PNRW1"
    header  u64 sample period in femtoseconds
            u32 samples per trace
            u64 trace count
            f64 mean photon number label (NaN = unlabeled)
    payload trace-major float32 volts

Text tables are ASCII, comma-separated, with '#'-prefixed header lines and
floats printed to 15 significant digits.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

from .errors import WaveformParseError
from .pca import WeightPoint
from .waveform import Source, TraceSet

MAGIC = b"PNRW1"
_HEADER = struct.Struct("<QIQd")
HEADER_SIZE = len(MAGIC) + _HEADER.size


def _fmt(x: float) -> str:
    return f"{x:.15g}"


def write_waveform(path, trace_set: TraceSet) -> None:
    """Write a trace set; voltages are stored as little-endian float32."""
    path = Path(path)
    period_fs = round(trace_set.sample_period * 1e15)
    if period_fs < 1:
        raise ValueError("sample period below 1 fs cannot be represented")
    label = trace_set.mean_photon_number_label
    header = _HEADER.pack(
        period_fs,
        trace_set.n_samples,
        len(trace_set),
        float("nan") if label is None else float(label),
    )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header)
        fh.write(np.ascontiguousarray(trace_set.samples, dtype="<f4").tobytes())


def read_waveform(path, source: Source = Source.MEASURED) -> TraceSet:
    """Read a waveform file; malformed input raises with the byte offset."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < len(MAGIC):
        raise WaveformParseError("file too short for magic bytes", offset=len(blob))
    if blob[: len(MAGIC)] != MAGIC:
        raise WaveformParseError(f"bad magic {blob[:len(MAGIC)]!r}, expected {MAGIC!r}", offset=0)
    if len(blob) < HEADER_SIZE:
        raise WaveformParseError("file truncated inside the header", offset=len(blob))
    period_fs, n_samples, n_traces, label = _HEADER.unpack_from(blob, len(MAGIC))
    if period_fs == 0:
        raise WaveformParseError("sample period must be positive", offset=len(MAGIC))
    if n_samples == 0 or n_traces == 0:
        raise WaveformParseError("empty trace geometry", offset=len(MAGIC) + 8)
    expected = n_traces * n_samples * 4
    payload = blob[HEADER_SIZE:]
    if len(payload) != expected:
        raise WaveformParseError(
            f"payload holds {len(payload)} bytes, expected {expected}",
            offset=HEADER_SIZE + min(len(payload), expected),
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n_traces, n_samples)
    return TraceSet(
        samples=data.astype(float),
        sample_period=period_fs * 1e-15,
        t0=0.0,
        mean_photon_number_label=None if math.isnan(label) else label,
        source=source,
    )


def write_weight_table(path, points: list[WeightPoint], columns=("w1", "w2")) -> None:
    """Weight points as a delimited table: trace_id, w1, w2."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# trace_id,{columns[0]},{columns[1]}\n")
        for p in points:
            fh.write(f"{p.trace_id},{_fmt(p.w1)},{_fmt(p.w2)}\n")


def read_weight_table(path) -> list[WeightPoint]:
    points = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 comma-separated fields")
            try:
                points.append(WeightPoint(float(parts[1]), float(parts[2]), trace_id=int(parts[0])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return points


def write_edge_table(path, points: list[WeightPoint]) -> None:
    """Edge pairs as a delimited table: trace_id, t_rise, t_fall in seconds."""
    write_weight_table(path, points, columns=("t_rise", "t_fall"))


read_edge_table = read_weight_table


def write_label_table(path, ids, true_n) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# trace_id,true_n\n")
        for i, n in zip(ids, true_n):
            fh.write(f"{int(i)},{int(n)}\n")


def read_label_table(path) -> dict[int, int]:
    labels: dict[int, int] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 comma-separated fields")
            labels[int(parts[0])] = int(parts[1])
    return labels
