import numpy as np
import pytest

from snspd_pnr import TraceSet, WaveformParseError, WeightPoint
from snspd_pnr.wavefile import (
    HEADER_SIZE,
    MAGIC,
    read_label_table,
    read_waveform,
    read_weight_table,
    write_edge_table,
    write_label_table,
    write_waveform,
    write_weight_table,
)


def _sample_set(rng, n=7, length=32, label=2.5):
    data = rng.normal(0.0, 0.1, (n, length)).astype(np.float32).astype(float)
    return TraceSet(data, 8e-12, mean_photon_number_label=label)


def test_round_trip_is_bitwise(tmp_path):
    rng = np.random.default_rng(1)
    ts = _sample_set(rng)
    path = tmp_path / "w.pnrw"
    write_waveform(path, ts)
    back = read_waveform(path)
    assert back.samples.astype("<f4").tobytes() == ts.samples.astype("<f4").tobytes()
    assert back.sample_period == ts.sample_period
    assert back.mean_photon_number_label == 2.5
    assert len(back) == len(ts) and back.n_samples == ts.n_samples
    # Writing what was read reproduces the file byte for byte.
    path2 = tmp_path / "w2.pnrw"
    write_waveform(path2, back)
    assert path2.read_bytes() == path.read_bytes()


def test_unlabeled_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    ts = _sample_set(rng, label=None)
    path = tmp_path / "u.pnrw"
    write_waveform(path, ts)
    assert read_waveform(path).mean_photon_number_label is None


def test_header_layout(tmp_path):
    rng = np.random.default_rng(3)
    ts = _sample_set(rng, n=4, length=16)
    path = tmp_path / "h.pnrw"
    write_waveform(path, ts)
    blob = path.read_bytes()
    assert blob[:5] == MAGIC
    assert len(blob) == HEADER_SIZE + 4 * 16 * 4
    assert int.from_bytes(blob[5:13], "little") == 8000  # 8 ps in femtoseconds
    assert int.from_bytes(blob[13:17], "little") == 16
    assert int.from_bytes(blob[17:25], "little") == 4


def test_bad_magic_offset_zero(tmp_path):
    path = tmp_path / "bad.pnrw"
    path.write_bytes(b"XXXXX" + bytes(40))
    with pytest.raises(WaveformParseError) as info:
        read_waveform(path)
    assert info.value.offset == 0
    assert "byte offset 0" in str(info.value)


def test_truncated_header_names_offset(tmp_path):
    path = tmp_path / "short.pnrw"
    path.write_bytes(MAGIC + bytes(10))
    with pytest.raises(WaveformParseError) as info:
        read_waveform(path)
    assert info.value.offset == 15


def test_truncated_payload_names_offset(tmp_path):
    rng = np.random.default_rng(4)
    ts = _sample_set(rng, n=3, length=8)
    path = tmp_path / "t.pnrw"
    write_waveform(path, ts)
    blob = path.read_bytes()
    path.write_bytes(blob[:-5])
    with pytest.raises(WaveformParseError) as info:
        read_waveform(path)
    assert info.value.offset == len(blob) - 5


def test_weight_table_round_trip(tmp_path):
    points = [WeightPoint(0.123456789012345, -2.5e-9, trace_id=3),
              WeightPoint(1.0, 2.0, trace_id=0)]
    path = tmp_path / "w.csv"
    write_weight_table(path, points)
    text = path.read_text()
    assert text.startswith("# trace_id,w1,w2\n")
    assert "0.123456789012345" in text  # 15 significant digits
    back = read_weight_table(path)
    assert [(p.trace_id, p.w1, p.w2) for p in back] == \
        [(p.trace_id, p.w1, p.w2) for p in points]


def test_edge_table_header(tmp_path):
    path = tmp_path / "e.csv"
    write_edge_table(path, [WeightPoint(1e-9, 2e-9, trace_id=1)])
    assert path.read_text().startswith("# trace_id,t_rise,t_fall\n")


def test_weight_table_malformed_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# trace_id,w1,w2\n1,2.0\n")
    with pytest.raises(ValueError, match="expected 3"):
        read_weight_table(path)


def test_label_table_round_trip(tmp_path):
    path = tmp_path / "labels.csv"
    write_label_table(path, [0, 1, 2], [3, 0, 1])
    assert read_label_table(path) == {0: 3, 1: 0, 2: 1}
