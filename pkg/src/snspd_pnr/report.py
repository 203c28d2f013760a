"""Run-report assembly, plot-data emission and vector-graphic rendering.

A run report is a self-contained JSON document: filter tallies, a summary of
the component basis, the chosen projection, the fitted mixture, per-photon
-number confidences and the histogram data needed to re-render every figure
without the raw traces. Serialisation is canonical (sorted keys, fixed float
repr, no timestamps), so identical runs produce byte-identical documents.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .discriminate import (  # noqa: E402
    ConfidenceReport,
    Hist2D,
    PoissonMixture,
    ProjectionModel,
    binned_histogram,
    hist2d,
)
from .pca import PcaBasis  # noqa: E402
from .preprocess import FilterReport  # noqa: E402

plt.rcParams["svg.hashsalt"] = "snspd-pnr"

REPORT_FORMAT = "pnr-run-report/1"


def _listify(arr) -> list:
    return [float(x) for x in np.asarray(arr).ravel()]


def _fmt(x: float) -> str:
    return f"{x:.15g}"


def filter_summary(report: FilterReport) -> dict:
    return {
        "accepted": report.accepted,
        "rejected_zero": report.rejected_zero,
        "rejected_multipeak": report.rejected_multipeak,
        "rejected_delay": report.rejected_delay,
        "baseline_sigma": float(report.baseline_sigma),
    }


def basis_summary(basis: PcaBasis) -> dict:
    return {
        "n_components": basis.n_components,
        "trace_length": basis.n_samples,
        "explained_variance": _listify(basis.explained_variance),
        "explained_variance_ratio": _listify(basis.explained_variance_ratio),
    }


def mixture_summary(mix: PoissonMixture) -> dict:
    return {
        "n_bar": float(mix.n_bar),
        "n_min": int(mix.n_min),
        "k": int(mix.k),
        "means": _listify(mix.means),
        "sigmas": _listify(mix.sigmas),
        "amplitudes": _listify(mix.amplitudes),
        "scale": float(mix.scale),
        "fit_residual": float(mix.fit_residual),
        "pair_overlap": [bool(b) for b in mix.pair_overlap],
        "n_max_resolved": int(mix.n_max_resolved),
    }


def confidence_summary(conf: ConfidenceReport) -> dict:
    return {
        "per_n": {str(n): float(c) for n, c in sorted(conf.per_n.items())},
        "angle_deg": float(conf.angle),
        "fit_residual": float(conf.fit_residual),
        "n_max_reported": int(conf.n_max_reported),
    }


def hist2d_summary(h: Hist2D) -> dict:
    return {
        "x_edges": _listify(h.x_edges),
        "y_edges": _listify(h.y_edges),
        "counts": [[int(c) for c in row] for row in h.counts],
    }


def build_path_section(points, model: ProjectionModel, mix: PoissonMixture,
                       conf: ConfidenceReport, bins: int | None = None) -> dict:
    """Assemble one analysis path (PCA weights or edge times) for the report."""
    values = model.apply(points)
    counts, edges = binned_histogram(values)
    centers = 0.5 * (edges[:-1] + edges[1:])
    fit_curve = mix.expected_counts(centers, float(edges[1] - edges[0]))
    h2 = hist2d(points, bins=bins)
    return {
        "projection": {
            "angle_deg": float(model.angle),
            "flip": bool(model.flip),
            "score": float(model.score),
        },
        "mixture": mixture_summary(mix),
        "confidence": confidence_summary(conf),
        "histogram_2d": hist2d_summary(h2),
        "projected_histogram": {
            "edges": _listify(edges),
            "counts": [int(c) for c in counts],
            "fit": _listify(fit_curve),
        },
    }


def build_run_report(paths: dict, filters: dict | None = None,
                     basis: PcaBasis | None = None) -> dict:
    doc = {"format": REPORT_FORMAT, "paths": paths}
    if filters:
        doc["filters"] = filters
    if basis is not None:
        doc["basis"] = basis_summary(basis)
    return doc


def run_report_bytes(doc: dict) -> bytes:
    """Canonical serialisation; raises on non-finite values."""
    try:
        text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
    except ValueError as exc:
        raise ValueError(f"run report must contain only finite numbers: {exc}") from exc
    return (text + "\n").encode("ascii")


def write_run_report(path, doc: dict) -> None:
    Path(path).write_bytes(run_report_bytes(doc))


def write_histogram_table(path, edges, counts, fit=None) -> None:
    """Projected-histogram plot data: bin_lo, bin_hi, count[, fit]."""
    edges = np.asarray(edges, dtype=float)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# bin_lo,bin_hi,count" + (",fit" if fit is not None else "") + "\n")
        for i, c in enumerate(counts):
            row = f"{_fmt(edges[i])},{_fmt(edges[i + 1])},{int(c)}"
            if fit is not None:
                row += f",{_fmt(float(fit[i]))}"
            fh.write(row + "\n")


def write_hist2d_table(path, h: Hist2D) -> None:
    """2-D histogram plot data: edge vectors as headers, counts as rows."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# x_edges," + ",".join(_fmt(float(x)) for x in h.x_edges) + "\n")
        fh.write("# y_edges," + ",".join(_fmt(float(y)) for y in h.y_edges) + "\n")
        fh.write("# counts: one row per x bin\n")
        for row in h.counts:
            fh.write(",".join(str(int(c)) for c in row) + "\n")


def _save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_projection_figure(path, edges, counts, mix: PoissonMixture, title: str) -> None:
    """Projected histogram with the Poisson-tied mixture overlaid."""
    edges = np.asarray(edges, dtype=float)
    centers = 0.5 * (edges[:-1] + edges[1:])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.stairs(counts, edges, fill=True, alpha=0.45, color="steelblue", label="data")
    fine = np.linspace(edges[0], edges[-1], 4 * centers.size)
    ax.plot(fine, mix.expected_counts(fine, float(edges[1] - edges[0])),
            "r--", linewidth=1.4, label="Poisson-tied fit")
    ax.set_xlabel("projected coordinate")
    ax.set_ylabel("counts per bin")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=9)
    _save_svg(fig, path)


def render_hist2d_figure(path, h: Hist2D, model: ProjectionModel, title: str) -> None:
    """2-D weight histogram with the optimal projection axis overlaid."""
    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.pcolormesh(h.x_edges, h.y_edges, h.counts.T, cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="counts")
    xc = 0.5 * (h.x_edges[0] + h.x_edges[-1])
    yc = 0.5 * (h.y_edges[0] + h.y_edges[-1])
    a = math.radians(model.angle)
    half = 0.5 * math.hypot(h.x_edges[-1] - h.x_edges[0], h.y_edges[-1] - h.y_edges[0])
    ax.plot(
        [xc - half * math.cos(a), xc + half * math.cos(a)],
        [yc - half * math.sin(a), yc + half * math.sin(a)],
        "k--", linewidth=1.2,
        label=f"projection axis {model.angle:.2f} deg",
    )
    ax.set_xlim(h.x_edges[0], h.x_edges[-1])
    ax.set_ylim(h.y_edges[0], h.y_edges[-1])
    ax.set_xlabel("w1")
    ax.set_ylabel("w2")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=9)
    _save_svg(fig, path)


def emit_path_outputs(out_dir, name: str, section: dict, mix: PoissonMixture,
                      model: ProjectionModel, render: bool = True) -> list[Path]:
    """Write plot-data tables (and SVG renderings) for one report section."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    created = []
    ph = section["projected_histogram"]
    p = out_dir / f"{name}_projected_hist.csv"
    write_histogram_table(p, ph["edges"], ph["counts"], ph["fit"])
    created.append(p)
    h2 = section["histogram_2d"]
    h = Hist2D(np.array(h2["x_edges"]), np.array(h2["y_edges"]),
               np.array(h2["counts"], dtype=np.int64))
    p = out_dir / f"{name}_hist2d.csv"
    write_hist2d_table(p, h)
    created.append(p)
    if render:
        p = out_dir / f"{name}_projected_hist.svg"
        render_projection_figure(p, np.array(ph["edges"]), np.array(ph["counts"]), mix,
                                 f"{name}: projected histogram")
        created.append(p)
        p = out_dir / f"{name}_hist2d.svg"
        render_hist2d_figure(p, h, model, f"{name}: weight plane")
        created.append(p)
    return created
