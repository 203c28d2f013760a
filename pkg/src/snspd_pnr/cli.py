"""Command-line front end: simulate, filter, pca, discriminate, edges, report, calibrate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import calibrate_nbar
from .discriminate import confidence, find_optimal_angle
from .edges import ThresholdMode, ThresholdPolicy, edge_points, sweep_thresholds
from .errors import PnrError
from .pca import fit_pca, project_set, select_training
from .preprocess import FilterPolicy, window_and_align
from .report import (
    build_path_section,
    build_run_report,
    emit_path_outputs,
    filter_summary,
    write_run_report,
)
from .waveform import SyntheticConfig, generate_synthetic
from .wavefile import (
    read_waveform,
    read_weight_table,
    write_edge_table,
    write_label_table,
    write_waveform,
    write_weight_table,
)


def _fmt(x: float) -> str:
    return f"{x:.15g}"


def _pair(text: str, cast, name: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"{name} must be 'lo:hi', got {text!r}")
    return cast(parts[0]), cast(parts[1])


def _index_range(text: str):
    return _pair(text, int, "index range")


def _time_range(text: str):
    return _pair(text, float, "time range")


def _sweep_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"sweep must be 'start:stop:step', got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError("sweep needs stop >= start and step > 0")
    return start, stop, step


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snspd-pnr",
                                description="Photon-number analysis of detector waveforms")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Generate synthetic labelled waveforms.")
    s.add_argument("--seed", type=int, required=True,
                   help="RNG seed (required: no wall-clock seeding)")
    s.add_argument("--count", type=int, default=2000)
    s.add_argument("--nbar", type=float, default=1.5)
    s.add_argument("--amp-base", type=float, default=SyntheticConfig.amp_base)
    s.add_argument("--amp-step", type=float, default=SyntheticConfig.amp_step)
    s.add_argument("--t-rise-base", type=float, default=SyntheticConfig.t_rise_base)
    s.add_argument("--t-rise-step", type=float, default=SyntheticConfig.t_rise_step)
    s.add_argument("--tau-rise", type=float, default=SyntheticConfig.tau_rise)
    s.add_argument("--tau-fall", type=float, default=SyntheticConfig.tau_fall)
    s.add_argument("--jitter-sigma", type=float, default=SyntheticConfig.jitter_sigma)
    s.add_argument("--noise-sigma", type=float, default=SyntheticConfig.noise_sigma)
    s.add_argument("--sample-period", type=float, default=SyntheticConfig.sample_period)
    s.add_argument("--samples", type=int, default=SyntheticConfig.n_samples)
    s.add_argument("--prefix", default="synthetic")
    s.add_argument("--output-dir", default=".")

    f = sub.add_parser("filter", help="Reject bad traces, window and baseline-subtract.")
    f.add_argument("input", help="waveform file")
    f.add_argument("--window", type=int, default=19000, help="analysis window length (samples)")
    f.add_argument("--baseline", type=_index_range, default=(0, 1000),
                   help="baseline index range lo:hi")
    f.add_argument("--delay", type=_time_range, default=(1.0e-8, 3.0e-8),
                   help="accepted half-height rise-time window lo:hi (s)")
    f.add_argument("--zero-k", type=float, default=5.0)
    f.add_argument("--peak-frac", type=float, default=0.5)
    f.add_argument("--hysteresis-frac", type=float, default=0.10)
    f.add_argument("--prefix", default="filtered")
    f.add_argument("--output-dir", default=".")

    c = sub.add_parser("pca", help="Fit the component basis and project all traces.")
    c.add_argument("inputs", nargs="+", help="filtered waveform file(s), one per n-bar group")
    c.add_argument("--components", type=int, default=2)
    c.add_argument("--train-per-group", type=int, default=1000)
    c.add_argument("--output-dir", default=".")

    d = sub.add_parser("discriminate", help="Angle search + Poisson-tied mixture + confidence.")
    d.add_argument("weights", help="weight table (from pca or edges)")
    d.add_argument("--k", type=int, default=4, help="mixture component count")
    d.add_argument("--n-min", type=int, default=1)
    d.add_argument("--nbar", type=float, default=None, help="calibration label (fit seed)")
    d.add_argument("--angle-step", type=float, default=0.5)
    d.add_argument("--bins", type=int, default=None, help="2-D histogram bins for plot data")
    d.add_argument("--label", default="weights", help="section name in the report")
    d.add_argument("--no-render", action="store_true", help="skip SVG rendering")
    d.add_argument("--output-dir", default=".")

    e = sub.add_parser("edges", help="Extract rising/falling edge times per trace.")
    e.add_argument("input", help="filtered waveform file")
    e.add_argument("--threshold", type=float, default=0.5)
    e.add_argument("--threshold-mode", choices=["fraction", "absolute"], default="fraction")
    e.add_argument("--timing-resolution", type=float, default=0.0)
    e.add_argument("--sweep", type=_sweep_range, default=None,
                   help="score thresholds start:stop:step instead of extracting once")
    e.add_argument("--k", type=int, default=4, help="components for sweep scoring")
    e.add_argument("--n-min", type=int, default=1)
    e.add_argument("--nbar", type=float, default=None)
    e.add_argument("--angle-step", type=float, default=2.0, help="angle grid for sweep scoring")
    e.add_argument("--output-dir", default=".")

    r = sub.add_parser("report", help="Merge path outputs into one run report.")
    r.add_argument("--pca-weights", default=None, help="weight table from the pca step")
    r.add_argument("--edge-table", default=None, help="edge-time table from the edges step")
    r.add_argument("--filter-report", default=None, help="filter report JSON to embed")
    r.add_argument("--k", type=int, default=4)
    r.add_argument("--n-min", type=int, default=1)
    r.add_argument("--nbar", type=float, default=None)
    r.add_argument("--angle-step", type=float, default=0.5)
    r.add_argument("--bins", type=int, default=None)
    r.add_argument("--no-render", action="store_true")
    r.add_argument("--output-dir", default=".")

    k = sub.add_parser("calibrate", help="Mean photon number from count/repetition rates.")
    k.add_argument("--count-rate", type=float, required=True)
    k.add_argument("--rep-rate", type=float, required=True)
    return p


def _out_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args) -> int:
    cfg = SyntheticConfig(
        n_bar=args.nbar,
        amp_base=args.amp_base,
        amp_step=args.amp_step,
        t_rise_base=args.t_rise_base,
        t_rise_step=args.t_rise_step,
        tau_rise=args.tau_rise,
        tau_fall=args.tau_fall,
        jitter_sigma=args.jitter_sigma,
        noise_sigma=args.noise_sigma,
        sample_period=args.sample_period,
        n_samples=args.samples,
        rng_seed=args.seed,
    )
    batch = generate_synthetic(cfg, args.count)
    out = _out_dir(args)
    wave_path = out / f"{args.prefix}.pnrw"
    label_path = out / f"{args.prefix}_labels.csv"
    write_waveform(wave_path, batch.trace_set)
    write_label_table(label_path, batch.trace_set.ids, batch.true_n)
    print(f"wrote {wave_path} ({args.count} traces) and {label_path}")
    if batch.amp_floor_engaged.any():
        print(f"note: amplitude floor engaged on {int(batch.amp_floor_engaged.sum())} traces")
    return 0


def _cmd_filter(args) -> int:
    trace_set = read_waveform(args.input)
    policy = FilterPolicy(
        window_length=args.window,
        baseline_region=args.baseline,
        delay_window=args.delay,
        zero_trace_k=args.zero_k,
        peak_count_threshold_frac=args.peak_frac,
        hysteresis_frac=args.hysteresis_frac,
    )
    filtered, rep = window_and_align(trace_set, policy)
    out = _out_dir(args)
    wave_path = out / f"{args.prefix}.pnrw"
    report_path = out / f"{args.prefix}_report.json"
    write_waveform(wave_path, filtered)
    report_path.write_text(json.dumps(filter_summary(rep), sort_keys=True, indent=2) + "\n")
    print(f"accepted {rep.accepted}/{rep.total} traces -> {wave_path}")
    return 0


def _cmd_pca(args) -> int:
    sets = [read_waveform(path) for path in args.inputs]
    # Re-number traces so ids stay unique across input groups.
    offset = 0
    for ts in sets:
        ts.ids = ts.ids + offset
        offset += len(ts)
    basis = fit_pca(select_training(sets, per_group=args.train_per_group), args.components)
    points = []
    for ts in sets:
        points.extend(project_set(basis, ts))
    out = _out_dir(args)
    basis_path = out / "basis.json"
    basis_doc = {
        "mean_trace": [float(x) for x in basis.mean_trace],
        "components": [[float(x) for x in row] for row in basis.components],
        "explained_variance": [float(x) for x in basis.explained_variance],
        "explained_variance_ratio": [float(x) for x in basis.explained_variance_ratio],
    }
    basis_path.write_text(json.dumps(basis_doc, sort_keys=True, indent=2) + "\n")
    weights_path = out / "weights.csv"
    write_weight_table(weights_path, points)
    print(f"wrote {basis_path} and {weights_path} ({len(points)} points)")
    return 0


def _discriminate_section(points, args):
    model, mix = find_optimal_angle(
        points, args.k, args.n_min, nbar_hint=args.nbar, coarse_step=args.angle_step
    )
    conf = confidence(mix, angle=model.angle)
    section = build_path_section(points, model, mix, conf, bins=args.bins)
    return section, model, mix, conf


def _cmd_discriminate(args) -> int:
    points = read_weight_table(args.weights)
    section, model, mix, conf = _discriminate_section(points, args)
    out = _out_dir(args)
    doc = build_run_report({args.label: section})
    report_path = out / "run_report.json"
    write_run_report(report_path, doc)
    created = emit_path_outputs(out, args.label, section, mix, model,
                                render=not args.no_render)
    print(f"angle {model.angle:.2f} deg (flip={model.flip}), score {model.score:.4f}")
    for n, c in sorted(conf.per_n.items()):
        print(f"  C_{n} = {c:.6f}")
    print(f"wrote {report_path} and {len(created)} plot files")
    return 0


def _cmd_edges(args) -> int:
    trace_set = read_waveform(args.input)
    mode = (ThresholdMode.FRACTION_OF_MEDIAN_PEAK if args.threshold_mode == "fraction"
            else ThresholdMode.ABSOLUTE_VOLTS)
    out = _out_dir(args)
    if args.sweep is not None:
        start, stop, step = args.sweep
        fractions = np.arange(start, stop + 0.5 * step, step)
        rows = sweep_thresholds(trace_set, fractions, args.k, args.n_min,
                                timing_resolution=args.timing_resolution,
                                nbar_hint=args.nbar, coarse_step=args.angle_step)
        sweep_path = out / "threshold_sweep.csv"
        with open(sweep_path, "w", encoding="ascii") as fh:
            fh.write("# threshold_fraction,score,angle_deg,n_max_resolved,dropped\n")
            for row in rows:
                fh.write(f"{_fmt(row['threshold_fraction'])},{_fmt(row['score'])},"
                         f"{_fmt(row['angle'])},{row['n_max_resolved']},{row['dropped']}\n")
        print(f"wrote {sweep_path} ({len(rows)} thresholds)")
        return 0
    policy = ThresholdPolicy(mode=mode, value=args.threshold,
                             timing_resolution=args.timing_resolution)
    points, dropped = edge_points(trace_set, policy)
    edge_path = out / "edges.csv"
    write_edge_table(edge_path, points)
    print(f"wrote {edge_path} ({len(points)} pairs, {dropped} dropped)")
    return 0


def _cmd_report(args) -> int:
    if args.pca_weights is None and args.edge_table is None:
        raise ValueError("report needs --pca-weights and/or --edge-table")
    out = _out_dir(args)
    sections = {}
    rendered = []
    for name, path in (("pca", args.pca_weights), ("edges", args.edge_table)):
        if path is None:
            continue
        points = read_weight_table(path)
        section, model, mix, conf = _discriminate_section(points, args)
        sections[name] = section
        rendered.extend(emit_path_outputs(out, name, section, mix, model,
                                          render=not args.no_render))
    filters = None
    if args.filter_report:
        filters = {"input": json.loads(Path(args.filter_report).read_text())}
    doc = build_run_report(sections, filters=filters)
    report_path = out / "run_report.json"
    write_run_report(report_path, doc)
    print(f"wrote {report_path} and {len(rendered)} plot files")
    return 0


def _cmd_calibrate(args) -> int:
    nbar = calibrate_nbar(args.count_rate, args.rep_rate)
    print(_fmt(nbar))
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "filter": _cmd_filter,
    "pca": _cmd_pca,
    "discriminate": _cmd_discriminate,
    "edges": _cmd_edges,
    "report": _cmd_report,
    "calibrate": _cmd_calibrate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (PnrError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
