import json

import numpy as np
import pytest

from snspd_pnr import PoissonMixture, confidence, find_optimal_angle
from snspd_pnr.report import (
    build_path_section,
    build_run_report,
    emit_path_outputs,
    run_report_bytes,
    write_histogram_table,
)

from test_discriminate import _clusters_along


@pytest.fixture(scope="module")
def fitted_path():
    rng = np.random.default_rng(60)
    pts = _clusters_along(30.0, rng, n_points=3000, k=3)
    model, mix = find_optimal_angle(pts, 3, 1, coarse_step=5.0)
    conf = confidence(mix, angle=model.angle)
    return pts, model, mix, conf


def test_section_is_self_contained(fitted_path):
    pts, model, mix, conf = fitted_path
    section = build_path_section(pts, model, mix, conf)
    doc = build_run_report({"weights": section})
    blob = run_report_bytes(doc)
    parsed = json.loads(blob)
    sec = parsed["paths"]["weights"]
    assert sec["projection"]["angle_deg"] == model.angle
    assert len(sec["projected_histogram"]["counts"]) >= 60
    assert len(sec["projected_histogram"]["edges"]) == \
        len(sec["projected_histogram"]["counts"]) + 1
    assert sum(sum(row) for row in sec["histogram_2d"]["counts"]) == len(pts)
    assert sec["confidence"]["per_n"].keys() == {"1", "2", "3"}


def test_report_bytes_deterministic(fitted_path):
    pts, model, mix, conf = fitted_path
    doc_a = build_run_report({"weights": build_path_section(pts, model, mix, conf)})
    doc_b = build_run_report({"weights": build_path_section(pts, model, mix, conf)})
    assert run_report_bytes(doc_a) == run_report_bytes(doc_b)


def test_report_rejects_non_finite():
    with pytest.raises(ValueError, match="finite"):
        run_report_bytes({"paths": {"x": float("nan")}})


def test_emit_path_outputs_files(fitted_path, tmp_path):
    pts, model, mix, conf = fitted_path
    section = build_path_section(pts, model, mix, conf)
    created = emit_path_outputs(tmp_path, "weights", section, mix, model)
    names = sorted(p.name for p in created)
    assert names == ["weights_hist2d.csv", "weights_hist2d.svg",
                     "weights_projected_hist.csv", "weights_projected_hist.svg"]
    for p in created:
        assert p.stat().st_size > 0
    table = (tmp_path / "weights_projected_hist.csv").read_text().splitlines()
    assert table[0] == "# bin_lo,bin_hi,count,fit"
    assert len(table) == 1 + len(section["projected_histogram"]["counts"])


def test_svg_rendering_is_deterministic(fitted_path, tmp_path):
    pts, model, mix, conf = fitted_path
    section = build_path_section(pts, model, mix, conf)
    emit_path_outputs(tmp_path / "a", "w", section, mix, model)
    emit_path_outputs(tmp_path / "b", "w", section, mix, model)
    for name in ("w_projected_hist.svg", "w_hist2d.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_histogram_table_without_fit(tmp_path):
    path = tmp_path / "h.csv"
    write_histogram_table(path, [0.0, 1.0, 2.0], [5, 7])
    assert path.read_text() == "# bin_lo,bin_hi,count\n0,1,5\n1,2,7\n"


def test_mixture_summary_roundtrips_poisson_tie(fitted_path):
    _, model, mix, conf = fitted_path
    blob = run_report_bytes(build_run_report(
        {"w": build_path_section(_clusters_along(30.0, np.random.default_rng(61), 500, k=3),
                                 model, mix, conf)}))
    summary = json.loads(blob)["paths"]["w"]["mixture"]
    rebuilt = PoissonMixture(
        means=np.array(summary["means"]),
        sigmas=np.array(summary["sigmas"]),
        n_bar=summary["n_bar"],
        n_min=summary["n_min"],
        scale=summary["scale"],
    )
    np.testing.assert_allclose(rebuilt.amplitudes, summary["amplitudes"], rtol=1e-12)
