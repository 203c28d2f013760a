import numpy as np
import pytest

from snspd_pnr import (
    SyntheticConfig,
    Trace,
    TraceSet,
    generate_synthetic,
    poisson_pmf,
    pulse_waveform,
)
from snspd_pnr.crossings import first_upward_crossing

from oracles import dense_crossing, poisson_pmf_recurrence, pulse_value

# Compact noiseless geometry used throughout: 0.5 ns sampling, pulse at 40 ns.
CLEAN = SyntheticConfig(
    n_bar=1.5,
    t_rise_base=4e-8,
    tau_rise=2e-9,
    jitter_sigma=0.0,
    noise_sigma=0.0,
    sample_period=5e-10,
    n_samples=400,
    rng_seed=11,
)


def test_noiseless_single_photon_peak_matches_formula():
    batch = generate_synthetic(CLEAN, 50)
    idx = int(np.nonzero(batch.true_n == 1)[0][0])
    trace = batch.trace_set.samples[idx]
    t = CLEAN.sample_period * np.arange(CLEAN.n_samples)
    expected = pulse_value(t, CLEAN.amp_base, CLEAN.t_rise_base, CLEAN.tau_rise, CLEAN.tau_fall)
    np.testing.assert_array_equal(trace, expected)
    assert trace.max() == expected.max()


def test_half_height_crossing_advances_by_t_rise_step():
    p1 = pulse_waveform(CLEAN, 1)
    p2 = pulse_waveform(CLEAN, 2)
    dt = CLEAN.sample_period
    t1 = first_upward_crossing(p1, 0.5 * p1.max(), 0.0, dt)
    t2 = first_upward_crossing(p2, 0.5 * p2.max(), 0.0, dt)
    # Oracle: interpolate the continuous pulse on a dense grid.
    t_max = CLEAN.n_samples * dt
    o1 = dense_crossing(CLEAN.amplitude(1), CLEAN.onset(1), CLEAN.tau_rise, CLEAN.tau_fall,
                        0.5 * p1.max(), t_max, "up")
    o2 = dense_crossing(CLEAN.amplitude(2), CLEAN.onset(2), CLEAN.tau_rise, CLEAN.tau_fall,
                        0.5 * p2.max(), t_max, "up")
    assert abs((o1 - o2) - CLEAN.t_rise_step) < 1e-12
    assert abs((t1 - t2) - CLEAN.t_rise_step) < dt


def test_fixed_seed_is_bitwise_deterministic():
    cfg = SyntheticConfig(sample_period=5e-10, n_samples=300, t_rise_base=4e-8, rng_seed=99)
    a = generate_synthetic(cfg, 200)
    b = generate_synthetic(cfg, 200)
    assert a.trace_set.samples.tobytes() == b.trace_set.samples.tobytes()
    assert np.array_equal(a.true_n, b.true_n)
    assert np.array_equal(a.amp_floor_engaged, b.amp_floor_engaged)


def test_generate_rejects_zero_count():
    with pytest.raises(ValueError):
        generate_synthetic(CLEAN, 0)


def test_labels_and_noise_only_zero_traces():
    batch = generate_synthetic(CLEAN, 200)
    zero = batch.true_n == 0
    assert zero.any()
    assert np.all(batch.trace_set.samples[zero] == 0.0)  # noiseless config
    lt = batch[int(np.nonzero(zero)[0][0])]
    assert lt.true_n == 0


def test_amplitude_floor_flagged_not_fatal():
    cfg = SyntheticConfig(n_bar=6.0, amp_step=0.12, noise_sigma=0.0, jitter_sigma=0.0,
                          t_rise_base=4e-8, sample_period=5e-10, n_samples=300, rng_seed=3)
    batch = generate_synthetic(cfg, 400)
    high = batch.true_n >= 4  # raw amplitude below amp_base/10 from n = 4 on
    assert batch.amp_floor_engaged[high].all()
    assert not batch.amp_floor_engaged[~high].any()
    idx = int(np.nonzero(high)[0][0])
    assert batch.trace_set.samples[idx].max() == pytest.approx(
        pulse_waveform(cfg, int(batch.true_n[idx])).max())
    assert cfg.amplitude(int(batch.true_n[idx])) == cfg.amp_floor


def test_peak_and_rise_time_monotone_in_photon_number():
    dt = CLEAN.sample_period
    peaks, rises = [], []
    for n in range(1, 8):
        p = pulse_waveform(CLEAN, n)
        peaks.append(p.max())
        rises.append(first_upward_crossing(p, 0.5 * p.max(), 0.0, dt))
    assert all(b < a for a, b in zip(peaks, peaks[1:]))
    assert all(b < a for a, b in zip(rises, rises[1:]))


def test_poisson_label_statistics():
    cfg = SyntheticConfig(n_bar=2.3, t_rise_base=1e-9, tau_rise=1e-10, tau_fall=1e-9 * 2,
                          sample_period=5e-10, n_samples=8, noise_sigma=0.0,
                          jitter_sigma=0.0, rng_seed=1234)
    count = 100_000
    batch = generate_synthetic(cfg, count)
    for n in range(10):
        p = poisson_pmf(n, cfg.n_bar)
        freq = float((batch.true_n == n).mean())
        se = np.sqrt(p * (1 - p) / count)
        assert abs(freq - p) < 4 * se, f"n={n}: freq {freq} vs pmf {p}"


class TestPoissonPmf:
    def test_zero_photons_is_exp_minus_nbar(self):
        for nbar in (0.3, 1.0, 3.5, 7.2):
            assert poisson_pmf(0, nbar) == pytest.approx(np.exp(-nbar), rel=1e-15)

    def test_one_photon_unit_mean(self):
        assert poisson_pmf(1, 1.0) == pytest.approx(np.exp(-1.0), rel=1e-15)
        assert poisson_pmf(1, 1.0) == pytest.approx(0.367879441171442, rel=1e-12)

    def test_matches_recurrence(self):
        for n, nbar in [(4, 3.5), (0, 0.2), (12, 5.5), (40, 17.0)]:
            assert poisson_pmf(n, nbar) == pytest.approx(
                poisson_pmf_recurrence(n, nbar), rel=1e-12)

    def test_partial_sums_approach_one(self):
        nbar = 2.7
        s = sum(poisson_pmf(n, nbar) for n in range(60))
        assert s <= 1.0 + 1e-12
        assert s == pytest.approx(1.0, abs=1e-12)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            poisson_pmf(1, 0.0)
        with pytest.raises(ValueError):
            poisson_pmf(1, -2.0)
        with pytest.raises(ValueError):
            poisson_pmf(-1, 1.0)


class TestRecordTypes:
    def test_trace_validation(self):
        with pytest.raises(ValueError):
            Trace(np.array([]), 1e-9)
        with pytest.raises(ValueError):
            Trace(np.array([0.0, np.inf]), 1e-9)
        with pytest.raises(ValueError):
            Trace(np.array([0.0, 1.0]), 0.0)

    def test_trace_set_shares_geometry(self):
        ts = TraceSet(np.zeros((3, 16)), 1e-9)
        assert len(ts) == 3 and ts.n_samples == 16
        assert [tr.id for tr in ts] == [0, 1, 2]
        a = Trace(np.zeros(8), 1e-9, id=0)
        b = Trace(np.zeros(9), 1e-9, id=1)
        with pytest.raises(ValueError):
            TraceSet.from_traces([a, b])

    def test_config_invariants(self):
        with pytest.raises(ValueError):
            SyntheticConfig(tau_rise=2e-8, tau_fall=1e-9)
        with pytest.raises(ValueError):
            SyntheticConfig(amp_step=-0.01)
        with pytest.raises(ValueError):
            SyntheticConfig(n_bar=0.0)
        with pytest.raises(ValueError):
            SyntheticConfig(sample_period=0.0)
