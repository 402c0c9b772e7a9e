import dataclasses

import numpy as np
import pytest

from conftest import invariant_names
from quadsmc import harness
from quadsmc import scenarios as scn
from quadsmc import sim


def _base():
    return scn.default_gains("qsmc", "lemniscate")


def test_zero_fraction_keeps_gains():
    base = _base()
    out = harness.perturb_gains(base, 0.0, np.random.default_rng(0))
    for key, g in base.items():
        for f in dataclasses.fields(g):
            a, b = getattr(g, f.name), getattr(out[key], f.name)
            assert (a is None and b is None) or np.array_equal(a, b)


def test_perturbation_reproducible_and_bounded():
    base = _base()
    a = harness.perturb_gains(base, 0.2, np.random.default_rng(5))
    b = harness.perturb_gains(base, 0.2, np.random.default_rng(5))
    assert np.array_equal(a["attitude"].K_q, b["attitude"].K_q)
    ratio = a["attitude"].K_q / base["attitude"].K_q
    assert np.all((ratio >= 0.8) & (ratio <= 1.2))
    with pytest.raises(ValueError):
        harness.perturb_gains(base, 1.0, np.random.default_rng(0))


def test_perturbation_factor_statistics():
    g = scn.default_gains("qpd", "lemniscate")["qpd"]
    rng = np.random.default_rng(1)
    factors = np.concatenate([harness.perturb_gains(g, 0.2, rng).K_P / g.K_P for _ in range(3400)])
    assert factors.size >= 10_000
    assert factors.min() >= 0.8 and factors.max() <= 1.2
    assert abs(factors.mean() - 1.0) < 0.01


def test_quantiles_agree_with_sorted_routine():
    rng = np.random.default_rng(2)
    for n in (1, 2, 7, 10, 101):
        v = rng.normal(size=n)
        for p in (0.25, 0.5, 0.75):
            assert harness.select_quantile(v, p) == harness.sorted_quantile(v, p)
    stats = harness.aggregate([1.0, 2.0, 3.0, 4.0])
    assert stats["median"] == 2.5 and stats["iqr"] == 1.5 and stats["mean"] == 2.5


def test_degenerate_sweep_reproduces_single_trial():
    spec = harness.SweepSpec(scenario="hover", controllers=("qsmc",), deviation_fraction=0.0, n_trials=1, seed=3)
    summary = harness.run_sweep(spec)
    sc = scn.scenario_by_name("hover", seed=3)
    res = sim.run_trial(sc, scn.build_controller("qsmc", sc))
    single = res.metrics.as_dict()
    for m in harness.METRIC_FIELDS:
        assert summary.rows[0].metrics[m] == single[m]


def test_sweep_rerun_is_identical(tmp_path):
    spec = harness.SweepSpec(scenario="hover", controllers=("qsmc", "qpd"), n_trials=2, seed=9)
    a = harness.run_sweep(spec)
    b = harness.run_sweep(spec)
    assert a.summary_csv() == b.summary_csv()
    assert a.trials_csv() == b.trials_csv()
    run_dir = a.write(tmp_path / "sweep")
    assert (run_dir / "summary.csv").read_text() == b.summary_csv()
    assert len(a.rows) == 4 and all(r.verdict for r in a.rows)


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        harness.SweepSpec(n_trials=0)
    with pytest.raises(ValueError):
        harness.SweepSpec(controllers=("pid",))


@pytest.fixture(scope="module")
def epsilon_study():
    return harness.aqsmc_parameter_study("epsilon", [8.0, 0.3, 0.8])


def test_large_epsilon_gain_does_not_respond(epsilon_study):
    tr = epsilon_study[0]
    window = (tr.t >= 7.0) & (tr.t <= 17.0)
    K0 = tr.K[0]
    assert np.max(tr.K[window]) - K0 < 0.01 * K0


def test_small_epsilon_gain_rises_during_disturbance(epsilon_study):
    tr = epsilon_study[1]
    onset = np.searchsorted(tr.t, 7.0)
    rising = tr.K[onset:onset + 250]
    assert rising[-1] > rising[0]
    assert np.max(tr.K[(tr.t >= 7.0) & (tr.t <= 17.0)]) > tr.K[onset]


def test_moderate_epsilon_gain_decays_after_removal(epsilon_study):
    tr = epsilon_study[2]
    after = tr.t >= 17.0
    K = tr.K[after]
    assert K[-1] < np.max(K)
    assert np.min(K) >= tr.K[0] - 0.02 * 2e-3 - 1e-9


def test_unknown_study_parameter():
    with pytest.raises(ValueError):
        harness.aqsmc_parameter_study("gamma", [1.0])


@pytest.mark.parametrize("name", invariant_names("harness"))
def test_invariant(run_check, name):
    passed, measured, limit = run_check(name)
    assert passed, f"{measured} (limit {limit})"
