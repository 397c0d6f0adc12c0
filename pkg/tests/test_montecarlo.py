import math
import pickle

import numpy as np
import pytest
from scipy import stats

from cogcap.errors import CogcapError, MonotonicityError, ParameterError, TrialError
from cogcap.montecarlo import (PRIMARY_STREAM, TrialPlan, _critical_level, _quantile_ci,
                               auto_radius, bisect_intensity, critical_intensities,
                               empirical_C_distribution, estimate_outage, intensity_vs_delta,
                               max_intensity_search, nulling_radius, plan_radius, run_trials,
                               truncation_check, wilson_interval)
from cogcap.sir import ScenarioConfig

PRESET = ScenarioConfig(lambda_p=0.005)


@pytest.mark.parametrize("kw", [dict(trials=0), dict(eta=0.0), dict(eta=0.5),
                                dict(region_radius=-1.0), dict(workers=0), dict(master_seed=-1)])
def test_plan_validation(kw):
    with pytest.raises(ParameterError):
        TrialPlan(**kw)


def test_auto_radius_formula():
    r = auto_radius(0.01, 3.0, 0.01)
    assert r == pytest.approx(5.0 * 101.0, rel=1e-12)
    assert auto_radius(0.0, 3.0) == 1.0
    assert auto_radius(0.01, 4.0, 0.01, min_radius=1e4) == 1e4


def test_plan_radius_floors():
    cfg = ScenarioConfig(lambda_p=0.01, N=4, k=3)
    plan = TrialPlan(eta=0.1)
    assert plan_radius(plan, cfg, 0.01, "miso") >= nulling_radius(cfg, "miso")
    assert plan_radius(plan, cfg, 0.01) >= 10.0
    assert plan_radius(TrialPlan(region_radius=7.0), cfg, 0.01) == 7.0


def test_wilson_matches_scipy():
    for k, n in [(0, 10), (3, 40), (50, 100), (997, 1000)]:
        ref = stats.binomtest(k, n).proportion_ci(0.95, method="wilson")
        lo, hi = wilson_interval(k, n)
        assert lo == pytest.approx(ref.low, abs=1e-12)
        assert hi == pytest.approx(ref.high, abs=1e-12)
    with pytest.raises(ParameterError):
        wilson_interval(0, 0)


def test_wilson_coverage():
    rng = np.random.default_rng(11)
    p, n = 0.1, 300
    hits = 0
    for k in rng.binomial(n, p, size=500):
        lo, hi = wilson_interval(int(k), n)
        hits += lo <= p <= hi
    assert hits / 500 >= 0.93


def test_quantile_ci_coverage():
    rng = np.random.default_rng(12)
    q = 0.1
    truth = stats.expon.ppf(q)
    hits = 0
    for _ in range(400):
        lo, hi = _quantile_ci(rng.exponential(size=500), q)
        hits += lo <= truth <= hi
    assert hits / 400 >= 0.93


def test_critical_level_semantics():
    taus = np.array([-np.inf, 0.1, 0.2, 0.3, np.inf])
    assert _critical_level(taus, 0.0) == -np.inf
    assert _critical_level(taus, 0.2) == 0.1
    assert _critical_level(taus, 0.4) == 0.2
    assert _critical_level(taus, 1.0) == np.inf


def test_bisect_synthetic():
    lo, hi, evals = bisect_intensity({"a": lambda x: x, "b": lambda x: 0.5 * x},
                                     {"a": 0.3, "b": 1.0}, 1.0, 1e-6)
    assert lo <= 0.3 < hi and hi - lo < 1e-6
    assert evals < 40


def test_bisect_detects_nonmonotone():
    with pytest.raises(MonotonicityError):
        bisect_intensity({"a": lambda x: math.sin(20 * x) ** 2}, {"a": 0.5}, 1.0, 1e-6)


def test_zero_threshold_never_in_outage():
    cfg = PRESET.replace(lambda_s=0.05, beta_p=1e-12, beta_s=1e-12)
    plan = TrialPlan(trials=300)
    assert estimate_outage(cfg, "siso", "primary", plan).outages == 0
    assert estimate_outage(cfg, "siso", "secondary", plan).outages == 0


def test_baseline_outage_matches_closed_form():
    est = estimate_outage(ScenarioConfig(lambda_p=0.01), "siso", "baseline", TrialPlan(trials=20_000))
    assert est.ci_low - 0.002 <= 0.0731618 <= est.ci_high + 0.002


def test_workers_do_not_change_results():
    cfg = ScenarioConfig(lambda_p=0.01, N=3, k=1)
    a = critical_intensities(cfg, "miso", "primary", TrialPlan(trials=60), 0.02)
    b = critical_intensities(cfg, "miso", "primary", TrialPlan(trials=60, workers=3), 0.02)
    assert np.array_equal(a, b)


def test_seed_changes_results():
    a = critical_intensities(PRESET, "siso", "primary", TrialPlan(trials=50), 0.02)
    b = critical_intensities(PRESET, "siso", "primary", TrialPlan(trials=50, master_seed=1), 0.02)
    assert not np.array_equal(a, b)


def _boom(rng):
    if rng.random() < 2:
        raise ParameterError("bad trial")


def test_trial_error_locates_failure():
    with pytest.raises(TrialError) as info:
        run_trials(_boom, TrialPlan(trials=3), PRIMARY_STREAM)
    assert info.value.trial == 0 and info.value.stream == PRIMARY_STREAM
    clone = pickle.loads(pickle.dumps(info.value))
    assert str(clone) == str(info.value) and isinstance(clone, CogcapError)


def test_trial_error_across_processes():
    with pytest.raises(TrialError):
        run_trials(_boom, TrialPlan(trials=4, workers=2), PRIMARY_STREAM)


def test_monotonicity_error_pickles():
    err = MonotonicityError("x", [(0.1, {"a": 0.2})])
    assert pickle.loads(pickle.dumps(err)).history == err.history


def test_siso_search_near_analytic():
    res = max_intensity_search(PRESET, "siso", TrialPlan(trials=10_000), tolerance=0.005)
    assert res.lambda_star_mc == pytest.approx(0.0059306, rel=0.2)
    assert res.binding_constraint == "secondary_outage"
    assert res.ci[0] <= res.lambda_star_mc <= res.ci[1]
    assert res.secondary.p_hat <= PRESET.eps_s


def test_secondary_only_without_primary():
    cfg = ScenarioConfig(lambda_p=0.0, eps_p_nc=0.0)
    res = max_intensity_search(cfg, "siso", TrialPlan(trials=8000), tolerance=0.005,
                               constraints=("secondary",))
    assert res.lambda_star_mc == pytest.approx(0.0138676, rel=0.15)


def test_zero_delta_collapses_intensity():
    plan = TrialPlan(trials=4000)
    cfg = PRESET.replace(eps_s=0.9)
    taus = critical_intensities(cfg, "siso", "primary", plan, 0.05)
    # the empirical baseline outage: trials already failing without secondaries
    base = float(np.mean(taus == -np.inf))
    tight = cfg.replace(eps_p_nc=base, delta_p=0.0)
    loose = cfg.replace(eps_p_nc=base, delta_p=0.02)
    lam0 = max_intensity_search(tight, "siso", plan, lambda_hi=0.05).lambda_star_mc
    lam1 = max_intensity_search(loose, "siso", plan, lambda_hi=0.05).lambda_star_mc
    assert lam0 < 0.05 * lam1


def test_infeasible_baseline_returns_zero():
    cfg = PRESET.replace(eps_p_nc=0.0, delta_p=0.0)
    res = max_intensity_search(cfg, "siso", TrialPlan(trials=500))
    assert res.lambda_star_mc == 0.0 and res.binding_constraint == "primary_outage"


def test_search_rejects_bad_input():
    with pytest.raises(ParameterError):
        max_intensity_search(PRESET, "baseline", TrialPlan(trials=10))
    with pytest.raises(ParameterError):
        max_intensity_search(PRESET, "siso", TrialPlan(trials=10), constraints=("other",))


def test_c_distribution_point_mass_without_nulling():
    cfg = ScenarioConfig(lambda_p=0.01, lambda_s=0.01, N=3, k=0)
    dist = empirical_C_distribution(cfg, TrialPlan(trials=200), "miso")
    assert np.all(dist.prefix == 0) and np.all(dist.exact_set == 0)
    assert dist.prob_less(1) == 1.0


def test_c_distribution_sampled_matches_full():
    cfg = ScenarioConfig(lambda_p=0.02, lambda_s=0.02, N=3, k=2)
    plan = TrialPlan(trials=600, region_radius=15.0)
    a = empirical_C_distribution(cfg, plan, "miso", "sampled")
    b = empirical_C_distribution(cfg, plan, "miso", "full")
    for mode in ("prefix", "exact_set"):
        pa, pb = 1 - a.prob_less(1, mode), 1 - b.prob_less(1, mode)
        se = math.sqrt((pa * (1 - pa) + pb * (1 - pb)) / 600)
        assert abs(pa - pb) < 4 * se + 1e-9


def test_truncation_radius_is_adequate():
    cfg = PRESET.replace(lambda_s=0.005)
    base, doubled = truncation_check(cfg, "siso", "primary", TrialPlan(trials=4000))
    assert doubled.region_radius == 2 * base.region_radius
    assert abs(base.p_hat - doubled.p_hat) <= max(base.half_width, 0.01)


def test_intensity_vs_delta_shape():
    deltas = np.linspace(0.0025, 0.1, 40)
    curve = intensity_vs_delta(PRESET, "siso", TrialPlan(trials=3000), deltas)
    lam = curve.lambda_star
    assert np.all(np.diff(lam) >= 0)
    sec = [i for i, b in enumerate(curve.binding) if b == "secondary_outage"]
    assert sec and sec == list(range(sec[0], len(deltas)))
    assert np.ptp(lam[sec]) == 0
    with pytest.raises(ParameterError):
        intensity_vs_delta(PRESET, "siso", TrialPlan(trials=10), [0.1, 0.05])
