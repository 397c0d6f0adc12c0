"""The marginal-law sampler against brute force and the literal construction."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogcap.fastsim import (_targets_origin, critical_intensity, draw_primary,
                            draw_secondary)
from cogcap.montecarlo import TrialPlan, estimate_outage
from cogcap.sir import ScenarioConfig


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_targets_origin_matches_sort(seed, k):
    rng = np.random.default_rng(seed)
    sec = rng.uniform(-5, 5, (20, 2))
    rx = rng.uniform(-5, 5, (rng.integers(0, 8), 2))
    got = _targets_origin(sec, rx, k)
    for s, flag in zip(sec, got):
        allrx = np.vstack((np.zeros((1, 2)), rx))
        order = np.argsort(np.hypot(*(allrx - s).T), kind="stable")[:k]
        assert flag == (0 in order)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["siso", "miso", "mimo"]),
       st.sampled_from(["primary", "secondary"]))
def test_critical_intensity_matches_direct_outage(seed, regime, which):
    cfg = ScenarioConfig(lambda_p=0.01, N=4, M=4, k=2, m=2)
    rng = np.random.default_rng(seed)
    lam_hi = 0.05
    if which == "primary":
        d, beta, kw = draw_primary(cfg, regime, 15.0, lam_hi, rng), cfg.beta_p, {"mode": "exact_set"}
    else:
        d, beta, kw = draw_secondary(cfg, regime, 15.0, lam_hi, rng), cfg.beta_s, {}
    tau = critical_intensity(d, lam_hi, beta, **kw)
    for lam in np.linspace(0, lam_hi, 21):
        j = int(np.searchsorted(d.marks, lam / lam_hi))
        assert d.outage(j, beta, **kw) == (tau < lam or (tau == -np.inf))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3))
def test_interference_nondecreasing_in_thinning_level(seed, m):
    cfg = ScenarioConfig(lambda_p=0.01, N=4, M=4, k=2, m=m)
    rng = np.random.default_rng(seed)
    p = draw_primary(cfg, "miso", 15.0, 0.05, rng)
    s = draw_secondary(cfg, "mimo", 15.0, 0.05, rng)
    for mode in ("exact_set", "prefix"):
        vals = [p.interference(j, mode)[0] for j in range(len(p.marks) + 1)]
        assert np.all(np.diff(vals) >= -1e-15)
    vals = [s.interference(j) for j in range(len(s.marks) + 1)]
    assert np.all(np.diff(vals) >= -1e-15)


def test_secondary_cancels_nearest_union():
    cfg = ScenarioConfig(lambda_p=0.02, M=4, m=3)
    d = draw_secondary(cfg, "mimo", 10.0, 0.02, np.random.default_rng(1))
    dist = np.concatenate((d.prim_dist, d.sec_dist))
    power = np.concatenate((d.prim_power, d.sec_power))
    keep = np.argsort(dist)[3:]
    assert d.interference(len(d.marks)) == pytest.approx(power[keep].sum(), rel=1e-12)


def _two_proportion_z(a, b):
    p = (a.outages + b.outages) / (a.trials + b.trials)
    se = np.sqrt(p * (1 - p) * (1 / a.trials + 1 / b.trials))
    return abs(a.p_hat - b.p_hat) / se


@pytest.mark.parametrize("regime,which", [
    ("siso", "primary"), ("miso", "primary"), ("mimo", "primary"),
    ("siso", "secondary"), ("miso", "secondary"), ("mimo", "secondary"),
])
def test_sampled_agrees_with_full_construction(regime, which):
    # dense small disc so both outage probabilities are far from 0 and 1
    cfg = ScenarioConfig(lambda_p=0.02, lambda_s=0.03, N=3, M=3, k=1, m=1, beta_p=0.5, beta_s=0.5)
    plan = TrialPlan(trials=1500, region_radius=10.0)
    a = estimate_outage(cfg, regime, which, plan, "sampled")
    b = estimate_outage(cfg, regime, which, TrialPlan(1500, 99, 10.0), "full")
    assert 0.005 < a.p_hat < 0.98
    assert _two_proportion_z(a, b) < 3.5
