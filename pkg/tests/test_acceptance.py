"""Acceptance criteria 1-8, each at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL ...`` line; the lines are
printed as they happen (visible with ``-s``) and again in the terminal
summary. Run just this file with ``pytest -m acceptance``.
"""

import math
import time

import numpy as np
import pytest

from cogcap.analytic import (baseline_outage, c1, crossover_delta, lambda_star_siso,
                             transmission_capacity)
from cogcap.cli import main
from cogcap.experiments import FIG4_DELTAS, FIGURE_PRESET, nulling_count
from cogcap.montecarlo import (TrialPlan, estimate_outage, intensity_vs_delta,
                               max_intensity_search)
from cogcap.sir import ScenarioConfig
from cogcap.analytic import fit_scaling_exponent
from cogcap.validation import (cancelation_gain_checks, nulling_gain_checks,
                               superposition_checks)

pytestmark = pytest.mark.acceptance

REPORT: list[str] = []


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    REPORT.append(line)
    print(line)
    return ok


def test_criterion_1_baseline_outage():
    start = time.perf_counter()
    cfg = ScenarioConfig(lambda_p=0.01, alpha=3.0, beta_p=1.0, d_p=1.0)
    est = estimate_outage(cfg, "siso", "baseline", TrialPlan(trials=100_000))
    elapsed = time.perf_counter() - start
    exact = 1 - math.exp(-0.01 * c1(3.0))
    ok = abs(est.p_hat - exact) <= 0.005 and elapsed <= 60
    record(1, ok, f"MC {est.p_hat:.5f} vs closed form {exact:.5f} (tol 0.005), {elapsed:.1f}s")
    assert ok


def test_criterion_2_closed_form_consistency():
    start = time.perf_counter()
    cfg = ScenarioConfig(lambda_p=0.005, delta_p=0.05, eps_s=0.1)
    corrected = lambda_star_siso(cfg, "corrected").lambda_star
    literal = lambda_star_siso(cfg, "paper_literal").lambda_star
    at = cfg.replace(lambda_s=corrected)
    plan = TrialPlan(trials=100_000)
    pp = estimate_outage(at, "siso", "primary", plan)
    ps = estimate_outage(at, "siso", "secondary", plan)
    search = max_intensity_search(cfg, "siso", TrialPlan(trials=20_000), tolerance=0.002)
    mc = search.lambda_star_mc
    elapsed = time.perf_counter() - start
    closer = abs(corrected - mc) < abs(literal - mc)
    ok = (abs(corrected - 0.005931) < 5e-7 and pp.p_hat <= cfg.eps_p_nc + cfg.delta_p + 0.01
          and 0.09 <= ps.p_hat <= 0.11 and closer and elapsed <= 600)
    record(2, ok, f"lambda_s={corrected:.6f}: P_p,out={pp.p_hat:.4f} (<= "
                  f"{cfg.eps_p_nc + cfg.delta_p + 0.01:.4f}), P_s,out={ps.p_hat:.4f} in [0.09, 0.11]; "
                  f"MC bisection {mc:.6f} CI [{search.ci[0]:.6f}, {search.ci[1]:.6f}], corrected "
                  f"{corrected:.6f} vs paper_literal {literal:.6f}: "
                  f"{'corrected' if closer else 'paper_literal'} closer; {elapsed:.0f}s")
    assert ok


def test_criterion_3_distributional_lemmas():
    start = time.perf_counter()
    plan = TrialPlan(trials=10_000)
    checks = nulling_gain_checks(plan, N=4, k=2) + cancelation_gain_checks(plan, M=4, m=2)
    elapsed = time.perf_counter() - start
    ok = all(c.passed for c in checks) and elapsed <= 120
    detail = "; ".join(f"{c.name} " + (f"p={c.pvalue:.3g}" if c.expect != "bound"
                                       else f"max={c.statistic:.2g}") for c in checks)
    record(3, ok, f"{detail}; {elapsed:.0f}s")
    assert ok


def test_criterion_4_superposition():
    start = time.perf_counter()
    cfg = ScenarioConfig(lambda_p=0.01, lambda_s=0.01, P_p=2.0, P_s=1.0, alpha=3.0)
    sup, control, marks = superposition_checks(cfg, TrialPlan(trials=10_000))
    elapsed = time.perf_counter() - start
    ok = sup.pvalue > 0.01 and control.pvalue < 0.01 and elapsed <= 300
    record(4, ok, f"superposition p={sup.pvalue:.3g} (> 0.01), half-intensity control "
                  f"p={control.pvalue:.3g} (< 0.01), power-marked union p={marks.pvalue:.3g}; "
                  f"{elapsed:.0f}s")
    assert ok


# lambda_p = 0.01 with delta_p = 0.02 keeps the primary constraint binding at
# every N; eps_s = 0.3 because at this lambda_p primary interference alone
# already exceeds an eps_s of 0.1 for single-stream links.
SCALING = dict(lambda_p=0.01, delta_p=0.02, eps_s=0.3, alpha=3.0)
SCALING_N = (2, 4, 8, 16)


def test_criterion_5_miso_scaling():
    start = time.perf_counter()
    plan = TrialPlan(trials=10_000, eta=0.05)
    lam, binding = [], []
    for n in SCALING_N:
        cfg = ScenarioConfig(N=n, k=nulling_count(n, 0.5), **SCALING)
        res = max_intensity_search(cfg, "miso", plan, tolerance=0.005)
        lam.append(res.lambda_star_mc)
        binding.append(res.binding_constraint.split("_")[0])
    elapsed = time.perf_counter() - start
    slope = fit_scaling_exponent(list(zip(SCALING_N, lam)))[0] if min(lam) > 0 else float("nan")
    increasing = all(b > a for a, b in zip(lam, lam[1:]))
    ok = 0.23 <= slope <= 0.77 and increasing and elapsed <= 3600
    record(5, ok, f"lambda*_mc(N={SCALING_N}) = {[f'{v:.4g}' for v in lam]} (binding {binding}), "
                  f"slope {slope:.3f} in [0.23, 0.77], strictly increasing {increasing}; {elapsed:.0f}s")
    assert ok


def test_criterion_6_receive_antenna_independence():
    # primary-limited point: the exact primary term 0.00439 sits below the
    # secondary term 0.00593 at M = 1, and grows no further with M. A common
    # upper bracket gives every M the same coupled draws.
    start = time.perf_counter()
    plan = TrialPlan(trials=20_000)
    base = ScenarioConfig(lambda_p=0.005, delta_p=0.02, eps_s=0.1, N=1)
    exact = lambda_star_siso(base, "derived").first_term
    lam, binding, sec_only, cis = [], [], [], []
    for M in (1, 2, 4):
        cfg = base.replace(M=M, m=M // 2)
        res = max_intensity_search(cfg, "mimo", plan, tolerance=0.005, lambda_hi=0.02)
        lam.append(res.lambda_star_mc)
        cis.append(res.ci)
        binding.append(res.binding_constraint.split("_")[0])
        sec_only.append(max_intensity_search(cfg, "mimo", TrialPlan(trials=5000), tolerance=0.01,
                                             constraints=("secondary",)).lambda_star_mc)
    elapsed = time.perf_counter() - start
    spread = (max(lam) - min(lam)) / min(lam) if min(lam) > 0 else float("inf")
    ok = spread <= 0.15 and elapsed <= 1800
    record(6, ok, f"lambda*_mc(M=1,2,4) = {[f'{v:.4g}' for v in lam]} (binding {binding}), "
                  f"spread {spread:.1%} <= 15%; exact primary-limited value {exact:.4g}, MC 95% "
                  f"interval [{cis[0][0]:.4g}, {cis[0][1]:.4g}]; secondary constraint alone would "
                  f"allow {[f'{v:.4g}' for v in sec_only]}; {elapsed:.0f}s")
    assert ok


def _breakpoint(deltas, binding):
    idx = [i for i, b in enumerate(binding) if b == "secondary_outage"]
    return deltas[idx[0]] if idx else float("nan"), idx


def test_criterion_7_figure_shapes():
    start = time.perf_counter()
    notes, ok = [], True

    # Fig. 4 analogue, closed form at the figure preset
    preset = ScenarioConfig(**FIGURE_PRESET)
    step = float(FIG4_DELTAS[1] - FIG4_DELTAS[0])
    for mode in ("paper_literal", "corrected", "derived"):
        res = [lambda_star_siso(preset.replace(delta_p=float(d)), mode, check_consistency=False)
               for d in FIG4_DELTAS]
        lam = np.array([r.lambda_star for r in res])
        cross = crossover_delta(preset, mode)
        if not np.isfinite(cross):
            notes.append(f"fig4 {mode} at lambda_p=0.01: infeasible everywhere (lambda*=0)")
            ok &= bool(np.all(lam == 0))
            continue
        brk, idx = _breakpoint(FIG4_DELTAS, [r.binding_constraint for r in res])
        flat = np.ptp(lam[idx]) == 0 if idx else False
        good = bool(np.all(np.diff(lam) >= 0) and flat and abs(brk - cross) <= step)
        ok &= good
        notes.append(f"fig4 {mode}: breakpoint {brk:.4f} vs crossover {cross:.5f} (step {step:.4f})")

    # Fig. 4 analogue by simulation at lambda_p = 0.005, where the model is feasible
    cfg = ScenarioConfig(lambda_p=0.005, eps_s=0.1)
    deltas = np.round(np.arange(1, 41) * 0.0025, 10)
    curve = intensity_vs_delta(cfg, "siso", TrialPlan(trials=100_000), deltas)
    brk, idx = _breakpoint(deltas, curve.binding)
    cross = crossover_delta(cfg, "derived")
    good = bool(np.all(np.diff(curve.lambda_star) >= 0) and idx and np.ptp(curve.lambda_star[idx]) == 0
                and abs(brk - cross) <= 0.0025)
    ok &= good
    notes.append(f"fig4 MC (1e5 trials): breakpoint {brk:.4f} vs derived crossover {cross:.5f} "
                 f"(step 0.0025), plateau {curve.lambda_star[-1]:.5f}; corrected-mode crossover "
                 f"{crossover_delta(cfg, 'corrected'):.5f} (its first term is not the exact outage)")

    # Fig. 3 analogue: total primary outage fixed at 0.1 while lambda_p grows
    lam_p = np.linspace(0.0005, 0.0135, 27)
    caps = []
    for lp in lam_p:
        point = cfg.replace(lambda_p=float(lp), delta_p=0.1 - baseline_outage(lp, 1.0, 1.0, 3.0))
        caps.append(lambda_star_siso(point, "derived", check_consistency=False).capacity)
    caps = np.array(caps)
    pos = caps > 0
    good = bool(np.all(np.diff(caps[pos]) < 0))
    mc = []
    for lp in (0.001, 0.003, 0.005, 0.007):
        point = cfg.replace(lambda_p=lp, delta_p=0.1 - baseline_outage(lp, 1.0, 1.0, 3.0))
        r = max_intensity_search(point, "siso", TrialPlan(trials=10_000), tolerance=0.005)
        mc.append(transmission_capacity(r.lambda_star_mc, 0.1, 1.0))
    good &= all(b < a for a, b in zip(mc, mc[1:]))
    ok &= good
    notes.append(f"fig3 analytic strictly decreasing over {pos.sum()} feasible points; MC capacity at "
                 f"lambda_p=(0.001, 0.003, 0.005, 0.007): {[f'{v:.4g}' for v in mc]}")
    elapsed = time.perf_counter() - start
    record(7, ok, "; ".join(notes) + f"; {elapsed:.0f}s")
    assert ok


def test_criterion_8_determinism(tmp_path):
    outs = {}
    for w in (1, 4, 8):
        d = tmp_path / f"w{w}"
        code = main(["capacity", "--set", "lambda_p=0.005", "--set", "regime=miso", "--set", "N=2",
                     "--set", "k=1", "--trials", "1000", "--seed", "7", "--workers", str(w),
                     "--out", str(d)])
        assert code == 0
        outs[w] = (d / "capacity.csv").read_bytes()
    ok = outs[1] == outs[4] == outs[8]
    record(8, ok, f"capacity.csv identical across 1, 4, 8 workers: {ok} ({len(outs[1])} bytes)")
    assert ok
