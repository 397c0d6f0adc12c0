"""Statistical checks of the gain and interference lemmas.

Every sample here is produced by the literal constructions in
:mod:`cogcap.channel` and :mod:`cogcap.montecarlo`, never by the marginal-law
shortcuts of :mod:`cogcap.fastsim`, so these tests are what licenses those
shortcuts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import partial

import numpy as np
from scipy import stats

from .channel import (draw_gaussian_matrix, effective_gain, null_space_basis,
                      receive_combiner, transmit_beamformer)
from .montecarlo import (LEMMA_STREAM, KsReport, TrialPlan, run_trials, validate_power_marks,
                         validate_superposition)
from .sir import ScenarioConfig

RESIDUAL_LIMIT = 1e-8
KS_LEVEL = 0.01


@dataclass(frozen=True)
class CheckResult:
    """One line of the validation report."""

    name: str
    statistic: float
    pvalue: float
    passed: bool
    samples: int
    expect: str = "match"   # "match": p > level; "reject": p < level (negative control)


def _nulling_trial(n_tx, k, rng):
    g = draw_gaussian_matrix(k, n_tx, rng) if k else np.empty((0, n_tx), complex)
    basis = null_space_basis(g, n_tx)
    q = draw_gaussian_matrix(1, n_tx, rng)[0]
    bf = transmit_beamformer(q, basis, g if k else None)
    cross = draw_gaussian_matrix(1, n_tx, rng)[0]
    res = bf.residuals()
    return (effective_gain(None, q, bf), effective_gain(None, cross, bf),
            float(res.max()) if res.size else 0.0)


def _cancel_trial(n_tx, n_rx, m, rng):
    # desired link: transmitter spends N-1 DOF nulling toward primary receivers
    g = draw_gaussian_matrix(n_tx - 1, n_tx, rng) if n_tx > 1 else np.empty((0, n_tx), complex)
    own = draw_gaussian_matrix(n_rx, n_tx, rng)
    u = transmit_beamformer(own, null_space_basis(g, n_tx), g if n_tx > 1 else None)
    signal = own @ u.vector
    canceled = []
    for _ in range(m):
        f = draw_gaussian_matrix(n_rx, n_tx, rng)
        w = draw_gaussian_matrix(1, n_tx, rng)[0]
        canceled.append(f @ (w / np.linalg.norm(w)))
    cmat = np.column_stack(canceled) if m else np.empty((n_rx, 0), complex)
    basis = null_space_basis(cmat.conj().T, n_rx)
    t = receive_combiner(signal, basis, cmat)
    stray = draw_gaussian_matrix(n_rx, 1, rng)[:, 0]
    res = t.residuals()
    return (effective_gain(t, signal, None), effective_gain(t, stray, None),
            float(res.max()) if res.size else 0.0)


def _ks(name, sample, dist, expect="match"):
    res = stats.kstest(sample, dist.cdf)
    ok = res.pvalue > KS_LEVEL if expect == "match" else res.pvalue < KS_LEVEL
    return CheckResult(name, float(res.statistic), float(res.pvalue), bool(ok), len(sample), expect)


def nulling_gain_checks(plan: TrialPlan, N: int = 4, k: int = 2) -> list[CheckResult]:
    """Signal gain ~ Gamma(N - k), cross gain ~ Exp(1), nulling residuals tiny."""
    rows = np.asarray(run_trials(partial(_nulling_trial, N, k), plan, LEMMA_STREAM))
    worst = float(rows[:, 2].max())
    return [
        _ks(f"nulling signal gain ~ Gamma({N - k}) [N={N}, k={k}]", rows[:, 0], stats.gamma(N - k)),
        _ks("cross gain through nulling beamformer ~ Exp(1)", rows[:, 1], stats.expon()),
        CheckResult(f"nulling residual < {RESIDUAL_LIMIT:g}", worst, float("nan"),
                    worst < RESIDUAL_LIMIT, len(rows), "bound"),
    ]


def cancelation_gain_checks(plan: TrialPlan, M: int = 4, m: int = 2, N: int = 2) -> list[CheckResult]:
    """Combined gain ~ Gamma(M - m), uncanceled cross gain ~ Exp(1)."""
    shifted = replace(plan, master_seed=plan.master_seed + 7)
    rows = np.asarray(run_trials(partial(_cancel_trial, N, M, m), shifted, LEMMA_STREAM))
    worst = float(rows[:, 2].max())
    return [
        _ks(f"combiner signal gain ~ Gamma({M - m}) [M={M}, m={m}]", rows[:, 0], stats.gamma(M - m)),
        _ks("cross gain through combiner ~ Exp(1)", rows[:, 1], stats.expon()),
        CheckResult(f"cancelation residual < {RESIDUAL_LIMIT:g}", worst, float("nan"),
                    worst < RESIDUAL_LIMIT, len(rows), "bound"),
    ]


def _from_ks(name, report: KsReport, expect="match"):
    ok = report.pvalue > KS_LEVEL if expect == "match" else report.pvalue < KS_LEVEL
    return CheckResult(name, report.statistic, report.pvalue, bool(ok), report.samples, expect)


def superposition_checks(config: ScenarioConfig, plan: TrialPlan) -> list[CheckResult]:
    """Two-network interference vs single PPP, plus the half-intensity negative control."""
    if config.lambda_s <= 0:
        config = config.replace(lambda_s=config.lambda_p)
    return [
        _from_ks("superposition equals single PPP", validate_superposition(config, plan)),
        _from_ks("half-intensity control is rejected",
                 validate_superposition(config, plan, intensity_scale=0.5), "reject"),
        _from_ks("power-marked union PPP", validate_power_marks(config, plan)),
    ]


def run_suite(config: ScenarioConfig | None = None, plan: TrialPlan | None = None) -> list[CheckResult]:
    """All lemma checks at their reference sizes (N=4, k=2; M=4, m=2)."""
    config = ScenarioConfig() if config is None else config
    plan = TrialPlan() if plan is None else plan
    return (nulling_gain_checks(plan) + cancelation_gain_checks(plan)
            + superposition_checks(config, plan))
