"""Monte Carlo outage estimation, intensity search and lemma validation.

Reproducibility contract: trial ``t`` of stream ``s`` always uses
``numpy.random.default_rng([master_seed, s, t])``; per-trial results are
gathered in trial order and reduced by exact counting, so the output does not
depend on how many worker processes ran the trials.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy import stats

from . import fastsim
from .errors import CogcapError, MonotonicityError, ParameterError, TrialError
from .geometry import Region, uniform_disc
from .sir import Regime, ScenarioConfig, canceled_count, realize, sir_primary, sir_secondary

PRIMARY_STREAM = 0
SECONDARY_STREAM = 1
LEMMA_STREAM = 2
C_STREAM = 3
MIN_RADIUS_LINKS = 10.0
MAX_DOUBLINGS = 24
NULLING_RADIUS_FACTOR = 4.0


@dataclass(frozen=True)
class TrialPlan:
    """How many trials to run and how.

    ``region_radius=None`` sizes the disc automatically from ``eta``.
    """

    trials: int = 10_000
    master_seed: int = 20100607
    region_radius: float | None = None
    eta: float = 0.01
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if not (0 < self.eta <= 0.1):
            raise ParameterError(f"truncation tolerance must lie in (0, 0.1], got {self.eta}")
        if self.region_radius is not None and self.region_radius <= 0:
            raise ParameterError("region radius must be > 0")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")
        if not (0 <= self.master_seed < 2**64):
            raise ParameterError("master_seed must be a 64-bit unsigned integer")


def trial_rng(master_seed: int, stream: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(master_seed), int(stream), int(trial)])


def auto_radius(intensity: float, alpha: float, eta: float = 0.01, min_radius: float = 0.0) -> float:
    """Disc radius bounding the truncated interference tail.

    With ``r0 = 1/(2 sqrt(intensity))`` the mean nearest-neighbour distance, the
    expected interference from beyond ``R`` is at most ``eta`` times the
    expected interference from the annulus ``r0 < r < R``:
    ``R = r0 * ((1 + eta)/eta) ** (1/(alpha - 2))``.
    """
    if intensity <= 0:
        return max(min_radius, 1.0)
    r0 = 0.5 / math.sqrt(intensity)
    return max(min_radius, r0 * ((1 + eta) / eta) ** (1 / (alpha - 2)))


def nulling_radius(cfg: ScenarioConfig, regime) -> float:
    """Disc radius keeping nulling-target decisions free of edge effects.

    A secondary transmitter can only null the origin if fewer than ``k``
    primary receivers are closer to it; beyond a few times the radius holding
    ``k + 1`` receivers on average this essentially never happens, so the disc
    must extend at least that far.
    """
    k = cfg.antennas(regime)[2]
    if k == 0 or cfg.lambda_p <= 0:
        return 0.0
    return NULLING_RADIUS_FACTOR * math.sqrt((k + 1) / (math.pi * cfg.lambda_p)) + cfg.d_p


def plan_radius(plan: TrialPlan, cfg: ScenarioConfig, lam_s: float, regime="siso") -> float:
    if plan.region_radius is not None:
        return float(plan.region_radius)
    floor = max(MIN_RADIUS_LINKS * max(cfg.d_p, cfg.d_s), nulling_radius(cfg, regime))
    return auto_radius(cfg.lambda_p + lam_s, cfg.alpha, plan.eta, floor)


def _run_chunk(fn, master_seed, stream, trials):
    out = []
    for t in trials:
        try:
            out.append(fn(trial_rng(master_seed, stream, t)))
        except CogcapError as exc:
            raise TrialError(f"{type(exc).__name__}: {exc}", t, stream) from exc
    return out


def run_trials(fn, plan: TrialPlan, stream: int, trials: int | None = None) -> list:
    """Evaluate ``fn(rng)`` for every trial, in trial order.

    ``fn`` must be picklable (a module-level function or ``functools.partial``)
    when ``plan.workers > 1``.
    """
    n = plan.trials if trials is None else trials
    if plan.workers == 1 or n < 2:
        return _run_chunk(fn, plan.master_seed, stream, range(n))
    n_chunks = min(n, plan.workers * 4)
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    chunks = [range(bounds[i], bounds[i + 1]) for i in range(n_chunks)]
    with ProcessPoolExecutor(max_workers=plan.workers) as pool:
        parts = pool.map(partial(_run_chunk, fn, plan.master_seed, stream), chunks)
        out = []
        for part in parts:
            out.extend(part)
    return out


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ParameterError("need at least one trial")
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    trials: int
    which: str
    outages: int = 0
    region_radius: float = float("nan")

    @classmethod
    def from_count(cls, outages, trials, which, radius=float("nan")):
        lo, hi = wilson_interval(outages, trials)
        p = outages / trials
        return cls(p, min(lo, p), max(hi, p), trials, which, int(outages), radius)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


# -- per-trial kernels (module level so they pickle) ---------------------------

def _sampled_outage(cfg, regime, which, radius, mode, rng):
    if which == "secondary":
        d = fastsim.draw_secondary(cfg, regime, radius, cfg.lambda_s, rng)
        return d.outage(len(d.marks), cfg.beta_s)
    lam = 0.0 if which == "baseline" else cfg.lambda_s
    reg = Regime.BASELINE if which == "baseline" else regime
    d = fastsim.draw_primary(cfg, reg, radius, lam, rng)
    return d.outage(len(d.marks), cfg.beta_p, mode)


def _full_outage(cfg, regime, which, radius, mode, rng):
    region = Region(radius)
    if which == "secondary":
        return sir_secondary(realize(cfg, region, rng, regime, "secondary")).outage(cfg.beta_s)
    reg = Regime.BASELINE if which == "baseline" else regime
    return sir_primary(realize(cfg, region, rng, reg, "primary"), mode).outage(cfg.beta_p)


def _critical(cfg, regime, which, radius, lam_hi, mode, rng):
    if which == "secondary":
        d = fastsim.draw_secondary(cfg, regime, radius, lam_hi, rng)
        return fastsim.critical_intensity(d, lam_hi, cfg.beta_s)
    d = fastsim.draw_primary(cfg, regime, radius, lam_hi, rng)
    return fastsim.critical_intensity(d, lam_hi, cfg.beta_p, mode=mode)


def estimate_outage(config: ScenarioConfig, regime, which: str, plan: TrialPlan,
                    method: str = "sampled", mode: str = "exact_set") -> OutageEstimate:
    """Fraction of trials with SIR below threshold, with a Wilson 95% interval.

    Parameters
    ----------
    which : ``"primary"``, ``"secondary"`` or ``"baseline"`` (primary receiver
        without any secondary network).
    method : ``"sampled"`` draws gains from their marginal laws (fast);
        ``"full"`` builds every beamformer and combiner.
    mode : cancelation accounting at the primary receiver, ``"exact_set"`` or ``"prefix"``.
    """
    regime = Regime(regime)
    if which not in ("primary", "secondary", "baseline"):
        raise ParameterError(f"unknown outage target {which!r}")
    if which == "secondary" and regime is Regime.BASELINE:
        raise ParameterError("baseline regime has no secondary receiver")
    lam_s = 0.0 if which == "baseline" else config.lambda_s
    radius = plan_radius(plan, config, lam_s, regime)
    kernel = {"sampled": _sampled_outage, "full": _full_outage}.get(method)
    if kernel is None:
        raise ParameterError(f"unknown method {method!r}")
    stream = SECONDARY_STREAM if which == "secondary" else PRIMARY_STREAM
    results = run_trials(partial(kernel, config, regime, which, radius, mode), plan, stream)
    return OutageEstimate.from_count(int(sum(results)), plan.trials, which, radius)


def critical_intensities(config, regime, which, plan, lam_hi, mode="exact_set", radius=None):
    """Per-trial critical secondary intensities for coupled (thinned) realisations."""
    radius = plan_radius(plan, config, lam_hi, regime) if radius is None else radius
    stream = SECONDARY_STREAM if which == "secondary" else PRIMARY_STREAM
    out = run_trials(partial(_critical, config, Regime(regime), which, radius, lam_hi, mode),
                     plan, stream)
    return np.asarray(out, dtype=float)


@dataclass(frozen=True)
class IntensitySearchResult:
    lambda_star_mc: float
    bracket: tuple
    evaluations: int
    binding_constraint: str
    primary: OutageEstimate | None = None
    secondary: OutageEstimate | None = None
    lambda_hi: float = float("nan")
    history: list = field(default_factory=list)
    ci: tuple = (float("nan"), float("nan"))


def _initial_upper(cfg, regime):
    from .analytic import c1

    n_tx, n_rx, k, m = cfg.antennas(regime)
    dof = (n_rx - m) if Regime(regime) is Regime.MIMO else (n_tx - k)
    budget = -math.log1p(-cfg.eps_s) if cfg.eps_s < 1 else 1.0
    base = budget / (c1(cfg.alpha) * cfg.beta_s ** (2 / cfg.alpha) * cfg.d_s**2)
    return 2.0 * max(base, 1e-4) * max(dof, n_tx) ** (2 / cfg.alpha)


def bisect_intensity(outage_fns, targets, lam_hi, tolerance, history=None):
    """Bisection for the largest intensity meeting every ``outage_fn(lam) <= target``.

    ``outage_fns`` map names to monotone outage functions. Returns
    ``(lo, hi, evaluations)`` with ``lo`` feasible and ``hi`` infeasible.
    """
    history = [] if history is None else history
    evaluations = 0

    def probe(lam):
        nonlocal evaluations
        evaluations += 1
        values = {name: fn(lam) for name, fn in outage_fns.items()}
        history.append((lam, values))
        return values, all(values[n] <= targets[n] for n in values)

    lo, hi = 0.0, lam_hi
    v_lo, _ = probe(lo)
    v_hi, _ = probe(hi)
    while hi - lo > tolerance * 0.5 * (hi + lo):
        mid = 0.5 * (lo + hi)
        v_mid, ok = probe(mid)
        for name in v_mid:
            if not (v_lo[name] - 1e-12 <= v_mid[name] <= v_hi[name] + 1e-12):
                raise MonotonicityError(
                    f"{name} outage not monotone in lambda_s around {mid:.6g}", history)
        if ok:
            lo, v_lo = mid, v_mid
        else:
            hi, v_hi = mid, v_mid
    return lo, hi, evaluations


def max_intensity_search(config: ScenarioConfig, regime, plan: TrialPlan, tolerance: float = 0.01,
                         constraints=("primary", "secondary"), mode: str = "exact_set",
                         lambda_hi: float | None = None) -> IntensitySearchResult:
    """Largest secondary intensity meeting the outage targets, by bisection.

    Each trial draws its secondary network once at the upper bracket
    ``lambda_hi`` with uniform thinning marks; every bisection level reuses
    those draws (common random numbers), which makes the empirical outage
    exactly monotone in ``lambda_s``. The upper bracket is doubled until it is
    infeasible.
    """
    regime = Regime(regime)
    if regime is Regime.BASELINE:
        raise ParameterError("intensity search needs a secondary network")
    constraints = tuple(constraints)
    if not constraints or not set(constraints) <= {"primary", "secondary"}:
        raise ParameterError(f"constraints must be a subset of primary/secondary, got {constraints}")
    targets = {"primary": config.primary_target, "secondary": config.eps_s}
    lam_hi = _initial_upper(config, regime) if lambda_hi is None else float(lambda_hi)
    n = plan.trials
    history = []

    for _ in range(MAX_DOUBLINGS):
        radius = plan_radius(plan, config, lam_hi, regime)
        taus = {c: critical_intensities(config, regime, c, plan, lam_hi, mode, radius)
                for c in constraints}
        fns = {c: partial(_fraction_below, taus[c]) for c in constraints}
        if any(fns[c](0.0) > targets[c] for c in constraints):
            binding = min(constraints, key=lambda c: targets[c] - fns[c](0.0))
            ests = _estimates(taus, 0.0, n, radius)
            return IntensitySearchResult(0.0, (0.0, 0.0), 1, f"{binding}_outage",
                                         ests.get("primary"), ests.get("secondary"),
                                         lam_hi, history, (0.0, 0.0))
        if any(fns[c](lam_hi) > targets[c] for c in constraints):
            break
        lam_hi *= 2
    else:
        raise MonotonicityError(f"no infeasible upper bracket found up to {lam_hi:.3g}", history)

    lo, hi, evals = bisect_intensity(fns, targets, lam_hi, tolerance, history)
    # the constraint that fails first as lambda grows binds
    critical = {c: _critical_level(taus[c], targets[c]) for c in constraints}
    binding = min(constraints, key=lambda c: critical[c])
    ests = _estimates(taus, lo, n, radius)
    bands = [_quantile_ci(taus[c], targets[c]) for c in constraints]
    ci = (min(b[0] for b in bands), min(b[1] for b in bands))
    return IntensitySearchResult(lo, (lo, hi), evals, f"{binding}_outage",
                                 ests.get("primary"), ests.get("secondary"), lam_hi, history, ci)


@dataclass(frozen=True)
class DeltaCurve:
    """Monte Carlo lambda* over a grid of primary outage increments."""

    deltas: np.ndarray
    lambda_star: np.ndarray
    binding: tuple
    lambda_hi: float
    trials: int


def intensity_vs_delta(config: ScenarioConfig, regime, plan: TrialPlan, deltas,
                       mode: str = "exact_set", lambda_hi: float | None = None) -> DeltaCurve:
    """lambda*_mc as a function of ``delta_p`` from a single set of draws.

    Per-trial critical intensities do not depend on ``delta_p``; only the
    primary target ``eps_p_nc + delta_p`` does. Each grid point is therefore
    the smaller of two empirical quantiles, and the curve is nondecreasing in
    ``delta_p`` and exactly flat once the secondary constraint binds.
    """
    regime = Regime(regime)
    deltas = np.asarray(deltas, dtype=float)
    if deltas.ndim != 1 or deltas.size == 0 or np.any(np.diff(deltas) <= 0):
        raise ParameterError("deltas must be a nonempty increasing sequence")
    lam_hi = _initial_upper(config, regime) if lambda_hi is None else float(lambda_hi)
    for _ in range(MAX_DOUBLINGS):
        radius = plan_radius(plan, config, lam_hi, regime)
        tp = critical_intensities(config, regime, "primary", plan, lam_hi, mode, radius)
        ts = critical_intensities(config, regime, "secondary", plan, lam_hi, mode, radius)
        sec = max(_critical_level(ts, config.eps_s), 0.0)
        if sec < lam_hi:
            break
        lam_hi *= 2
    else:
        raise MonotonicityError(f"secondary constraint still slack at {lam_hi:.3g}")
    lam, binding = [], []
    for d in deltas:
        pri = max(_critical_level(tp, config.eps_p_nc + d), 0.0)
        lam.append(min(pri, sec))
        binding.append("primary_outage" if pri < sec else "secondary_outage")
    return DeltaCurve(deltas, np.asarray(lam), tuple(binding), lam_hi, plan.trials)


def _fraction_below(taus, lam):
    return float(np.count_nonzero(taus < lam)) / len(taus)


def _critical_level(taus, target):
    """Supremum of lambda with fraction(taus < lambda) <= target."""
    allowed = int(math.floor(target * len(taus) + 1e-9))
    s = np.sort(taus)
    return float(s[allowed]) if allowed < len(s) else np.inf


def _quantile_ci(taus, target, level=0.95):
    """Distribution-free interval for the critical level from order statistics.

    The critical level is an empirical quantile of the per-trial critical
    intensities; ``(X_(l), X_(u))`` with binomial ``l, u`` covers the true
    quantile with probability at least ``level``.
    """
    n = len(taus)
    s = np.sort(taus)
    tail = 0.5 * (1 - level)
    lo = int(stats.binom.ppf(tail, n, target)) - 1
    hi = int(stats.binom.ppf(1 - tail, n, target))
    low = float(s[lo]) if lo >= 0 else 0.0
    high = float(s[hi]) if hi < n else np.inf
    return max(low, 0.0), max(high, 0.0)


def _estimates(taus, lam, n, radius):
    return {c: OutageEstimate.from_count(int(np.count_nonzero(t < lam)), n, c, radius)
            for c, t in taus.items()}


# -- lemma validation ---------------------------------------------------------

@dataclass(frozen=True)
class KsReport:
    statistic: float
    pvalue: float
    samples: int
    label: str = ""

    def passed(self, alpha: float = 0.01) -> bool:
        return self.pvalue > alpha


def _shot_noise(rng, lam, radius, alpha, power):
    pts = uniform_disc(rng.poisson(lam * np.pi * radius**2), radius, rng)
    r = np.hypot(pts[:, 0], pts[:, 1])
    return float(np.sum(power * r ** (-alpha) * rng.exponential(size=len(r))))


def _two_network_sample(cfg, radius, rng):
    # Disc radii scale with P^(1/alpha) so the rescaled discs coincide exactly.
    a = cfg.alpha
    rp = radius * cfg.P_p ** (1 / a)
    rs = radius * cfg.P_s ** (1 / a)
    return (_shot_noise(rng, cfg.lambda_p, rp, a, cfg.P_p)
            + _shot_noise(rng, cfg.lambda_s, rs, a, cfg.P_s))


def _single_ppp_sample(cfg, radius, scale, rng):
    a = cfg.alpha
    lam = scale * (cfg.lambda_p * cfg.P_p ** (2 / a) + cfg.lambda_s * cfg.P_s ** (2 / a))
    return _shot_noise(rng, lam, radius, a, 1.0)


def _marked_union_sample(cfg, radius, rng):
    a = cfg.alpha
    lam = cfg.lambda_p + cfg.lambda_s
    pts = uniform_disc(rng.poisson(lam * np.pi * radius**2), radius, rng)
    is_p = rng.random(len(pts)) < cfg.lambda_p / lam
    power = np.where(is_p, cfg.P_p, cfg.P_s)
    r = np.hypot(pts[:, 0], pts[:, 1])
    return float(np.sum(power * r ** (-a) * rng.exponential(size=len(r))))


def _same_disc_two_network(cfg, radius, rng):
    a = cfg.alpha
    return (_shot_noise(rng, cfg.lambda_p, radius, a, cfg.P_p)
            + _shot_noise(rng, cfg.lambda_s, radius, a, cfg.P_s))


def _validation_radius(cfg, plan):
    if plan.region_radius is not None:
        return plan.region_radius
    return auto_radius(cfg.lambda_p + cfg.lambda_s, cfg.alpha, plan.eta)


def validate_superposition(config: ScenarioConfig, plan: TrialPlan,
                           intensity_scale: float = 1.0) -> KsReport:
    """Two-sample KS between two-network interference and the equivalent single PPP.

    The single PPP has intensity ``lambda_p P_p^(2/a) + lambda_s P_s^(2/a)``
    (times ``intensity_scale``, for negative controls) and unit power.
    """
    if config.lambda_p <= 0 or config.lambda_s <= 0:
        raise ParameterError("superposition check needs lambda_p > 0 and lambda_s > 0")
    radius = _validation_radius(config, plan)
    two = run_trials(partial(_two_network_sample, config, radius), plan, LEMMA_STREAM)
    shifted = TrialPlan(plan.trials, plan.master_seed + 1, plan.region_radius, plan.eta, plan.workers)
    one = run_trials(partial(_single_ppp_sample, config, radius, intensity_scale), shifted, LEMMA_STREAM)
    res = stats.ks_2samp(two, one)
    return KsReport(float(res.statistic), float(res.pvalue), plan.trials, "superposition")


def validate_power_marks(config: ScenarioConfig, plan: TrialPlan) -> KsReport:
    """Two-sample KS between the two-network interference and a power-marked union PPP."""
    radius = _validation_radius(config, plan)
    two = run_trials(partial(_same_disc_two_network, config, radius), plan, LEMMA_STREAM)
    shifted = TrialPlan(plan.trials, plan.master_seed + 1, plan.region_radius, plan.eta, plan.workers)
    marked = run_trials(partial(_marked_union_sample, config, radius), shifted, LEMMA_STREAM)
    res = stats.ks_2samp(two, marked)
    return KsReport(float(res.statistic), float(res.pvalue), plan.trials, "power_marks")


@dataclass(frozen=True)
class CDistribution:
    """Per-trial canceled counts at the typical primary receiver."""

    prefix: np.ndarray
    exact_set: np.ndarray

    def prob_less(self, c: int, mode: str = "prefix") -> float:
        return float(np.mean(getattr(self, mode) < c))

    def histogram(self, mode: str = "prefix") -> np.ndarray:
        return np.bincount(getattr(self, mode))


def _c_trial(cfg, regime, radius, method, rng):
    if method == "full":
        real = realize(cfg, Region(radius), rng, regime, "primary")
        return canceled_count(0, real, "prefix"), canceled_count(0, real, "exact_set")
    d = fastsim.draw_primary(cfg, regime, radius, cfg.lambda_s, rng)
    n = len(d.marks)
    return d.interference(n, "prefix")[1], d.interference(n, "exact_set")[1]


def empirical_C_distribution(config: ScenarioConfig, plan: TrialPlan, regime="miso",
                             method: str = "sampled") -> CDistribution:
    """Distribution of the canceled count ``C`` in both accounting modes."""
    regime = Regime(regime)
    if regime not in (Regime.MISO, Regime.MIMO):
        raise ParameterError("canceled counts need the miso or mimo regime")
    radius = plan_radius(plan, config, config.lambda_s, regime)
    pairs = run_trials(partial(_c_trial, config, regime, radius, method), plan, C_STREAM)
    arr = np.asarray(pairs, dtype=int).reshape(-1, 2)
    return CDistribution(arr[:, 0], arr[:, 1])


def truncation_check(config: ScenarioConfig, regime, which: str, plan: TrialPlan) -> tuple:
    """Outage at the planned radius and at twice that radius (same seeds)."""
    base = estimate_outage(config, regime, which, plan)
    doubled = TrialPlan(plan.trials, plan.master_seed, 2 * base.region_radius, plan.eta, plan.workers)
    return base, estimate_outage(config, regime, which, doubled)
