"""Closed-form outage and capacity expressions for the Rayleigh/PPP model.

All functions are pure and vectorise over numpy arrays where that is natural.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InfeasibleError, ParameterError

ALPHA_MARGIN = 1e-6
CROSS_POWER_MODES = ("paper_literal", "corrected", "derived")


def c1(alpha: float) -> float:
    """Shot-noise constant ``2 pi^2 csc(2 pi / alpha) / alpha``.

    ``exp(-lam * c1 * s**(2/alpha))`` is the Laplace transform at ``s`` of the
    interference from a unit-power PPP of intensity ``lam`` with Rayleigh fading.
    """
    if not alpha > 2 + ALPHA_MARGIN:
        raise DivergenceError(f"path-loss exponent must exceed 2, got {alpha!r}")
    return 2 * math.pi**2 / (alpha * math.sin(2 * math.pi / alpha))


def success_laplace(arg, lam, alpha):
    """``E[exp(-arg * I)]`` for unit-power Rayleigh shot noise of intensity ``lam``."""
    arg = np.asarray(arg, dtype=float)
    if np.any(arg < 0):
        raise ParameterError("Laplace argument must be >= 0")
    out = np.exp(-np.asarray(lam, float) * c1(alpha) * arg ** (2.0 / alpha))
    return float(out) if out.ndim == 0 else out


def baseline_outage(lam, beta, d, alpha):
    """Outage of a typical link with only same-network PPP interference.

    ``1 - exp(-lam * c1 * beta**(2/alpha) * d**2)``
    """
    lam, beta, d = (np.asarray(x, dtype=float) for x in (lam, beta, d))
    if np.any(lam < 0) or np.any(beta < 0) or np.any(d <= 0):
        raise ParameterError("need lam >= 0, beta >= 0, d > 0")
    out = -np.expm1(-lam * c1(alpha) * beta ** (2.0 / alpha) * d**2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CapacityResult:
    lambda_star: float
    binding_constraint: str
    first_term: float
    second_term: float
    capacity: float
    mode: str = "corrected"


def transmission_capacity(lambda_star, eps_s, beta_s):
    """Successful secondary bits/s/Hz per m^2: ``lam * (1 - eps) * log2(1 + beta)``."""
    if lambda_star < 0 or eps_s < 0 or beta_s < 0:
        raise ParameterError("transmission capacity inputs must be >= 0")
    return lambda_star * (1 - eps_s) * math.log2(1 + beta_s)


def siso_terms(config, mode: str = "corrected"):
    """The two intensity limits (primary outage, secondary outage) for N = M = 1.

    ``mode`` selects how the cross-network power ratio enters:

    ``paper_literal``
        both terms exactly as originally published.
    ``corrected``
        the secondary term uses ``(P_p beta_s / P_s)**(2/alpha)`` for the primary
        interference seen by a secondary receiver; primary term unchanged.
    ``derived``
        both terms re-derived from the product of Laplace transforms:
        the primary term becomes ``-ln(ratio) / (c1 d_p^2) * (P_p/(P_s beta_p))**(2/alpha)``.
    """
    if mode not in CROSS_POWER_MODES:
        raise ParameterError(f"unknown cross-power mode {mode!r}; expected one of {CROSS_POWER_MODES}")
    a = config.alpha
    k1 = c1(a)
    eps_nc, delta = config.eps_p_nc, config.delta_p
    if delta >= 1 - eps_nc:
        raise InfeasibleError(f"delta_p={delta} leaves no primary success margin (eps_p_nc={eps_nc})")
    log_ratio = -math.log((1 - eps_nc - delta) / (1 - eps_nc))
    power_ratio = config.P_p / (config.P_s * config.beta_p)
    if mode == "derived":
        first = log_ratio / (k1 * config.d_p**2) * power_ratio ** (2 / a)
    else:
        first = log_ratio / config.d_p**2 * power_ratio ** (a / 2)

    cross = config.beta_s if mode == "paper_literal" else config.P_p * config.beta_s / config.P_s
    budget = -math.log1p(-config.eps_s)
    second = (budget - config.lambda_p * k1 * config.d_s**2 * cross ** (2 / a)) / (
        k1 * config.beta_s ** (2 / a) * config.d_s**2)
    return first, second


def lambda_star_siso(config, cross_power_mode: str = "corrected", check_consistency: bool = True) -> CapacityResult:
    """Maximum secondary intensity under both outage constraints, single antennas.

    The result is clamped at zero; a negative secondary term means the
    secondary target is unreachable even without secondary interferers.
    """
    if check_consistency:
        expected = baseline_outage(config.lambda_p, config.beta_p, config.d_p, config.alpha)
        if abs(expected - config.eps_p_nc) > 1e-6:
            warnings.warn(
                f"eps_p_nc={config.eps_p_nc:.6g} disagrees with the baseline outage "
                f"{expected:.6g} implied by lambda_p={config.lambda_p}", stacklevel=2)
    first, second = siso_terms(config, cross_power_mode)
    if first <= second:
        lam, binding = first, "primary_outage"
    else:
        lam, binding = second, "secondary_outage"
    lam = max(0.0, lam)
    return CapacityResult(lam, binding, first, second,
                          transmission_capacity(lam, config.eps_s, config.beta_s), cross_power_mode)


def crossover_delta(config, mode: str = "corrected", hi: float | None = None) -> float:
    """Primary outage increment at which the two intensity limits are equal.

    Below it the primary constraint binds, above it the secondary one does.
    Returns ``nan`` when the secondary term is non-positive (no crossover).
    """
    from scipy.optimize import brentq

    _, second = siso_terms(config.replace(delta_p=0.0), mode)
    if second <= 0:
        return float("nan")
    hi = (1 - config.eps_p_nc) * (1 - 1e-12) if hi is None else hi

    def gap(delta):
        first, sec = siso_terms(config.replace(delta_p=delta), mode)
        return first - sec

    if gap(hi) < 0:
        return float("nan")
    return brentq(gap, 0.0, hi, xtol=1e-14, rtol=1e-12)


@dataclass(frozen=True)
class ScalingBound:
    """Exponents of the lower (Omega) and upper (O) scaling of lambda*.

    ``variable`` names the antenna count both exponents refer to; in the general
    MIMO case the two binding branches may refer to different counts, recorded
    in ``lower_variable`` / ``upper_variable``.
    """

    lower_exponent: float
    upper_exponent: float
    variable: str
    lower_variable: str = ""
    upper_variable: str = ""

    def __post_init__(self):
        if not self.lower_variable:
            object.__setattr__(self, "lower_variable", self.variable)
        if not self.upper_variable:
            object.__setattr__(self, "upper_variable", self.variable)


def scaling_bounds(regime: str, alpha: float, N: int | None = None, M: int | None = None) -> ScalingBound:
    """Scaling exponents of the secondary intensity in the antenna counts.

    miso: lower ``min(2/alpha, 1 - 2/alpha)``, upper ``2/alpha`` (in N).
    mimo: lower from ``min(M, N**(1 - 2/alpha))``, upper from
    ``min(N, M**(1 + 2/alpha))``; with ``M == N`` (or unspecified) this is
    ``1 - 2/alpha`` and ``1`` in N.
    """
    if not alpha > 2:
        raise DivergenceError(f"path-loss exponent must exceed 2, got {alpha!r}")
    g = 2.0 / alpha
    if regime == "miso":
        return ScalingBound(min(g, 1 - g), g, "N")
    if regime != "mimo":
        raise ParameterError(f"scaling bounds exist for 'miso' and 'mimo', not {regime!r}")
    if N is None or M is None or N == M:
        return ScalingBound(1 - g, 1.0, "N")
    lower = (1.0, "M") if M <= N ** (1 - g) else (1 - g, "N")
    upper = (1.0, "N") if N <= M ** (1 + g) else (1 + g, "M")
    variable = lower[1] if lower[1] == upper[1] else "N,M"
    return ScalingBound(lower[0], upper[0], variable, lower[1], upper[1])


def fit_scaling_exponent(points):
    """Least-squares line through ``(ln size, ln value)``.

    Returns
    -------
    slope, intercept, residual : residual is the RMS of the log-domain residuals.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise ParameterError("need at least 3 (size, value) points")
    size, value = pts[:, 0], pts[:, 1]
    if np.any(np.diff(size) <= 0):
        raise ParameterError("sizes must be strictly increasing")
    if np.any(value <= 0) or np.any(size <= 0):
        raise ParameterError("sizes and values must be > 0 for a log-log fit")
    x, y = np.log(size), np.log(value)
    design = np.column_stack((x, np.ones_like(x)))
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))
