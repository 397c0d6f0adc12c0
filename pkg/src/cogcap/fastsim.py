"""Per-trial sampling of SIR ingredients from their marginal laws.

The literal construction in :mod:`cogcap.sir` builds every beamformer. For
outage estimation only the gains at the typical receiver matter, and their
laws are known:

* a secondary transmitter whose nulling targets include the typical primary
  receiver contributes nothing there; any other one contributes ``Exp(1)``
  (its beamformer is independent of the channel towards the origin);
* the desired-signal gain is ``Gamma(N - k)`` (transmit nulling) or
  ``Gamma(M - m)`` (receive cancelation), interferer gains are ``Exp(1)``.

Secondary transmitters carry a uniform mark so one draw at an upper intensity
``lam_hi`` yields, by thinning, coupled realisations at every ``lam <= lam_hi``.
Interference is nondecreasing in the included set, so each trial reduces to a
single critical intensity ``tau``: the trial is in outage at ``lam`` iff
``tau < lam``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import uniform_disc
from .sir import Regime, ScenarioConfig


def _disc_draw(lam, radius, rng):
    count = rng.poisson(lam * np.pi * radius**2)
    return uniform_disc(count, radius, rng)


def _disc_path_loss(lam, radius, alpha, rng):
    """Distances and ``r**-alpha`` of a PPP on the disc, angles not drawn."""
    r2 = radius**2 * rng.random(rng.poisson(lam * np.pi * radius**2))
    return np.sqrt(r2), r2 ** (-0.5 * alpha)


def _targets_origin(sec_pts, prim_rx, k):
    """Whether the origin is among the ``k`` nearest primary receivers of each tx.

    ``prim_rx`` excludes the origin. The origin is a target iff fewer than
    ``k`` other receivers are strictly closer to the transmitter than it.
    """
    n = len(sec_pts)
    if k == 0 or n == 0:
        return np.zeros(n, bool)
    if len(prim_rx) < k:
        # fewer other receivers than nulls: everyone nulls the origin
        return np.ones(n, bool)
    tree = cKDTree(prim_rx)
    d, _ = tree.query(sec_pts, k=k)
    dk = np.asarray(d).reshape(n, -1)[:, -1]
    return np.hypot(sec_pts[:, 0], sec_pts[:, 1]) < dk


@dataclass
class PrimaryDraw:
    """Typical primary receiver: everything needed to evaluate SIR_p(lam)."""

    signal: float            # P_p d_p^-a |h00|^2
    primary_interference: float
    sec_dist: np.ndarray     # secondary tx sorted by thinning mark
    sec_power: np.ndarray    # P_s r^-a * Exp(1)
    sec_targets: np.ndarray  # bool, origin nulled by this tx
    marks: np.ndarray        # ascending thinning marks in [0, 1)

    def interference(self, j: int, mode: str = "exact_set") -> tuple[float, int]:
        """Secondary interference and canceled count with the first ``j`` marks included."""
        if j == 0:
            return 0.0, 0
        pw, tg = self.sec_power[:j], self.sec_targets[:j]
        if mode == "exact_set":
            return float(pw[~tg].sum()), int(tg.sum())
        order = np.argsort(self.sec_dist[:j], kind="stable")
        miss = np.flatnonzero(~tg[order])
        c = int(miss[0]) if miss.size else j
        return float(pw[order[c:]].sum()), c

    def outage(self, j, beta, mode="exact_set"):
        total = self.primary_interference + self.interference(j, mode)[0]
        return total > 0 and self.signal < beta * total


@dataclass
class SecondaryDraw:
    """Typical secondary receiver with receive cancelation of ``m`` nearest."""

    signal: float
    prim_dist: np.ndarray
    prim_power: np.ndarray
    sec_dist: np.ndarray     # sorted by thinning mark
    sec_power: np.ndarray
    marks: np.ndarray
    m: int

    def interference(self, j: int) -> float:
        if self.m == 0:
            return float(self.prim_power.sum() + self.sec_power[:j].sum())
        dist = np.concatenate((self.prim_dist, self.sec_dist[:j]))
        power = np.concatenate((self.prim_power, self.sec_power[:j]))
        if len(dist) <= self.m:
            return 0.0
        keep = np.argpartition(dist, self.m)[self.m:]
        return float(power[keep].sum())

    def outage(self, j, beta):
        total = self.interference(j)
        return total > 0 and self.signal < beta * total


def draw_primary(cfg: ScenarioConfig, regime, radius: float, lam_hi: float,
                 rng: np.random.Generator) -> PrimaryDraw:
    regime = Regime(regime)
    n_tx, _, k, _ = cfg.antennas(regime)
    a = cfg.alpha
    signal = cfg.P_p * cfg.d_p ** (-a) * rng.exponential()
    if regime is Regime.BASELINE or lam_hi <= 0:
        _, loss = _disc_path_loss(cfg.lambda_p, radius, a, rng)
        ip = float(cfg.P_p * np.dot(loss, rng.exponential(size=len(loss))))
        empty = np.empty(0)
        return PrimaryDraw(signal, ip, empty, empty, np.empty(0, bool), empty)
    prim = _disc_draw(cfg.lambda_p, radius, rng)
    pr = np.hypot(prim[:, 0], prim[:, 1])
    ip = float(np.sum(cfg.P_p * pr ** (-a) * rng.exponential(size=len(prim))))
    phi = 2 * np.pi * rng.random(len(prim))
    prim_rx = prim + cfg.d_p * np.column_stack((np.cos(phi), np.sin(phi)))
    sec = _disc_draw(lam_hi, radius, rng)
    marks = rng.random(len(sec))
    gains = rng.exponential(size=len(sec))
    targets = _targets_origin(sec, prim_rx, k)
    order = np.argsort(marks, kind="stable")
    sd = np.hypot(sec[order, 0], sec[order, 1])
    return PrimaryDraw(signal, ip, sd, cfg.P_s * sd ** (-a) * gains[order],
                       targets[order], marks[order])


def draw_secondary(cfg: ScenarioConfig, regime, radius: float, lam_hi: float,
                   rng: np.random.Generator) -> SecondaryDraw:
    regime = Regime(regime)
    n_tx, n_rx, k, m = cfg.antennas(regime)
    dof = (n_rx - m) if regime is Regime.MIMO else (n_tx - k)
    a = cfg.alpha
    signal = cfg.P_s * cfg.d_s ** (-a) * rng.gamma(dof)
    pd, ploss = _disc_path_loss(cfg.lambda_p, radius, a, rng)
    pp = cfg.P_p * ploss * rng.exponential(size=len(pd))
    sd, sloss = _disc_path_loss(lam_hi, radius, a, rng)
    marks = rng.random(len(sd))
    gains = rng.exponential(size=len(sd))
    order = np.argsort(marks, kind="stable")
    return SecondaryDraw(signal, pd, pp, sd[order], cfg.P_s * (sloss * gains)[order],
                         marks[order], m)


def critical_intensity(draw, lam_hi: float, beta: float, **kw) -> float:
    """Smallest thinning level putting the trial in outage, as an intensity.

    Returns ``-inf`` if the trial is in outage with no secondary transmitters,
    ``inf`` if it never is up to ``lam_hi``.
    """
    n = len(draw.marks)
    if draw.outage(0, beta, **kw):
        return -np.inf
    if not draw.outage(n, beta, **kw):
        return np.inf
    lo, hi = 0, n  # outage(lo) False, outage(hi) True
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if draw.outage(mid, beta, **kw):
            hi = mid
        else:
            lo = mid
    return float(lam_hi * draw.marks[hi - 1])
