"""Deployment realisations and SIR at the typical primary/secondary receiver.

This is the literal construction: every secondary transmitter draws the
channels towards its nulling targets, builds its null-space beamformer, and
the typical receiver's gains are computed from explicit channel vectors.
It is exact but slow; :mod:`cogcap.fastsim` samples the same gains from their
marginal laws for large Monte Carlo runs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import analytic
from .channel import (
    Beamformer,
    Combiner,
    draw_gaussian_matrix,
    null_space_basis,
    receive_combiner,
    transmit_beamformer,
)
from .errors import DegreesOfFreedomError, ParameterError
from .geometry import (
    PRIMARY,
    SECONDARY,
    PointSample,
    Region,
    displace_receivers,
    nearest,
    sample_ppp,
)


class Regime(str, Enum):
    BASELINE = "baseline"
    SISO = "siso"
    MISO = "miso"
    MIMO = "mimo"


@dataclass(frozen=True)
class ScenarioConfig:
    """Scalar model parameters. Defaults are the single-antenna simulation preset.

    ``eps_p_nc`` left as ``None`` is filled in from the baseline outage at
    ``lambda_p``. In the ``mimo`` regime ``k`` is ignored (N - 1 nulls are used).
    """

    alpha: float = 3.0
    P_p: float = 2.0
    P_s: float = 1.0
    d_p: float = 1.0
    d_s: float = 1.0
    beta_p: float = 1.0
    beta_s: float = 1.0
    lambda_p: float = 0.01
    lambda_s: float = 0.0
    N: int = 1
    M: int = 1
    k: int = 0
    m: int = 0
    eps_p_nc: float | None = None
    delta_p: float = 0.05
    eps_s: float = 0.1

    def __post_init__(self):
        if not self.alpha > 2:
            raise ParameterError(f"alpha must exceed 2, got {self.alpha}")
        for name in ("P_p", "P_s", "d_p", "d_s", "beta_p", "beta_s", "lambda_p", "lambda_s"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ParameterError(f"{name} must be finite and >= 0, got {value!r}")
        if self.d_p <= 0 or self.d_s <= 0:
            raise ParameterError("link distances must be > 0")
        for name in ("N", "M", "k", "m"):
            value = getattr(self, name)
            if int(value) != value:
                raise ParameterError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.N < 1 or self.M < 1:
            raise ParameterError("antenna counts must be >= 1")
        if not (0 <= self.k < self.N):
            raise DegreesOfFreedomError(f"need 0 <= k < N, got k={self.k}, N={self.N}")
        if not (0 <= self.m < self.M):
            raise DegreesOfFreedomError(f"need 0 <= m < M, got m={self.m}, M={self.M}")
        if self.eps_p_nc is None:
            object.__setattr__(self, "eps_p_nc", analytic.baseline_outage(
                self.lambda_p, self.beta_p, self.d_p, self.alpha))
        for name in ("eps_p_nc", "delta_p", "eps_s"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ParameterError(f"{name} must lie in [0, 1], got {value!r}")
        if self.eps_p_nc + self.delta_p >= 1:
            raise ParameterError("eps_p_nc + delta_p must be < 1")

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    def replace(self, **changes) -> "ScenarioConfig":
        """Copy with changes; ``eps_p_nc`` is recomputed when ``lambda_p`` changes
        unless given explicitly."""
        if "lambda_p" in changes and "eps_p_nc" not in changes:
            changes["eps_p_nc"] = None
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        return dataclasses.asdict(self)

    def antennas(self, regime) -> tuple[int, int, int, int]:
        """Effective (N, M, k, m) used by ``regime``."""
        regime = Regime(regime)
        if regime in (Regime.BASELINE, Regime.SISO):
            return 1, 1, 0, 0
        if regime is Regime.MISO:
            return self.N, 1, self.k, 0
        return self.N, self.M, self.N - 1, self.m

    @property
    def primary_target(self) -> float:
        return self.eps_p_nc + self.delta_p


@dataclass(frozen=True)
class SirOutcome:
    """SIR with its components. ``sir`` is ``inf`` when nothing interferes."""

    sir: float
    signal: float
    primary_interference: float
    secondary_interference: float
    canceled_count: int = 0

    @property
    def interference(self) -> float:
        return self.primary_interference + self.secondary_interference

    def outage(self, beta: float) -> bool:
        return bool(self.sir < beta)


def _sir(signal, ip, is_, canceled=0):
    total = ip + is_
    sir = np.inf if total <= 0 else signal / total
    return SirOutcome(float(sir), float(signal), float(ip), float(is_), int(canceled))


@dataclass(frozen=True, eq=False)
class DeploymentRealization:
    """One Palm realisation with the typical receiver of ``typical`` at the origin.

    ``primary`` and ``secondary`` hold the interfering transmitters (the typical
    pair is stored separately). ``primary_rx`` lists every primary receiver
    position; when the typical pair is primary, index 0 is the origin.
    ``targets[n]`` are indices into ``primary_rx`` nulled by secondary tx ``n``.
    """

    config: ScenarioConfig
    regime: Regime
    typical: str
    antennas: tuple
    primary: PointSample
    secondary: PointSample
    typical_tx: np.ndarray
    primary_rx: np.ndarray
    targets: list
    beamformers: list
    typical_targets: np.ndarray | None = None
    typical_beamformer: Beamformer | None = None
    # typical primary receiver
    h00: complex = 0j
    h0: np.ndarray = field(default_factory=lambda: np.empty(0, complex))
    g0: np.ndarray = field(default_factory=lambda: np.empty((0, 1), complex))
    g0_nominal: np.ndarray = field(default_factory=lambda: np.empty((0, 1), complex))
    # typical secondary receiver
    Q00: np.ndarray | None = None
    Q0: np.ndarray | None = None
    f0: np.ndarray | None = None
    combiner: Combiner | None = None
    canceled: tuple = ()

    def targets_origin(self) -> np.ndarray:
        """Per interfering secondary tx, whether the origin receiver is a nulling target."""
        if self.typical != "primary":
            return np.zeros(len(self.secondary), bool)
        return np.array([0 in t for t in self.targets], dtype=bool)

    def secondary_distances(self) -> np.ndarray:
        return np.hypot(*self.secondary.points.T) if len(self.secondary) else np.empty(0)

    def primary_distances(self) -> np.ndarray:
        return np.hypot(*self.primary.points.T) if len(self.primary) else np.empty(0)


def _random_direction(rng, distance):
    phi = 2 * np.pi * rng.random()
    return distance * np.array([np.cos(phi), np.sin(phi)])


def _nulling(tx_pos, primary_rx, k, n_tx, rng):
    """Targets, channels to targets and the null-space basis for one transmitter."""
    if k == 0 or len(primary_rx) == 0:
        return np.empty(0, int), np.empty((0, n_tx), complex), np.eye(n_tx, dtype=complex)
    nb = nearest(tx_pos, primary_rx, k)
    g = draw_gaussian_matrix(len(nb.indices), n_tx, rng)
    return nb.indices, g, null_space_basis(g)


def realize(config: ScenarioConfig, region: Region, rng: np.random.Generator,
            regime="siso", typical: str = "primary") -> DeploymentRealization:
    """Build every point, pairing, channel, beamformer and combiner for one trial.

    Parameters
    ----------
    typical : ``"primary"`` places the typical primary receiver at the origin;
        ``"secondary"`` places the typical secondary receiver there.
    """
    regime = Regime(regime)
    if typical not in ("primary", "secondary"):
        raise ParameterError(f"typical must be 'primary' or 'secondary', got {typical!r}")
    if regime is Regime.BASELINE and typical == "secondary":
        raise ParameterError("baseline regime has no secondary network")
    n_tx, n_rx, k, m = config.antennas(regime)

    primary = displace_receivers(sample_ppp(config.lambda_p, region, rng, PRIMARY), config.d_p, rng)
    if regime is Regime.BASELINE:
        secondary = PointSample.empty(region, SECONDARY)
    else:
        secondary = displace_receivers(
            sample_ppp(config.lambda_s, region, rng, SECONDARY), config.d_s, rng)
    d_typ = config.d_p if typical == "primary" else config.d_s
    typical_tx = _random_direction(rng, d_typ)

    if typical == "primary":
        primary_rx = np.vstack((np.zeros((1, 2)), primary.receivers))
    else:
        primary_rx = primary.receivers.copy()

    targets, beamformers, target_channels = [], [], []
    for pos in secondary.points:
        idx, g, basis = _nulling(pos, primary_rx, k, n_tx, rng)
        if n_tx - k == 1:
            u = Beamformer(basis[:, 0] / np.linalg.norm(basis[:, 0]), g)
        else:
            u = transmit_beamformer(draw_gaussian_matrix(1, n_tx, rng)[0], basis, g)
        targets.append(idx)
        beamformers.append(u)
        target_channels.append(g)

    fields = {}
    if typical == "secondary":
        idx, g, basis = _nulling(typical_tx, primary_rx, k, n_tx, rng)
        Q00 = draw_gaussian_matrix(n_rx, n_tx, rng)
        own = Q00[0] if n_rx == 1 else Q00
        u0 = transmit_beamformer(own, basis, g)
        Q0 = (np.stack([draw_gaussian_matrix(n_rx, n_tx, rng) for _ in range(len(secondary))])
              if len(secondary) else np.empty((0, n_rx, n_tx), complex))
        f0 = (draw_gaussian_matrix(len(primary), n_rx, rng) if len(primary)
              else np.empty((0, n_rx), complex))
        eff_s = (np.einsum("nij,nj->ni", Q0, np.array([b.vector for b in beamformers]))
                 if len(secondary) else np.empty((0, n_rx), complex))
        # m nearest of the union (primary first, then secondary; stable ties)
        union_pos = np.vstack((primary.points, secondary.points))
        union_eff = np.vstack((f0, eff_s))
        nb = nearest((0.0, 0.0), union_pos, m)
        canceled_cols = union_eff[nb.indices].T
        basis_r = null_space_basis(canceled_cols.conj().T, n=n_rx)
        comb = receive_combiner(Q00 @ u0.vector, basis_r, canceled_cols)
        canceled = tuple(
            (PRIMARY, int(i)) if i < len(primary) else (SECONDARY, int(i - len(primary)))
            for i in nb.indices)
        fields.update(typical_targets=idx, typical_beamformer=u0, Q00=Q00, Q0=Q0, f0=f0,
                      combiner=comb, canceled=canceled)
    else:
        h00 = draw_gaussian_matrix(1, 1, rng)[0, 0]
        h0 = draw_gaussian_matrix(len(primary), 1, rng)[:, 0] if len(primary) else np.empty(0, complex)
        n_s = len(secondary)
        g0 = np.empty((n_s, n_tx), complex)
        g_nominal = draw_gaussian_matrix(n_s, n_tx, rng) if n_s else np.empty((0, n_tx), complex)
        for n in range(n_s):
            hit = np.flatnonzero(targets[n] == 0)
            g0[n] = target_channels[n][hit[0]] if hit.size else g_nominal[n]
        fields.update(h00=h00, h0=h0, g0=g0, g0_nominal=g_nominal)

    return DeploymentRealization(
        config=config, regime=regime, typical=typical, antennas=(n_tx, n_rx, k, m),
        primary=primary, secondary=secondary, typical_tx=typical_tx, primary_rx=primary_rx,
        targets=targets, beamformers=beamformers, **fields)


def canceled_count(primary_rx, real: DeploymentRealization, mode: str = "exact_set") -> int:
    """Number of secondary interferers whose nulling covers ``primary_rx``.

    ``prefix``: the largest ``c`` such that the ``c`` nearest secondary
    transmitters all target the receiver. ``exact_set``: every targeting
    transmitter, regardless of order.
    """
    if mode not in ("prefix", "exact_set"):
        raise ParameterError(f"unknown cancelation mode {mode!r}")
    if len(real.secondary) == 0 or real.antennas[2] == 0:
        return 0
    if isinstance(primary_rx, (int, np.integer)):
        rx_index = int(primary_rx)
    else:
        hits = np.flatnonzero(np.all(real.primary_rx == np.asarray(primary_rx, float), axis=1))
        if hits.size == 0:
            raise ParameterError(f"{primary_rx!r} is not a primary receiver of this realisation")
        rx_index = int(hits[0])
    hit = np.array([rx_index in t for t in real.targets], dtype=bool)
    if mode == "exact_set":
        return int(hit.sum())
    order = nearest(real.primary_rx[rx_index], real.secondary, len(real.secondary)).indices
    misses = np.flatnonzero(~hit[order])
    return int(misses[0]) if misses.size else len(order)


def _path_loss(dist, alpha):
    return dist ** (-alpha)


def sir_primary(real: DeploymentRealization, mode: str = "exact_set") -> SirOutcome:
    """SIR at the typical primary receiver.

    ``exact_set`` uses the actual beamformers (targeting transmitters contribute
    their numerically-zero residual). ``prefix`` removes the ``C`` nearest
    secondary interferers and treats the rest as un-nulled, i.e. with a
    channel independent of their beamformer.
    """
    if real.typical != "primary":
        raise ParameterError("realisation has no typical primary pair")
    cfg = real.config
    a = cfg.alpha
    signal = cfg.P_p * cfg.d_p ** (-a) * abs(real.h00) ** 2
    ip = float(np.sum(cfg.P_p * _path_loss(real.primary_distances(), a) * np.abs(real.h0) ** 2))
    if len(real.secondary) == 0:
        return _sir(signal, ip, 0.0, 0)
    u = np.array([b.vector for b in real.beamformers])
    dist = real.secondary_distances()
    if mode == "exact_set":
        gains = np.abs(np.sum(real.g0 * u, axis=1)) ** 2
        c = canceled_count(0, real, "exact_set")
        gains[real.targets_origin()] = 0.0
    elif mode == "prefix":
        gains = np.abs(np.sum(real.g0_nominal * u, axis=1)) ** 2
        c = canceled_count(0, real, "prefix")
        order = nearest((0.0, 0.0), real.secondary, len(real.secondary)).indices
        gains[order[:c]] = 0.0
    else:
        raise ParameterError(f"unknown cancelation mode {mode!r}")
    is_ = float(np.sum(cfg.P_s * _path_loss(dist, a) * gains))
    return _sir(signal, ip, is_, c)


def sir_secondary(real: DeploymentRealization) -> SirOutcome:
    """SIR at the typical secondary receiver after combining with ``t_0``."""
    if real.typical != "secondary":
        raise ParameterError("realisation has no typical secondary pair")
    cfg = real.config
    a = cfg.alpha
    t = real.combiner.vector
    signal = cfg.P_s * cfg.d_s ** (-a) * abs(t.conj() @ real.Q00 @ real.typical_beamformer.vector) ** 2
    ip = 0.0
    if len(real.primary):
        ip = float(np.sum(cfg.P_p * _path_loss(real.primary_distances(), a)
                          * np.abs(real.f0 @ t.conj()) ** 2))
    is_ = 0.0
    if len(real.secondary):
        u = np.array([b.vector for b in real.beamformers])
        eff = np.einsum("nij,nj->ni", real.Q0, u)
        is_ = float(np.sum(cfg.P_s * _path_loss(real.secondary_distances(), a)
                           * np.abs(eff @ t.conj()) ** 2))
    return _sir(signal, ip, is_, len(real.canceled))
