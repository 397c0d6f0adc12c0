"""Homogeneous Poisson point processes on a disc.

Everything here is a pure function of its inputs and an explicit
``numpy.random.Generator``. Samples are frozen dataclasses whose arrays are
marked read-only, so they can be shared between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ParameterError

PRIMARY = 0
SECONDARY = 1
NETWORK_NAMES = {PRIMARY: "primary", SECONDARY: "secondary"}


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Region:
    """Disc of the given radius (meters) centred at the origin."""

    radius: float

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius <= 0:
            raise ParameterError(f"region radius must be > 0, got {self.radius!r}")

    @property
    def center(self):
        return (0.0, 0.0)

    @property
    def area(self) -> float:
        return float(np.pi * self.radius**2)

    def contains(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.hypot(points[:, 0], points[:, 1]) <= self.radius * (1 + 1e-12)


@dataclass(frozen=True)
class AccessConfig:
    """ALOHA access probability applied independently per transmitter."""

    access_probability: float

    def __post_init__(self):
        p = self.access_probability
        if not (0.0 <= p <= 1.0):
            raise ParameterError(f"access probability must lie in [0, 1], got {p!r}")

    def active_intensity(self, intensity: float) -> float:
        return self.access_probability * intensity


@dataclass(frozen=True, eq=False)
class PointSample:
    """A realisation of a marked planar point process.

    Attributes
    ----------
    region : Region the transmitters were generated in.
    points : (n, 2) float array of transmitter positions in meters.
    network : (n,) int8 array, ``PRIMARY`` or ``SECONDARY`` per point.
    receivers : (n, 2) array of paired receiver positions, NaN where unpaired.
    pair_distance : (n,) array of configured link distances, NaN where unpaired.
    """

    region: Region
    points: np.ndarray
    network: np.ndarray
    receivers: np.ndarray
    pair_distance: np.ndarray

    @classmethod
    def build(cls, region, points, network, receivers=None, pair_distance=None):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        n = len(points)
        network = np.broadcast_to(np.asarray(network, dtype=np.int8), (n,))
        if receivers is None:
            receivers = np.full((n, 2), np.nan)
        if pair_distance is None:
            pair_distance = np.full(n, np.nan)
        return cls(
            region,
            _frozen(points),
            _frozen(network, np.int8),
            _frozen(np.asarray(receivers, dtype=float).reshape(n, 2)),
            _frozen(np.broadcast_to(np.asarray(pair_distance, dtype=float), (n,))),
        )

    @classmethod
    def empty(cls, region, network=PRIMARY):
        return cls.build(region, np.empty((0, 2)), network)

    def __len__(self):
        return len(self.points)

    @property
    def is_paired(self) -> np.ndarray:
        return ~np.isnan(self.pair_distance)

    def subset(self, mask_or_index) -> "PointSample":
        return PointSample.build(
            self.region,
            self.points[mask_or_index],
            self.network[mask_or_index],
            self.receivers[mask_or_index],
            self.pair_distance[mask_or_index],
        )

    def select(self, network: int) -> "PointSample":
        return self.subset(self.network == network)


class Neighbors(NamedTuple):
    """Result of :func:`nearest`; ``short`` is set when fewer than j points exist."""

    indices: np.ndarray
    points: np.ndarray
    distances: np.ndarray
    short: bool

    def as_list(self):
        return [(tuple(p), float(d)) for p, d in zip(self.points, self.distances)]


def uniform_disc(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. uniform points on a disc (inverse-CDF radius, uniform angle)."""
    r = radius * np.sqrt(rng.random(n))
    theta = 2 * np.pi * rng.random(n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def sample_ppp(intensity: float, region: Region, rng: np.random.Generator,
               network: int = PRIMARY) -> PointSample:
    """Draw a homogeneous PPP of ``intensity`` nodes/m^2 on ``region``."""
    if not np.isfinite(intensity) or intensity < 0:
        raise ParameterError(f"intensity must be >= 0, got {intensity!r}")
    count = rng.poisson(intensity * region.area)
    return PointSample.build(region, uniform_disc(count, region.radius, rng), network)


def thin(sample: PointSample, access: AccessConfig, rng: np.random.Generator) -> PointSample:
    """Keep each point independently with the access probability."""
    keep = rng.random(len(sample)) < access.access_probability
    return sample.subset(keep)


def displace_receivers(tx_sample: PointSample, distance: float,
                       rng: np.random.Generator) -> PointSample:
    """Attach a receiver at exactly ``distance`` from every transmitter, uniform direction.

    Receivers may land outside the region; only transmitters are truncated.
    """
    if not np.isfinite(distance) or distance <= 0:
        raise ParameterError(f"link distance must be > 0, got {distance!r}")
    phi = 2 * np.pi * rng.random(len(tx_sample))
    rx = tx_sample.points + distance * np.column_stack((np.cos(phi), np.sin(phi)))
    return PointSample.build(tx_sample.region, tx_sample.points, tx_sample.network,
                             rx, distance)


def superpose(a: PointSample, b: PointSample) -> PointSample:
    """Union of two samples on the same region, marks and pairings preserved."""
    if a.region != b.region:
        raise ParameterError(f"cannot superpose samples on {a.region} and {b.region}")
    return PointSample.build(
        a.region,
        np.concatenate((a.points, b.points)),
        np.concatenate((a.network, b.network)),
        np.concatenate((a.receivers, b.receivers)),
        np.concatenate((a.pair_distance, b.pair_distance)),
    )


def nearest(query, sample, j: int) -> Neighbors:
    """The ``j`` points of ``sample`` closest to ``query``, ascending.

    ``sample`` may be a :class:`PointSample` or an (n, 2) array. Ties are broken
    by insertion index. Asking for more points than exist returns all of them
    with ``short=True``.
    """
    if j < 0:
        raise ParameterError(f"j must be >= 0, got {j}")
    pts = sample.points if isinstance(sample, PointSample) else np.asarray(sample, float).reshape(-1, 2)
    q = np.asarray(query, dtype=float)
    dist = np.hypot(pts[:, 0] - q[0], pts[:, 1] - q[1])
    order = np.argsort(dist, kind="stable")[:j]
    return Neighbors(order, pts[order], dist[order], j > len(pts))
