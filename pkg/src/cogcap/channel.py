"""Rayleigh fading draws, null-space beamformers and receive combiners.

Conventions
-----------
* Row channels (transmitter with N antennas to a single-antenna receiver) are
  1-D arrays of length N; the received scalar is ``g @ u``.
* Matrix channels are (M, N) arrays, receive vectors are length M.
* A vector ``t`` combines as ``t.conj() @ y``.
* ``|h|^2`` for ``h ~ CN(0, 1)`` is Exp(1); "2j degrees of freedom" means
  Gamma(shape=j, scale=1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, DegenerateChannelError, DegreesOfFreedomError, ParameterError

RANK_RTOL = 1e-12
DEGENERATE_NORM2 = 1e-30


def draw_gaussian_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) entries: real and imaginary parts each of variance 1/2."""
    if rows < 1 or cols < 1:
        raise ParameterError(f"matrix dimensions must be >= 1, got {rows}x{cols}")
    z = rng.standard_normal((rows, cols, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def null_space_basis(constraints, n: int | None = None) -> np.ndarray:
    """Orthonormal basis of ``{x : constraints @ x = 0}``.

    Parameters
    ----------
    constraints : (j, N) complex array of stacked row channels. ``j`` may be 0
        if ``n`` is given.
    n : ambient dimension, required when there are no constraints.

    Returns
    -------
    (N, N - j) array with orthonormal columns.

    Raises
    ------
    DegreesOfFreedomError
        If ``j >= N``.
    ConditioningError
        If the rows are numerically dependent.
    """
    a = np.asarray(constraints, dtype=complex)
    if a.ndim == 1:
        a = a[None, :] if a.size else a.reshape(0, n or 0)
    if n is None:
        n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n, dtype=complex)
    j = a.shape[0]
    if a.shape[1] != n:
        raise ParameterError(f"constraint rows have length {a.shape[1]}, expected {n}")
    if j >= n:
        raise DegreesOfFreedomError(f"{j} constraints leave no null space in dimension {n}")
    # Range of A^H is the row space of A; its complement in C^N is ker(A).
    q, r = np.linalg.qr(a.conj().T, mode="complete")
    diag = np.abs(np.diag(r))
    if diag.min() <= RANK_RTOL * max(diag.max(), np.finfo(float).tiny):
        raise ConditioningError("constraint rows are numerically rank deficient")
    return q[:, j:]


@dataclass(frozen=True, eq=False)
class Beamformer:
    """Unit-norm transmit vector and the row channels it must annihilate."""

    vector: np.ndarray
    nulled_targets: np.ndarray = field(default_factory=lambda: np.empty((0, 0), complex))

    def residuals(self) -> np.ndarray:
        if self.nulled_targets.size == 0:
            return np.empty(0)
        return np.abs(self.nulled_targets @ self.vector)


@dataclass(frozen=True, eq=False)
class Combiner:
    """Unit-norm receive vector and the (M,) channels it cancels (stored as columns)."""

    vector: np.ndarray
    canceled_channels: np.ndarray = field(default_factory=lambda: np.empty((0, 0), complex))

    def residuals(self) -> np.ndarray:
        if self.canceled_channels.size == 0:
            return np.empty(0)
        return np.abs(self.vector.conj() @ self.canceled_channels)


def _project(basis, direction):
    p = basis @ (basis.conj().T @ direction)
    norm2 = float(np.real(np.vdot(p, p)))
    if norm2 < DEGENERATE_NORM2:
        raise DegenerateChannelError("desired channel is orthogonal to the admissible subspace")
    return p / np.sqrt(norm2)


def transmit_beamformer(own_channel, basis, nulled_targets=None) -> Beamformer:
    """Signal-maximising beamformer restricted to ``span(basis)``.

    For a row channel ``q`` this is the normalised projection of ``q^*`` onto the
    null space, so ``|q @ u|^2 = ||S^H q^H||^2``. For a matrix channel ``Q`` the
    dominant right singular vector of ``Q S`` is used (maximising ``||Q u||``);
    with a one-dimensional basis that is the basis vector itself.
    """
    s = np.asarray(basis, dtype=complex)
    if s.ndim != 2 or s.shape[1] == 0:
        raise DegreesOfFreedomError("empty null-space basis: no transmit degrees of freedom left")
    q = np.asarray(own_channel, dtype=complex)
    if q.ndim == 1:
        u = _project(s, q.conj())
    else:
        if s.shape[1] == 1:
            w = np.ones(1, dtype=complex)
        else:
            _, _, vh = np.linalg.svd(q @ s)
            w = vh[0].conj()
        u = s @ w
        if np.linalg.norm(q @ u) ** 2 < DEGENERATE_NORM2:
            raise DegenerateChannelError("desired channel is orthogonal to the admissible subspace")
        u = u / np.linalg.norm(u)
    targets = np.empty((0, s.shape[0]), complex) if nulled_targets is None else np.atleast_2d(nulled_targets)
    return Beamformer(u, targets)


def receive_combiner(effective_signal, basis, canceled_channels=None) -> Combiner:
    """Unit-norm combiner in ``span(basis)`` maximising ``|t^* s|^2``.

    ``basis`` is the null space of the conjugated canceled channels, i.e. the
    output of ``null_space_basis(C.conj().T)`` for canceled columns ``C``.
    """
    r = np.asarray(basis, dtype=complex)
    if r.ndim != 2 or r.shape[1] == 0:
        raise DegreesOfFreedomError("empty null-space basis: no receive degrees of freedom left")
    t = _project(r, np.asarray(effective_signal, dtype=complex).reshape(-1))
    cc = np.empty((r.shape[0], 0), complex) if canceled_channels is None else np.asarray(canceled_channels, complex)
    return Combiner(t, cc.reshape(r.shape[0], -1))


def effective_gain(left, channel, right) -> float:
    """``|left^* @ channel @ right|^2`` with ``None`` standing for the unit scalar."""
    if isinstance(left, Combiner):
        left = left.vector
    if isinstance(right, Beamformer):
        right = right.vector
    h = np.asarray(channel, dtype=complex)
    if h.ndim == 0:
        h = h.reshape(1, 1)
    elif h.ndim == 1:
        # row channel unless only a left vector is supplied
        h = h[None, :] if right is not None or left is None else h[:, None]
    rows, cols = h.shape
    l = np.ones(1, complex) if left is None else np.asarray(left, complex).reshape(-1)
    r = np.ones(1, complex) if right is None else np.asarray(right, complex).reshape(-1)
    if l.size != rows or r.size != cols:
        raise ParameterError(
            f"dimension mismatch: left {l.size}, channel {rows}x{cols}, right {r.size}")
    return float(abs(l.conj() @ h @ r) ** 2)
