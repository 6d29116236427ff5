"""Möbius automorphisms of the unit ball and the invariant metrics.

Points are stored as complex arrays whose last axis has length ``n``.  A
scalar complex number is accepted as a point of the disk (``n = 1``).

The inner product is ``<z, w> = sum_i z_i conj(w_i)``, linear in the first
slot.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

#: points with Euclidean norm at or above ``1 - BOUNDARY_TOL`` are rejected
BOUNDARY_TOL = 1e-12

ArrayLike = Union[complex, np.ndarray, "BallPoint", list, tuple]


class DomainError(ValueError):
    """Raised when a point does not lie in the open unit ball."""


def as_points(z: ArrayLike, n: int | None = None) -> np.ndarray:
    """Return ``z`` as a complex array of shape ``(..., n)`` inside the ball.

    A 0-d input is read as a point of the disk.  When ``n`` is given a
    1-d input of length ``N != n`` with ``n == 1`` is read as ``N`` disk
    points.
    """
    if isinstance(z, BallPoint):
        return z.coords
    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if n == 1 and arr.shape[-1] != 1:
        arr = arr[..., None]
    elif n is not None and arr.shape[-1] != n:
        raise ValueError(f"expected points in C^{n}, got shape {arr.shape}")
    sq = np.sum(np.abs(arr) ** 2, axis=-1)
    if not np.all(np.isfinite(sq)) or np.any(sq >= (1.0 - BOUNDARY_TOL) ** 2):
        raise DomainError("point outside the open unit ball")
    return arr


@dataclass(frozen=True)
class BallPoint:
    """A single point of the open unit ball of C^n."""

    coords: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coords, dtype=complex).reshape(-1)
        arr = as_points(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def __array__(self, dtype=None, copy=None):
        return self.coords.astype(dtype) if dtype else self.coords

    def __repr__(self):
        parts = ", ".join(f"{c:.6g}" for c in self.coords)
        return f"BallPoint([{parts}])"


def inner(z, w) -> np.ndarray:
    """``<z, w> = sum z_i conj(w_i)`` along the last axis."""
    return np.sum(np.asarray(z) * np.conj(np.asarray(w)), axis=-1)


def _sqnorm(z) -> np.ndarray:
    return np.sum(np.abs(z) ** 2, axis=-1)


def mobius(z: ArrayLike, w: ArrayLike) -> np.ndarray:
    """Involutive automorphism ``phi_z`` applied to ``w``.

    ``phi_z(w) = (z - P_z w - s_z Q_z w) / (1 - <w, z>)`` with ``P_z`` the
    orthogonal projection onto ``span(z)``, ``Q_z = I - P_z`` and
    ``s_z = sqrt(1 - |z|^2)``.  Broadcasts over leading axes of ``w`` (and
    of ``z``).
    """
    z = as_points(z)
    w = as_points(w, z.shape[-1])
    zz = _sqnorm(z)[..., None]
    a = inner(w, z)[..., None]
    s = np.sqrt(1.0 - zz)
    # project on the unit vector z/|z|; dividing by |z|^2 can overflow
    nz = np.linalg.norm(z, axis=-1)[..., None]
    u = z / np.where(nz > 0, nz, 1.0)
    proj = inner(w, u)[..., None] * u
    return (z - proj - s * (w - proj)) / (1.0 - a)


def rho(z: ArrayLike, w: ArrayLike) -> np.ndarray:
    """Pseudohyperbolic distance ``|phi_z(w)|``."""
    return np.linalg.norm(mobius(z, w), axis=-1)


def beta(z: ArrayLike, w: ArrayLike) -> np.ndarray:
    """Hyperbolic (Bergman) distance, ``atanh(rho)``."""
    return np.arctanh(rho(z, w))


def one_minus_rho2(z: ArrayLike, w: ArrayLike) -> np.ndarray:
    """``1 - rho(z, w)^2`` from the product formula (no cancellation)."""
    z = as_points(z)
    w = as_points(w, z.shape[-1])
    return (1 - _sqnorm(z)) * (1 - _sqnorm(w)) / np.abs(1 - inner(z, w)) ** 2


def mobius_identity_residual(z: ArrayLike, w: ArrayLike) -> np.ndarray:
    """``|1 - |phi_z(w)|^2 - (1-|z|^2)(1-|w|^2)/|1-<z,w>|^2|``."""
    lhs = 1.0 - _sqnorm(mobius(z, w))
    return np.abs(lhs - one_minus_rho2(z, w))


def rho_matrix(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Pairwise pseudohyperbolic distances between rows of ``z`` and ``w``.

    Uses ``rho^2 = (|z-w|^2 - sum_{i<j}|z_i w_j - z_j w_i|^2) / |1-<z,w>|^2``,
    which stays accurate for nearby points.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    n = z.shape[-1]
    diff = z[:, None, :] - w[None, :, :]
    num = np.sum(diff.real ** 2 + diff.imag ** 2, axis=-1)
    for i in range(n):
        for j in range(i + 1, n):
            c = np.outer(z[:, i], w[:, j]) - np.outer(z[:, j], w[:, i])
            num -= c.real ** 2 + c.imag ** 2
    den = np.abs(1.0 - z @ np.conj(w).T) ** 2
    return np.sqrt(np.clip(num / den, 0.0, 1.0))


def beta_matrix(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.arctanh(np.minimum(rho_matrix(z, w), 1 - 1e-16))


@dataclass(frozen=True)
class HyperbolicDisk:
    """``D(center, radius) = {w : beta(center, w) <= radius}``."""

    center: BallPoint
    radius: float

    def __post_init__(self):
        if not isinstance(self.center, BallPoint):
            object.__setattr__(self, "center", BallPoint(self.center))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    @property
    def euclidean_radius(self) -> float:
        """Pseudohyperbolic radius ``tanh(radius)``."""
        return float(np.tanh(self.radius))

    def contains(self, w) -> np.ndarray:
        w = as_points(w, self.center.n)
        return rho(self.center.coords, w) <= self.euclidean_radius

    def contains_beta(self, w) -> np.ndarray:
        w = as_points(w, self.center.n)
        return beta(self.center.coords, w) <= self.radius


def random_points(count: int, n: int, rng: np.random.Generator, max_radius: float = 0.999) -> np.ndarray:
    """Points uniform in direction with radius uniform on ``[0, max_radius)``."""
    v = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (max_radius * rng.random(count))[:, None]


def identity_residuals(z, w, a) -> dict:
    """Max residuals of the Möbius identity, the involution
    ``phi_z(phi_z(w)) = w`` and invariance ``rho(phi_a z, phi_a w) = rho(z, w)``
    over matched rows of ``z``, ``w``, ``a``."""
    ident = mobius_identity_residual(z, w)
    invol = np.linalg.norm(mobius(z, mobius(z, w)) - w, axis=-1)
    lhs = np.sqrt(np.clip(1 - one_minus_rho2(mobius(a, z), mobius(a, w)), 0, None))
    rhs = np.sqrt(np.clip(1 - one_minus_rho2(z, w), 0, None))
    return {"mobius_identity": float(np.max(ident)), "involution": float(np.max(invol)),
            "rho_invariance": float(np.max(np.abs(lhs - rhs)))}
