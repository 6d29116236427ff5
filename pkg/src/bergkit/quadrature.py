"""Quadrature rules for the weighted volume ``v_alpha`` on the unit ball.

``dv_alpha = c_alpha (1-|z|^2)^alpha dv`` with ``dv`` the normalized volume
measure, so that every full-ball grid here has total mass 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln, roots_jacobi, roots_legendre


def c_alpha(n: int, alpha: float) -> float:
    """Normalizing constant ``Gamma(n+alpha+1) / (n! Gamma(alpha+1))``."""
    return float(np.exp(gammaln(n + alpha + 1) - gammaln(n + 1) - gammaln(alpha + 1)))


def _check_alpha(alpha):
    if not alpha > -1:
        raise ValueError(f"alpha must exceed -1, got {alpha}")


def jacobi_unit(order: int, a: float, b: float = 0.0):
    """Gauss rule on [0, 1] for the weight ``(1-t)^a t^b``."""
    x, w = roots_jacobi(order, a, b)
    return (1 + x) / 2, w * 2.0 ** (-a - b - 1)


def legendre_interval(order: int, lo: float, hi: float):
    x, w = roots_legendre(order)
    h = (hi - lo) / 2
    return lo + h * (x + 1), w * h


@dataclass(frozen=True)
class PolarLayout:
    """Ring structure of a disk grid.

    Nodes are stored ring by ring; ring ``i`` holds ``counts[i]`` equally
    spaced angles ``2 pi (l + offsets[i]) / counts[i]`` at radius
    ``radii[i]``.
    """

    radii: np.ndarray
    counts: np.ndarray
    offsets: np.ndarray
    ring_weights: np.ndarray  # total v_alpha weight of each ring

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.counts)[:-1]])

    @property
    def uniform(self) -> bool:
        return bool(np.all(self.counts == self.counts[0]) and np.all(self.offsets == 0))


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and positive weights approximating integration against ``v_alpha``."""

    nodes: np.ndarray  # (N, n) complex
    weights: np.ndarray  # (N,)
    alpha: float
    n: int
    exact_degree: int
    polar: Optional[PolarLayout] = field(default=None, repr=False)
    support_radius: float = 1.0

    def __post_init__(self):
        if np.any(np.sum(np.abs(self.nodes) ** 2, axis=1) >= 1.0):
            raise ValueError("grid nodes must lie strictly inside the ball")
        if np.any(self.weights <= 0):
            raise ValueError("grid weights must be positive")

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.nodes, axis=1)

    def integrate(self, values) -> complex:
        return complex(np.dot(self.weights, values))


def _polar_nodes(radii, counts, offsets):
    rr = np.repeat(radii, counts)
    idx = np.concatenate([np.arange(c) for c in counts])
    th = 2 * np.pi * (idx + np.repeat(offsets, counts)) / np.repeat(counts, counts)
    return (rr * np.exp(1j * th))[:, None]


def build_grid(n: int, alpha: float, radial_order: int, angular_order: int) -> QuadratureGrid:
    """Product Gauss rule on the ball, exact for low-degree polynomials.

    n = 1: Gauss-Jacobi in ``t = r^2`` for the weight ``(1-t)^alpha`` times
    the uniform angular rule with ``angular_order`` points.

    n = 2: the radial simplex ``t1 + t2 <= 1`` (``t_i = |z_i|^2``) is
    collapsed with ``t1 = s u, t2 = s (1-u)``; Gauss-Jacobi in ``s`` for
    ``(1-s)^alpha s``, Gauss-Legendre in ``u`` and uniform angles in each
    coordinate.

    ``exact_degree`` is the largest total degree ``|a| + |b|`` for which
    every ``z^a conj(z)^b`` is integrated exactly.
    """
    _check_alpha(alpha)
    if radial_order < 1 or angular_order < 1:
        raise ValueError("orders must be positive")
    ca = c_alpha(n, alpha)
    exact = min(angular_order - 1, 4 * radial_order - 2)
    if n == 1:
        t, wt = jacobi_unit(radial_order, alpha)
        counts = np.full(radial_order, angular_order)
        offsets = np.zeros(radial_order)
        ring_w = ca * wt
        nodes = _polar_nodes(np.sqrt(t), counts, offsets)
        weights = np.repeat(ring_w / angular_order, counts)
        polar = PolarLayout(np.sqrt(t), counts, offsets, ring_w)
        return QuadratureGrid(nodes, weights, float(alpha), 1, exact, polar)
    if n == 2:
        s, ws = jacobi_unit(radial_order, alpha, 1.0)
        u, wu = legendre_interval(radial_order, 0.0, 1.0)
        th = 2 * np.pi * np.arange(angular_order) / angular_order
        S, U = np.meshgrid(s, u, indexing="ij")
        W = 2 * ca * np.outer(ws, wu)
        r1 = np.sqrt(S * U).ravel()
        r2 = np.sqrt(S * (1 - U)).ravel()
        e = np.exp(1j * th)
        z1 = (r1[:, None, None] * e[None, :, None]) * np.ones(angular_order)[None, None, :]
        z2 = (r2[:, None, None] * np.ones(angular_order)[None, :, None]) * e[None, None, :]
        nodes = np.stack([z1.ravel(), z2.ravel()], axis=1)
        weights = np.repeat(W.ravel() / angular_order**2, angular_order**2)
        return QuadratureGrid(nodes, weights, float(alpha), 2, exact)
    raise NotImplementedError("grids are implemented for n = 1 and n = 2")


def grid_for_degree(n: int, alpha: float, degree: int) -> QuadratureGrid:
    """Smallest product grid integrating degree-``degree`` polynomials exactly."""
    radial = max(1, math.ceil((degree + 2) / 4))
    return build_grid(n, alpha, radial, degree + 1)


def build_ball_grid(n: int, alpha: float, radius: float, radial_order: int,
                    angular_order: int) -> QuadratureGrid:
    """Rule for ``v_alpha`` restricted to the Euclidean ball ``|u| < radius``.

    Weights are the ``v_alpha`` masses (not renormalized), so they sum to
    ``v_alpha(radius * B)``.
    """
    _check_alpha(alpha)
    if not 0 < radius < 1:
        raise ValueError("radius must lie in (0, 1)")
    ca = c_alpha(n, alpha)
    R2 = radius**2
    if n == 1:
        t, wt = legendre_interval(radial_order, 0.0, R2)
        ring_w = ca * wt * (1 - t) ** alpha
        counts = np.full(radial_order, angular_order)
        offsets = np.zeros(radial_order)
        nodes = _polar_nodes(np.sqrt(t), counts, offsets)
        weights = np.repeat(ring_w / angular_order, counts)
        polar = PolarLayout(np.sqrt(t), counts, offsets, ring_w)
        return QuadratureGrid(nodes, weights, float(alpha), 1, angular_order - 1, polar, radius)
    if n == 2:
        s, ws = legendre_interval(radial_order, 0.0, R2)
        ws = ws * s * (1 - s) ** alpha
        u, wu = legendre_interval(radial_order, 0.0, 1.0)
        th = 2 * np.pi * np.arange(angular_order) / angular_order
        S, U = np.meshgrid(s, u, indexing="ij")
        W = 2 * ca * np.outer(ws, wu)
        r1 = np.sqrt(S * U).ravel()
        r2 = np.sqrt(S * (1 - U)).ravel()
        e = np.exp(1j * th)
        z1 = (r1[:, None, None] * e[None, :, None]) * np.ones(angular_order)[None, None, :]
        z2 = (r2[:, None, None] * np.ones(angular_order)[None, :, None]) * e[None, None, :]
        nodes = np.stack([z1.ravel(), z2.ravel()], axis=1)
        weights = np.repeat(W.ravel() / angular_order**2, angular_order**2)
        return QuadratureGrid(nodes, weights, float(alpha), 2, angular_order - 1, None, radius)
    raise NotImplementedError("grids are implemented for n = 1 and n = 2")


def build_hyperbolic_grid(alpha: float, spacing: float, radius: float,
                          min_angles: int = 16, panel_order: int = 4,
                          cap_order: int = 0) -> QuadratureGrid:
    """Disk grid with roughly uniform node density in the hyperbolic metric.

    The radial variable ``b = atanh(r)`` on ``[0, atanh(radius)]`` is split
    into panels of ``panel_order`` Gauss-Legendre rings whose mean spacing is
    ``spacing``; each ring gets about ``circumference / spacing`` angles (at
    least ``min_angles``), with half-step offsets on alternate rings.  With
    ``cap_order > 0`` a Gauss-Jacobi cap on ``radius < |z| < 1`` is added so
    that the grid integrates over the whole disk.
    """
    _check_alpha(alpha)
    if spacing <= 0 or not 0 < radius < 1:
        raise ValueError("need spacing > 0 and 0 < radius < 1")
    B = math.atanh(radius)
    panels = max(1, math.ceil(B / (spacing * panel_order)))
    edges = np.linspace(0.0, B, panels + 1)
    bs, wb = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = legendre_interval(panel_order, lo, hi)
        bs.append(x)
        wb.append(w)
    b = np.concatenate(bs)
    wb = np.concatenate(wb)
    r = np.tanh(b)
    # dv_alpha = (alpha+1) (1-r^2)^alpha 2 r dr dtheta/2pi and dr = (1-r^2) db
    ring_w = (alpha + 1) * (1 - r**2) ** (alpha + 1) * 2 * r * wb
    circ = 2 * np.pi * r / (1 - r**2)
    counts = np.maximum(min_angles, np.ceil(circ / spacing)).astype(int)
    offsets = 0.5 * (np.arange(len(r)) % 2)
    if cap_order > 0:
        t, wt = jacobi_unit(cap_order, alpha)
        T = radius**2 + (1 - radius**2) * t
        rc = np.sqrt(T)
        wc = (alpha + 1) * wt * (1 - radius**2) ** (alpha + 1)
        r = np.concatenate([r, rc])
        ring_w = np.concatenate([ring_w, wc])
        counts = np.concatenate([counts, np.full(cap_order, counts[-1])])
        offsets = np.concatenate([offsets, np.zeros(cap_order)])
    nodes = _polar_nodes(r, counts, offsets)
    weights = np.repeat(ring_w / counts, counts)
    polar = PolarLayout(r, counts, offsets, ring_w)
    support = 1.0 if cap_order > 0 else radius
    return QuadratureGrid(nodes, weights, float(alpha), 1, int(min_angles) - 1, polar, support)


def monomial_integral(n: int, alpha: float, a, b) -> float:
    """Exact ``int z^a conj(z)^b dv_alpha`` for multi-indices ``a``, ``b``."""
    a = np.atleast_1d(a)
    b = np.atleast_1d(b)
    if np.any(a != b):
        return 0.0
    k = int(np.sum(a))
    lg = np.sum(gammaln(a + 1)) + gammaln(n + alpha + 1) - gammaln(n + k + alpha + 1)
    return float(np.exp(lg))


def monomial_exactness_error(grid: QuadratureGrid, degree: int | None = None) -> float:
    """Max error over monomials ``z^a conj(z)^b`` with ``|a|+|b| <= degree``."""
    from itertools import product

    D = grid.exact_degree if degree is None else degree
    n = grid.n
    worst = 0.0
    z = grid.nodes
    idx = [m for m in product(range(D + 1), repeat=n) if sum(m) <= D]
    pows = [np.stack([z[:, i] ** m for m in range(D + 1)], axis=1) for i in range(n)]
    for a in idx:
        za = np.prod([pows[i][:, a[i]] for i in range(n)], axis=0)
        for b in idx:
            if sum(a) + sum(b) > D:
                continue
            zb = np.prod([pows[i][:, b[i]] for i in range(n)], axis=0)
            val = np.dot(grid.weights, za * np.conj(zb))
            worst = max(worst, abs(val - monomial_integral(n, grid.alpha, a, b)))
    return worst
