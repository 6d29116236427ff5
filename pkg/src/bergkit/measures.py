"""Measures on the ball, the growth integrals F_{s,t}, Carleson quantities
and a discrete Schur test."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import betaln, gammaln, hyp2f1, roots_jacobi

from .geometry import as_points, inner, mobius, rho_matrix
from .quadrature import (QuadratureGrid, build_ball_grid, grid_for_degree,
                         legendre_interval)


@dataclass(frozen=True)
class SymbolFunction:
    """Complex function on the ball together with a bound for its sup-norm.

    ``func`` maps an ``(N, n)`` array of points to ``N`` values.  A radial
    symbol may also carry ``profile``, a function of ``t = |z|^2``, and
    ``breakpoints`` in ``t`` where the profile is not smooth.
    ``max_degree`` is the polynomial degree in ``z, conj(z)`` when the
    symbol is a polynomial, else None.
    """

    func: Callable[[np.ndarray], np.ndarray]
    sup_bound: float
    label: str = "symbol"
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    breakpoints: tuple = ()
    max_degree: Optional[int] = None
    real: bool = False

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[:, None]
        return np.asarray(self.func(pts), dtype=complex) * np.ones(pts.shape[0])

    @property
    def radial(self) -> bool:
        return self.profile is not None

    def compose_mobius(self, z) -> "SymbolFunction":
        z = as_points(z)
        return SymbolFunction(lambda w: self.func(mobius(z, w)), self.sup_bound,
                              f"{self.label}∘phi", real=self.real)

    def conj(self) -> "SymbolFunction":
        prof = None if self.profile is None else (lambda t: np.conj(self.profile(t)))
        return SymbolFunction(lambda w: np.conj(self.func(w)), self.sup_bound,
                              f"conj({self.label})", prof, self.breakpoints,
                              self.max_degree, self.real)

    def __mul__(self, other: "SymbolFunction") -> "SymbolFunction":
        prof = None
        if self.radial and other.radial:
            prof = lambda t: self.profile(t) * other.profile(t)  # noqa: E731
        deg = None
        if self.max_degree is not None and other.max_degree is not None:
            deg = self.max_degree + other.max_degree
        return SymbolFunction(lambda w: self.func(w) * other.func(w),
                              self.sup_bound * other.sup_bound,
                              f"{self.label}*{other.label}", prof,
                              tuple(sorted(set(self.breakpoints) | set(other.breakpoints))),
                              deg, self.real and other.real)


def constant_symbol(c: complex = 1.0) -> SymbolFunction:
    return SymbolFunction(lambda w: np.full(w.shape[0], c, dtype=complex), abs(c),
                          f"{c}", lambda t: np.full(np.shape(t), c, dtype=complex),
                          max_degree=0, real=np.isreal(c))


class Measure:
    """Base class; see :class:`AtomicMeasure` and :class:`DensityMeasure`."""

    n: int
    is_atomic: bool

    def integrate(self, f) -> complex:
        raise NotImplementedError

    def variation(self) -> "Measure":
        raise NotImplementedError

    @cached_property
    def variation_is_carleson(self) -> bool:
        return self._carleson_check()


@dataclass(eq=False)
class AtomicMeasure(Measure):
    """Finite sum of point masses ``sum_m masses[m] delta_{points[m]}``."""

    points: np.ndarray  # (M, n)
    masses: np.ndarray  # (M,)
    label: str = "atomic"

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=complex))
        self.masses = np.atleast_1d(np.asarray(self.masses, dtype=complex))
        if self.points.shape[0] != self.masses.shape[0]:
            raise ValueError("points and masses differ in length")
        if self.points.size:
            as_points(self.points)
        if not np.all(np.isfinite(self.masses)):
            raise ValueError("atomic masses must be finite")
        self.n = self.points.shape[1]
        self.is_atomic = True

    def integrate(self, f) -> complex:
        vals = f(self.points) if callable(f) else np.asarray(f)
        return complex(np.dot(self.masses, vals))

    def variation(self) -> "AtomicMeasure":
        return AtomicMeasure(self.points, np.abs(self.masses), f"|{self.label}|")

    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.masses)))

    def restrict(self, keep) -> "AtomicMeasure":
        keep = np.asarray(keep)
        return AtomicMeasure(self.points[keep], self.masses[keep], self.label)

    def _carleson_check(self) -> bool:
        # finitely many atoms strictly inside the ball
        return bool(np.all(np.isfinite(self.masses)))


@dataclass(eq=False)
class DensityMeasure(Measure):
    """``density(w) dv_alpha(w)`` with a base quadrature grid for ``v_alpha``."""

    density: SymbolFunction
    grid: QuadratureGrid
    label: str = "density"

    def __post_init__(self):
        self.n = self.grid.n
        self.is_atomic = False

    @property
    def alpha(self) -> float:
        return self.grid.alpha

    @cached_property
    def sampled(self) -> np.ndarray:
        return self.density(self.grid.nodes)

    def integrate(self, f) -> complex:
        vals = f(self.grid.nodes) if callable(f) else np.asarray(f)
        return complex(np.dot(self.grid.weights * self.sampled, vals))

    def variation(self) -> "DensityMeasure":
        d = self.density
        absd = SymbolFunction(lambda w: np.abs(d.func(w)), d.sup_bound, f"|{d.label}|",
                              None if d.profile is None else (lambda t: np.abs(d.profile(t))),
                              d.breakpoints, None, True)
        return DensityMeasure(absd, self.grid, f"|{self.label}|")

    def total_variation(self) -> float:
        return float(np.dot(self.grid.weights, np.abs(self.sampled)))

    def as_atomic(self) -> AtomicMeasure:
        """Node masses of the base grid."""
        return AtomicMeasure(self.grid.nodes, self.grid.weights * self.sampled, self.label)

    def _carleson_check(self) -> bool:
        return bool(np.isfinite(self.density.sup_bound))


def integrate(f, mu) -> complex:
    """Integrate ``f`` against a measure or a quadrature grid (``v_alpha``)."""
    if isinstance(mu, QuadratureGrid):
        vals = f(mu.nodes) if callable(f) else np.asarray(f)
        return complex(np.dot(mu.weights, vals))
    return mu.integrate(f)


def valpha(n: int = 1, alpha: float = 0.0, degree: int = 40) -> DensityMeasure:
    """``v_alpha`` itself, on a grid exact to ``degree``."""
    return DensityMeasure(constant_symbol(1.0), grid_for_degree(n, alpha, degree), "valpha")


def dirac(point, n: int = 1) -> AtomicMeasure:
    p = as_points(point, n).reshape(1, -1)
    return AtomicMeasure(p, np.array([1.0 + 0j]), "dirac")


def load_atoms(path, n: int = 1) -> AtomicMeasure:
    """Read an atom list: one atom per line, ``re im ... mass_re mass_im``.

    Each point takes ``2 n`` columns (real and imaginary part per
    coordinate).  Blank lines and ``#`` comments are skipped.
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([float(x) for x in line.replace(",", " ").split()])
    arr = np.array(rows, dtype=float).reshape(-1, 2 * n + 2)
    pts = arr[:, 0:2 * n:2] + 1j * arr[:, 1:2 * n:2]
    masses = arr[:, -2] + 1j * arr[:, -1]
    return AtomicMeasure(pts, masses, str(path))


def save_atoms(mu: AtomicMeasure, path) -> None:
    with open(path, "w") as fh:
        for p, m in zip(mu.points, mu.masses):
            cols = [f"{c.real:.17g} {c.imag:.17g}" for c in p]
            fh.write(" ".join(cols) + f" {m.real:.17g} {m.imag:.17g}\n")


# ---------------------------------------------------------------- growth F_{s,t}

def _radial_nodes(x: float, t: float, order: int = 24):
    """Nodes/weights on [0, 1] for ``(1-tau)^t g(tau)`` where ``g`` varies on
    the scale ``1 - x`` near ``tau = 1``.  Geometric panels towards 1 and a
    Gauss-Jacobi end panel."""
    scale = max(1.0 - x, 1e-16)
    taus, ws = [], []
    lo = 0.0
    gap = 0.5
    while gap > scale / 8:
        hi = 1.0 - gap
        tt, w = legendre_interval(order, lo, hi)
        taus.append(tt)
        ws.append(w * (1 - tt) ** t)
        lo, gap = hi, gap / 2
    delta = 1.0 - lo
    y, w = roots_jacobi(order, t, 0.0)
    taus.append(1.0 - delta * (1 - y) / 2)
    ws.append(w * (delta / 2) ** (t + 1))
    return np.concatenate(taus), np.concatenate(ws)


def f_st(s: float, t: float, z, n: int = 1) -> float:
    """``F_{s,t}(z) = int (1-|w|^2)^t / |1 - <z, w>|^s dv(w)``.

    The sphere average is the Gauss function ``2F1(s/2, s/2; n; r^2 |z|^2)``;
    the remaining radial integral is done by graded Gauss quadrature.
    """
    if not t > -1:
        raise ValueError("f_st needs t > -1")
    z = as_points(z, n)
    x = float(np.sum(np.abs(z) ** 2))
    tau, w = _radial_nodes(x, t)
    vals = n * tau ** (n - 1) * hyp2f1(s / 2, s / 2, n, tau * x)
    return float(np.dot(w, vals))


def f_st_series(s: float, t: float, z, n: int = 1, terms: int | None = None) -> float:
    """Power-series evaluation of ``F_{s,t}`` (independent of :func:`f_st`).

    ``F = sum_k ((s/2)_k)^2 / (k! (n)_k) |z|^{2k} n B(n+k, t+1)``.
    """
    z = as_points(z, n)
    x = float(np.sum(np.abs(z) ** 2))
    if terms is None:
        terms = int(min(2_000_000, max(200, 60 / max(1 - x, 1e-12))))
    k = np.arange(terms, dtype=float)
    a = s / 2
    if a == 0:
        lc = np.where(k == 0, 0.0, -np.inf)
    else:
        lc = 2 * (gammaln(a + k) - gammaln(a)) - gammaln(k + 1) - (gammaln(n + k) - gammaln(n))
    with np.errstate(divide="ignore"):
        lt = lc + k * np.log(x) if x > 0 else np.where(k == 0, lc, -np.inf)
    lt = lt + math.log(n) + betaln(n + k, t + 1)
    return float(np.sum(np.exp(lt)))


# ---------------------------------------------------------------- Carleson

def default_probes(n: int = 1, levels: int = 9, outer: Sequence[float] = (0.999,),
                   n_random: int = 3, seed: int = 0) -> np.ndarray:
    """Radial probes ``(1 - 2^-j) e_1`` plus random directions at the same radii."""
    radii = np.concatenate([1 - 2.0 ** -np.arange(1, levels + 1), np.asarray(outer, float)])
    rng = np.random.default_rng(seed)
    e1 = np.zeros(n, complex)
    e1[0] = 1
    dirs = [e1]
    for _ in range(n_random):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        dirs.append(v / np.linalg.norm(v))
    return np.array([r * d for d in dirs for r in radii])


def _gamma(n, alpha):
    return n + 1 + alpha


def _atomic_rkm_values(mu: AtomicMeasure, probes, alpha):
    g = _gamma(mu.n, alpha)
    zz = np.sum(np.abs(probes) ** 2, axis=1)
    den = np.abs(1 - probes @ np.conj(mu.points).T) ** (2 * g)
    return ((1 - zz) ** g)[:, None] / den @ np.abs(mu.masses)


def carleson_rkm_values(mu: Measure, probes, alpha: float | None = None) -> np.ndarray:
    """Per-probe values of ``int (1-|z|^2)^g / |1-<z,w>|^{2g} d|mu|(w)``,
    ``g = n+1+alpha``."""
    probes = as_points(probes, mu.n).reshape(-1, mu.n)
    if mu.is_atomic:
        if alpha is None:
            raise ValueError("alpha is required for atomic measures")
        return _atomic_rkm_values(mu, probes, alpha)
    # for a density against v_alpha the kernel weight is the push-forward of
    # v_alpha under phi_z, so the integral is the Berezin mean of |a|
    a = mu.density
    u = mu.grid.nodes
    out = np.empty(probes.shape[0])
    for i, z in enumerate(probes):
        out[i] = np.dot(mu.grid.weights, np.abs(a(mobius(z, u))))
    return out


def carleson_rkm(mu: Measure, probes, alpha: float | None = None) -> float:
    """Reproducing-kernel Carleson quantity: max over probes."""
    return float(np.max(carleson_rkm_values(mu, probes, alpha)))


def carleson_geo_values(mu: Measure, r: float, probes, alpha: float | None = None,
                        disk_orders=(24, 64)) -> np.ndarray:
    """Per-probe values of ``|mu|(D(z, r)) / (1-|z|^2)^{n+1+alpha}``."""
    if r <= 0:
        raise ValueError("r must be positive")
    probes = as_points(probes, mu.n).reshape(-1, mu.n)
    s = math.tanh(r)
    zz = np.sum(np.abs(probes) ** 2, axis=1)
    if mu.is_atomic:
        if alpha is None:
            raise ValueError("alpha is required for atomic measures")
        g = _gamma(mu.n, alpha)
        inside = rho_matrix(probes, mu.points) <= s
        return (inside @ np.abs(mu.masses)) / (1 - zz) ** g
    alpha = mu.alpha
    g = _gamma(mu.n, alpha)
    ang = disk_orders[1] if mu.n == 1 else max(8, disk_orders[1] // 4)
    disk = build_ball_grid(mu.n, alpha, s, disk_orders[0], ang)
    a = mu.density
    out = np.empty(probes.shape[0])
    for i, z in enumerate(probes):
        jac = 1.0 / np.abs(1 - inner(disk.nodes, z)) ** (2 * g)
        out[i] = np.dot(disk.weights * jac, np.abs(a(mobius(z, disk.nodes))))
    return out


def carleson_geo(mu: Measure, r: float, probes, alpha: float | None = None) -> float:
    """Geometric Carleson quantity: max over probes."""
    return float(np.max(carleson_geo_values(mu, r, probes, alpha)))


# ---------------------------------------------------------------- Schur test

@dataclass
class SchurResult:
    bound: float
    c_p: float
    c_q: float
    history: list = field(default_factory=list)

    @property
    def fails(self) -> bool:
        return not math.isfinite(self.bound)


def schur_bound(kernel, h, p: float, grids: Sequence[QuadratureGrid],
                growth_tol: float = 0.1, chunk: int = 2048) -> SchurResult:
    """Discrete Schur test for ``T g(x) = int K(x, y) g(y) dv(y)``.

    For each grid in the refinement schedule the two Schur integrals
    ``int K(x,y) h(y)^q dv(y) / h(x)^q`` and ``int K(x,y) h(x)^p dv(x) / h(y)^p``
    are maximized over nodes.  If either maximum grows by more than
    ``growth_tol`` (relative) at every refinement step the sup is treated
    as divergent and the bound is ``inf``.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    q = p / (p - 1)
    hist = []
    for grid in grids:
        x = grid.nodes
        hx = np.asarray(h(x), dtype=float)
        if np.any(hx <= 0):
            raise ValueError("h must be positive at the nodes")
        w = grid.weights
        row = np.zeros(grid.size)
        col = np.zeros(grid.size)
        for i0 in range(0, grid.size, chunk):
            K = np.asarray(kernel(x[i0:i0 + chunk], x), dtype=float)
            row[i0:i0 + chunk] = K @ (w * hx**q)
            col += (w[i0:i0 + chunk] * hx[i0:i0 + chunk] ** p) @ K
        cq = float(np.max(row / hx**q))
        cp = float(np.max(col / hx**p))
        hist.append((cq, cp))
    cq, cp = hist[-1]
    bound = cq ** (1 / q) * cp ** (1 / p)
    if len(hist) > 1:
        arr = np.array(hist)
        grow = arr[1:] / np.maximum(arr[:-1], 1e-300) - 1
        if np.any(np.all(grow > growth_tol, axis=0)):
            bound = math.inf
    return SchurResult(bound, cp, cq, hist)


def growth_radii(lo: float = 0.9, hi: float = 0.999, count: int = 25) -> np.ndarray:
    """Radii with ``1 - r^2`` log-spaced between the two ends."""
    x = np.geomspace(1 - lo**2, 1 - hi**2, count)
    return np.sqrt(1 - x)


def fst_growth(s: float, t: float, n: int = 1, radii=None) -> dict:
    """Samples of ``F_{s,t}`` along ``e_1`` with the log-log regression slope
    against ``1 - |z|^2`` and the relative spread over the outer three radii."""
    radii = growth_radii() if radii is None else np.asarray(radii, float)
    e1 = np.zeros(n, complex)
    e1[0] = 1
    vals = np.array([f_st(s, t, r * e1, n) for r in radii])
    x = 1 - radii**2
    slope = float(np.polyfit(np.log(x), np.log(vals), 1)[0])
    outer = vals[-3:]
    spread = float((outer.max() - outer.min()) / outer.max())
    return {"radii": radii, "values": vals, "slope": slope, "outer_spread": spread,
            "predicted_slope": (n + 1 + t - s) if s > n + 1 + t else 0.0}
