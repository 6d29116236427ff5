"""Truncated orthonormal basis of A^2_alpha and operator matrices over it.

A degree-``d`` :class:`BasisSpec` holds the normalized monomials
``e_a = z^a / ||z^a||`` with ``|a| <= d``; an :class:`OperatorMatrix` stores
``A[j, k] = <S e_k, e_j>``, the compression ``P_d S P_d``.  Operators built
from closed-form data keep a *recipe* so they can be re-assembled at any
other degree, which the boundary estimators rely on.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product as iproduct
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import betainc, betaln, gammaln

from .geometry import as_points, inner, mobius
from .measures import Measure, SymbolFunction
from .quadrature import (QuadratureGrid, build_ball_grid, build_grid, c_alpha,
                         grid_for_degree, jacobi_unit, legendre_interval)

#: extra polynomial degree carried by the companion grid of a basis
GRID_PAD = 8
#: extra degree used when compressing products of recipe-backed operators
PRODUCT_PAD = 16
#: quadrature degree reserved for symbols that are not polynomials
SYMBOL_PAD = 48
#: kernel truncation tail above which a warning is issued
TAIL_WARN = 1e-6


class TruncationWarning(UserWarning):
    """A kernel or translate is not well represented at the current degree."""


def conjugate_exponent(p: float) -> float:
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    return p / (p - 1)


def monomial_norms(n: int, alpha: float, d: int) -> np.ndarray:
    """``||z^a||_{A^2_alpha}`` for the multi-indices of a degree-``d`` basis."""
    if not alpha > -1:
        raise ValueError("alpha must exceed -1")
    idx = _multi_indices(n, d)
    tot = idx.sum(axis=1)
    lg = (np.sum(gammaln(idx + 1), axis=1) + gammaln(n + alpha + 1)
          - gammaln(n + tot + alpha + 1))
    return np.exp(lg / 2)


@lru_cache(maxsize=None)
def _multi_indices(n: int, d: int) -> np.ndarray:
    if n == 1:
        return np.arange(d + 1)[:, None]
    out = []
    for k in range(d + 1):
        for a in iproduct(range(k, -1, -1), repeat=n):
            if sum(a) == k:
                out.append(a)
    # within a degree: lexicographically decreasing, e.g. (2,0), (1,1), (0,2)
    out.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    arr = np.array(out, dtype=int)
    arr.setflags(write=False)
    return arr


def kernel_tail(n: int, alpha: float, d: int, x) -> np.ndarray:
    """Mass of the normalized kernel at ``|z|^2 = x`` beyond degree ``d``.

    ``sum_{|a| > d} |e_a(z)|^2 (1-|z|^2)^g = I_x(d+1, g)``, ``g = n+1+alpha``.
    """
    return betainc(d + 1, n + 1 + alpha, np.asarray(x, dtype=float))


def degree_for_tail(n: int, alpha: float, radius: float, tol: float, start: int = 1) -> int:
    """Smallest degree whose kernel tail at ``radius`` is below ``tol``."""
    x = radius**2
    lo, hi = max(1, start), max(1, start)
    if kernel_tail(n, alpha, lo, x) <= tol:
        return lo
    while kernel_tail(n, alpha, hi, x) > tol:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if kernel_tail(n, alpha, mid, x) > tol:
            lo = mid
        else:
            hi = mid
    return hi


class BasisSpec:
    """Normalized monomial basis of A^2_alpha up to total degree ``degree``."""

    def __init__(self, n: int, alpha: float, degree: int):
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        if not alpha > -1:
            raise ValueError("alpha must exceed -1")
        self.n = int(n)
        self.alpha = float(alpha)
        self.degree = int(degree)

    def __repr__(self):
        return f"BasisSpec(n={self.n}, alpha={self.alpha}, degree={self.degree})"

    def __eq__(self, other):
        return (isinstance(other, BasisSpec)
                and (self.n, self.alpha, self.degree) == (other.n, other.alpha, other.degree))

    def __hash__(self):
        return hash((self.n, self.alpha, self.degree))

    @property
    def multi_indices(self) -> np.ndarray:
        return _multi_indices(self.n, self.degree)

    @cached_property
    def total_degrees(self) -> np.ndarray:
        return self.multi_indices.sum(axis=1)

    @property
    def size(self) -> int:
        return self.multi_indices.shape[0]

    @cached_property
    def norms(self) -> np.ndarray:
        return monomial_norms(self.n, self.alpha, self.degree)

    @property
    def gamma(self) -> float:
        return self.n + 1 + self.alpha

    @cached_property
    def grid(self) -> QuadratureGrid:
        """Product grid exact for ``z^a conj(z)^b`` with ``|a|+|b| <= 2d + pad``."""
        return grid_for_degree(self.n, self.alpha, 2 * self.degree + GRID_PAD)

    def with_degree(self, degree: int) -> "BasisSpec":
        return get_basis(self.n, self.alpha, degree)

    def size_at(self, degree: int) -> int:
        return _multi_indices(self.n, degree).shape[0]

    def evaluate(self, points) -> np.ndarray:
        """Matrix ``E[i, k] = e_k(points[i])``."""
        pts = as_points(points, self.n).reshape(-1, self.n)
        d = self.degree
        if self.n == 1:
            z = pts[:, 0]
            P = np.empty((z.shape[0], d + 1), dtype=complex)
            P[:, 0] = 1.0
            if d:
                P[:, 1:] = z[:, None]
                np.cumprod(P[:, 1:], axis=1, out=P[:, 1:])
            return P / self.norms
        pows = []
        for i in range(self.n):
            P = np.empty((pts.shape[0], d + 1), dtype=complex)
            P[:, 0] = 1.0
            if d:
                P[:, 1:] = pts[:, i][:, None]
                np.cumprod(P[:, 1:], axis=1, out=P[:, 1:])
            pows.append(P)
        idx = self.multi_indices
        E = np.ones((pts.shape[0], idx.shape[0]), dtype=complex)
        for i in range(self.n):
            E *= pows[i][:, idx[:, i]]
        return E / self.norms


@lru_cache(maxsize=64)
def get_basis(n: int, alpha: float, degree: int) -> BasisSpec:
    return BasisSpec(n, float(alpha), degree)


Recipe = Callable[[BasisSpec], np.ndarray]


class OperatorMatrix:
    """Compression ``A[j, k] = <S e_k, e_j>`` of an operator on A^p_alpha.

    ``recipe(basis)`` (optional) returns the compression for another basis
    of the same ``n`` and ``alpha``.  ``toeplitz_generated`` records whether
    the operator was assembled from Toeplitz generators by algebra
    operations.
    """

    def __init__(self, data, basis: BasisSpec, p: float = 2.0, label: str = "",
                 recipe: Optional[Recipe] = None, toeplitz_generated: bool = False):
        data = np.asarray(data, dtype=complex)
        if data.shape != (basis.size, basis.size):
            raise ValueError(f"matrix shape {data.shape} does not match basis size {basis.size}")
        conjugate_exponent(p)
        self.data = data
        self.basis = basis
        self.p = float(p)
        self.label = label
        self.recipe = recipe
        self.toeplitz_generated = toeplitz_generated
        self._cache = {basis.degree: data}

    @classmethod
    def from_recipe(cls, recipe: Recipe, basis: BasisSpec, p=2.0, label="",
                    toeplitz_generated=False):
        return cls(recipe(basis), basis, p, label, recipe, toeplitz_generated)

    def __repr__(self):
        return (f"OperatorMatrix(label={self.label!r}, degree={self.basis.degree}, "
                f"p={self.p}, recipe={'yes' if self.recipe else 'no'})")

    @property
    def degree(self) -> int:
        return self.basis.degree

    @property
    def shape(self):
        return self.data.shape

    @property
    def rebuildable(self) -> bool:
        return self.recipe is not None

    def matrix_at(self, degree: int) -> np.ndarray:
        """Compression at another degree (recipe, or truncation downwards)."""
        if degree in self._cache:
            return self._cache[degree]
        if self.recipe is not None:
            M = self.recipe(self.basis.with_degree(degree))
        elif degree < self.degree:
            m = self.basis.size_at(degree)
            M = self.data[:m, :m]
        else:
            raise ValueError(f"{self.label or 'operator'} has no recipe; cannot raise the degree")
        self._cache[degree] = M
        return M

    def at_degree(self, degree: int) -> "OperatorMatrix":
        if degree == self.degree:
            return self
        return OperatorMatrix(self.matrix_at(degree), self.basis.with_degree(degree), self.p,
                              self.label, self.recipe, self.toeplitz_generated)

    # algebra -----------------------------------------------------------
    def _check(self, other: "OperatorMatrix"):
        if other.basis != self.basis or other.p != self.p:
            raise ValueError("operators live on different bases")

    def _combine(self, other, fn, label):
        self._check(other)
        recipe = None
        if self.recipe is not None and other.recipe is not None:
            ra, rb = self.recipe, other.recipe
            recipe = lambda b: fn(ra(b), rb(b))  # noqa: E731
        return OperatorMatrix(fn(self.data, other.data), self.basis, self.p, label, recipe,
                              self.toeplitz_generated and other.toeplitz_generated)

    def __add__(self, other):
        return self._combine(other, np.add, f"({self.label}+{other.label})")

    def __sub__(self, other):
        return self._combine(other, np.subtract, f"({self.label}-{other.label})")

    def __mul__(self, c):
        c = complex(c)
        recipe = None
        if self.recipe is not None:
            r = self.recipe
            recipe = lambda b: c * r(b)  # noqa: E731
        return OperatorMatrix(c * self.data, self.basis, self.p, f"{c}*{self.label}", recipe,
                              self.toeplitz_generated)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check(other)
        label = f"{self.label}{other.label}"
        gen = self.toeplitz_generated and other.toeplitz_generated
        if self.recipe is None or other.recipe is None:
            return OperatorMatrix(self.data @ other.data, self.basis, self.p, label, None, gen)
        ra, rb = self.recipe, other.recipe

        def recipe(b: BasisSpec) -> np.ndarray:
            big = b.with_degree(b.degree + PRODUCT_PAD)
            m = b.size
            return (ra(big) @ rb(big))[:m, :m]

        return OperatorMatrix.from_recipe(recipe, self.basis, self.p, label, gen)

    def adjoint(self) -> "OperatorMatrix":
        """Matrix of the A^2_alpha adjoint (conjugate exponent)."""
        recipe = None
        if self.recipe is not None:
            r = self.recipe
            recipe = lambda b: r(b).conj().T  # noqa: E731
        q = conjugate_exponent(self.p)
        return OperatorMatrix(self.data.conj().T, self.basis, q, f"{self.label}*", recipe,
                              self.toeplitz_generated)


def identity(basis: BasisSpec, p: float = 2.0) -> OperatorMatrix:
    return OperatorMatrix.from_recipe(lambda b: np.eye(b.size, dtype=complex), basis, p, "I", True)


# ---------------------------------------------------------------- Toeplitz

def _radial_diagonal(profile, breakpoints, basis: BasisSpec) -> np.ndarray:
    """``<T_g e_a, e_a>`` for a radial symbol ``g(|z|^2)``: the mean of ``g``
    under the Beta(|a|+n, alpha+1) law in ``t = |z|^2``."""
    n, alpha, d = basis.n, basis.alpha, basis.degree
    order = d + 24
    cuts = [b for b in sorted(set(breakpoints)) if 0 < b < 1]
    edges = [0.0] + cuts
    ts, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        t, w = legendre_interval(order, lo, hi)
        ts.append(t)
        ws.append(w * (1 - t) ** alpha)
    lo = edges[-1]
    t, w = jacobi_unit(order, alpha)
    ts.append(lo + (1 - lo) * t)
    ws.append(w * (1 - lo) ** (alpha + 1))
    t = np.concatenate(ts)
    w = np.concatenate(ws) * np.asarray(profile(t), dtype=complex)
    ks = np.arange(d + 1) + n - 1
    with np.errstate(divide="ignore"):
        logt = np.log(t)
    vals = np.exp(np.outer(ks, logt) - betaln(ks + 1, alpha + 1)[:, None]) @ w
    return vals[basis.total_degrees]


def _polar_toeplitz(a: SymbolFunction, basis: BasisSpec, grid: QuadratureGrid) -> np.ndarray:
    """Disk Toeplitz matrix from angular FFTs on a uniform polar grid."""
    pol = grid.polar
    R, M = len(pol.radii), int(pol.counts[0])
    d = basis.degree
    vals = a(grid.nodes).reshape(R, M)
    ahat = np.fft.fft(vals, axis=1) / M  # ahat[i, m] ~ mean of a e^{-i m theta}
    W = pol.ring_weights
    r = pol.radii
    N = basis.norms
    out = np.zeros((d + 1, d + 1), dtype=complex)
    scale = np.max(np.abs(ahat)) if ahat.size else 0.0
    logr = np.log(r)
    for m in range(-d, d + 1):
        col = ahat[:, m % M]
        if np.max(np.abs(col)) <= 1e-15 * scale:
            continue
        k = np.arange(max(0, -m), min(d, d - m) + 1)
        j = k + m
        pw = np.exp(np.outer(logr, 2 * k + m))
        out[j, k] = ((W * col) @ pw) / (N[k] * N[j])
    return out


@lru_cache(maxsize=32)
def _symbol_grid(n: int, alpha: float, degree: int) -> QuadratureGrid:
    return grid_for_degree(n, alpha, degree)


def _toeplitz_data(a: SymbolFunction, basis: BasisSpec) -> np.ndarray:
    if a.radial:
        return np.diag(_radial_diagonal(a.profile, a.breakpoints, basis))
    extra = a.max_degree if a.max_degree is not None else SYMBOL_PAD
    grid = _symbol_grid(basis.n, basis.alpha, 2 * basis.degree + max(extra, 1))
    if basis.n == 1 and grid.polar is not None and grid.polar.uniform:
        return _polar_toeplitz(a, basis, grid)
    E = basis.evaluate(grid.nodes)
    return E.conj().T @ ((grid.weights * a(grid.nodes))[:, None] * E)


def toeplitz_matrix(a: SymbolFunction, basis: BasisSpec, p: float = 2.0) -> OperatorMatrix:
    """``T_a = P_alpha M_a`` compressed to ``basis``."""
    return OperatorMatrix.from_recipe(lambda b: _toeplitz_data(a, b), basis, p,
                                      f"T[{a.label}]", True)


def _tmu_data(mu: Measure, basis: BasisSpec) -> np.ndarray:
    if mu.is_atomic:
        E = basis.evaluate(mu.points)
        return E.conj().T @ (mu.masses[:, None] * E)
    return _toeplitz_data(mu.density, basis)


def tmu_matrix(mu: Measure, basis: BasisSpec, p: float = 2.0) -> OperatorMatrix:
    """``<T_mu e_k, e_j> = int e_k conj(e_j) dmu``."""
    if not mu.variation_is_carleson:
        warnings.warn("|mu| does not look like a Carleson measure", RuntimeWarning)
    if not mu.is_atomic and abs(mu.alpha - basis.alpha) > 0:
        raise ValueError("density measure and basis use different alpha")
    return OperatorMatrix.from_recipe(lambda b: _tmu_data(mu, b), basis, p,
                                      f"T[{mu.label}]", True)


# ---------------------------------------------------------------- kernels

@dataclass(frozen=True)
class KernelVector:
    """Coefficients of ``k_lambda^{(p)} = (1-|lambda|^2)^{g/q} K_lambda``
    (``g = n+1+alpha``) in a basis; ``p = None`` gives ``K_lambda`` itself."""

    coeffs: np.ndarray
    point: np.ndarray
    p: Optional[float]
    tail: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def kernel_vector(lam, p: Optional[float], basis: BasisSpec, warn: bool = True) -> KernelVector:
    """Truncated expansion ``K_lambda = sum_a conj(e_a(lambda)) e_a`` (scaled)."""
    lam = as_points(lam, basis.n).reshape(basis.n)
    x = float(np.sum(np.abs(lam) ** 2))
    tail = float(kernel_tail(basis.n, basis.alpha, basis.degree, x))
    if warn and tail > TAIL_WARN:
        warnings.warn(f"kernel at |z|={math.sqrt(x):.4f} loses {tail:.2e} of its mass at "
                      f"degree {basis.degree}", TruncationWarning, stacklevel=2)
    c = np.conj(basis.evaluate(lam[None, :])[0])
    if p is not None:
        q = conjugate_exponent(p)
        c = c * (1 - x) ** (basis.gamma / q)
    return KernelVector(c, lam, p, tail)


def kernel_matrix(points, basis: BasisSpec, p: Optional[float] = 2.0) -> np.ndarray:
    """Columns are the (scaled) kernel vectors at ``points``; no warnings."""
    pts = as_points(points, basis.n).reshape(-1, basis.n)
    C = np.conj(basis.evaluate(pts)).T
    if p is not None:
        q = conjugate_exponent(p)
        C = C * (1 - np.sum(np.abs(pts) ** 2, axis=1)) ** (basis.gamma / q)
    return C


def berezin(S: OperatorMatrix, z, warn: bool = True):
    """``B(S)(z) = <S k_z^{(p)}, k_z^{(q)}>``; vectorized over ``z``."""
    pts = as_points(z, S.basis.n)
    single = pts.ndim == 1
    pts = pts.reshape(-1, S.basis.n)
    q = conjugate_exponent(S.p)
    if warn:
        x = np.max(np.sum(np.abs(pts) ** 2, axis=1))
        tail = kernel_tail(S.basis.n, S.basis.alpha, S.degree, x)
        if tail > TAIL_WARN:
            warnings.warn(f"Berezin transform at |z|={math.sqrt(x):.4f} has truncation tail "
                          f"{tail:.2e}", TruncationWarning, stacklevel=2)
    kp = kernel_matrix(pts, S.basis, S.p)
    kq = kernel_matrix(pts, S.basis, q)
    vals = np.sum(np.conj(kq) * (S.data @ kp), axis=0)
    return complex(vals[0]) if single else vals


# ---------------------------------------------------------------- B_k(mu)

def berezin_k(mu: Measure, k: float, z, alpha: Optional[float] = None,
              grid_k: Optional[QuadratureGrid] = None):
    """(k, alpha)-Berezin transform of ``mu`` at ``z`` (vectorized).

    Atomic measures are summed exactly.  For ``a dv_alpha`` the value is
    computed as ``int a(phi_z(u)) dv_k(u)`` on a ``v_k`` grid.
    """
    if alpha is None:
        if mu.is_atomic:
            raise ValueError("alpha is required for atomic measures")
        alpha = mu.alpha
    if k < alpha:
        raise ValueError("k must be at least alpha")
    n = mu.n
    pts = as_points(z, n)
    single = pts.ndim == 1
    pts = pts.reshape(-1, n)
    if mu.is_atomic:
        ratio = c_alpha(n, k) / c_alpha(n, alpha)
        ww = np.sum(np.abs(mu.points) ** 2, axis=1)
        wm = mu.masses / (1 - ww) ** (n + 1 + alpha)
        vals = np.empty(pts.shape[0], dtype=complex)
        step = max(1, 2_000_000 // max(1, len(ww)))
        for i0 in range(0, pts.shape[0], step):
            zc = pts[i0:i0 + step]
            zz = np.sum(np.abs(zc) ** 2, axis=1)
            omr = ((1 - zz)[:, None] * (1 - ww)[None, :]
                   / np.abs(1 - zc @ np.conj(mu.points).T) ** 2)
            vals[i0:i0 + step] = ratio * (omr ** (n + 1 + k) @ wm)
    else:
        if grid_k is None:
            grid_k = build_grid(n, k, 48, 160) if n == 1 else build_grid(n, k, 16, 24)
        a = mu.density
        vals = np.empty(pts.shape[0], dtype=complex)
        for i, zi in enumerate(pts):
            vals[i] = np.dot(grid_k.weights, a(mobius(zi, grid_k.nodes)))
    return complex(vals[0]) if single else vals


def berezin_k_symbol(mu: Measure, k: float, alpha: Optional[float] = None) -> SymbolFunction:
    """``B_k(mu)`` as a symbol (sup bound from the total variation)."""
    if alpha is None:
        alpha = mu.alpha
    n = mu.n
    if mu.is_atomic:
        ww = np.sum(np.abs(mu.points) ** 2, axis=1)
        bound = c_alpha(n, k) / c_alpha(n, alpha) * float(
            np.sum(np.abs(mu.masses) / (1 - ww) ** (n + 1 + alpha)))
    else:
        bound = mu.density.sup_bound
    return SymbolFunction(lambda w: berezin_k(mu, k, w, alpha), bound, f"B_{k}({mu.label})")


def toeplitz_berezin_k(mu: Measure, k: float, basis: BasisSpec, alpha: Optional[float] = None,
                       rows: Optional[int] = None, p: float = 2.0) -> OperatorMatrix:
    """``T_{B_k(mu)}`` compressed to ``basis``.

    For atoms on the disk the symbol is never sampled: by Fubini and the
    change of variables ``z = phi_w(u)``,
    ``<T_{B_k(delta_w)} e_i, e_j> = c_k / c_{k'} (1-|w|^2)^{-g}
    <U_w e_i, U_w e_j>_{A^2_{k'}}`` with ``k' = n+1+k+alpha``, an exact
    series in the translate coefficients.  ``rows`` truncates those
    coefficients (the weights decay like ``m^{-(n+1+k)}``).  Densities go
    through the quadrature Toeplitz assembly of the smoothed symbol.
    """
    if alpha is None:
        alpha = basis.alpha if mu.is_atomic else mu.alpha
    if k < alpha:
        raise ValueError("k must be at least alpha")
    if not (mu.is_atomic and basis.n == 1):
        return toeplitz_matrix(berezin_k_symbol(mu, k, alpha), basis, p)
    n, g = 1, 2 + alpha
    kp = n + 1 + k + alpha

    def recipe(b: BasisSpec) -> np.ndarray:
        R = rows if rows is not None else b.degree + 600
        m = np.arange(R + 1)
        # ||z^m||^2 in A^2_{k'} over A^2_alpha
        lr = (gammaln(2 + kp) - gammaln(m + 2 + kp)) - (gammaln(2 + alpha) - gammaln(m + 2 + alpha))
        lam = np.exp(lr)
        pref = c_alpha(n, k) / c_alpha(n, kp)
        out = np.zeros((b.size, b.size), dtype=complex)
        # rotating an atom conjugates U_w by diagonal phases, so atoms on a
        # common circle share one series and enter through a Fourier sum
        w = mu.points[:, 0]
        rad = np.round(np.abs(w), 13)
        j = np.arange(b.size)
        for r in np.unique(rad):
            on = rad == r
            C = _uz_series(complex(r), 2.0, alpha, R, b.degree)
            M = C.conj().T @ (lam[:, None] * C)
            wt = pref * mu.masses[on] / (1 - r**2) ** g
            th = np.angle(w[on])
            shift = np.arange(-b.degree, b.degree + 1)
            four = np.exp(1j * np.outer(shift, th)) @ wt  # sum wt e^{i s theta}
            out += M * four[(j[None, :] - j[:, None]) + b.degree]
        return out

    return OperatorMatrix.from_recipe(recipe, basis, p, f"T[B_{k}({mu.label})]", True)


def bk_error_curve(mu, basis, alpha, k_max, p=2.0, step=1.0):
    """``k -> ||T_{B_k(mu)} - T_mu||`` (p = 2 operator norm of the compressions)."""
    Tm = tmu_matrix(mu, basis, p)
    ks = alpha + step * np.arange(int(round(k_max / step)) + 1)
    errs = [float(np.linalg.norm(toeplitz_berezin_k(mu, float(k), basis, alpha, p=p).data
                                 - Tm.data, 2)) for k in ks]
    return ks, np.array(errs)


def bkr_adjoint(h, k: float, r: float, w, n: int = 1, alpha: float = 0.0,
                orders=(32, 96)) -> complex:
    """``int_{|u|<r} (1-|u|^2)^g / |1-<w,u>|^{2g} h(phi_w(u)) dv_k(u)``, ``g = n+1+alpha``."""
    w = as_points(w, n).reshape(n)
    ang = orders[1] if n == 1 else max(8, orders[1] // 6)
    disk = build_ball_grid(n, k, r, orders[0], ang)
    u = disk.nodes
    g = n + 1 + alpha
    ker = (1 - np.sum(np.abs(u) ** 2, axis=1)) ** g / np.abs(1 - inner(u, w)) ** (2 * g)
    hv = np.asarray(h(mobius(w, u)), dtype=complex) * np.ones(u.shape[0])
    return complex(np.dot(disk.weights * ker, hv))


# ---------------------------------------------------------------- translations

def _uz_series(z: complex, p: float, alpha: float, rows: int, cols: int) -> np.ndarray:
    """Exact ``<U_z e_k, e_j>`` for ``j <= rows``, ``k <= cols`` on the disk."""
    g = 2 + alpha
    zb = np.conj(z)
    x = abs(z) ** 2
    m = np.arange(rows + 1)
    c = 2 * g / p
    # J(w) = (1-|z|^2)^{g/p} (1 - conj(z) w)^{-2g/p}
    with np.errstate(divide="ignore"):
        logc = gammaln(c + m) - gammaln(c) - gammaln(m + 1)
    J = (1 - x) ** (g / p) * np.exp(logc) * zb ** m
    phi = np.zeros(rows + 1, dtype=complex)
    phi[0] = z
    if rows:
        phi[1:] = -(1 - x) * zb ** (m[1:] - 1)
    C = np.empty((rows + 1, cols + 1), dtype=complex)
    cur = J.copy()
    for k in range(cols + 1):
        C[:, k] = cur
        cur = np.convolve(cur, phi)[:rows + 1]
    nr = monomial_norms(1, alpha, max(rows, cols))
    return C * nr[:rows + 1, None] / nr[None, :cols + 1]


def _uz_quadrature(z, p: float, basis: BasisSpec, grid: Optional[QuadratureGrid] = None):
    grid = grid or basis.grid
    g = basis.gamma
    z = as_points(z, basis.n).reshape(basis.n)
    w = grid.nodes
    J = (1 - np.sum(np.abs(z) ** 2)) ** (g / p) / (1 - inner(w, z)) ** (2 * g / p)
    F = basis.evaluate(mobius(z, w)) * J[:, None]
    E = basis.evaluate(w)
    return E.conj().T @ (grid.weights[:, None] * F)


def u_z_coefficients(z, p: float, basis: BasisSpec, cols: Optional[int] = None,
                     method: str = "auto") -> np.ndarray:
    """Rows ``j`` of ``basis``, columns ``k <= cols`` of ``<U_z e_k, e_j>``."""
    z = as_points(z, basis.n).reshape(basis.n)
    cols = basis.degree if cols is None else cols
    if method == "auto":
        method = "series" if basis.n == 1 else "quadrature"
    if method == "series":
        if basis.n != 1:
            raise NotImplementedError("series translates are implemented for the disk")
        return _uz_series(complex(z[0]), p, basis.alpha, basis.degree, cols)
    if cols != basis.degree:
        raise ValueError("quadrature translates are square")
    return _uz_quadrature(z, p, basis)


def u_z_matrix(z, p: float, basis: BasisSpec, method: str = "auto") -> OperatorMatrix:
    """``U_z f = (f o phi_z) (1-|z|^2)^{g/p} / (1-<w,z>)^{2g/p}`` compressed."""
    zz = as_points(z, basis.n).reshape(basis.n)
    x = float(np.sum(np.abs(zz) ** 2))
    tail = kernel_tail(basis.n, basis.alpha, basis.degree, x)
    if tail > 1e-2:
        warnings.warn(f"translate at |z|={math.sqrt(x):.3f} is poorly resolved at degree "
                      f"{basis.degree}", TruncationWarning, stacklevel=2)
    recipe = lambda b: u_z_coefficients(zz, p, b, method=method)  # noqa: E731
    return OperatorMatrix.from_recipe(recipe, basis, p, "U_z", False)


def b_z_symbol(z, p: float, n: int = 1, alpha: float = 0.0) -> SymbolFunction:
    """``b_z(w) = (1-<z,w>)^e / (1-<w,z>)^e``, ``e = g (1/q - 1/p)``; unimodular."""
    z = as_points(z, n).reshape(n)
    q = conjugate_exponent(p)
    e = (n + 1 + alpha) * (1 / q - 1 / p)

    def f(w):
        A = 1 - inner(w, z)
        return np.conj(A) ** e / A**e

    return SymbolFunction(f, 1.0, "b_z")


def lambda_factor(xi, z, p: float, n: int = 1, alpha: float = 0.0) -> complex:
    """``|1-<xi,z>|^{2g/p} / (1-<xi,z>)^{2g/p}`` (principal branch)."""
    xi = as_points(xi, n)
    z = as_points(z, n)
    A = 1 - inner(xi, z)
    c = 2 * (n + 1 + alpha) / p
    val = np.abs(A) ** c / A**c
    return complex(val) if np.ndim(val) == 0 else val


def s_z(S: OperatorMatrix, z, p: Optional[float] = None,
        work_degree: Optional[int] = None) -> OperatorMatrix:
    """Compression of ``S_z = U_z^{(p)} S (U_z^{(q)})^*``.

    With ``work_degree > S.degree`` (and a recipe) the inner product is
    taken at the larger degree so that ``P_d S_z P_d`` is resolved instead
    of ``P_d U P_d S P_d U P_d``.
    """
    p = S.p if p is None else p
    q = conjugate_exponent(p)
    d, b = S.degree, S.basis
    D = d if work_degree is None else max(d, work_degree)
    Sbig = S.matrix_at(D)
    big = b.with_degree(D)
    z = as_points(z, b.n).reshape(b.n)
    if b.n == 1:
        Up = _uz_series(complex(z[0]), p, b.alpha, d, D)
        Uq = Up if q == p else _uz_series(complex(z[0]), q, b.alpha, d, D)
    else:
        m = b.size
        Up = _uz_quadrature(z, p, big)[:m, :]
        Uq = Up if q == p else _uz_quadrature(z, q, big)[:m, :]
    A = np.conj(Up).T  # columns: coefficients of (U^{(p)})^* e_j
    B = np.conj(Uq).T
    data = A.conj().T @ Sbig @ B
    return OperatorMatrix(data, b, p, f"{S.label}_z", None, False)


# ---------------------------------------------------------------- norms etc.

class NormEstimate(NamedTuple):
    value: float
    kind: str  # "exact" (p = 2) or "lower bound"


def lp_norm(coeffs: np.ndarray, p: float, basis: BasisSpec) -> float:
    """``||f||_{L^p(v_alpha)}`` by quadrature on the companion grid."""
    grid = basis.grid
    vals = basis.evaluate(grid.nodes) @ coeffs
    return float(np.dot(grid.weights, np.abs(vals) ** p) ** (1 / p))


def op_norm(S: OperatorMatrix, p: Optional[float] = None, n_random: int = 32,
            seed: int = 0) -> NormEstimate:
    """Operator norm; exact for ``p = 2``, a sampled lower bound otherwise."""
    p = S.p if p is None else p
    if p == 2:
        return NormEstimate(float(np.linalg.norm(S.data, 2)), "exact")
    rng = np.random.default_rng(seed)
    m = S.basis.size
    cands = [np.eye(m, dtype=complex)[:, i] for i in range(m)]
    for _ in range(n_random):
        cands.append(rng.normal(size=m) + 1j * rng.normal(size=m))
    best = 0.0
    for f in cands:
        nf = lp_norm(f, p, S.basis)
        if nf > 0:
            best = max(best, lp_norm(S.data @ f, p, S.basis) / nf)
    return NormEstimate(best, "lower bound")


def _as_coeffs(f, size: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(f, dtype=complex))
    out = np.zeros(size, dtype=complex)
    out[:min(size, arr.size)] = arr[:size]
    return out


def rank_one(f, g, basis: BasisSpec, p: float = 2.0) -> OperatorMatrix:
    """``(f (x) g) h = <h, g> f`` for coefficient vectors ``f``, ``g``.

    A scalar ``c`` stands for the constant function ``c`` (coefficient of
    ``e_0 = 1``).
    """
    f0 = np.atleast_1d(np.asarray(f, dtype=complex))
    g0 = np.atleast_1d(np.asarray(g, dtype=complex))

    def recipe(b: BasisSpec) -> np.ndarray:
        return np.outer(_as_coeffs(f0, b.size), np.conj(_as_coeffs(g0, b.size)))

    return OperatorMatrix.from_recipe(recipe, basis, p, "rank1", True)


# ---------------------------------------------------------------- I/O

def save_operator(S: OperatorMatrix, path) -> None:
    """Text format: header line ``n alpha d p label`` then one row per line."""
    label = (S.label or "operator").replace(" ", "_")
    with open(path, "w") as fh:
        fh.write("# n alpha d p label\n")
        fh.write(f"{S.basis.n} {S.basis.alpha!r} {S.degree} {S.p!r} {label}\n")
        for row in S.data:
            fh.write(",".join(f"{v.real:.17g}{v.imag:+.17g}j" for v in row) + "\n")


def load_operator(path) -> OperatorMatrix:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    n, alpha, d, p, label = lines[0].split(maxsplit=4)
    basis = get_basis(int(n), float(alpha), int(d))
    data = np.array([[complex(v) for v in ln.split(",")] for ln in lines[1:]])
    return OperatorMatrix(data, basis, float(p), label)
