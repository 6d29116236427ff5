"""Hyperbolic lattices with Voronoi cells, expanded covering families and the
lattice measure ``sum_m v_alpha(D_m) delta_{w_m}``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

from .geometry import rho_matrix
from .measures import AtomicMeasure
from .quadrature import QuadratureGrid, build_hyperbolic_grid, c_alpha


class GridTooCoarse(ValueError):
    """The grid cannot resolve the requested lattice parameter."""


@dataclass(eq=False)
class Lattice:
    """Greedy ``rho/2``-separated centers chosen among grid nodes.

    ``cell_of[i]`` is the index of the center whose Voronoi cell contains
    node ``i`` (``-1`` for nodes beyond ``truncation_radius``).
    """

    rho: float
    grid: QuadratureGrid
    truncation_radius: float
    center_nodes: np.ndarray
    cell_of: np.ndarray
    separation: float = math.nan
    covering_radius: float = math.nan

    @property
    def centers(self) -> np.ndarray:
        return self.grid.nodes[self.center_nodes]

    @property
    def size(self) -> int:
        return self.center_nodes.shape[0]

    @property
    def covered(self) -> np.ndarray:
        return self.cell_of >= 0

    def cell(self, m: int) -> np.ndarray:
        return np.flatnonzero(self.cell_of == m)

    def cell_masses(self, alpha: Optional[float] = None) -> np.ndarray:
        w = _weights_for(self.grid, alpha)
        cov = self.covered
        return np.bincount(self.cell_of[cov], weights=w[cov], minlength=self.size)

    def cell_matrix(self) -> np.ndarray:
        """Boolean ``(N, M)`` membership matrix of the cells."""
        out = np.zeros((self.grid.size, self.size), dtype=bool)
        cov = np.flatnonzero(self.covered)
        out[cov, self.cell_of[cov]] = True
        return out


def _weights_for(grid: QuadratureGrid, alpha: Optional[float]) -> np.ndarray:
    if alpha is None or alpha == grid.alpha:
        return grid.weights
    zz = np.sum(np.abs(grid.nodes) ** 2, axis=1)
    n = grid.n
    return grid.weights * c_alpha(n, alpha) / c_alpha(n, grid.alpha) * (1 - zz) ** (alpha - grid.alpha)


# ---------------------------------------------------------------- ring geometry

def _half_width(ri, rj, s):
    """Angle ``d`` with ``rho(ri, rj e^{i d}) = s``; nan if no angle works,
    pi if every angle does."""
    if ri * rj == 0:
        return math.pi if max(ri, rj) <= s else math.nan
    c = (ri**2 + rj**2 - s**2 * (1 + ri**2 * rj**2)) / (2 * ri * rj * (1 - s**2))
    if c > 1:
        return math.nan
    if c < -1:
        return math.pi
    return math.acos(c)


def _circ_nearest(theta, sorted_angles):
    """Circular distance from each ``theta`` to the nearest sorted angle, and
    the position of that angle."""
    m = sorted_angles.shape[0]
    pos = np.searchsorted(sorted_angles, theta)
    right = pos % m
    left = (pos - 1) % m
    dr = np.abs(np.mod(sorted_angles[right] - theta + np.pi, 2 * np.pi) - np.pi)
    dl = np.abs(np.mod(sorted_angles[left] - theta + np.pi, 2 * np.pi) - np.pi)
    return np.minimum(dl, dr), np.where(dl <= dr, left, right)


_EPS_REL = 1e-9


def _ring_greedy(grid: QuadratureGrid, R: float, rho: float):
    pol = grid.polar
    s = math.tanh(rho / 2)
    starts = pol.starts
    nodes = grid.nodes[:, 0]
    ring_b = np.arctanh(pol.radii)
    theta_all = np.mod(np.angle(nodes), 2 * np.pi)
    centers = []  # per ring: (sorted angles, node indices)
    chosen = []
    for i, ri in enumerate(pol.radii):
        if ri > R:
            centers.append((np.empty(0), np.empty(0, int)))
            continue
        idx = starts[i] + np.arange(pol.counts[i])
        th = theta_all[idx]
        order = np.argsort(th, kind="stable")
        idx, th = idx[order], th[order]
        blocked = np.zeros(th.shape[0], dtype=bool)
        for j in range(i - 1, -1, -1):
            if ring_b[i] - ring_b[j] >= rho / 2 + 1e-12:
                break
            ang, _ = centers[j]
            if ang.size == 0:
                continue
            dlt = _half_width(ri, pol.radii[j], s)
            if math.isnan(dlt):
                continue
            dist, _ = _circ_nearest(th, ang)
            blocked |= dist < dlt * (1 + _EPS_REL) + 1e-12
        dii = _half_width(ri, ri, s)
        lim = dii * (1 + _EPS_REL) + 1e-12
        acc = []
        first = None
        last = None
        for l in np.flatnonzero(~blocked):
            t = th[l]
            if last is not None and t - last < lim:
                continue
            if first is not None and (first + 2 * np.pi) - t < lim:
                continue
            acc.append(l)
            last = t
            if first is None:
                first = t
        acc = np.array(acc, dtype=int)
        centers.append((th[acc], idx[acc]))
        chosen.append(idx[acc])
    return centers, (np.concatenate(chosen) if chosen else np.empty(0, int))


def _ring_assign(grid: QuadratureGrid, R: float, rho: float, centers, center_nodes):
    """Nearest center (ties to the lower center index) for every node."""
    pol = grid.polar
    s = math.tanh(rho / 2 + 1e-6)
    starts = pol.starts
    nodes = grid.nodes[:, 0]
    ring_b = np.arctanh(pol.radii)
    theta_all = np.mod(np.angle(nodes), 2 * np.pi)
    label_of_node = -np.ones(grid.size, dtype=int)
    label_of_node[center_nodes] = np.arange(center_nodes.shape[0])
    cell_of = -np.ones(grid.size, dtype=int)
    ring_ids = np.flatnonzero(pol.radii <= R)
    for i in ring_ids:
        idx = starts[i] + np.arange(pol.counts[i])
        z = nodes[idx]
        th = theta_all[idx]
        best = np.full(idx.shape[0], np.inf)
        lab = np.full(idx.shape[0], -1)
        for j in ring_ids:
            if abs(ring_b[i] - ring_b[j]) > rho / 2 + 1e-5:
                continue
            ang, cidx = centers[j]
            if ang.size == 0:
                continue
            dlt = _half_width(pol.radii[i], pol.radii[j], s)
            if math.isnan(dlt):
                continue
            m = ang.shape[0]
            ext = np.concatenate([ang - 2 * np.pi, ang, ang + 2 * np.pi])
            lo = np.searchsorted(ext, th - dlt, "left")
            hi = np.searchsorted(ext, th + dlt, "right")
            width = int(np.max(hi - lo)) if lo.size else 0
            width = min(width, m)
            if width <= 0:
                continue
            cand = lo[:, None] + np.arange(width)[None, :]
            valid = cand < hi[:, None]
            cpos = cand % m
            w = nodes[cidx[cpos]]
            d2 = np.abs(z[:, None] - w) ** 2 / np.abs(1 - np.conj(w) * z[:, None]) ** 2
            d2 = np.where(valid, d2, np.inf)
            clab = label_of_node[cidx[cpos]]
            # lexicographic minimum over (distance, label)
            k = np.argmin(d2, axis=1)
            dk = d2[np.arange(len(k)), k]
            lk = clab[np.arange(len(k)), k]
            tie = np.isclose(d2, dk[:, None], rtol=0, atol=1e-15) & valid
            lk = np.where(tie, clab, np.iinfo(int).max).min(axis=1)
            with np.errstate(invalid="ignore"):
                better = (dk < best - 1e-15) | ((np.abs(dk - best) <= 1e-15) & (lk < lab))
            best = np.where(better, dk, best)
            lab = np.where(better, lk, lab)
        cell_of[idx] = lab
    return cell_of


def _generic_greedy(grid: QuadratureGrid, R: float, rho: float):
    z = grid.nodes
    r = np.linalg.norm(z, axis=1)
    ang = np.mod(np.angle(z[:, 0]), 2 * np.pi)
    cand = np.flatnonzero(r <= R)
    order = cand[np.lexsort((cand, ang[cand], r[cand]))]
    s = math.tanh(rho / 2)
    chosen = []
    buf = np.empty((len(order), z.shape[1]), dtype=complex)
    for i in order:
        if chosen:
            d = rho_matrix(z[i:i + 1], buf[:len(chosen)])[0]
            if np.any(d <= s * (1 + _EPS_REL)):
                continue
        buf[len(chosen)] = z[i]
        chosen.append(i)
    return np.array(chosen, dtype=int)


def _generic_assign(grid, R, center_nodes, chunk=2048):
    z = grid.nodes
    r = np.linalg.norm(z, axis=1)
    cell_of = -np.ones(grid.size, dtype=int)
    inside = np.flatnonzero(r <= R)
    C = z[center_nodes]
    for i0 in range(0, inside.size, chunk):
        ids = inside[i0:i0 + chunk]
        cell_of[ids] = np.argmin(rho_matrix(z[ids], C), axis=1)
    return cell_of


def _mesh_radius(grid: QuadratureGrid, R: float) -> float:
    """Rough beta-radius of the largest hole between nodes with |z| <= R."""
    pol = grid.polar
    if pol is None:
        return 0.0
    keep = pol.radii <= R
    b = np.arctanh(pol.radii[keep])
    if b.size == 0:
        return 0.0
    rad = np.max(np.diff(np.concatenate([[0.0], b]))) if b.size > 1 else b[0]
    circ = 2 * np.pi * pol.radii[keep] / (1 - pol.radii[keep] ** 2) / pol.counts[keep]
    return 0.5 * math.hypot(rad, float(np.max(circ)))


def build_lattice(rho: float, truncation_radius: float, grid: QuadratureGrid,
                  check: bool = True) -> Lattice:
    """Greedy maximal ``rho/2``-separated node subset with Voronoi cells.

    Nodes are visited by increasing radius, then angle.  Disk grids with a
    ring layout use a windowed ring-by-ring search; other grids fall back to
    brute force.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    if not 0 < truncation_radius < 1:
        raise ValueError("truncation_radius must lie in (0, 1)")
    if truncation_radius > grid.support_radius + 1e-12:
        raise ValueError("truncation radius beyond grid support")
    R = truncation_radius
    mesh = _mesh_radius(grid, R)
    if rho / 2 + mesh > rho:
        raise GridTooCoarse(f"node mesh radius {mesh:.3f} too large for rho={rho}: "
                            f"covering radius up to {rho / 2 + mesh:.3f}")
    if grid.n == 1 and grid.polar is not None:
        centers, cn = _ring_greedy(grid, R, rho)
        cell_of = _ring_assign(grid, R, rho, centers, cn)
    else:
        cn = _generic_greedy(grid, R, rho)
        cell_of = _generic_assign(grid, R, cn)
    lat = Lattice(float(rho), grid, float(R), cn, cell_of)
    if check:
        lat.separation, lat.covering_radius = lattice_checks(lat)
    return lat


def _ring_separation(lat: Lattice) -> float:
    """Min pseudohyperbolic distance between centers, ring by ring (disk)."""
    z = lat.centers[:, 0]
    r = np.abs(z)
    th = np.mod(np.angle(z), 2 * np.pi)
    radii, inv = np.unique(r, return_inverse=True)
    groups = [np.sort(th[inv == i]) for i in range(radii.size)]
    b = np.arctanh(radii)
    best = math.inf
    for i in range(radii.size):
        gi = groups[i]
        if gi.size > 1:
            gap = np.min(np.diff(np.concatenate([gi, [gi[0] + 2 * np.pi]])))
            best = min(best, _ring_rho(radii[i], radii[i], gap))
        for j in range(i + 1, radii.size):
            if b[j] - b[i] >= lat.rho:
                break
            dist, _ = _circ_nearest(gi, groups[j])
            best = min(best, _ring_rho(radii[i], radii[j], float(np.min(dist))))
    return best


def _ring_rho(ri, rj, dth):
    num = ri**2 + rj**2 - 2 * ri * rj * math.cos(dth)
    den = 1 + ri**2 * rj**2 - 2 * ri * rj * math.cos(dth)
    return math.sqrt(max(num, 0.0) / den)


def lattice_checks(lat: Lattice, chunk: int = 1024):
    """Measured (min center separation, max node-to-own-center distance) in beta."""
    C = lat.centers
    sep = math.inf
    if lat.grid.n == 1 and lat.grid.polar is not None:
        sep = _ring_separation(lat)
        C = C[:0]
    for i0 in range(0, C.shape[0], chunk):
        d = rho_matrix(C[i0:i0 + chunk], C)
        ii = np.arange(i0, min(i0 + chunk, C.shape[0]))
        d[ii - i0, ii] = np.inf
        if d.size:
            sep = min(sep, float(np.min(d)))
    cov = np.flatnonzero(lat.covered)
    z = lat.grid.nodes
    own = lat.centers[lat.cell_of[cov]]
    num = np.abs(z[cov] - own) ** 2
    if z.shape[1] > 1:
        num = np.sum(num, axis=1)
        for i in range(z.shape[1]):
            for j in range(i + 1, z.shape[1]):
                num -= np.abs(z[cov, i] * own[:, j] - z[cov, j] * own[:, i]) ** 2
    else:
        num = num[:, 0]
    den = np.abs(1 - np.sum(z[cov] * np.conj(own), axis=1)) ** 2
    covr = float(np.max(np.sqrt(np.clip(num / den, 0, 1)))) if cov.size else 0.0
    return float(np.arctanh(min(sep, 1 - 1e-16))), float(np.arctanh(covr))


def mu_rho(lat: Lattice, alpha: Optional[float] = None,
           grid: Optional[QuadratureGrid] = None) -> AtomicMeasure:
    """Atom at every center with mass ``v_alpha(D_m)`` from the grid weights."""
    if grid is not None and grid is not lat.grid:
        raise ValueError("cells are defined on the lattice grid")
    masses = lat.cell_masses(alpha).astype(complex)
    return AtomicMeasure(lat.centers, masses, f"mu_rho({lat.rho:g})")


LATTICE_RADIUS = 0.9995


def lattice_measure(rho: float, alpha: float = 0.0, radius: float = LATTICE_RADIUS,
                    nodes_per_rho: int = 4) -> AtomicMeasure:
    """``mu_rho`` on a hyperbolic disk grid with spacing ``rho / nodes_per_rho``."""
    grid = build_hyperbolic_grid(alpha, rho / nodes_per_rho, radius)
    return mu_rho(build_lattice(rho, radius, grid, check=False))


def lattice_to_csv(lat: Lattice, path, alpha: Optional[float] = None) -> None:
    n = lat.grid.n
    masses = lat.cell_masses(alpha)
    head = ["m"] + [f"{p}{i + 1}" for i in range(n) for p in ("re", "im")] + ["cell_mass"]
    with open(path, "w") as fh:
        fh.write(",".join(head) + "\n")
        for m, (w, ms) in enumerate(zip(lat.centers, masses)):
            cols = [str(m)] + [f"{v:.12g}" for c in w for v in (c.real, c.imag)] + [f"{ms:.12g}"]
            fh.write(",".join(cols) + "\n")


# ---------------------------------------------------------------- coverings

def _adjacency_rows(z, rows, cols, t):
    if z.shape[1] == 1:
        a, b = z[rows, 0][:, None], z[cols, 0][None, :]
        return np.abs(a - b) ** 2 <= t * t * np.abs(1 - a * np.conj(b)) ** 2
    return rho_matrix(z[rows], z[cols]) <= t


def _ring_pairs(grid: QuadratureGrid, t: float):
    """Candidate node pairs of a ring grid whose angular gap could reach
    ``rho <= t`` (one index of slack on each side)."""
    pol = grid.polar
    starts = pol.starts
    ri_all, ci_all = [], []
    for i, (ri, ni, oi, si) in enumerate(zip(pol.radii, pol.counts, pol.offsets, starts)):
        th = 2 * np.pi * (np.arange(ni) + oi) / ni
        for j, (rj, nj, oj, sj) in enumerate(zip(pol.radii, pol.counts, pol.offsets, starts)):
            hw = _half_width(ri, rj, t)
            if math.isnan(hw):
                continue
            if hw >= math.pi * (1 - 1e-12) or 2 * hw * nj / (2 * np.pi) + 3 >= nj:
                a = np.repeat(np.arange(ni), nj)
                b = np.tile(np.arange(nj), ni)
            else:
                lo = np.floor((th - hw) * nj / (2 * np.pi) - oj).astype(int) - 1
                width = int(np.ceil(2 * hw * nj / (2 * np.pi))) + 3
                a = np.repeat(np.arange(ni), width)
                b = (np.repeat(lo, width) + np.tile(np.arange(width), ni)) % nj
            ri_all.append(si + a)
            ci_all.append(sj + b)
    return np.concatenate(ri_all), np.concatenate(ci_all)


def neighbour_graph(grid: QuadratureGrid, sigma: float, within=None,
                    chunk: int = 1024) -> sparse.csr_matrix:
    """Sparse 0/1 matrix of node pairs at beta-distance at most ``sigma``."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    z = grid.nodes
    allowed = np.ones(grid.size, bool) if within is None else np.asarray(within, bool)
    t = math.tanh(sigma) * (1 + 1e-12)
    if grid.n == 1 and grid.polar is not None:
        ri, ci = _ring_pairs(grid, t)
        ok = allowed[ri] & allowed[ci]
        ri, ci = ri[ok], ci[ok]
        a, b = z[ri, 0], z[ci, 0]
        ok = np.abs(a - b) ** 2 <= t * t * np.abs(1 - a * np.conj(b)) ** 2
        ri, ci = ri[ok], ci[ok]
    else:
        nodes = np.flatnonzero(allowed)
        rl, cl = [], []
        for i0 in range(0, nodes.size, chunk):
            r = nodes[i0:i0 + chunk]
            a, c = np.nonzero(_adjacency_rows(z, r, nodes, t))
            rl.append(r[a])
            cl.append(nodes[c])
        ri = np.concatenate(rl) if rl else np.zeros(0, int)
        ci = np.concatenate(cl) if cl else np.zeros(0, int)
    data = np.ones(ri.size, dtype=np.float32)
    G = sparse.csr_matrix((data, (ri, ci)), shape=(grid.size, grid.size))
    G.data[:] = 1.0  # duplicates from overlapping windows
    return G


def expand(mask, sigma: float, grid: QuadratureGrid, within=None,
           graph: Optional[sparse.csr_matrix] = None) -> np.ndarray:
    """Nodes at beta-distance at most ``sigma`` from the node set ``mask``.

    ``mask`` is a boolean array over nodes, or an ``(N, J)`` boolean matrix
    whose columns are expanded independently.  ``within`` restricts the
    result to a node subset; ``graph`` reuses a :func:`neighbour_graph`
    built with the same ``sigma`` and ``within``.
    """
    mask = np.asarray(mask, dtype=bool)
    single = mask.ndim == 1
    F = mask[:, None] if single else mask
    if graph is None:
        graph = neighbour_graph(grid, sigma, within)
    out = (graph @ sparse.csr_matrix(F.astype(np.float32))).toarray() > 0.5
    if within is not None:
        out &= np.asarray(within, bool)[:, None]
    return out[:, 0] if single else out


@dataclass(eq=False)
class CoveringFamily:
    """Nested node sets ``sets[i][:, j]`` (``0 <= i <= k+1``) over a lattice."""

    sigma: float
    k: int
    base: Lattice
    sets: list = field(repr=False)
    overlap: int = 0

    @property
    def inner(self) -> np.ndarray:
        """``F_j`` (the base cells) as an ``(N, J)`` boolean matrix."""
        return self.sets[0]

    @property
    def outer(self) -> np.ndarray:
        """``G_j = F[k+1][j]``."""
        return self.sets[-1]

    def overlaps(self):
        return [int(np.max(np.sum(F, axis=1))) if F.size else 0 for F in self.sets]


def build_covering(sigma: float, k: int, base: Lattice) -> CoveringFamily:
    """``F[0][j]`` = lattice cells, ``F[i+1][j] = expand(F[i][j], sigma)``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    F = base.cell_matrix()
    sets = [F]
    graph = neighbour_graph(base.grid, sigma, base.covered)
    for _ in range(k + 1):
        F = expand(F, sigma, base.grid, within=base.covered, graph=graph)
        sets.append(F)
    fam = CoveringFamily(float(sigma), int(k), base, sets)
    fam.overlap = fam.overlaps()[-1]
    return fam


def covering_lattice(sigma: float, k: int, grid: QuadratureGrid, truncation_radius: float) -> Lattice:
    """Base lattice with parameter ``(k+1) sigma``."""
    return build_lattice((k + 1) * sigma, truncation_radius, grid)


def separation_check(fam: CoveringFamily, i: int, max_nodes: int = 4000) -> float:
    """Min beta-distance between ``F[i][j]`` and the complement of ``F[i+1][j]``
    (within the covered region), over all ``j``."""
    z = fam.base.grid.nodes
    cov = fam.base.covered
    worst = math.inf
    A, B = fam.sets[i], fam.sets[i + 1]
    for j in range(A.shape[1]):
        a = np.flatnonzero(A[:, j])
        c = np.flatnonzero(cov & ~B[:, j])
        if a.size == 0 or c.size == 0:
            continue
        d = rho_matrix(z[a[:max_nodes]], z[c])
        worst = min(worst, float(np.arctanh(min(np.min(d), 1 - 1e-16))))
    return worst
