"""Boundary estimators of the essential norm on A^2_alpha.

Every ``|z| -> 1`` limit is sampled on a few shells.  The degree used at a
shell is chosen from the truncation tail of the normalized kernel there
(:func:`working_degree`); operators without a recipe cannot be re-assembled
and are flagged unreliable instead.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import betainc

from .geometry import as_points, inner, mobius, rho_matrix
from .lattice import CoveringFamily, build_covering, build_lattice, mu_rho
from .measures import AtomicMeasure, Measure
from .operators import (BasisSpec, OperatorMatrix, TruncationWarning, _uz_series,
                        berezin, degree_for_tail, kernel_matrix)
from .quadrature import build_ball_grid, build_hyperbolic_grid


@dataclass
class EstimatorConfig:
    """Shells, degree schedule and verdict thresholds (calibrated values)."""

    shells: tuple = (0.9, 0.95, 0.98)
    n_directions: int = 8
    test_degree: int = 1
    tail_tol: float = 1e-4
    berezin_tail_tol: float = 1e-9
    max_degree: int = 1500
    b_radii: tuple = (0.5, 1.0)
    disk_orders: tuple = (40, 96)
    a_radius: float = 0.25
    a_rho: float = 0.5
    trend_degrees: tuple = (20, 30, 40)
    berezin_compact: float = 0.05
    berezin_noncompact: float = 0.2
    c_compact: float = 0.25
    c_growth_tol: float = 0.02


DEFAULT = EstimatorConfig()


def shell_points(radius: float, n_directions: int, n: int = 1) -> np.ndarray:
    """Equally spaced directions ``radius * e^{2 pi i j / m} e_1``."""
    th = 2 * np.pi * np.arange(n_directions) / n_directions
    pts = np.zeros((n_directions, n), dtype=complex)
    pts[:, 0] = radius * np.exp(1j * th)
    return pts


def working_degree(S: OperatorMatrix, radius: float, tol: float,
                   max_degree: int = DEFAULT.max_degree):
    """Degree resolving kernels at ``radius`` to tail ``tol``; and whether
    ``S`` can actually be evaluated there."""
    b = S.basis
    need = degree_for_tail(b.n, b.alpha, radius, tol)
    D = max(S.degree, min(max_degree, need))
    if D > S.degree and not S.rebuildable:
        return S.degree, False
    return D, need <= max_degree


# ---------------------------------------------------------------- c_S

def exterior_gram_diagonal(basis: BasisSpec, r: float) -> np.ndarray:
    """``int_{|w|>r} |e_a|^2 dv_alpha = 1 - I_{r^2}(n+|a|, alpha+1)``."""
    if not 0 <= r < 1:
        raise ValueError("cutoff must lie in [0, 1)")
    return 1 - betainc(basis.n + basis.total_degrees, basis.alpha + 1, r**2)


def c_s(S: OperatorMatrix, cutoffs: Sequence[float]) -> list:
    """``||1_{|w|>r} S||`` into L^2_alpha for each cutoff ``r`` (at S's degree)."""
    out = []
    for r in cutoffs:
        g = exterior_gram_diagonal(S.basis, r)
        out.append(float(np.linalg.norm(np.sqrt(g)[:, None] * S.data, 2)))
    return out


def c_s_by_degree(S: OperatorMatrix, r: float, degrees: Sequence[int]) -> list:
    return [c_s(S.at_degree(d), [r])[0] for d in degrees]


# ---------------------------------------------------------------- b_S

def _pulled_disk(z, r, basis: BasisSpec, orders):
    """Nodes and weights of ``v_alpha`` on ``D(z, r)`` pulled back from ``|u| < tanh r``."""
    n = basis.n
    ang = orders[1] if n == 1 else max(8, orders[1] // 6)
    disk = build_ball_grid(n, basis.alpha, math.tanh(r), orders[0], ang)
    u = disk.nodes
    x = 1 - float(np.sum(np.abs(z) ** 2))
    jac = (x / np.abs(1 - inner(u, z)) ** 2) ** basis.gamma
    return mobius(z, u), disk.weights * jac


def disk_gram(z, r: float, basis: BasisSpec, orders=DEFAULT.disk_orders) -> np.ndarray:
    """``G[j, k] = int_{D(z, r)} e_k conj(e_j) dv_alpha``."""
    z = as_points(z, basis.n).reshape(basis.n)
    nodes, w = _pulled_disk(z, r, basis, orders)
    E = basis.evaluate(nodes)
    return E.conj().T @ (w[:, None] * E)


def _rotation(basis: BasisSpec, theta: float) -> np.ndarray:
    return np.exp(1j * theta * basis.total_degrees)


def _masked_norm(G, A):
    """``sqrt(lambda_max(A^H G A))``."""
    M = A.conj().T @ G @ A
    M = (M + M.conj().T) / 2
    return float(math.sqrt(max(np.linalg.eigvalsh(M)[-1], 0.0)))


def b_s_values(S: OperatorMatrix, r: float, probes, cfg: EstimatorConfig = DEFAULT) -> np.ndarray:
    """``||1_{D(z, r)} S||`` into L^2_alpha at each probe."""
    b = S.basis
    probes = as_points(probes, b.n).reshape(-1, b.n)
    out = np.empty(probes.shape[0])
    cache = {}
    for i, z in enumerate(probes):
        rad = float(np.linalg.norm(z))
        D, ok = working_degree(S, rad, cfg.tail_tol, cfg.max_degree)
        bD = b.with_degree(D)
        A = S.matrix_at(D)
        if b.n == 1:
            # rotate a Gram computed once per radius
            key = (round(rad, 14), D)
            if key not in cache:
                cache[key] = disk_gram(np.array([rad]), r, bD, cfg.disk_orders)
            lam = _rotation(bD, float(np.angle(z[0])))
            G = np.conj(lam)[:, None] * cache[key] * lam[None, :]
        else:
            G = disk_gram(z, r, bD, cfg.disk_orders)
        out[i] = _masked_norm(G, A)
    return out


def b_s(S: OperatorMatrix, r: float, boundary_probes, cfg: EstimatorConfig = DEFAULT) -> float:
    """Max over probes of ``||1_{D(z, r)} S||``."""
    return float(np.max(b_s_values(S, r, boundary_probes, cfg)))


# ---------------------------------------------------------------- a_S

@dataclass
class ASample:
    value: float
    n_atoms: int
    degree: int
    flagged: bool


def a_s_values(S: OperatorMatrix, r: float, probes, mu: AtomicMeasure,
               cfg: EstimatorConfig = DEFAULT, eig_floor: float = 1e-10) -> list:
    """For each probe, the norm of ``S`` on the span of the kernels at the
    atoms of ``mu`` inside ``D(z, r)``."""
    if not mu.is_atomic:
        raise ValueError("a_s needs an atomic measure")
    b = S.basis
    probes = as_points(probes, b.n).reshape(-1, b.n)
    inside = rho_matrix(probes, mu.points) <= math.tanh(r)
    inside &= (np.abs(mu.masses) > 0)[None, :]
    out = []
    for i, z in enumerate(probes):
        idx = np.flatnonzero(inside[i])
        if idx.size == 0:
            out.append(ASample(0.0, 0, S.degree, True))
            continue
        ext = math.tanh(math.atanh(float(np.linalg.norm(z))) + r)
        D, ok = working_degree(S, ext, cfg.tail_tol, cfg.max_degree)
        bD = b.with_degree(D)
        K = kernel_matrix(mu.points[idx], bD, p=None)
        K = K / np.linalg.norm(K, axis=0)
        lam, V = np.linalg.eigh(K.conj().T @ K)
        keep = lam > eig_floor * lam[-1]
        B = K @ (V[:, keep] / np.sqrt(lam[keep]))  # orthonormal basis of the span
        val = float(np.linalg.norm(S.matrix_at(D) @ B, 2))
        out.append(ASample(val, int(idx.size), D, not ok))
    return out


def a_s(S: OperatorMatrix, r: float, boundary_probes, mu: AtomicMeasure,
        cfg: EstimatorConfig = DEFAULT) -> float:
    return max(s.value for s in a_s_values(S, r, boundary_probes, mu, cfg))


def boundary_lattice(cfg: EstimatorConfig = DEFAULT, alpha: float = 0.0,
                     radius: Optional[float] = None):
    """Lattice measure covering the outer shell's ``a_radius`` neighbourhood."""
    if radius is None:
        radius = math.tanh(math.atanh(max(cfg.shells)) + cfg.a_radius + cfg.a_rho)
    grid = build_hyperbolic_grid(alpha, cfg.a_rho / 4, radius)
    lat = build_lattice(cfg.a_rho, radius, grid, check=False)
    return mu_rho(lat)


# ---------------------------------------------------------------- translates

@dataclass
class ShellStats:
    radius: float
    degree: int
    translate: float  # max ||S_z f|| over unit f in span(e_0..e_m)
    compression: float  # max ||P_m S_z P_m||
    spectral_radius: float  # max spectral radius of P_m S_z P_m
    reliable: bool


def _translate_stats(S: OperatorMatrix, z: complex, D: int, m: int):
    C = _uz_series(complex(z), 2.0, S.basis.alpha, D, m)
    A = S.matrix_at(D)
    SC = A @ C
    comp = C.conj().T @ SC
    return (float(np.linalg.norm(SC, 2)), float(np.linalg.norm(comp, 2)),
            float(np.max(np.abs(np.linalg.eigvals(comp)))))


def boundary_translate_norm(S: OperatorMatrix, shells: Sequence[float] = DEFAULT.shells,
                            directions: int = DEFAULT.n_directions,
                            f_degree: int = DEFAULT.test_degree,
                            cfg: EstimatorConfig = DEFAULT) -> list:
    """Per-shell maxima of ``||S_z f||`` over directions and unit ``f`` of
    degree at most ``f_degree`` (p = 2), plus the compression statistics."""
    if S.p != 2:
        raise NotImplementedError("boundary translates are implemented for p = 2")
    if S.basis.n != 1:
        raise NotImplementedError("boundary translates are implemented on the disk")
    out = []
    for s in shells:
        D, ok = working_degree(S, s, cfg.tail_tol, cfg.max_degree)
        if not ok:
            warnings.warn(f"shell {s} not resolved for {S.label}", TruncationWarning)
        vals = np.array([_translate_stats(S, z[0], D, f_degree)
                         for z in shell_points(s, directions)])
        out.append(ShellStats(float(s), D, *map(float, vals.max(axis=0)), ok))
    return out


def extrapolate_to_boundary(shells: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares line in ``1 - |z|^2`` evaluated at 0."""
    t = 1 - np.asarray(shells, float) ** 2
    v = np.asarray(values, float)
    if t.size == 1:
        return float(v[0])
    slope, icpt = np.polyfit(t, v, 1)
    return float(icpt)


@dataclass
class EssNormEstimate:
    estimate: float
    outer_shell: float
    per_shell: list
    extrapolated: float
    c_trend: list
    reliable: bool


def _estimate(S, cfg, attr):
    stats = boundary_translate_norm(S, cfg.shells, cfg.n_directions, cfg.test_degree, cfg)
    vals = [getattr(st, attr) for st in stats]
    ext = extrapolate_to_boundary(cfg.shells, vals)
    cap = float(np.linalg.norm(S.matrix_at(stats[-1].degree), 2))
    est = min(max(ext, 0.0), cap)
    ctr = c_s(S, cfg.shells)
    return EssNormEstimate(est, vals[-1], vals, ext, ctr, all(st.reliable for st in stats))


def ess_norm_p2(S: OperatorMatrix, cfg: EstimatorConfig = DEFAULT) -> EssNormEstimate:
    """Essential norm from the compressions ``P_m S_z P_m`` on the shells.

    The per-shell maxima carry a bias of order ``1 - |z|^2``; the estimate
    is their linear extrapolation to the boundary (clipped to
    ``[0, ||S||]``).  The outer-shell value and the exterior-norm curve are
    reported alongside.
    """
    return _estimate(S, cfg, "compression")


def ess_spectral_radius_p2(S: OperatorMatrix, cfg: EstimatorConfig = DEFAULT) -> EssNormEstimate:
    """Same as :func:`ess_norm_p2` with spectral radii of the compressions."""
    return _estimate(S, cfg, "spectral_radius")


# ---------------------------------------------------------------- compactness

@dataclass
class CompactnessVerdict:
    verdict: str
    berezin_by_shell: list
    berezin_degree: int
    c_by_degree: list
    c_cutoff: float
    thresholds: dict
    reasons: list = field(default_factory=list)


def berezin_shell_max(S: OperatorMatrix, radius: float, cfg: EstimatorConfig = DEFAULT):
    D, ok = working_degree(S, radius, cfg.berezin_tail_tol, cfg.max_degree)
    A = S.at_degree(D)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        vals = berezin(A, shell_points(radius, cfg.n_directions, S.basis.n))
    return float(np.max(np.abs(vals))), D, ok


def compactness_test(S: OperatorMatrix, cfg: EstimatorConfig = DEFAULT) -> CompactnessVerdict:
    """Classify ``S`` from Berezin decay on the shells and the exterior norm.

    "compact" needs the outer-shell Berezin maximum below
    ``berezin_compact`` and decreasing over the shells, and the exterior
    norm at the outer cutoff below ``c_compact`` without growing by more
    than ``c_growth_tol`` over ``trend_degrees``.  A Berezin maximum above
    ``berezin_noncompact`` gives "non-compact" (a compact operator has
    vanishing Berezin transform).  Operators not assembled from Toeplitz
    generators cannot be certified compact ("membership unknown").
    """
    shells = list(cfg.shells)
    ber = [berezin_shell_max(S, s, cfg) for s in shells]
    for s, (_, _, ok) in zip(shells, ber):
        if not ok:
            warnings.warn(f"Berezin shell {s} not resolved for {S.label}", TruncationWarning)
    bvals = [b[0] for b in ber]
    r = shells[-1]
    degs = list(cfg.trend_degrees)
    if S.rebuildable:
        cvals = c_s_by_degree(S, r, degs)
    else:
        degs = [d for d in degs if d <= S.degree] or [S.degree]
        cvals = c_s_by_degree(S, r, degs)
    th = {"berezin_compact": cfg.berezin_compact, "berezin_noncompact": cfg.berezin_noncompact,
          "c_compact": cfg.c_compact, "c_growth_tol": cfg.c_growth_tol}
    reasons = []
    b_out = bvals[-1]
    b_decr = all(x >= y - 1e-12 for x, y in zip(bvals, bvals[1:]))
    c_ok = cvals[-1] < cfg.c_compact and (cvals[-1] - cvals[0]) <= cfg.c_growth_tol
    if b_out >= cfg.berezin_noncompact:
        verdict = "non-compact"
        reasons.append(f"Berezin maximum {b_out:.3g} on the outer shell does not vanish")
    elif b_out < cfg.berezin_compact and b_decr and c_ok:
        if S.toeplitz_generated:
            verdict = "compact"
            reasons.append("Berezin decay and exterior-norm decay below thresholds")
        else:
            verdict = "membership unknown"
            reasons.append("decay below thresholds but operator not built from Toeplitz generators")
    else:
        verdict = "inconclusive"
        reasons.append("samples between thresholds or trends not monotone")
    return CompactnessVerdict(verdict, bvals, ber[-1][1], cvals, r, th, reasons)


# ---------------------------------------------------------------- segmented

@dataclass
class SegmentedApprox:
    """Node samples of ``sum_j 1_{F_j} S T_{mu 1_{G_j}}`` applied to the basis.

    ``values[i, k]`` is the segmented operator applied to ``e_k`` at node
    ``nodes[i]``; the operator maps into L^2_alpha, not into A^2_alpha.
    """

    values: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    error: float
    reference_norm: float

    @property
    def relative_error(self) -> float:
        return self.error / self.reference_norm if self.reference_norm else math.nan


def _atom_nodes(mu_points, grid_nodes):
    """Grid node carrying each atom: exact match, else the nearest node."""
    lookup = {tuple(p): i for i, p in enumerate(grid_nodes)}
    idx = np.array([lookup.get(tuple(p), -1) for p in mu_points], dtype=int)
    miss = np.flatnonzero(idx < 0)
    for i0 in range(0, miss.size, 512):
        part = miss[i0:i0 + 512]
        idx[part] = np.argmin(rho_matrix(mu_points[part], grid_nodes), axis=1)
    return idx


def segmented_approx(S: OperatorMatrix, mu: Measure, covering: CoveringFamily,
                     chunk: int = 2048) -> SegmentedApprox:
    """Segmented operator and ``||S T_mu - sum_j 1_{F_j} S T_{mu 1_{G_j}}||``.

    Atoms (or the nodes carrying a density) belong to ``G_j`` through the
    grid node they sit on (nearest node for foreign atoms).
    """
    lat = covering.base
    grid = lat.grid
    if mu.n != grid.n:
        raise ValueError("covering and measure dimensions differ")
    atoms = mu if mu.is_atomic else mu.as_atomic()
    cov = np.flatnonzero(lat.covered)
    if cov.size == 0:
        raise ValueError("covering/grid mismatch: no covered nodes")
    b = S.basis
    a_nodes = _atom_nodes(atoms.points, grid.nodes)
    Ea = b.evaluate(atoms.points)
    SK = S.data @ np.conj(Ea).T  # coefficients of S K_{w_m}
    right = atoms.masses[:, None] * Ea
    G = covering.outer[a_nodes]  # (M, J): atom m in G_j
    full = np.empty((cov.size, b.size), dtype=complex)
    seg = np.empty_like(full)
    for i0 in range(0, cov.size, chunk):
        rows = cov[i0:i0 + chunk]
        vals = b.evaluate(grid.nodes[rows]) @ SK  # (S K_{w_m})(x)
        keep = G[:, lat.cell_of[rows]].T
        full[i0:i0 + chunk] = vals @ right
        seg[i0:i0 + chunk] = np.where(keep, vals, 0) @ right
    sw = np.sqrt(grid.weights[cov])[:, None]
    err = float(np.linalg.norm(sw * (full - seg), 2))
    ref = float(np.linalg.norm(sw * full, 2))
    return SegmentedApprox(seg, grid.nodes[cov], grid.weights[cov], err, ref)


#: truncation radius of the grid used by :func:`segmented_sweep`
SEGMENT_RADIUS = 0.998


def segmented_sweep(S, sigmas, k, atom_rho=0.5, radius=SEGMENT_RADIUS, spacing=0.25, alpha=0.0):
    """Segmented-approximation error for each ``sigma`` on one shared grid."""
    grid = build_hyperbolic_grid(alpha, spacing, radius)
    mu = mu_rho(build_lattice(atom_rho, radius, grid, check=False))
    rows = []
    for sig in sigmas:
        base = build_lattice((k + 1) * sig, radius, grid, check=False)
        fam = build_covering(sig, k, base)
        res = segmented_approx(S, mu, fam)
        rows.append({"sigma": float(sig), "cells": base.size, "overlap": fam.overlap,
                     "error": res.error, "relative_error": res.relative_error})
    return rows



# ---------------------------------------------------------------- report

def _trend(values) -> str:
    v = list(values)
    if all(x >= y for x, y in zip(v, v[1:])):
        return "nonincreasing"
    if all(x <= y for x, y in zip(v, v[1:])):
        return "nondecreasing"
    return "mixed"


@dataclass
class EssNormReport:
    """All boundary estimators on one operator (p = 2, disk)."""

    label: str
    config: dict
    a_samples: dict  # r -> outer-shell max
    b_samples: dict  # r -> outer-shell max
    c_samples: dict  # cutoff -> value
    c_trend: str
    translate: list  # per-shell ShellStats
    ess_norm: dict
    ess_spectral_radius: dict
    verdict: dict
    segmented: list = field(default_factory=list)

    @property
    def estimates(self) -> dict:
        """Single numbers per estimator at the outer shell."""
        return {"a": self.a_samples[min(self.a_samples)], "b": max(self.b_samples.values()),
                "c": self.c_samples[max(self.c_samples)],
                "boundary_translate": self.translate[-1]["translate"]}

    def as_dict(self) -> dict:
        d = asdict(self)
        d["estimates"] = self.estimates
        return d

    def to_json(self) -> str:
        return json.dumps(_clean(self.as_dict()), indent=2, sort_keys=True) + "\n"

    def curves(self) -> dict:
        """CSV text per sampled curve."""
        def table(head, rows):
            return "\n".join([head] + [",".join(_fmt(v) for v in r) for r in rows]) + "\n"

        cols = ("radius", "degree", "translate", "compression", "spectral_radius")
        return {
            "a_s": table("r,value", sorted(self.a_samples.items())),
            "b_s": table("r,value", sorted(self.b_samples.items())),
            "c_s": table("r,value", sorted(self.c_samples.items())),
            "translate": table(",".join(cols), [[st[c] for c in cols] for st in self.translate]),
            "segmented": table("sigma,error,relative_error",
                               [[r["sigma"], r["error"], r["relative_error"]]
                                for r in self.segmented]),
        }


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.12g}")
    return obj


def essnorm_report(S: OperatorMatrix, cfg: EstimatorConfig = DEFAULT,
                   mu: Optional[AtomicMeasure] = None, segmented: Sequence[dict] = ()) -> EssNormReport:
    """Run every boundary estimator on ``S``; ``mu`` defaults to
    :func:`boundary_lattice`."""
    if mu is None:
        mu = boundary_lattice(cfg, S.basis.alpha)
    outer = shell_points(max(cfg.shells), cfg.n_directions, S.basis.n)
    a = {r: a_s(S, r, outer, mu, cfg) for r in (cfg.a_radius, 2 * cfg.a_radius)}
    b = {r: b_s(S, r, outer, cfg) for r in cfg.b_radii}
    c = dict(zip(cfg.shells, c_s(S, cfg.shells)))
    stats = boundary_translate_norm(S, cfg.shells, cfg.n_directions, cfg.test_degree, cfg)
    en = ess_norm_p2(S, cfg)
    er = ess_spectral_radius_p2(S, cfg)
    ver = compactness_test(S, cfg)
    return EssNormReport(S.label, asdict(cfg), a, b, c, _trend(c.values()),
                         [asdict(s) for s in stats], asdict(en), asdict(er), asdict(ver),
                         list(segmented))
