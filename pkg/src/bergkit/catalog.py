"""Named symbols, measures and operators selectable by string.

Symbols: ``one``, ``coord``, ``conj-coord``, ``half-shift``, ``bump``,
``abs2``, ``indicator-annulus(r1,r2)``.  Operator-only names:
``semicommutator`` (``T_{conj w} T_w - T_{|w|^2}``), ``product``
(``T_coord T_half-shift``) and ``rank-one`` (``1 (x) 1``).  Measures: ``valpha``, ``dirac0``, ``atom(z)``,
``mu-rho`` / ``mu-rho(rho)``, ``density-abs2`` and ``file:PATH`` (an atom
list read by :func:`bergkit.measures.load_atoms`).
"""
from __future__ import annotations

import re

import numpy as np

from .measures import (AtomicMeasure, DensityMeasure, SymbolFunction, constant_symbol,
                       dirac, load_atoms, valpha)
from .lattice import lattice_measure
from .operators import BasisSpec, OperatorMatrix, rank_one, toeplitz_matrix


def _first(w):
    return w[:, 0]


def _abs2(w):
    return np.sum(np.abs(w) ** 2, axis=1)


def coord() -> SymbolFunction:
    return SymbolFunction(_first, 1.0, "coord", max_degree=1)


def conj_coord() -> SymbolFunction:
    return coord().conj()


def half_shift() -> SymbolFunction:
    return SymbolFunction(lambda w: (1 + w[:, 0]) / 2, 1.0, "half-shift", max_degree=1)


def bump() -> SymbolFunction:
    return SymbolFunction(lambda w: 1 - _abs2(w), 1.0, "bump", profile=lambda t: 1 - t + 0j,
                          max_degree=2, real=True)


def abs2() -> SymbolFunction:
    return SymbolFunction(_abs2, 1.0, "abs2", profile=lambda t: t + 0j, max_degree=2, real=True)


def indicator_annulus(r1: float, r2: float) -> SymbolFunction:
    if not 0 <= r1 < r2 <= 1:
        raise ValueError("need 0 <= r1 < r2 <= 1")
    lo, hi = r1**2, r2**2

    def prof(t):
        t = np.asarray(t)
        return ((t > lo) & (t < hi)).astype(complex)

    return SymbolFunction(lambda w: prof(_abs2(w)), 1.0, f"indicator-annulus({r1},{r2})",
                          profile=prof, breakpoints=tuple(b for b in (lo, hi) if 0 < b < 1),
                          real=True)


_CALL = re.compile(r"^([a-z0-9-]+)(?:\((.*)\))?$")


def _parse(name: str):
    m = _CALL.match(name.strip().lower().replace(" ", ""))
    if not m:
        raise ValueError(f"cannot parse selector {name!r}")
    args = [a for a in (m.group(2) or "").split(",") if a]
    return m.group(1), args


def symbol(name: str) -> SymbolFunction:
    """Look up a named symbol."""
    key, args = _parse(name)
    simple = {"one": lambda: constant_symbol(1.0), "coord": coord, "conj-coord": conj_coord,
              "half-shift": half_shift, "bump": bump, "abs2": abs2}
    if key in simple and not args:
        return simple[key]()
    if key == "indicator-annulus" and len(args) == 2:
        return indicator_annulus(float(args[0]), float(args[1]))
    raise ValueError(f"unknown symbol {name!r}")


def operator(name: str, basis: BasisSpec, p: float = 2.0) -> OperatorMatrix:
    """Toeplitz operator of a named symbol, or a named composite."""
    key, _ = _parse(name)
    if key == "semicommutator":
        w = coord()
        S = toeplitz_matrix(w.conj(), basis, p) @ toeplitz_matrix(w, basis, p) \
            - toeplitz_matrix(abs2(), basis, p)
        S.label = "semicommutator"
        return S
    if key == "rank-one":
        return rank_one(1.0, 1.0, basis, p)
    if key == "product":
        S = toeplitz_matrix(coord(), basis, p) @ toeplitz_matrix(half_shift(), basis, p)
        S.label = "coord*half-shift"
        return S
    T = toeplitz_matrix(symbol(name), basis, p)
    T.label = name
    return T


def parse_point(text: str, n: int = 1) -> np.ndarray:
    """``"0.5"``, ``"0.3+0.2j"`` or ``"0.1;0.2j"`` (coordinates split by ``;``)."""
    parts = [complex(s) for s in text.replace(" ", "").split(";")]
    if len(parts) == 1 and n > 1:
        parts = parts + [0j] * (n - 1)
    if len(parts) != n:
        raise ValueError(f"point {text!r} needs {n} coordinates")
    return np.array(parts)


def measure(name: str, n: int = 1, alpha: float = 0.0, rho: float = 0.5,
            degree: int = 40) -> AtomicMeasure | DensityMeasure:
    """Look up a named measure.  ``mu-rho`` builds a lattice (n = 1)."""
    if name.startswith("file:"):
        try:
            return load_atoms(name[5:], n)
        except OSError as exc:
            raise ValueError(f"cannot read atom list: {exc}") from exc
    key, args = _parse(name)
    if key == "valpha":
        return valpha(n, alpha, degree)
    if key == "density-abs2":
        base = valpha(n, alpha, degree)
        return DensityMeasure(abs2(), base.grid, "density-abs2")
    if key == "dirac0":
        return dirac(np.zeros(n), n)
    if key == "atom" and len(args) == 1:
        mu = dirac(parse_point(args[0], n), n)
        mu.label = f"atom({args[0]})"
        return mu
    if key == "mu-rho":
        return lattice_measure(float(args[0]) if args else rho, alpha)
    raise ValueError(f"unknown measure {name!r}")
