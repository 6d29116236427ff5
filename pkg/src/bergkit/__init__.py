"""Numerical toolkit for Toeplitz-type operators on weighted Bergman spaces
of the unit ball (desk-scale, truncated to polynomials of bounded degree)."""

from .geometry import BallPoint, DomainError, HyperbolicDisk, beta, mobius, rho
from .measures import (AtomicMeasure, DensityMeasure, SymbolFunction, carleson_geo,
                       carleson_rkm, dirac, f_st, integrate, valpha)
from .operators import (BasisSpec, OperatorMatrix, TruncationWarning, berezin, get_basis,
                        identity, kernel_vector, op_norm, rank_one, s_z, tmu_matrix,
                        toeplitz_berezin_k, toeplitz_matrix, u_z_matrix)
from .quadrature import QuadratureGrid, build_grid, grid_for_degree

__version__ = "0.1.0"

__all__ = [
    "BallPoint", "DomainError", "HyperbolicDisk", "beta", "mobius", "rho",
    "AtomicMeasure", "DensityMeasure", "SymbolFunction", "carleson_geo", "carleson_rkm",
    "dirac", "f_st", "integrate", "valpha",
    "BasisSpec", "OperatorMatrix", "TruncationWarning", "berezin", "get_basis", "identity",
    "kernel_vector", "op_norm", "rank_one", "s_z", "tmu_matrix", "toeplitz_berezin_k",
    "toeplitz_matrix", "u_z_matrix",
    "QuadratureGrid", "build_grid", "grid_for_degree",
]
