import dataclasses

import numpy as np
import pytest
from scipy import integrate as sint

from bergkit import catalog as cat
from bergkit.geometry import mobius
from bergkit.measures import AtomicMeasure, dirac
from bergkit.operators import (_uz_quadrature, _uz_series, berezin, degree_for_tail, get_basis,
                               identity, kernel_tail, kernel_vector, lambda_factor,
                               load_operator, monomial_norms, op_norm, rank_one, s_z,
                               save_operator, tmu_matrix, toeplitz_berezin_k, toeplitz_matrix)
from bergkit.quadrature import grid_for_degree


def test_basis_orthonormal():
    for n, alpha in ((1, 0.0), (1, 1.5), (2, 0.0)):
        b = get_basis(n, alpha, 12)
        E = b.evaluate(b.grid.nodes)
        G = E.conj().T @ (b.grid.weights[:, None] * E)
        assert np.max(np.abs(G - np.eye(b.size))) < 1e-12


def test_norms_against_quadrature():
    # ||z^k||^2 = k! Gamma(alpha+2) / Gamma(k+alpha+2) on the disk
    alpha, k = 0.7, 5
    val, _ = sint.quad(lambda r: 2 * r ** (2 * k + 1) * (alpha + 1) * (1 - r * r) ** alpha, 0, 1)
    assert abs(monomial_norms(1, alpha, k)[k] ** 2 - val) < 1e-10


def test_shift_weights():
    # T_w e_k = sqrt((k+1)/(k+2)) e_{k+1} on A^2 of the disk
    b = get_basis(1, 0.0, 30)
    T = toeplitz_matrix(cat.coord(), b).data
    k = np.arange(30)
    assert np.allclose(np.diag(T, -1), np.sqrt((k + 1) / (k + 2)), atol=1e-13)
    T[np.arange(1, 31), k] = 0
    assert np.max(np.abs(T)) < 1e-13


def test_bump_diagonal_two_routes():
    b = get_basis(1, 0.0, 25)
    radial = toeplitz_matrix(cat.bump(), b).data
    assert np.allclose(np.diag(radial), 1 / (np.arange(26) + 2), atol=1e-13)
    s = dataclasses.replace(cat.bump(), profile=None)  # force the polar route
    polar = toeplitz_matrix(s, b).data
    assert np.max(np.abs(polar - radial)) < 1e-12


def test_adjoint_symbol_and_semicommutator():
    b = get_basis(1, 0.0, 20)
    Tw = toeplitz_matrix(cat.coord(), b)
    Tb = toeplitz_matrix(cat.conj_coord(), b)
    assert np.max(np.abs(Tb.data - Tw.data.conj().T)) < 1e-13
    semi = cat.operator("semicommutator", b)
    assert np.max(np.abs(semi.matrix_at(120))) < 1e-10


def test_annulus_indicator_diagonal():
    # <T_1{r1<|w|<r2} e_k, e_k> = r2^{2k+2} - r1^{2k+2} (alpha = 0)
    b = get_basis(1, 0.0, 15)
    T = toeplitz_matrix(cat.indicator_annulus(0.3, 0.8), b).data
    k = np.arange(16)
    assert np.allclose(np.diag(T).real, 0.8 ** (2 * k + 2) - 0.3 ** (2 * k + 2), atol=1e-12)


def test_kernel_and_berezin():
    b = get_basis(1, 0.0, 200)
    kv = kernel_vector(0.5, 2.0, b)
    assert abs(kv.norm - 1) < 1e-12
    assert abs(berezin(identity(b), 0.6) - 1) < 1e-12
    # B(T_bump)(z) = int (1-|phi_z|^2) dv = (1-|z|^2) int (1-|u|^2) / |1-zu|^2 dv
    z = 0.4
    Ta = toeplitz_matrix(cat.bump(), b)
    val, _ = sint.dblquad(lambda th, r: (1 - abs(mobius(z, r * np.exp(1j * th))[0]) ** 2)
                          * r / np.pi, 0, 1, 0, 2 * np.pi, epsabs=1e-12)
    assert abs(berezin(Ta, z).real - val) < 1e-9


def test_degree_for_tail():
    d = degree_for_tail(1, 0.0, 0.9, 1e-6)
    assert kernel_tail(1, 0.0, d, 0.81) <= 1e-6 < kernel_tail(1, 0.0, d - 1, 0.81)


def test_rank_one_is_dirac_toeplitz():
    for d in (1, 5, 30):
        b = get_basis(1, 0.0, d)
        assert np.array_equal(rank_one(1.0, 1.0, b).data, tmu_matrix(dirac(0.0), b).data)


def test_translate_series_vs_quadrature():
    b = get_basis(1, 0.0, 30)
    z = 0.4 - 0.2j
    series = _uz_series(z, 2.0, 0.0, 30, 30)
    quad = _uz_quadrature(np.array([z]), 2.0, b, grid_for_degree(1, 0.0, 400))
    assert np.max(np.abs(series - quad)) < 1e-12


def test_translate_involution_on_fixed_block():
    # U_z U_z = I restricted to low degrees, with a large inner degree
    z, m, D = 0.6, 8, 400
    C = _uz_series(z, 2.0, 0.0, D, D)
    block = (C @ C[:, :m + 1])[:m + 1]
    assert np.max(np.abs(block - np.eye(m + 1))) < 1e-10


def test_translated_kernel_identity():
    # (U_z)^* k_xi = conj(lambda) k_{phi_z(xi)}  (p = 2)
    b = get_basis(1, 0.0, 150)
    xi, z = 0.3 + 0.2j, 0.5 - 0.1j
    C = _uz_series(z, 2.0, 0.0, 150, 150)
    lhs = C.conj().T @ kernel_vector(xi, 2.0, b).coeffs
    rhs = kernel_vector(mobius(z, xi), 2.0, b).coeffs
    lam = lambda_factor(xi, z, 2.0)
    assert np.linalg.norm(lhs - np.conj(lam) * rhs) < 1e-10


def test_s_z_identity_and_norm_preservation():
    b = get_basis(1, 0.0, 10)
    Sz = s_z(identity(b), 0.5, work_degree=300)
    assert np.max(np.abs(Sz.data - np.eye(11))) < 1e-10
    Tw = toeplitz_matrix(cat.coord(), b)
    assert op_norm(Tw).value <= 1 + 1e-12


def test_bk_dirac_closed_form():
    # <T_{B_k(delta_0)} 1, 1> = int c_k (1-|w|^2)^{2+k} dv = (k+1)/(k+3)
    b = get_basis(1, 0.0, 10)
    for k in (0.0, 3.0, 7.5):
        T = toeplitz_berezin_k(dirac(0.0), k, b).data
        assert abs(T[0, 0] - (k + 1) / (k + 3)) < 1e-12


def test_bk_atoms_grouped_by_ring():
    b = get_basis(1, 0.0, 10)
    pts = np.array([[0.5 * np.exp(0.3j)], [0.5 * np.exp(-2j)], [0.2j]])
    mu = AtomicMeasure(pts, np.array([1.0, 0.5, 2.0]))
    whole = toeplitz_berezin_k(mu, 2.0, b).data
    parts = sum(toeplitz_berezin_k(AtomicMeasure(p[None], np.array([m])), 2.0, b).data
                for p, m in zip(pts, mu.masses))
    assert np.max(np.abs(whole - parts)) < 1e-13


def test_products_use_padded_recipes():
    b = get_basis(1, 0.0, 10)
    Tw = toeplitz_matrix(cat.coord(), b)
    P = Tw.adjoint() @ Tw
    # (T_w^* T_w)[d, d] needs the row d+1 of T_w, which truncation would drop
    assert abs(P.data[10, 10] - 11 / 12) < 1e-13


def test_save_load_roundtrip(tmp_path):
    b = get_basis(1, 0.5, 6)
    T = toeplitz_matrix(cat.half_shift(), b, 3.0)
    path = tmp_path / "T.csv"
    save_operator(T, path)
    back = load_operator(path)
    assert back.basis.degree == 6 and back.p == 3.0 and back.basis.alpha == 0.5
    assert np.max(np.abs(back.data - T.data)) < 1e-12


def test_incompatible_bases():
    with pytest.raises(ValueError):
        identity(get_basis(1, 0.0, 4)) + identity(get_basis(1, 0.0, 5))
