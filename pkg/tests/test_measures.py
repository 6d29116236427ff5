import math

import numpy as np
import pytest
from scipy import integrate as sint

from bergkit.measures import (AtomicMeasure, DensityMeasure, SymbolFunction, carleson_geo,
                              carleson_geo_values, carleson_rkm, default_probes, dirac, f_st,
                              f_st_series, fst_growth, integrate, load_atoms, save_atoms,
                              schur_bound, valpha)
from bergkit.quadrature import build_grid


def test_integrate_valpha():
    for alpha in (0.0, 1.5):
        mu = valpha(1, alpha, 10)
        assert abs(integrate(lambda w: np.ones(w.shape[0]), mu) - 1) < 1e-12
        # int |z|^2 dv_alpha = 1 / (alpha + 2) on the disk
        val = integrate(lambda w: np.abs(w[:, 0]) ** 2, mu)
        assert abs(val - 1 / (alpha + 2)) < 1e-12


def test_atomic_basics(tmp_path):
    mu = AtomicMeasure(np.array([[0.1], [0.5j]]), np.array([1.0, -2.0 + 1j]))
    assert mu.total_variation() == pytest.approx(1 + math.sqrt(5))
    assert mu.integrate(lambda w: np.ones(2)) == pytest.approx(-1 + 1j)
    path = tmp_path / "atoms.txt"
    save_atoms(mu, path)
    back = load_atoms(path, 1)
    assert np.allclose(back.points, mu.points) and np.allclose(back.masses, mu.masses)
    with pytest.raises(ValueError):
        AtomicMeasure(np.array([[0.1]]), np.array([1.0, 2.0]))


def test_f_st_two_routes():
    for s, t in ((4.0, 0.0), (1.0, 0.5), (3.0, 2.0)):
        for r in (0.0, 0.5, 0.95):
            a = f_st(s, t, r)
            b = f_st_series(s, t, r)
            assert abs(a - b) < 1e-10 * b


def test_f_st_direct_disk():
    # plain 2d quadrature of (1-|w|^2)^t / |1 - z conj(w)|^s dv at a moderate point
    z, s, t = 0.6, 3.0, 0.5

    def integrand(th, r):
        w = r * np.exp(1j * th)
        return (1 - r * r) ** t / abs(1 - z * np.conj(w)) ** s * r / np.pi

    val, _ = sint.dblquad(integrand, 0, 1, 0, 2 * np.pi, epsabs=1e-11)
    assert abs(f_st(s, t, z) - val) < 1e-8


def test_growth_regimes():
    g = fst_growth(4.0, 0.0)
    assert abs(g["slope"] - (2 - 4)) < 0.05
    bounded = fst_growth(1.0, 0.0)
    assert bounded["outer_spread"] < 0.05


def test_rkm_of_valpha_is_one():
    mu = valpha(1, 0.0, 20)
    probes = default_probes(1, levels=5)
    assert abs(carleson_rkm(mu, probes) - 1) < 1e-8


def test_geo_of_valpha_closed_form():
    # v(D(z, r)) / (1-|z|^2)^2 = s^2 / (1 - s^2 |z|^2)^2 with s = tanh r (alpha = 0)
    mu = valpha(1, 0.0, 20)
    z = np.array([[0.0], [0.5], [0.9j]])
    s = math.tanh(0.5)
    ref = s**2 / (1 - s**2 * np.abs(z[:, 0]) ** 2) ** 2
    assert np.allclose(carleson_geo_values(mu, 0.5, z), ref, rtol=1e-8)


def test_dirac_carleson():
    mu = dirac(0.0)
    probes = np.array([[0.0], [0.3]])
    assert carleson_rkm(mu, probes, 0.0) == pytest.approx(1.0)
    assert carleson_geo(mu, 0.5, probes, 0.0) == pytest.approx(1 / (1 - 0.09) ** 2)
    with pytest.raises(ValueError):
        carleson_rkm(mu, probes)


def test_density_measure_sampling():
    g = build_grid(1, 0.0, 8, 17)
    a = SymbolFunction(lambda w: np.abs(w[:, 0]) ** 2, 1.0, "abs2")
    mu = DensityMeasure(a, g)
    assert mu.integrate(lambda w: np.ones(w.shape[0])) == pytest.approx(0.5)
    assert mu.as_atomic().total_variation() == pytest.approx(0.5)


def test_schur_constant_kernel():
    g = build_grid(1, 0.0, 6, 12)
    res = schur_bound(lambda x, y: np.ones((x.shape[0], y.shape[0])),
                      lambda x: np.ones(x.shape[0]), 2.0, [g])
    assert res.bound == pytest.approx(1.0)


def test_schur_detects_divergence():
    # |1 - z conj(w)|^{-2} has unbounded row integrals against h = 1
    kern = lambda x, y: 1 / np.abs(1 - x[:, :1] * np.conj(y[:, 0])[None, :]) ** 2  # noqa: E731
    grids = [build_grid(1, 0.0, m, 4 * m) for m in (8, 16, 32, 64)]
    res = schur_bound(kern, lambda x: np.ones(x.shape[0]), 2.0, grids)
    assert res.fails
