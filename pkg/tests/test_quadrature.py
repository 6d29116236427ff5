import pytest
from scipy import integrate as sint
from scipy.special import gamma

from bergkit.quadrature import (build_ball_grid, build_grid, build_hyperbolic_grid, c_alpha,
                                grid_for_degree, monomial_exactness_error, monomial_integral)


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 0.5, 2.0])
def test_mass_one_disk(alpha):
    g = grid_for_degree(1, alpha, 20)
    assert abs(g.weights.sum() - 1) < 1e-12


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 2.0])
def test_mass_one_ball(alpha):
    g = build_grid(2, alpha, 6, 8)
    assert abs(g.weights.sum() - 1) < 1e-12


def radial_moment(n, alpha, k):
    # int |z_1|^{2k} dv_alpha on the disk, by adaptive quadrature in r
    f = lambda r: 2 * r ** (2 * k + 1) * (1 - r * r) ** alpha  # noqa: E731
    val, _ = sint.quad(f, 0, 1, limit=200)
    return c_alpha(n, alpha) * val


@pytest.mark.parametrize("alpha,k", [(0.0, 3), (0.5, 2), (-0.5, 5)])
def test_monomial_integral_against_quad(alpha, k):
    assert abs(monomial_integral(1, alpha, [k], [k]) - radial_moment(1, alpha, k)) < 1e-8
    # multinomial closed form on the ball: a! Gamma(n+alpha+1) / Gamma(n+|a|+alpha+1)
    val = monomial_integral(2, alpha, [k, 1], [k, 1])
    ref = gamma(k + 1) * gamma(3 + alpha) / gamma(3 + k + 1 + alpha)
    assert abs(val - ref) < 1e-12 * max(1, ref)
    assert monomial_integral(2, alpha, [1, 0], [0, 1]) == 0.0


def test_exactness_disk():
    g = build_grid(1, 0.3, 6, 23)
    assert g.exact_degree == 22
    assert monomial_exactness_error(g) < 1e-13


def test_exactness_ball():
    g = build_grid(2, 0.0, 3, 11)
    assert g.exact_degree == 10
    assert monomial_exactness_error(g) < 1e-13


def test_ball_grid_partial_mass():
    alpha, R = 0.5, 0.7
    g = build_ball_grid(1, alpha, R, 20, 8)
    assert abs(g.weights.sum() - (1 - (1 - R * R) ** (alpha + 1))) < 1e-12


def test_hyperbolic_grid_mass():
    g = build_hyperbolic_grid(0.0, 0.2, 0.99)
    assert abs(g.weights.sum() - 0.99**2) < 1e-6
    capped = build_hyperbolic_grid(0.0, 0.2, 0.99, cap_order=4)
    assert abs(capped.weights.sum() - 1) < 1e-6


def test_invalid():
    with pytest.raises(ValueError):
        build_grid(1, -1.0, 4, 4)
    with pytest.raises(ValueError):
        build_grid(1, 0.0, 0, 4)
    with pytest.raises(NotImplementedError):
        build_grid(3, 0.0, 2, 2)
