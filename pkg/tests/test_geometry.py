import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergkit.geometry import (BallPoint, DomainError, HyperbolicDisk, as_points, beta,
                              identity_residuals, inner, mobius, one_minus_rho2, random_points,
                              rho, rho_matrix)


def ball_point(n):
    coord = st.tuples(st.floats(-1, 1), st.floats(-1, 1))

    def make(parts, scale):
        v = np.array([complex(a, b) for a, b in parts])
        nv = np.linalg.norm(v)
        if nv == 0:
            return np.zeros(n, complex)
        return v / nv * scale

    return st.builds(make, st.lists(coord, min_size=n, max_size=n), st.floats(0, 0.995))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([1, 2]).flatmap(lambda n: st.tuples(ball_point(n), ball_point(n))))
def test_involution_and_identity(pair):
    z, w = pair
    assert np.allclose(mobius(z, mobius(z, w)), w, atol=1e-9)
    lhs = 1 - np.sum(np.abs(mobius(z, w)) ** 2)
    assert abs(lhs - one_minus_rho2(z, w)) < 1e-10


@settings(max_examples=100, deadline=None)
@given(st.tuples(ball_point(2), ball_point(2), ball_point(2)))
def test_rho_invariance_and_symmetry(triple):
    z, w, a = triple
    assert abs(rho(z, w) - rho(w, z)) < 1e-9
    assert abs(rho(mobius(a, z), mobius(a, w)) - rho(z, w)) < 1e-8


def test_special_values():
    z = np.array([0.3 + 0.1j, -0.2j])
    assert np.allclose(mobius(z, z), 0)
    assert np.allclose(mobius(z, np.zeros(2)), z)
    w = np.array([0.1, 0.4j])
    assert np.allclose(mobius(np.zeros(2), w), -w)


def test_disk_formula():
    # on the disk phi_z(w) = (z - w) / (1 - conj(z) w)
    z, w = 0.4 - 0.3j, -0.2 + 0.5j
    assert np.isclose(mobius(z, w)[0], (z - w) / (1 - np.conj(z) * w))


def test_domain_checks():
    with pytest.raises(DomainError):
        as_points(1.0)
    with pytest.raises(DomainError):
        BallPoint(np.array([0.8, 0.7]))
    with pytest.raises(ValueError):
        as_points(np.zeros(3), 2)


def test_inner_is_linear_in_first_slot():
    z, w = np.array([1j, 0.5]), np.array([0.2, 0.3j])
    assert np.isclose(inner(2j * z, w), 2j * inner(z, w))
    assert np.isclose(inner(z, 2j * w), -2j * inner(z, w))


def test_rho_matrix_matches_pointwise(rng):
    z = random_points(20, 2, rng)
    w = random_points(30, 2, rng)
    M = rho_matrix(z, w)
    direct = np.array([[rho(a, b) for b in w] for a in z])
    assert np.max(np.abs(M - direct)) < 1e-12
    # near-coincident points keep relative accuracy
    eps = 1e-9
    near = rho_matrix(z[:1], z[:1] + eps)[0, 0]
    assert abs(near - rho(z[0], z[0] + eps)) < 1e-15 + 1e-6 * near


def test_beta_and_disk():
    d = HyperbolicDisk(np.array([0.5]), 1.0)
    inside = mobius(np.array([0.5]), np.array([[np.tanh(0.99)], [np.tanh(1.01)]]))
    assert list(d.contains(inside)) == [True, False]
    assert np.isclose(beta(0.0, np.tanh(0.7)), 0.7)


def test_identity_residuals_batch(rng):
    for n in (1, 2):
        z, w, a = (random_points(1000, n, rng) for _ in range(3))
        res = identity_residuals(z, w, a)
        assert max(res.values()) < 1e-10
