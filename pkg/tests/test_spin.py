import numpy as np
import pytest

from hypmass.geometry import GeometryError
from hypmass.reference import lorentz_product
from hypmass.spin import (
    KillingSpec,
    SpinError,
    boundary_chirality,
    build_clifford,
    killing_residual,
    killing_spinor_eval,
    null_cone_inverse,
    section_residual,
    v_phi,
    v_phi_pointwise,
)

DIMS = [3, 4, 5, 6, 7, 8]


def ball_points(rng, count, n, rmax=0.95):
    X = rng.normal(size=(count, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    X *= rng.uniform(0.0, rmax, size=(count, 1))
    X[:, -1] = np.abs(X[:, -1])
    return X


def random_spec(rep, rng, sign=1, chirality=1):
    u = rng.normal(size=rep.rank) + 1j * rng.normal(size=rep.rank)
    return KillingSpec.chiral(rep, u, chirality, sign)


@pytest.mark.parametrize("n", DIMS)
def test_clifford_relations(n):
    rep = build_clifford(n)
    assert rep.rank == 2 ** (n // 2)
    assert rep.bundle_rank == (2 * rep.rank if n % 2 else rep.rank)
    assert max(rep.residuals().values()) < 1e-12


@pytest.mark.parametrize("n,ranks", [(3, 2), (4, 2), (5, 4), (6, 4)])
def test_boundary_chirality_ranks(n, ranks):
    bc = boundary_chirality(build_clifford(n))
    assert bc.eigenbasis(1).shape[1] == ranks
    assert bc.eigenbasis(-1).shape[1] == ranks
    assert np.allclose(bc.plus @ bc.plus, bc.plus)
    assert np.allclose(bc.plus + bc.minus, np.eye(len(bc.plus)))


@pytest.mark.parametrize("n", [2, 9, 3.0])
def test_unsupported_dimensions(n):
    with pytest.raises(SpinError):
        build_clifford(n)


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("sign", [1, -1])
def test_killing_equation(rng, n, sign):
    rep = build_clifford(n)
    X = ball_points(rng, 40, n)
    for chir in (1, -1):
        spec = random_spec(rep, rng, sign, chir)
        for a in range(n):
            assert np.max(killing_residual(spec, X, a, rep)) < 1e-6


def test_killing_opposite_sign_fails(rng):
    """The section with + prescription does not solve the equation with Killing number -i/2."""
    rep = build_clifford(4)
    spec = random_spec(rep, rng, 1)
    X = ball_points(rng, 10, 4, 0.8)

    def section(Z):
        return killing_spinor_eval(spec, Z, rep)

    assert np.max(section_residual(section, X, 0, -1, rep)) > 1e-2


def test_constant_section_is_not_killing(rng):
    rep = build_clifford(3)
    u = np.ones(rep.bundle_rank, complex)

    def section(Z):
        return np.broadcast_to(u, Z.shape[:-1] + u.shape)

    X = np.array([[0.5, 0.0, 0.0]])
    assert np.max(section_residual(section, X, 0, 1, rep)) > 1e-2


def test_killing_domain_checks():
    rep = build_clifford(3)
    spec = KillingSpec(np.ones(2), 1, np.ones(2))
    with pytest.raises(GeometryError):
        killing_spinor_eval(spec, np.array([[0.9, 0.5, 0.0]]), rep)
    with pytest.raises(IndexError):
        killing_residual(spec, np.array([[0.1, 0.1, 0.1]]), 3, rep)
    with pytest.raises(SpinError):
        KillingSpec(np.ones(2), 0)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_v_phi_pointwise(rng, n):
    rep = build_clifford(n)
    X = ball_points(rng, 50, n)
    spec = random_spec(rep, rng)
    lhs, rhs = v_phi_pointwise(spec, X, rep)
    assert np.max(np.abs(lhs - rhs) / lhs) < 1e-12


@pytest.mark.parametrize("n", [3, 4, 5])
def test_v_phi_is_future_causal(rng, n):
    rep = build_clifford(n)
    for _ in range(10):
        V = v_phi(random_spec(rep, rng), rep).coeffs
        assert V[0] > 0
        assert lorentz_product(V, V) >= -1e-10 * V[0] ** 2


def test_v_phi_rejects_non_chiral():
    rep = build_clifford(4)
    # eigenvectors of i gamma_n have a normal coefficient of +-2
    u = np.linalg.eigh(1j * rep.gammas[-1])[1][:, 0]
    with pytest.raises(SpinError):
        v_phi(KillingSpec(u, 1), rep)
    with pytest.raises(SpinError):
        v_phi(KillingSpec(np.zeros(rep.rank), 1), rep)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_null_cone_round_trip(rng, n):
    rep = build_clifford(n)
    for _ in range(5):
        w = rng.normal(size=n - 1)
        V = np.concatenate([[np.linalg.norm(w)], w]) * rng.uniform(0.5, 2.0)
        assert np.max(np.abs(v_phi(null_cone_inverse(V, rep), rep).coeffs - V)) < 1e-8


def test_null_cone_rejects_timelike():
    rep = build_clifford(3)
    with pytest.raises(SpinError):
        null_cone_inverse([2.0, 1.0, 0.0], rep)
    with pytest.raises(SpinError):
        null_cone_inverse([-1.0, 1.0, 0.0], rep)
