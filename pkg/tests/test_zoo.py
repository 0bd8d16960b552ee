from pathlib import Path

import numpy as np
import pytest

from hypmass.geometry import GeometryError, curvature, validate_decay
from hypmass.mass import mass_at_radius, mass_vector
from hypmass.quadrature import QuadratureRule
from hypmass.reference import IsometryElement, StaticPotential
from hypmass.zoo import (
    ConformallyCompactData,
    DiffeoSpec,
    RadialProfile,
    ads_schwarzschild_half,
    collar_to_radius,
    conformally_compact,
    decaying_field,
    horizon_radius,
    isometry_pullback,
    load_conformal_data,
    pushforward,
    radius_to_collar,
    reference,
    trace_perturbation,
    transported_reference,
)

import oracles
from conftest import upper_points

DATA = Path(__file__).resolve().parents[1] / "data" / "conformal_example.json"
V0 = StaticPotential.basis(0, 3)


def round_sphere(c):
    def h(om):
        return c * np.broadcast_to(np.eye(om.shape[-1]), om.shape + (om.shape[-1],))

    return h


# ---------------------------------------------------------------------------
# AdS-Schwarzschild


def test_ads_massless_is_reference(rng):
    Y = upper_points(rng, 20, 3, 0.0, 5.0)
    assert np.all(ads_schwarzschild_half(0.0).e(Y) == 0.0)


def test_ads_horizon_and_refusal():
    rh = horizon_radius(1.0, 3)
    assert 1 + rh**2 - 2 / rh == pytest.approx(0.0, abs=1e-12)
    m = ads_schwarzschild_half(1.0)
    with pytest.raises(GeometryError):
        m.e(np.array([[0.0, 0.0, rh + 0.05]]))
    with pytest.raises(ValueError):
        horizon_radius(-1.0, 3)


def test_ads_radial_component(rng):
    """g(d_r, d_r) = 1 / (1 + r^2 - 2m/r) along the radial unit direction."""
    m = ads_schwarzschild_half(0.7)
    Y = upper_points(rng, 20, 3, 3.0, 20.0)
    r = np.linalg.norm(Y, axis=-1)
    u = Y / r[:, None]
    grr = np.einsum("pi,pij,pj->p", u, m.components(Y), u)
    assert np.allclose(grr, 1 / (1 + r**2 - 1.4 / r), rtol=1e-12)


def test_ads_scalar_curvature(rng):
    Y = upper_points(rng, 10, 3, 3.0, 10.0)
    assert np.max(np.abs(curvature(ads_schwarzschild_half(1.0), Y)["scalar_excess"])) < 1e-6


# ---------------------------------------------------------------------------
# trace perturbations


def test_trace_profile_errors():
    with pytest.raises(ValueError):
        trace_perturbation(RadialProfile("power", 1.0, 1.0))
    with pytest.raises(ValueError):
        RadialProfile("wiggle", 1.0, 1.0)(np.array([1.0]))
    with pytest.raises(GeometryError):
        trace_perturbation(RadialProfile("power", 1.0, 1.0), tau=3.0)


def test_trace_is_pure_trace(rng):
    m = trace_perturbation(RadialProfile("power", 0.5, 3.0))
    Y = upper_points(rng, 10, 3, 1.0, 5.0)
    r = np.linalg.norm(Y, axis=-1)
    assert np.allclose(m.e(Y), (0.5 * r**-3)[:, None, None] * m.background.metric(Y))


# ---------------------------------------------------------------------------
# conformally compact data


def test_collar_round_trip():
    t = np.linspace(0.01, 2.0, 50)
    assert np.allclose(radius_to_collar(collar_to_radius(t)), t, rtol=1e-13)
    # dt^2 / sinh^2 t = dr^2 / (1 + r^2)
    r = collar_to_radius(t)
    drdt = -np.cosh(t) / np.sinh(t) ** 2
    assert np.allclose(drdt**2 / (1 + r**2), 1 / np.sinh(t) ** 2)


def test_zero_data_is_reference(rng):
    m = conformally_compact(ConformallyCompactData(3))
    Y = upper_points(rng, 20, 3, 3.0, 30.0)
    assert np.max(np.abs(m.e(Y))) < 1e-10
    P, _ = mass_vector(m, 16)
    assert np.max(np.abs(P.components)) < 1e-8


def test_conformal_mass_matches_symbolic_flux():
    m = conformally_compact(ConformallyCompactData(3, h=round_sphere(1.0)))
    for radius in (10.0, 40.0):
        got = mass_at_radius(m, V0, QuadratureRule.build(3, radius, 24))
        assert got == pytest.approx(oracles.flux_at(oracles.collar_flux(), radius, 1.0), rel=1e-4)


def test_conformal_mass_linear_in_h():
    rule = QuadratureRule.build(3, 20.0, 16)
    vals = [mass_at_radius(conformally_compact(ConformallyCompactData(3, h=round_sphere(c))), V0, rule)
            for c in (0.5, 1.0, 2.0)]
    assert vals[1] == pytest.approx(2 * vals[0], rel=1e-8)
    assert vals[2] == pytest.approx(4 * vals[0], rel=1e-8)


def test_remainder_validation():
    def k_slow(t, om):
        return (t**4)[..., None, None] * np.broadcast_to(np.eye(3), om.shape + (3,))

    with pytest.raises(GeometryError):
        conformally_compact(ConformallyCompactData(3, k=k_slow))

    def k_asym(t, om):
        K = np.zeros(om.shape + (3,))
        K[..., 0, 1] = t**6
        return K

    with pytest.raises(GeometryError):
        conformally_compact(ConformallyCompactData(3, k=k_asym))


def test_load_example_file():
    data = load_conformal_data(DATA)
    assert data.dim == 3 and data.h is not None and data.k is not None
    m = conformally_compact(data)
    P, rep = mass_vector(m, 24)
    assert P.components[0] == pytest.approx(oracles.collar_mass(2.0), rel=1e-3)
    assert np.max(np.abs(P.components[1:])) < 1e-6


def test_load_rejects_bad_files(tmp_path):
    import json

    spec = json.loads(DATA.read_text())
    bad = dict(spec, n=4)
    (tmp_path / "a.json").write_text(json.dumps(bad))
    with pytest.raises(ValueError):
        load_conformal_data(tmp_path / "a.json")
    bad = dict(spec, h=spec["h"][:-1])
    (tmp_path / "b.json").write_text(json.dumps(bad))
    with pytest.raises(ValueError):
        load_conformal_data(tmp_path / "b.json")


# ---------------------------------------------------------------------------
# transported metrics


def test_zero_generator_leaves_metric(rng):
    m = ads_schwarzschild_half(1.0)
    zeta = decaying_field(3, rotation=0.0, dilation=0.0)
    moved = pushforward(m, DiffeoSpec(zeta, 3.0))
    Y = upper_points(rng, 10, 3, 3.0, 10.0)
    assert np.max(np.abs(moved.e(Y) - m.e(Y))) < 1e-12


def test_identity_isometry_pullback(rng):
    m = ads_schwarzschild_half(1.0)
    Y = upper_points(rng, 10, 3, 3.0, 10.0)
    assert np.max(np.abs(isometry_pullback(m, IsometryElement.identity(3)).e(Y) - m.e(Y))) < 1e-12


def test_non_tangent_generator_rejected():
    def zeta(Y):
        out = np.zeros_like(Y)
        out[..., -1] = 1.0 / (1.0 + np.sum(Y * Y, -1)) ** 2
        return out

    with pytest.raises(GeometryError):
        pushforward(reference(3), DiffeoSpec(zeta, 3.0))
    with pytest.raises(ValueError):
        decaying_field(3, plane=(0, 2))


def test_pushforward_preserves_scalar_curvature(rng):
    m = ads_schwarzschild_half(1.0)
    moved = pushforward(m, DiffeoSpec(decaying_field(3), 3.0))
    Y = upper_points(rng, 6, 3, 3.0, 8.0)
    assert np.max(np.abs(curvature(moved, Y)["scalar_excess"])) < 1e-5


def test_transported_reference_is_einstein(rng):
    m = transported_reference(3)
    Y = upper_points(rng, 10, 3, 0.5, 5.0)
    assert np.max(np.abs(m.e(Y))) > 1e-4
    assert np.max(np.abs(curvature(m, Y)["einstein_hat"])) < 1e-6


@pytest.mark.parametrize("factory", [
    lambda: ads_schwarzschild_half(1.0),
    lambda: trace_perturbation(RadialProfile("power", 1.0, 3.0)),
    lambda: transported_reference(3),
    lambda: conformally_compact(ConformallyCompactData(3, h=round_sphere(1.0))),
])
def test_zoo_metrics_pass_decay_validation(factory):
    res = validate_decay(factory())
    assert res["ok"]


def test_smooth_profile_is_complete():
    m = trace_perturbation(RadialProfile("smooth", 0.5, 3.0))
    assert m.radial_extent == 0.0
    assert np.allclose(m.e(np.zeros((1, 3))), 0.5 * np.eye(3))
    assert trace_perturbation(RadialProfile("power", 0.5, 3.0)).radial_extent == 1.0
