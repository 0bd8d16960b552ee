"""Asymptotically hyperbolic metrics with boundary whose mass is known or checkable."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import factorial
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import brentq

from .geometry import (
    Chart,
    GeometryError,
    MetricField,
    background,
    fd_jet,
    validate_decay,
    zero_perturbation,
)
from .reference import IsometryElement

HORIZON_MARGIN = 0.1
FLOW_STEP = 1e-2


def reference(n: int = 3, model: Chart = Chart.POLAR) -> MetricField:
    model = Chart(model)
    if model not in (Chart.POLAR, Chart.BALL):
        raise GeometryError(f"no reference model in chart {model}")
    return MetricField(dim=n, chart=model, perturbation=zero_perturbation, name=f"reference-{model.value}")


def _radial_dyad(Y):
    r = np.linalg.norm(Y, axis=-1)
    u = Y / r[..., None]
    return r, u[..., :, None] * u[..., None, :]


# ---------------------------------------------------------------------------
# AdS-Schwarzschild


def horizon_radius(mbar: float, n: int) -> float:
    """Largest zero of 1 + r^2 - 2 mbar r^(2-n)."""
    if mbar < 0:
        raise ValueError("mass parameter must be non-negative")
    if mbar == 0:
        return 0.0
    f = lambda r: 1.0 + r * r - 2.0 * mbar * r ** (2 - n)
    return brentq(f, 1e-12, max(2.0, (2.0 * mbar) ** (1.0 / (n - 2)) + 1.0), xtol=1e-15)


def ads_schwarzschild_half(mbar: float, n: int = 3) -> MetricField:
    """dr^2 / (1 + r^2 - 2 mbar r^(2-n)) + r^2 h_0 on the half-space.

    In POLAR components the perturbation is ``delta(r) dr (x) dr``.  Points
    with ``r < r_h + 0.1`` are refused.
    """
    rh = horizon_radius(mbar, n)
    rmin = rh + HORIZON_MARGIN if mbar > 0 else 0.0

    def pert(Y):
        Y = np.asarray(Y, float)
        r, uu = _radial_dyad(Y)
        if mbar > 0 and np.any(r < rmin):
            raise GeometryError(f"radius below the horizon margin r_h + {HORIZON_MARGIN} = {rmin:.6g}")
        if mbar == 0:
            return np.zeros(Y.shape + (n,))
        a = 1.0 + r * r
        delta = 2.0 * mbar * r ** (2 - n) / (a * (a - 2.0 * mbar * r ** (2 - n)))
        # dr = (y/r).dy, and dr (x) dr has coefficient 1/(1+r^2) in b
        return delta[..., None, None] * uu

    return MetricField(dim=n, perturbation=pert, tau=float(n) if mbar > 0 else float("inf"),
                       radial_extent=rmin, name=f"ads-schwarzschild(m={mbar:g},n={n})",
                       meta={"mbar": mbar, "horizon": rh})


# ---------------------------------------------------------------------------
# Trace perturbations g = (1 + f(r)) b


@dataclass(frozen=True)
class RadialProfile:
    """``power``: amp * r^-p (singular at 0, so only an end r >= 1).

    ``smooth``: amp * (1 + r^2)^(-p/2), defined on the whole half-space.
    ``bump``: smooth bump supported in (r0, r1).
    """

    kind: str = "power"
    amplitude: float = 1.0
    power: float = 3.0
    r0: float = 10.0
    r1: float = 20.0

    def __call__(self, r):
        r = np.asarray(r, float)
        if self.kind == "power":
            return self.amplitude * r ** (-self.power)
        if self.kind == "smooth":
            return self.amplitude * (1.0 + r * r) ** (-self.power / 2)
        if self.kind == "bump":
            s = (r - self.r0) / (self.r1 - self.r0)
            inside = (s > 0) & (s < 1)
            out = np.zeros_like(r)
            si = s[inside]
            out[inside] = self.amplitude * np.exp(-1.0 / si - 1.0 / (1.0 - si) + 4.0)
            return out
        raise ValueError(f"unknown profile kind {self.kind!r}")

    @property
    def tau(self) -> float:
        return self.power if self.kind in ("power", "smooth") else float("inf")

    @property
    def complete(self) -> bool:
        return self.kind != "power"


def trace_perturbation(profile: RadialProfile | Callable, n: int = 3, tau: Optional[float] = None,
                       validate: bool = True) -> MetricField:
    """g = b + f(r) b."""
    f = profile
    if tau is None:
        tau = getattr(profile, "tau", None)
        if tau is None:
            raise ValueError("a decay rate is required for a callable profile")
    if np.isfinite(tau) and tau <= n / 2:
        raise ValueError(f"decay rate {tau} does not exceed n/2")
    bg = background(Chart.POLAR)

    def pert(Y):
        Y = np.asarray(Y, float)
        r = np.linalg.norm(Y, axis=-1)
        return np.asarray(f(r))[..., None, None] * bg.metric(Y)

    extent = 0.0 if getattr(profile, "complete", False) else 1.0
    m = MetricField(dim=n, perturbation=pert, tau=float(tau), radial_extent=extent,
                    name=f"trace({getattr(profile, 'kind', 'custom')})")
    if validate and np.isfinite(tau):
        res = validate_decay(m)
        if not res["ok"]:
            raise GeometryError(f"profile fails decay validation (slope {res['slope']:.3f})")
    return m


# ---------------------------------------------------------------------------
# Conformally compact metrics


def collar_to_radius(t):
    """Polar radius of the model for the collar coordinate: r = 1 / sinh t."""
    return 1.0 / np.sinh(np.asarray(t, float))


def radius_to_collar(r):
    return np.arcsinh(1.0 / np.asarray(r, float))


@dataclass(frozen=True)
class ConformallyCompactData:
    """``g = sinh^-2(t) (dt^2 + h_0 + t^n/n! h + k)`` near the face at infinity.

    ``h(omega)`` and ``k(t, omega)`` return ambient ``n x n`` matrices on the
    unit hemisphere; only their restriction to the tangent space of the sphere
    enters.  ``k_bound`` certifies ``|k| <= k_bound * t^(n+1)``.
    """

    dim: int
    h: Optional[Callable] = None
    k: Optional[Callable] = None
    t_max: float = 0.5
    k_bound: float = np.inf
    name: str = "conformally-compact"

    def validate(self, samples: int = 64, seed: int = 0):
        n = self.dim
        rng = np.random.default_rng(seed)
        om = rng.normal(size=(samples, n))
        om[:, -1] = np.abs(om[:, -1])
        om /= np.linalg.norm(om, axis=1, keepdims=True)
        if self.h is not None:
            H = np.asarray(self.h(om))
            if np.max(np.abs(H - np.swapaxes(H, -1, -2))) > 1e-12:
                raise GeometryError("h is not symmetric")
        if self.k is not None:
            ts = self.t_max * 2.0 ** -np.arange(1, 6)
            ratios = []
            for t in ts:
                K = np.asarray(self.k(np.full(samples, t), om))
                if np.max(np.abs(K - np.swapaxes(K, -1, -2))) > 1e-12:
                    raise GeometryError("k is not symmetric")
                ratios.append(np.max(np.abs(K)) / t ** (n + 1))
            ratios = np.asarray(ratios)
            # o(t^(n+1)): the ratio must shrink as t -> 0
            if np.any(ratios > self.k_bound) or (ratios[0] > 0 and ratios[-1] > ratios[0] * (1 - 1e-6)):
                raise GeometryError("remainder k is not o(t^(n+1)) on the sample grid")
        return self


def conformally_compact(data: ConformallyCompactData) -> MetricField:
    """POLAR components of the conformally compact metric, re-charted by r = 1/sinh t.

    With ``P = I - omega omega^T`` a sphere tensor ``A`` contributes
    ``r^2 A(d omega, d omega) = P A P`` in POLAR components, so
    ``e = P (t^n/n! h + k) P``.
    """
    data.validate()
    n = data.dim
    c = 1.0 / factorial(n)
    r_min = float(collar_to_radius(data.t_max))

    def pert(Y):
        Y = np.asarray(Y, float)
        r = np.linalg.norm(Y, axis=-1)
        om = Y / r[..., None]
        t = radius_to_collar(r)
        A = np.zeros(Y.shape + (n,))
        if data.h is not None:
            A = A + (c * t ** n)[..., None, None] * np.asarray(data.h(om))
        if data.k is not None:
            A = A + np.asarray(data.k(t, om))
        P = np.eye(n) - om[..., :, None] * om[..., None, :]
        return P @ A @ P

    tau = float(n) if (data.h is not None or data.k is not None) else float("inf")
    return MetricField(dim=n, perturbation=pert, tau=tau, radial_extent=r_min, name=data.name,
                       meta={"t_max": data.t_max})


def _sym_from_six(v):
    v = np.asarray(v, float)
    out = np.empty(v.shape[:-1] + (3, 3))
    idx = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    for c, (i, j) in enumerate(idx):
        out[..., i, j] = v[..., c]
        out[..., j, i] = v[..., c]
    return out


def _grid_interpolant(lat, lon, values):
    """Spline in (latitude, longitude) for each of the six components; periodic in longitude."""
    values = np.asarray(values, float)
    lon_ext = np.concatenate([lon - 2 * np.pi, lon, lon + 2 * np.pi])
    vals_ext = np.concatenate([values, values, values], axis=1)
    splines = [RectBivariateSpline(lat, lon_ext, vals_ext[..., c]) for c in range(6)]

    def evaluate(om):
        om = np.asarray(om, float)
        psi = np.arcsin(np.clip(om[..., 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(om[..., 1], om[..., 0]), 2 * np.pi)
        comps = np.stack([s.ev(psi.ravel(), phi.ravel()).reshape(psi.shape) for s in splines], axis=-1)
        return _sym_from_six(comps)

    return evaluate


def load_conformal_data(path) -> ConformallyCompactData:
    """Read a JSON conformal-infinity file (three dimensions; see README for the format)."""
    spec = json.loads(Path(path).read_text())
    n = int(spec["n"])
    if n != 3:
        raise ValueError("data files describe three-dimensional metrics only")
    lat = np.asarray(spec["latitude"], float)
    lon = np.asarray(spec["longitude"], float)
    shape = (len(lat), len(lon), 6)
    h = k = None
    if spec.get("h") is not None:
        hv = np.asarray(spec["h"], float)
        if hv.shape != shape:
            raise ValueError(f"h has shape {hv.shape}, expected {shape}")
        h = _grid_interpolant(lat, lon, hv)
    if spec.get("k") is not None:
        kv = np.asarray(spec["k"], float)
        if kv.shape != shape:
            raise ValueError(f"k has shape {kv.shape}, expected {shape}")
        kb = _grid_interpolant(lat, lon, kv)
        p = float(spec.get("k_power", n + 2))

        def k(t, om):
            return np.asarray(t, float)[..., None, None] ** p * kb(om)
    return ConformallyCompactData(
        dim=n, h=h, k=k, t_max=float(spec.get("t_max", 0.5)),
        k_bound=float(spec.get("k_bound", np.inf)), name=spec.get("name", Path(path).stem),
    )


# ---------------------------------------------------------------------------
# Transported metrics


def _polar_metric_difference(Y, disp):
    """b(y + d) - b(y) in POLAR components without cancellation."""
    wy = 1.0 + np.sum(Y * Y, axis=-1)
    Z = Y + disp
    wz = 1.0 + np.sum(Z * Z, axis=-1)
    dw = (2.0 * np.sum(Y * disp, axis=-1) + np.sum(disp * disp, axis=-1)) / (wy * wz)
    outer = lambda a, c: a[..., :, None] * c[..., None, :]
    return dw[..., None, None] * outer(Y, Y) - (outer(Y, disp) + outer(disp, Y) + outer(disp, disp)) / wz[..., None, None]


def pull_back(m: MetricField, disp: Callable, dmap: Optional[Callable], name: str,
              tau: Optional[float] = None) -> MetricField:
    """Perturbation of ``F^* g`` for ``F(y) = y + disp(y)`` with ``DF = I + dmap(y)``.

    With ``dmap`` None, ``disp`` returns the pair ``(displacement, DF - I)``.

    Assembled as ``J^T (b(F) - b) J + (D^T b + b D + D^T b D) + J^T e(F) J`` so
    that no O(1) entries are subtracted to produce a decaying one.
    """
    if m.chart is not Chart.POLAR:
        raise GeometryError("pull-backs are implemented in the POLAR chart")
    bg = m.background

    def pert(Y):
        Y = np.asarray(Y, float)
        d, D = disp(Y) if dmap is None else (disp(Y), dmap(Y))
        J = np.eye(Y.shape[-1]) + D
        Jt = np.swapaxes(J, -1, -2)
        Dt = np.swapaxes(D, -1, -2)
        b = bg.metric(Y)
        out = Jt @ (_polar_metric_difference(Y, d) + m.e(Y + d)) @ J
        return out + Dt @ b + b @ D + Dt @ b @ D

    return MetricField(dim=m.dim, chart=m.chart, perturbation=pert,
                       tau=m.tau if tau is None else min(tau, m.tau),
                       radial_extent=m.radial_extent, name=name, meta=dict(m.meta))


def isometry_pullback(m: MetricField, iso: IsometryElement) -> MetricField:
    """The metric in the chart composed with a model isometry: J^T e(I y) J."""
    iso.validate()
    if m.chart is not Chart.POLAR:
        raise GeometryError("isometries act in the POLAR chart")

    def pert(Y):
        Y = np.asarray(Y, float)
        J = iso.jacobian(Y)
        return np.swapaxes(J, -1, -2) @ m.e(iso.apply(Y)) @ J

    return MetricField(dim=m.dim, chart=m.chart, perturbation=pert, tau=m.tau,
                       radial_extent=m.radial_extent, name=f"{m.name}@iso", meta=dict(m.meta))


@dataclass(frozen=True)
class DiffeoSpec:
    """Generator ``zeta`` of ``F = exp(zeta)``, with decay rate and tangency flag."""

    field: Callable
    tau: float
    tangent: bool = True
    step: float = FLOW_STEP

    def validate(self, n: int, samples: int = 64, seed: int = 0):
        rng = np.random.default_rng(seed)
        d = rng.normal(size=(samples, n))
        d[:, -1] = 0.0
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        for r in (10.0, 40.0):
            Z = np.asarray(self.field(r * d))
            if self.tangent and np.max(np.abs(Z[:, -1])) > 1e-12:
                raise GeometryError("generator is not tangent to the boundary face")
        return self


def decaying_field(n: int, tau: float = 3.0, rotation: float = 0.3, dilation: float = 0.2,
                   plane: tuple = (0, 1)) -> Callable:
    """A boundary-tangent field with b-norm of order r^-tau.

    ``phi(r) (rotation * A y + dilation * y)`` with ``A`` a rotation generator
    in a plane of the first ``n - 1`` coordinates and
    ``phi = (1 + r^2)^(-(tau + 1)/2)``.
    """
    i, j = plane
    if max(i, j) >= n - 1:
        raise ValueError("rotation plane must avoid the normal coordinate")

    def zeta(Y):
        Y = np.asarray(Y, float)
        phi = (1.0 + np.sum(Y * Y, axis=-1)) ** (-(tau + 1) / 2)
        Z = dilation * Y.copy()
        Z[..., i] -= rotation * Y[..., j]
        Z[..., j] += rotation * Y[..., i]
        return phi[..., None] * Z

    return zeta


def _geodesic_rhs(x, v):
    """POLAR geodesic equation: y'' = b(y', y') y, since Gamma^k_ij = -y^k b_ij."""
    w = 1.0 + np.sum(x * x, axis=-1)
    xv = np.sum(x * v, axis=-1)
    s = np.sum(v * v, axis=-1) - xv * xv / w
    return s[..., None] * x, (w, xv, s)


def geodesic_flow(Y, V, step: float = FLOW_STEP, with_jacobian: bool = False, dV=None):
    """Time-one map of the b-geodesic flow from ``(Y, V)`` in POLAR components, by fixed-step RK4.

    Returns the displacement ``x(1) - y`` (integrated directly, so small
    displacements keep full relative precision).  With ``with_jacobian`` the
    variational equations run alongside, seeded by
    ``dV[..., a, k] = d V^k / d y_a``, and ``D[..., k, a] = d x^k / d y_a - delta``
    is returned as well.
    """
    Y = np.asarray(Y, float)
    n = Y.shape[-1]
    steps = max(1, int(round(1.0 / step)))
    h = 1.0 / steps

    def rk4(state, rhs):
        k1 = rhs(*state)
        k2 = rhs(*[a + 0.5 * h * b for a, b in zip(state, k1)])
        k3 = rhs(*[a + 0.5 * h * b for a, b in zip(state, k2)])
        k4 = rhs(*[a + h * b for a, b in zip(state, k3)])
        return [a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(state, k1, k2, k3, k4)]

    if not with_jacobian:
        def rhs(d, v):
            return v, _geodesic_rhs(Y + d, v)[0]

        state = [np.zeros_like(Y), np.asarray(V, float)]
        for _ in range(steps):
            state = rk4(state, rhs)
        return state[0]

    def rhs_full(d, v, D, K):
        x = Y + d
        acc, (w, xv, s) = _geodesic_rhs(x, v)
        J = D + np.eye(n)
        # variations of x and v along each seed direction a
        dxv = np.einsum("...k,...ka->...a", v, J) + np.einsum("...k,...ka->...a", x, K)
        dw = 2.0 * np.einsum("...k,...ka->...a", x, J)
        ds = (2.0 * np.einsum("...k,...ka->...a", v, K) - 2.0 * (xv / w)[..., None] * dxv
              + (xv * xv / (w * w))[..., None] * dw)
        dK = s[..., None, None] * J + x[..., :, None] * ds[..., None, :]
        return v, acc, K, dK

    K0 = np.swapaxes(np.asarray(dV, float), -1, -2)  # K[k, a] = d v^k / d y_a
    state = [np.zeros_like(Y), np.asarray(V, float), np.zeros(Y.shape + (n,)), K0]
    for _ in range(steps):
        state = rk4(state, rhs_full)
    return state[0], state[2]


def pushforward(m: MetricField, d: DiffeoSpec) -> MetricField:
    """The metric read in the chart composed with ``F = exp(zeta)``: components of ``F^* g``.

    ``F`` is the time-one b-geodesic flow of ``zeta``; its Jacobian comes from
    the variational equations, seeded by a central difference of ``zeta``.
    """
    if m.chart is not Chart.POLAR:
        raise GeometryError("pushforward is implemented in the POLAR chart")
    d.validate(m.dim)

    def flow(Y):
        z, dz, _ = fd_jet(d.field, Y, order=1)
        return geodesic_flow(Y, z, d.step, with_jacobian=True, dV=dz)

    return pull_back(m, flow, None, name=f"{m.name}@exp", tau=d.tau)


def transported_reference(n: int = 3, tau: float = 3.0, rotation: float = 0.3, dilation: float = 0.2) -> MetricField:
    """``F^* b`` for the explicit map ``F(y) = y + zeta(y)`` with analytic Jacobian.

    Locally isometric to the model, hence Einstein with ``Ric = -(n-1) g``.
    """
    zeta = decaying_field(n, tau, rotation, dilation)
    A = dilation * np.eye(n)
    A[0, 1] -= rotation
    A[1, 0] += rotation

    def dmap(Y):
        Y = np.asarray(Y, float)
        s = 1.0 + np.sum(Y * Y, axis=-1)
        phi = s ** (-(tau + 1) / 2)
        dphi = -(tau + 1) * s ** (-(tau + 3) / 2)  # d phi / d y = dphi * y
        Ay = np.einsum("ij,...j->...i", A, Y)
        return phi[..., None, None] * A + dphi[..., None, None] * Ay[..., :, None] * Y[..., None, :]

    return pull_back(reference(n), zeta, dmap, name=f"transported-reference(n={n})", tau=tau)
