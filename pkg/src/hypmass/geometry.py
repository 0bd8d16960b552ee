"""Charts, metric fields and numerical tensor calculus on the hyperbolic half-space.

Every metric is stored as a background (the model metric of its chart) plus a
perturbation ``e`` that is evaluated directly, never as ``g - b``.  Connection
and curvature are assembled from b-covariant derivatives of ``e`` through the
difference tensor ``C = Gamma_g - Gamma_b``, so small perturbations at large
radius keep full relative precision.

Array conventions
-----------------
Points are arrays ``Y`` of shape ``(..., n)``.  A covariant 2-tensor is
``(..., n, n)``.  Coordinate derivatives put the derivative index first:
``de[..., a, i, j] = d_a e_ij`` and ``dde[..., a, b, i, j]``.  Christoffel
symbols are ``G[..., k, i, j] = Gamma^k_ij`` and the Riemann tensor is
``R[..., l, k, i, j] = R^l_{kij}`` with ``R(d_i, d_j) d_k = R^l_{kij} d_l``.

In the POLAR chart a point is stored by its hyperboloid coordinates
``y = r * omega`` (so ``x = (sqrt(1 + |y|^2), y)``); the boundary face is
``y_n = 0``.  In the BALL chart it is ``x'`` with ``|x'| < 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

FD_STEP1 = 1e-5
FD_STEP2 = 1e-4
ANGLE_MARGIN = 1e-3


class Chart(str, enum.Enum):
    POLAR = "polar"
    BALL = "ball"
    GENERIC = "generic"


class GeometryError(ValueError):
    """Raised for points outside a chart domain or degenerate metric data."""


@dataclass(frozen=True)
class ChartPoint:
    """A point (or a batch of points along the leading axes) in a named chart."""

    chart: Chart
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        object.__setattr__(self, "chart", Chart(self.chart))

    @classmethod
    def polar(cls, r, omega) -> "ChartPoint":
        omega = np.asarray(omega, dtype=float)
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise GeometryError("polar radius must be positive")
        if np.any(np.abs(np.linalg.norm(omega, axis=-1) - 1.0) > 1e-12):
            raise GeometryError("omega must be a unit vector")
        if np.any(omega[..., -1] < 0):
            raise GeometryError("omega_n must be non-negative")
        return cls(Chart.POLAR, r[..., None] * omega)

    @classmethod
    def ball(cls, x) -> "ChartPoint":
        p = cls(Chart.BALL, x)
        p.validate()
        return p

    @property
    def dim(self) -> int:
        return self.coords.shape[-1]

    @property
    def r(self) -> np.ndarray:
        return np.linalg.norm(self.coords, axis=-1)

    @property
    def omega(self) -> np.ndarray:
        return self.coords / self.r[..., None]

    def on_boundary(self, tol: float = 1e-12) -> np.ndarray:
        return np.abs(self.coords[..., -1]) <= tol

    def validate(self) -> "ChartPoint":
        c = self.coords
        if self.chart is Chart.POLAR:
            if np.any(np.linalg.norm(c, axis=-1) <= 0):
                raise GeometryError("polar point at the origin has no direction")
            if np.any(c[..., -1] < -1e-12):
                raise GeometryError("point below the boundary face y_n = 0")
        elif self.chart is Chart.BALL:
            if np.any(np.linalg.norm(c, axis=-1) >= 1.0):
                raise GeometryError("ball point must satisfy |x'| < 1")
            if np.any(c[..., -1] < -1e-12):
                raise GeometryError("point below the boundary face x'_n = 0")
        return self


PointLike = Union[ChartPoint, np.ndarray]


def as_array(p: PointLike) -> np.ndarray:
    if isinstance(p, ChartPoint):
        return p.coords
    return np.asarray(p, dtype=float)


# ---------------------------------------------------------------------------
# Backgrounds: analytic model metrics of each chart


class Background:
    """Analytic metric with known connection and curvature."""

    chart: Chart
    curvature_constant: float = 0.0

    def metric(self, Y):
        raise NotImplementedError

    def inverse(self, Y):
        raise NotImplementedError

    def christoffel(self, Y):
        raise NotImplementedError

    def dchristoffel(self, Y):
        raise NotImplementedError

    def frame(self, Y):
        """Columns form a background-orthonormal frame."""
        raise NotImplementedError

    def riemann(self, Y):
        g = self.metric(Y)
        n = Y.shape[-1]
        eye = np.broadcast_to(np.eye(n), g.shape)
        k = self.curvature_constant
        # R^l_{kij} = K (delta^l_i g_jk - delta^l_j g_ik)
        return k * (np.einsum("...li,...jk->...lkij", eye, g) - np.einsum("...lj,...ik->...lkij", eye, g))

    def ricci(self, Y):
        n = Y.shape[-1]
        return self.curvature_constant * (n - 1) * self.metric(Y)

    def scalar(self, Y):
        n = Y.shape[-1]
        return np.full(Y.shape[:-1], self.curvature_constant * n * (n - 1))


class HyperboloidBackground(Background):
    """b = |dy|^2 - (y.dy)^2 / (1 + |y|^2), the hyperboloid metric in y = r*omega."""

    chart = Chart.POLAR
    curvature_constant = -1.0

    def metric(self, Y):
        Y = np.asarray(Y, float)
        n = Y.shape[-1]
        f2 = 1.0 + np.sum(Y * Y, axis=-1)
        return np.eye(n) - Y[..., :, None] * Y[..., None, :] / f2[..., None, None]

    def inverse(self, Y):
        n = Y.shape[-1]
        return np.eye(n) + Y[..., :, None] * Y[..., None, :]

    def christoffel(self, Y):
        # Gamma^k_ij = -y_k b_ij
        return -Y[..., :, None, None] * self.metric(Y)[..., None, :, :]

    def dchristoffel(self, Y):
        n = Y.shape[-1]
        b = self.metric(Y)
        f2 = (1.0 + np.sum(Y * Y, axis=-1))[..., None, None, None]
        eye = np.eye(n)
        # db[m, i, j] = -(d_mi y_j + y_i d_mj)/f^2 + 2 y_i y_j y_m / f^4
        db = (
            -(eye[:, :, None] * Y[..., None, None, :] + Y[..., None, :, None] * eye[:, None, :]) / f2
            + 2.0 * Y[..., None, :, None] * Y[..., None, None, :] * Y[..., :, None, None] / f2**2
        )
        term1 = -np.einsum("km,...ij->...mkij", eye, b)
        term2 = -Y[..., None, :, None, None] * db[..., :, None, :, :]
        return term1 + term2

    def frame(self, Y):
        n = Y.shape[-1]
        s = np.sqrt(1.0 + np.sum(Y * Y, axis=-1))
        return np.eye(n) + Y[..., :, None] * Y[..., None, :] / (s + 1.0)[..., None, None]

    def frame_inverse(self, Y):
        n = Y.shape[-1]
        s = np.sqrt(1.0 + np.sum(Y * Y, axis=-1))
        return np.eye(n) - Y[..., :, None] * Y[..., None, :] / (s * (s + 1.0))[..., None, None]


class BallBackground(Background):
    """b_hat = omega^-2 delta with omega = (1 - |x|^2)/2."""

    chart = Chart.BALL
    curvature_constant = -1.0

    @staticmethod
    def conformal_factor(Y):
        return 0.5 * (1.0 - np.sum(Y * Y, axis=-1))

    def metric(self, Y):
        n = Y.shape[-1]
        w = self.conformal_factor(Y)
        return np.eye(n) / (w * w)[..., None, None]

    def inverse(self, Y):
        n = Y.shape[-1]
        w = self.conformal_factor(Y)
        return np.eye(n) * (w * w)[..., None, None]

    def christoffel(self, Y):
        n = Y.shape[-1]
        eye = np.eye(n)
        p = Y / self.conformal_factor(Y)[..., None]
        return (
            np.einsum("ki,...j->...kij", eye, p)
            + np.einsum("kj,...i->...kij", eye, p)
            - np.einsum("ij,...k->...kij", eye, p)
        )

    def dchristoffel(self, Y):
        n = Y.shape[-1]
        eye = np.eye(n)
        w = self.conformal_factor(Y)[..., None, None]
        dp = eye / w + Y[..., :, None] * Y[..., None, :] / (w * w)  # dp[m, i], symmetric
        return (
            np.einsum("ki,...mj->...mkij", eye, dp)
            + np.einsum("kj,...mi->...mkij", eye, dp)
            - np.einsum("ij,...mk->...mkij", eye, dp)
        )

    def frame(self, Y):
        n = Y.shape[-1]
        return np.eye(n) * self.conformal_factor(Y)[..., None, None]

    def frame_inverse(self, Y):
        n = Y.shape[-1]
        return np.eye(n) / self.conformal_factor(Y)[..., None, None]


class FlatBackground(Background):
    """Euclidean background for metrics given in arbitrary coordinates."""

    chart = Chart.GENERIC
    curvature_constant = 0.0

    def metric(self, Y):
        n = Y.shape[-1]
        return np.broadcast_to(np.eye(n), Y.shape[:-1] + (n, n)).copy()

    inverse = metric

    def christoffel(self, Y):
        n = Y.shape[-1]
        return np.zeros(Y.shape[:-1] + (n, n, n))

    def dchristoffel(self, Y):
        n = Y.shape[-1]
        return np.zeros(Y.shape[:-1] + (n, n, n, n))

    def frame(self, Y):
        return self.metric(Y)

    frame_inverse = frame


BACKGROUNDS = {
    Chart.POLAR: HyperboloidBackground(),
    Chart.BALL: BallBackground(),
    Chart.GENERIC: FlatBackground(),
}


def background(chart: Chart) -> Background:
    return BACKGROUNDS[Chart(chart)]


# ---------------------------------------------------------------------------
# Metric fields


Evaluator = Callable[[np.ndarray], np.ndarray]


def zero_perturbation(Y):
    Y = np.asarray(Y, float)
    n = Y.shape[-1]
    return np.zeros(Y.shape[:-1] + (n, n))


@dataclass(frozen=True)
class MetricField:
    """A metric ``g = b + e`` in a named chart.

    ``perturbation`` evaluates ``e`` directly.  ``derivs`` may return the
    analytic pair ``(de, dde)``; otherwise finite differences are used.
    ``tau`` is the claimed decay rate (``inf`` for the model itself) and
    ``radial_extent`` the radius beyond which the claim is made.
    """

    dim: int
    chart: Chart = Chart.POLAR
    perturbation: Evaluator = zero_perturbation
    tau: float = float("inf")
    radial_extent: float = 0.0
    name: str = "metric"
    derivs: Optional[Callable[[np.ndarray], tuple]] = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def background(self) -> Background:
        return background(self.chart)

    def e(self, Y) -> np.ndarray:
        return self.perturbation(np.asarray(Y, float))

    def components(self, p: PointLike) -> np.ndarray:
        Y = as_array(p)
        return self.background.metric(Y) + self.e(Y)

    def with_perturbation(self, perturbation, name=None, **kw) -> "MetricField":
        return MetricField(
            dim=self.dim,
            chart=self.chart,
            perturbation=perturbation,
            tau=kw.get("tau", self.tau),
            radial_extent=kw.get("radial_extent", self.radial_extent),
            name=name or self.name,
            derivs=kw.get("derivs"),
            meta=kw.get("meta", {}),
        )


def scaled(m: MetricField, s: float) -> MetricField:
    """The metric ``b + s*e``."""
    def pert(Y):
        return s * m.e(Y)

    derivs = None
    if m.derivs is not None:
        def derivs(Y):
            de, dde = m.derivs(Y)
            return s * de, (None if dde is None else s * dde)
    return m.with_perturbation(pert, name=f"{m.name}*{s:g}", derivs=derivs)


# ---------------------------------------------------------------------------
# Finite differences


def _stack_eval(func, Y, shifts):
    """Evaluate ``func`` on ``Y + shift`` for every shift in one call."""
    pts = np.stack([Y + d for d in shifts])
    flat = pts.reshape(-1, Y.shape[-1])
    out = np.asarray(func(flat))
    return out.reshape((len(shifts),) + Y.shape[:-1] + out.shape[1:])


def fd_jet(func: Evaluator, Y, order: int = 1):
    """Value and coordinate derivatives of a tensor-valued evaluator.

    First derivatives use central differences with step
    ``FD_STEP1 * (1 + |y_a|)``; second derivatives use the five-point stencil
    (pure) and the four-point cross stencil (mixed) with ``FD_STEP2``.
    Returns ``(f, df, ddf)`` with ``ddf`` None when ``order == 1``.
    """
    Y = np.asarray(Y, float)
    n = Y.shape[-1]
    h1 = FD_STEP1 * (1.0 + np.abs(Y))
    shifts = [np.zeros_like(Y)]
    for a in range(n):
        d = np.zeros_like(Y)
        d[..., a] = h1[..., a]
        shifts += [d, -d]
    if order >= 2:
        h2 = FD_STEP2 * (1.0 + np.abs(Y))
        for a in range(n):
            d = np.zeros_like(Y)
            d[..., a] = h2[..., a]
            shifts += [d, -d, 2 * d, -2 * d]
        for a in range(n):
            for b in range(a + 1, n):
                da = np.zeros_like(Y)
                db = np.zeros_like(Y)
                da[..., a] = h2[..., a]
                db[..., b] = h2[..., b]
                shifts += [da + db, da - db, -da + db, -da - db]
    vals = _stack_eval(func, Y, shifts)
    f0 = vals[0]
    extra = f0.ndim - Y.ndim + 1  # number of tensor axes
    expand = (Ellipsis,) + (None,) * extra

    df = np.empty(Y.shape[:-1] + (n,) + f0.shape[Y.ndim - 1:])
    for a in range(n):
        num = vals[1 + 2 * a] - vals[2 + 2 * a]
        df[(Ellipsis, a) + (slice(None),) * extra] = num / (2.0 * h1[..., a][expand])
    if order < 2:
        return f0, df, None

    base = 1 + 2 * n
    ddf = np.empty(Y.shape[:-1] + (n, n) + f0.shape[Y.ndim - 1:])
    sl = (slice(None),) * extra
    for a in range(n):
        p1, m1, p2, m2 = vals[base + 4 * a: base + 4 * a + 4]
        h = h2[..., a][expand]
        ddf[(Ellipsis, a, a) + sl] = (-p2 + 16 * p1 - 30 * f0 + 16 * m1 - m2) / (12.0 * h * h)
    idx = base + 4 * n
    for a in range(n):
        for b in range(a + 1, n):
            pp, pm, mp, mm = vals[idx: idx + 4]
            idx += 4
            val = (pp - pm - mp + mm) / (4.0 * h2[..., a][expand] * h2[..., b][expand])
            ddf[(Ellipsis, a, b) + sl] = val
            ddf[(Ellipsis, b, a) + sl] = val
    return f0, df, ddf


def perturbation_jet(m: MetricField, Y, order: int = 1):
    """``(e, de, dde)`` of a metric's perturbation, analytic when available."""
    Y = np.asarray(Y, float)
    if m.derivs is not None:
        de, dde = m.derivs(Y)
        if order < 2 or dde is not None:
            return m.e(Y), de, (dde if order >= 2 else None)
    return fd_jet(m.e, Y, order)


# ---------------------------------------------------------------------------
# Covariant derivatives with respect to the background


def _cov1(G, e, de):
    """D1[a,b,c] = nabla_a e_bc."""
    return (
        de
        - np.einsum("...pab,...pc->...abc", G, e)
        - np.einsum("...pac,...bp->...abc", G, e)
    )


def _cov2(G, dG, e, de, dde, D1):
    """D2[m,a,b,c] = nabla_m nabla_a e_bc."""
    dD1 = (
        dde
        - np.einsum("...mpab,...pc->...mabc", dG, e)
        - np.einsum("...pab,...mpc->...mabc", G, de)
        - np.einsum("...mpac,...bp->...mabc", dG, e)
        - np.einsum("...pac,...mbp->...mabc", G, de)
    )
    return (
        dD1
        - np.einsum("...pma,...pbc->...mabc", G, D1)
        - np.einsum("...pmb,...apc->...mabc", G, D1)
        - np.einsum("...pmc,...abp->...mabc", G, D1)
    )


@dataclass
class Jet:
    """Background data and b-covariant derivatives of a perturbation at points."""

    Y: np.ndarray
    b: np.ndarray
    binv: np.ndarray
    G: np.ndarray
    e: np.ndarray
    D1: np.ndarray
    D2: Optional[np.ndarray] = None


def covariant_jet(bg: Background, func_or_metric, Y, order: int = 1) -> Jet:
    Y = np.asarray(Y, float)
    if isinstance(func_or_metric, MetricField):
        e, de, dde = perturbation_jet(func_or_metric, Y, order)
    else:
        e, de, dde = fd_jet(func_or_metric, Y, order)
    G = bg.christoffel(Y)
    D1 = _cov1(G, e, de)
    D2 = None
    if order >= 2:
        D2 = _cov2(G, bg.dchristoffel(Y), e, de, dde, D1)
    return Jet(Y, bg.metric(Y), bg.inverse(Y), G, e, D1, D2)


def _difference_tensor(jet: Jet):
    g = jet.b + jet.e
    ginv = np.linalg.inv(g)
    T = jet.D1 + np.swapaxes(jet.D1, -3, -2) - np.moveaxis(jet.D1, -3, -1)
    # T[i,j,l] = D1[i,j,l] + D1[j,i,l] - D1[l,i,j]
    C = 0.5 * np.einsum("...kl,...ijl->...kij", ginv, T)
    return g, ginv, T, C


# ---------------------------------------------------------------------------
# Operations


def christoffel(m: MetricField, p: PointLike) -> np.ndarray:
    """Gamma^k_ij of ``m`` at ``p`` (shape ``(..., n, n, n)``)."""
    Y = as_array(p)
    _check_domain(m, Y)
    jet = covariant_jet(m.background, m, Y, order=1)
    g, ginv, T, C = _difference_tensor(jet)
    _check_invertible(g)
    return jet.G + C


def curvature(m: MetricField, p: PointLike) -> dict:
    """Riemann (1,3), Ricci (0,2) and scalar curvature of ``m`` at ``p``.

    Besides the full tensors the result carries the cancellation-free
    excesses over the model: ``ricci_excess = Ric_g - Ric_b`` and
    ``scalar_excess = R_g - R_b`` (``R_g + n(n-1)`` for the hyperbolic charts),
    and the modified Einstein tensor
    ``einstein_hat = Ric_g - R_g g / 2 - (n-1)(n-2) g / 2``.
    """
    Y = as_array(p)
    _check_domain(m, Y)
    bg = m.background
    n = Y.shape[-1]
    jet = covariant_jet(bg, m, Y, order=2)
    g, ginv, T, C = _difference_tensor(jet)
    _check_invertible(g)
    D2 = jet.D2
    DT = D2 + np.swapaxes(D2, -3, -2) - np.moveaxis(D2, -3, -1)
    # DT[m,i,j,l] = D2[m,i,j,l] + D2[m,j,i,l] - D2[m,l,i,j]
    dginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, jet.D1, ginv)
    NC = 0.5 * np.einsum("...mkl,...ijl->...mkij", dginv, T) + 0.5 * np.einsum(
        "...kl,...mijl->...mkij", ginv, DT
    )
    # NC[m,l,j,k] = nabla_m C^l_jk
    dR = (
        np.einsum("...iljk->...lkij", NC)
        - np.einsum("...jlik->...lkij", NC)
        + np.einsum("...lip,...pjk->...lkij", C, C)
        - np.einsum("...ljp,...pik->...lkij", C, C)
    )
    dRic = np.einsum("...ikij->...kj", dR)
    dRic = 0.5 * (dRic + np.swapaxes(dRic, -1, -2))
    riemann = bg.riemann(Y) + dR
    ricci = bg.ricci(Y) + dRic
    kc = bg.curvature_constant
    if kc != 0.0:
        # Ric_b = K (n-1) b = K (n-1)(g - e)
        ric_model = kc * (n - 1) * g
        ric_dev = dRic - kc * (n - 1) * jet.e  # Ric_g - K(n-1) g
        scalar_excess = np.einsum("...ij,...ij->...", ginv, ric_dev)
    else:
        ric_model = np.zeros_like(g)
        ric_dev = ricci
        scalar_excess = np.einsum("...ij,...ij->...", ginv, ricci)
    scalar = kc * n * (n - 1) + scalar_excess
    # G_hat = Ric - R g/2 - (n-1)(n-2) g/2, written through deviations from K=-1 data
    if kc == -1.0:
        einstein_hat = ric_dev - 0.5 * scalar_excess[..., None, None] * g
    else:
        einstein_hat = ricci - 0.5 * scalar[..., None, None] * g - 0.5 * (n - 1) * (n - 2) * g
    return {
        "riemann": riemann,
        "ricci": ricci,
        "scalar": scalar,
        "ricci_excess": dRic,
        "scalar_excess": scalar_excess,
        "einstein_hat": einstein_hat,
        "metric": g,
        "metric_inverse": ginv,
        "model_ricci": ric_model,
    }


def modified_einstein(m: MetricField, p: PointLike) -> np.ndarray:
    return curvature(m, p)["einstein_hat"]


def boundary_geometry(m: MetricField, p: PointLike) -> dict:
    """Outward unit normal, second fundamental form and mean curvature on the face.

    ``Pi(X, Y) = g(nabla_X eta, Y)`` with ``eta`` the outward unit g-normal
    (pointing towards decreasing last coordinate), so convex faces have
    positive mean curvature and the model face has ``Pi = 0``.  ``Pi`` and the
    induced metric ``gamma`` are returned in the tangential coordinates
    ``(y_1, ..., y_{n-1})``.
    """
    Y = as_array(p)
    if np.any(np.abs(Y[..., -1]) > 1e-12):
        raise GeometryError("boundary_geometry requires points on the boundary face")
    Gam = christoffel(m, Y)
    g = m.components(Y)
    ginv = np.linalg.inv(g)
    n = Y.shape[-1]
    norm = np.sqrt(ginv[..., n - 1, n - 1])
    eta = -ginv[..., :, n - 1] / norm[..., None]
    Pi = Gam[..., n - 1, : n - 1, : n - 1] / norm[..., None, None]
    gamma = g[..., : n - 1, : n - 1]
    H = np.einsum("...ab,...ab->...", np.linalg.inv(gamma), Pi)
    return {"normal": eta, "second_fundamental_form": Pi, "mean_curvature": H, "induced_metric": gamma}


def frame_field(chart: Chart, p: PointLike) -> np.ndarray:
    """Background-orthonormal frame; column ``i`` is the vector f_i.

    On the boundary face the last column is ``-eta`` (the inward normal).
    """
    Y = as_array(p)
    return background(chart).frame(Y)


def lie_derivative_b(X: Callable, p: PointLike, chart: Chart = Chart.POLAR) -> np.ndarray:
    """(L_X b)_ij = X_{i;j} + X_{j;i} for a contravariant vector field evaluator."""
    Y = as_array(p)
    bg = background(chart)
    Xv, dX, _ = fd_jet(X, Y, order=1)  # dX[j, k] = d_j X^k
    G = bg.christoffel(Y)
    cov = dX + np.einsum("...kjl,...l->...jk", G, Xv)  # nabla_j X^k
    low = np.einsum("...ik,...jk->...ji", bg.metric(Y), cov)  # X_{i;j} stored [j, i]
    return low + np.swapaxes(low, -1, -2)


def _as_field(e):
    if isinstance(e, MetricField):
        return e.e, e.chart
    return e, None


def linearized_scalar(e, p: PointLike, chart: Chart = Chart.POLAR) -> np.ndarray:
    """Rdot_b e = div_b(div_b e - d tr_b e) + (n-1) tr_b e."""
    func, c = _as_field(e)
    chart = c or chart
    Y = as_array(p)
    n = Y.shape[-1]
    jet = covariant_jet(background(chart), func, Y, order=2)
    bi = jet.binv
    divdiv = np.einsum("...mi,...jk,...mkij->...", bi, bi, jet.D2)
    lap_tr = np.einsum("...mi,...jk,...mijk->...", bi, bi, jet.D2)
    tr = np.einsum("...ij,...ij->...", bi, jet.e)
    return divdiv - lap_tr + (n - 1) * tr


def linearized_mean_curvature(e, p: PointLike, chart: Chart = Chart.POLAR) -> np.ndarray:
    """2 Hdot_b e = [d tr e - div e](eta) - div_beta X_e - <Pi_b, e>_beta.

    Returns ``Hdot`` (not twice it).  ``X_e`` is the tangential field dual to
    ``e(eta, .)`` on the face.
    """
    func, c = _as_field(e)
    chart = c or chart
    Y = as_array(p)
    if np.any(np.abs(Y[..., -1]) > 1e-12):
        raise GeometryError("linearized_mean_curvature requires boundary points")
    n = Y.shape[-1]
    bg = background(chart)
    jet = covariant_jet(bg, func, Y, order=1)
    bi = jet.binv
    eta = -bi[..., :, n - 1] / np.sqrt(bi[..., n - 1, n - 1])[..., None]
    dtr = np.einsum("...jk,...ijk->...i", bi, jet.D1)
    dive = np.einsum("...jk,...kij->...i", bi, jet.D1)
    first = np.einsum("...i,...i->...", dtr - dive, eta)
    beta_inv = np.linalg.inv(jet.b[..., : n - 1, : n - 1])
    t = slice(0, n - 1)
    div_X = np.einsum("...ag,...i,...aig->...", beta_inv, eta, jet.D1[..., t, :, t])
    Pi_b = bg.christoffel(Y)[..., n - 1, t, t] / np.sqrt(bi[..., n - 1, n - 1])[..., None, None]
    pair = np.einsum("...ab,...ac,...bd,...cd->...", Pi_b, beta_inv, beta_inv, jet.e[..., t, t])
    return 0.5 * (first - div_X - pair)


@dataclass(frozen=True)
class GaugeMap:
    """The gauge map in a background-orthonormal frame.

    ``matrix`` acts on frame components; ``frame`` holds the frame vectors as
    columns (coordinate components) and ``h`` is the perturbation in that frame.
    """

    frame: np.ndarray
    matrix: np.ndarray
    h: np.ndarray

    def coordinate_matrix(self) -> np.ndarray:
        return self.frame @ self.matrix @ np.linalg.inv(self.frame)


def gauge_map(m: MetricField, p: PointLike) -> GaugeMap:
    """Inverse symmetric square root of g written in a b-orthonormal frame."""
    Y = as_array(p)
    F = frame_field(m.chart, Y)
    Hm = np.swapaxes(F, -1, -2) @ m.e(Y) @ F
    n = Y.shape[-1]
    Gf = np.eye(n) + Hm
    w, Q = np.linalg.eigh(Gf)
    if np.any(w <= 0):
        raise GeometryError("metric matrix is not positive definite")
    inv_sqrt = (Q / np.sqrt(w)[..., None, :]) @ np.swapaxes(Q, -1, -2)
    return GaugeMap(frame=F, matrix=inv_sqrt, h=Hm)


# ---------------------------------------------------------------------------
# Helpers


def _check_domain(m: MetricField, Y):
    if m.chart is Chart.BALL and np.any(np.sum(Y * Y, axis=-1) >= 1.0):
        raise GeometryError("point outside the unit ball")


def _check_invertible(g):
    if not np.all(np.isfinite(g)) or np.any(np.abs(np.linalg.det(g)) < 1e-300):
        raise GeometryError("metric matrix is not invertible")


def decay_profile(m: MetricField, radii, directions) -> np.ndarray:
    """Sampled ``|e|_b + |nabla e|_b + |nabla^2 e|_b`` (max over directions) per radius."""
    bg = m.background
    out = []
    for r in radii:
        Y = r * np.asarray(directions, float)
        jet = covariant_jet(bg, m, Y, order=2)
        bi = jet.binv
        n0 = np.sqrt(np.abs(np.einsum("...ia,...jb,...ij,...ab->...", bi, bi, jet.e, jet.e)))
        n1 = np.sqrt(np.abs(np.einsum("...kc,...ia,...jb,...kij,...cab->...", bi, bi, bi, jet.D1, jet.D1)))
        n2 = np.sqrt(np.abs(np.einsum(
            "...md,...kc,...ia,...jb,...mkij,...dcab->...", bi, bi, bi, bi, jet.D2, jet.D2)))
        out.append(np.max(n0 + n1 + n2))
    return np.asarray(out)


def validate_decay(m: MetricField, radii=None, directions=None, slack: float = 0.3) -> dict:
    """Sampled decay check: fitted log-log slope of the decay profile vs ``-tau``."""
    n = m.dim
    if radii is None:
        r0 = max(m.radial_extent, 10.0)
        radii = r0 * 2.0 ** np.arange(4)
    if directions is None:
        rng = np.random.default_rng(0)
        d = rng.normal(size=(16, n))
        d[:, -1] = np.abs(d[:, -1])
        d[0, -1] = 0.0
        directions = d / np.linalg.norm(d, axis=1, keepdims=True)
    prof = decay_profile(m, radii, directions)
    if not np.isfinite(m.tau) or np.all(prof <= 1e-300):
        ok = bool(np.all(prof < 1e-12)) if not np.isfinite(m.tau) else True
        return {"ok": ok, "slope": float("-inf"), "profile": prof, "radii": np.asarray(radii)}
    pos = prof > 1e-300
    if pos.sum() < 2 or not pos[-1]:
        # vanishes identically far out (compact support)
        return {"ok": True, "slope": float("-inf"), "profile": prof, "radii": np.asarray(radii)}
    slope = np.polyfit(np.log(np.asarray(radii)[pos]), np.log(prof[pos]), 1)[0]
    return {"ok": bool(slope <= -m.tau + slack), "slope": float(slope), "profile": prof,
            "radii": np.asarray(radii)}
