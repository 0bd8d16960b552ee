"""The model half-space: static potentials, its Lorentzian structure and isometries."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import Chart, ChartPoint, GeometryError, PointLike, as_array, background


# ---------------------------------------------------------------------------
# Points and the two models


def hyperboloid_lift(Y) -> np.ndarray:
    """(x_0, ..., x_n) on the hyperboloid for POLAR coordinates y."""
    Y = np.asarray(Y, float)
    x0 = np.sqrt(1.0 + np.sum(Y * Y, axis=-1))
    return np.concatenate([x0[..., None], Y], axis=-1)


def polar_to_ball(Y) -> np.ndarray:
    # stereographic projection from (-1, 0, ..., 0)
    Y = np.asarray(Y, float)
    x0 = np.sqrt(1.0 + np.sum(Y * Y, axis=-1))
    return Y / (1.0 + x0)[..., None]


def ball_to_polar(X) -> np.ndarray:
    X = np.asarray(X, float)
    s = np.sum(X * X, axis=-1)
    if np.any(s >= 1.0):
        raise GeometryError("ball point must satisfy |x'| < 1")
    return 2.0 * X / (1.0 - s)[..., None]


def model_transform(p: ChartPoint) -> ChartPoint:
    """Map a point between the POLAR and BALL models (isometrically)."""
    if p.chart is Chart.POLAR:
        return ChartPoint(Chart.BALL, polar_to_ball(p.coords))
    if p.chart is Chart.BALL:
        return ChartPoint(Chart.POLAR, ball_to_polar(p.coords))
    raise GeometryError(f"no model transform for chart {p.chart}")


def ball_to_polar_jacobian(X) -> np.ndarray:
    """J[i, a] = d y_i / d x'_a."""
    X = np.asarray(X, float)
    n = X.shape[-1]
    d = 1.0 - np.sum(X * X, axis=-1)
    return 2.0 * np.eye(n) / d[..., None, None] + 4.0 * X[..., :, None] * X[..., None, :] / (d * d)[..., None, None]


def pull_back_tensor(T, J) -> np.ndarray:
    """Components of a covariant 2-tensor under a chart change with Jacobian J."""
    return np.swapaxes(J, -1, -2) @ T @ J


# ---------------------------------------------------------------------------
# Static potentials


def static_basis_values(Y, chart: Chart = Chart.POLAR) -> np.ndarray:
    """All basis potentials V_(0..n-1) at points; shape ``(..., n)``."""
    Y = np.asarray(Y, float)
    if Chart(chart) is Chart.POLAR:
        x = hyperboloid_lift(Y)
        return x[..., :-1]
    if Chart(chart) is Chart.BALL:
        s = np.sum(Y * Y, axis=-1)
        d = 1.0 - s
        v0 = (1.0 + s) / d
        return np.concatenate([v0[..., None], 2.0 * Y[..., :-1] / d[..., None]], axis=-1)
    raise GeometryError(f"static potentials are not defined in chart {chart}")


def static_basis_gradients(Y, chart: Chart = Chart.POLAR) -> np.ndarray:
    """dV_(a) as covectors; shape ``(..., n_potentials, n)``."""
    Y = np.asarray(Y, float)
    n = Y.shape[-1]
    out = np.zeros(Y.shape[:-1] + (n, n))
    if Chart(chart) is Chart.POLAR:
        x0 = np.sqrt(1.0 + np.sum(Y * Y, axis=-1))
        out[..., 0, :] = Y / x0[..., None]
        for a in range(1, n):
            out[..., a, a - 1] = 1.0
        return out
    if Chart(chart) is Chart.BALL:
        s = np.sum(Y * Y, axis=-1)
        d = 1.0 - s
        out[..., 0, :] = 4.0 * Y / (d * d)[..., None]
        for a in range(1, n):
            out[..., a, :] = 4.0 * Y[..., a - 1, None] * Y / (d * d)[..., None]
            out[..., a, a - 1] += 2.0 / d
        return out
    raise GeometryError(f"static potentials are not defined in chart {chart}")


def static_basis_eval(a: int, p: PointLike, chart: Chart | None = None) -> np.ndarray:
    """V_(a) at ``p`` in the chart of ``p``."""
    Y = as_array(p)
    if chart is None:
        chart = p.chart if isinstance(p, ChartPoint) else Chart.POLAR
    n = Y.shape[-1]
    if not 0 <= a <= n - 1:
        raise IndexError(f"static potential index {a} out of range for n={n}")
    return static_basis_values(Y, chart)[..., a]


@dataclass(frozen=True)
class StaticPotential:
    """V = sum_a coeffs[a] V_(a)."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    @classmethod
    def basis(cls, a: int, n: int) -> "StaticPotential":
        if not 0 <= a <= n - 1:
            raise IndexError(f"static potential index {a} out of range for n={n}")
        c = np.zeros(n)
        c[a] = 1.0
        return cls(c)

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def value(self, p: PointLike, chart: Chart | None = None):
        Y, chart = _resolve(p, chart)
        return static_basis_values(Y, chart) @ self.coeffs

    def gradient(self, p: PointLike, chart: Chart | None = None):
        """dV as a covector."""
        Y, chart = _resolve(p, chart)
        return np.einsum("a,...ai->...i", self.coeffs, static_basis_gradients(Y, chart))

    def hessian(self, p: PointLike, chart: Chart | None = None):
        """Covariant Hessian nabla^2_b V (analytic: it equals V b)."""
        Y, chart = _resolve(p, chart)
        return self.value(Y, chart)[..., None, None] * background(chart).metric(Y)


def _resolve(p, chart):
    Y = as_array(p)
    if chart is None:
        chart = p.chart if isinstance(p, ChartPoint) else Chart.POLAR
    return Y, Chart(chart)


def conformal_field(a: int, p: PointLike, chart: Chart | None = None) -> np.ndarray:
    """X_a = grad_b V_(a) (contravariant components)."""
    Y, chart = _resolve(p, chart)
    n = Y.shape[-1]
    if not 0 <= a <= n - 1:
        raise IndexError(f"static potential index {a} out of range for n={n}")
    dV = static_basis_gradients(Y, chart)[..., a, :]
    return np.einsum("...ij,...j->...i", background(chart).inverse(Y), dV)


def conformal_fields(Y, chart: Chart = Chart.POLAR) -> np.ndarray:
    """All X_a at once; shape ``(..., n_potentials, n)``."""
    Y = np.asarray(Y, float)
    dV = static_basis_gradients(Y, chart)
    return np.einsum("...ij,...aj->...ai", background(chart).inverse(Y), dV)


# ---------------------------------------------------------------------------
# Lorentzian structure on the potential space


class CausalClass(str, enum.Enum):
    TIMELIKE_FUTURE = "TIMELIKE_FUTURE"
    TIMELIKE_PAST = "TIMELIKE_PAST"
    NULL_FUTURE = "NULL_FUTURE"
    NULL_PAST = "NULL_PAST"
    SPACELIKE = "SPACELIKE"
    ZERO = "ZERO"


def lorentz_product(z, w) -> float:
    z = np.asarray(getattr(z, "coeffs", z), float)
    w = np.asarray(getattr(w, "coeffs", w), float)
    if z.shape[-1] != w.shape[-1]:
        raise ValueError(f"dimension mismatch: {z.shape[-1]} vs {w.shape[-1]}")
    return z[..., 0] * w[..., 0] - np.sum(z[..., 1:] * w[..., 1:], axis=-1)


def classify(z, error: float = 0.0, zero_tol: float = 1e-9, null_tol: float = 1e-6) -> CausalClass:
    """Causal class of a mass vector with an absolute uncertainty ``error`` per component.

    ZERO when every component is within ``max(zero_tol, error)`` of 0.  NULL
    when ``|<<z,z>>| <= null_tol |z|^2`` widened by the propagated error
    ``2 |z| error``.  Otherwise the sign of the Lorentz norm decides, with the
    time orientation taken from ``z_0``.
    """
    z = np.asarray(getattr(z, "coeffs", z), float)
    scale = max(zero_tol, float(error))
    if np.all(np.abs(z) <= scale):
        return CausalClass.ZERO
    nz2 = float(z @ z)
    q = float(lorentz_product(z, z))
    if abs(q) <= null_tol * nz2 + 2.0 * np.sqrt(nz2) * float(error):
        return CausalClass.NULL_FUTURE if z[0] > 0 else CausalClass.NULL_PAST
    if q > 0:
        return CausalClass.TIMELIKE_FUTURE if z[0] > 0 else CausalClass.TIMELIKE_PAST
    return CausalClass.SPACELIKE


@dataclass(frozen=True)
class LorentzVector:
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", np.asarray(self.components, float))

    @property
    def norm2(self) -> float:
        return float(lorentz_product(self.components, self.components))

    def causal_class(self, error: float = 0.0) -> CausalClass:
        return classify(self.components, error)


# ---------------------------------------------------------------------------
# Isometries fixing the boundary face


def _minkowski(n: int) -> np.ndarray:
    eta = np.eye(n + 1)
    eta[0, 0] = -1.0
    return eta


@dataclass(frozen=True)
class IsometryElement:
    """Lorentz matrix on (x_0, ..., x_n) fixing x_n and the time orientation."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, float))
        self.validate()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] - 1

    def validate(self, tol: float = 1e-12):
        L = self.matrix
        n = L.shape[0] - 1
        eta = _minkowski(n)
        if np.max(np.abs(L.T @ eta @ L - eta)) > tol * max(1.0, np.max(np.abs(L)) ** 2):
            raise GeometryError("matrix does not preserve the Minkowski form")
        e_n = np.zeros(n + 1)
        e_n[-1] = 1.0
        if np.max(np.abs(L @ e_n - e_n)) > tol or np.max(np.abs(e_n @ L - e_n)) > tol:
            raise GeometryError("isometry must fix the x_n coordinate")
        if L[0, 0] < 1.0 - tol:
            raise GeometryError("isometry must preserve the time orientation")

    @classmethod
    def identity(cls, n: int) -> "IsometryElement":
        return cls(np.eye(n + 1))

    @classmethod
    def boost(cls, n: int, i: int, rapidity: float) -> "IsometryElement":
        """Boost in the (x_0, x_i) plane, 1 <= i <= n-1."""
        if not 1 <= i <= n - 1:
            raise IndexError("boost plane must be (x_0, x_i) with 1 <= i <= n-1")
        L = np.eye(n + 1)
        c, s = np.cosh(rapidity), np.sinh(rapidity)
        L[0, 0] = L[i, i] = c
        L[0, i] = L[i, 0] = s
        return cls(L)

    @classmethod
    def rotation(cls, n: int, i: int, j: int, angle: float) -> "IsometryElement":
        """Rotation in the (x_i, x_j) plane, 1 <= i < j <= n-1."""
        if not (1 <= i < j <= n - 1):
            raise IndexError("rotation plane must satisfy 1 <= i < j <= n-1")
        L = np.eye(n + 1)
        c, s = np.cos(angle), np.sin(angle)
        L[i, i] = L[j, j] = c
        L[i, j], L[j, i] = -s, s
        return cls(L)

    def __matmul__(self, other: "IsometryElement") -> "IsometryElement":
        return IsometryElement(self.matrix @ other.matrix)

    def inverse(self) -> "IsometryElement":
        eta = _minkowski(self.dim)
        return IsometryElement(eta @ self.matrix.T @ eta)

    def apply(self, Y) -> np.ndarray:
        """Action on POLAR coordinates."""
        x = hyperboloid_lift(Y)
        return np.einsum("ij,...j->...i", self.matrix, x)[..., 1:]

    def jacobian(self, Y) -> np.ndarray:
        """d(apply)_i / d y_j."""
        Y = np.asarray(Y, float)
        n = Y.shape[-1]
        x0 = np.sqrt(1.0 + np.sum(Y * Y, axis=-1))
        dx = np.concatenate([(Y / x0[..., None])[..., None, :], np.broadcast_to(np.eye(n), Y.shape[:-1] + (n, n))],
                            axis=-2)
        return np.einsum("ij,...jk->...ik", self.matrix[1:, :], dx)

    def potential_matrix(self) -> np.ndarray:
        """Matrix sending coefficients of V to coefficients of V o I."""
        return self.matrix[:-1, :-1].T


def generators(n: int, rapidity: float = 0.3, angle: float = 0.4) -> list:
    """Boosts in every (x_0, x_i) plane and rotations of (x_1, ..., x_{n-1})."""
    out = [IsometryElement.boost(n, i, rapidity) for i in range(1, n)]
    out += [IsometryElement.rotation(n, i, j, angle) for i in range(1, n) for j in range(i + 1, n)]
    return out


def isometry_action(iso: IsometryElement, V) -> StaticPotential:
    """Coefficients of V o I in the basis {V_(a)}."""
    iso.validate()
    coeffs = np.asarray(getattr(V, "coeffs", V), float)
    if len(coeffs) != iso.dim:
        raise ValueError("isometry and potential dimensions differ")
    return StaticPotential(iso.potential_matrix() @ coeffs)


def transform_mass_vector(iso: IsometryElement, P) -> np.ndarray:
    """Mass vector measured in the chart composed with ``iso``.

    ``P'_a = m(V_(a) o iso^-1)``, i.e. the inverse potential matrix applied on
    the dual side.
    """
    P = np.asarray(P, float)
    return iso.inverse().potential_matrix().T @ P
