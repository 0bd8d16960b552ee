"""The charge form, the mass functional and its verification identities."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .geometry import (
    Chart,
    GeometryError,
    MetricField,
    PointLike,
    as_array,
    background,
    boundary_geometry,
    covariant_jet,
    curvature,
    fd_jet,
    scaled,
    validate_decay,
)
from .quadrature import QuadratureRule
from .reference import (
    CausalClass,
    LorentzVector,
    StaticPotential,
    classify,
    conformal_fields,
    lorentz_product,
    static_basis_gradients,
    static_basis_values,
)

SCHEMA = "hypmass-report/1"
BLOCK = 512
DEFAULT_RADII = tuple(10.0 * 2.0 ** j for j in range(5))
# X_a = -grad_b V_(a) in the Ricci-form mass: the orientation with d_n > 0
RICCI_FIELD_SIGN = -1.0


class MassError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Charge form


def _potential_data(V, Y, chart):
    """Values, covector gradients of one potential or of the whole basis."""
    vals = static_basis_values(Y, chart)
    grads = static_basis_gradients(Y, chart)
    if V is None:
        return np.moveaxis(vals, -1, 0), np.moveaxis(grads, -2, 0)
    c = np.asarray(getattr(V, "coeffs", V), float)
    return (vals @ c)[None], np.einsum("a,...ai->...i", c, grads)[None]


def _charge_from_jet(jet, Vv, dV):
    """U(V, e) for stacked potentials: Vv (A, ...), dV (A, ..., n)."""
    bi = jet.binv
    dive = np.einsum("...jk,...kij->...i", bi, jet.D1)
    dtr = np.einsum("...jk,...ijk->...i", bi, jet.D1)
    tr = np.einsum("...ij,...ij->...", bi, jet.e)
    Vup = np.einsum("...ij,...j->...i", bi, dV)
    return (
        Vv[..., None] * (dive - dtr)
        - np.einsum("...ij,...j->...i", jet.e, Vup)
        + tr[..., None] * dV
    )


def charge_form(V, m: MetricField, p: PointLike, check_radius: bool = True) -> np.ndarray:
    """U(V, e) = V (div_b e - d tr_b e) - e(grad_b V, .) + tr_b e dV as a covector."""
    Y = as_array(p)
    if check_radius and m.radial_extent > 0 and np.any(np.linalg.norm(Y, axis=-1) < m.radial_extent):
        raise MassError("charge form requested inside the asymptotic region r < r_0")
    jet = covariant_jet(m.background, m, Y, order=1)
    Vv, dV = _potential_data(V, Y, m.chart)
    return _charge_from_jet(jet, Vv, dV)[0]


# ---------------------------------------------------------------------------
# Parallel evaluation over quadrature nodes


def _map_blocks(fn: Callable, nodes: np.ndarray, workers: int = 1, block: int = BLOCK):
    """Apply ``fn`` to fixed-size node blocks; results concatenated in node order.

    The partition does not depend on ``workers`` so the per-node values, and
    every reduction over them, are reproducible for any worker count.
    """
    chunks = [nodes[i: i + block] for i in range(0, len(nodes), block)]
    if workers <= 1 or len(chunks) == 1:
        parts = [fn(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=-1)


def _hemisphere_integrand(m: MetricField):
    bg = m.background

    def fn(Y):
        jet = covariant_jet(bg, m, Y, order=1)
        Vv, dV = _potential_data(None, Y, m.chart)
        U = _charge_from_jet(jet, Vv, dV)  # (A, P, n)
        F = bg.frame(Y)
        U_frame = np.einsum("apk,pki->api", U, F)
        u_hat = Y / np.linalg.norm(Y, axis=-1, keepdims=True)  # mu in the frame
        return np.einsum("api,pi->ap", U_frame, u_hat)

    return fn


def _equator_integrand(m: MetricField):
    bg = m.background

    def fn(Y):
        n = Y.shape[-1]
        F = bg.frame(Y)
        e_frame = np.swapaxes(F, -1, -2) @ m.e(Y) @ F
        u_hat = Y / np.linalg.norm(Y, axis=-1, keepdims=True)
        # eta = -f_n on the face, theta = radial unit = u_hat in the frame
        e_eta_theta = -np.einsum("pi,pi->p", e_frame[:, n - 1, :], u_hat)
        Vv = np.moveaxis(static_basis_values(Y, m.chart), -1, 0)
        return Vv * e_eta_theta[None]

    return fn


def mass_terms(m: MetricField, rule: QuadratureRule, workers: int = 1) -> tuple:
    """(flux, equator) for every basis potential at the radius of ``rule``."""
    if m.chart is not Chart.POLAR:
        raise MassError("mass integrals are evaluated in the POLAR chart")
    if rule.dim != m.dim:
        raise MassError("quadrature rule and metric dimensions differ")
    if m.radial_extent > 0 and rule.radius < m.radial_extent:
        raise MassError(f"radius {rule.radius} lies inside r_0 = {m.radial_extent}")
    hv = _map_blocks(_hemisphere_integrand(m), rule.nodes, workers)
    ev = _map_blocks(_equator_integrand(m), rule.equator_nodes, workers)
    flux = np.sum(hv * rule.weights, axis=-1)
    equator = np.sum(ev * rule.equator_weights, axis=-1)
    return flux, equator


def mass_at_radius(m: MetricField, V, rule: QuadratureRule, workers: int = 1) -> float:
    """Hemisphere flux of U(V, e) minus the equator term of V e(eta, theta)."""
    flux, equator = mass_terms(m, rule, workers)
    c = np.asarray(getattr(V, "coeffs", V), float)
    return float(c @ (flux - equator))


# ---------------------------------------------------------------------------
# Extrapolation to infinite radius


@dataclass
class FitResult:
    value: float
    error: float
    exponent: float
    max_residual: float
    converged: bool = True
    coefficient: float = 0.0

    @property
    def status(self) -> str:
        return "OK" if self.converged else "NON_CONVERGED"


def _varpro(r, m, q):
    A = np.stack([np.ones_like(r), r ** (-q)], axis=-1)
    coef, *_ = np.linalg.lstsq(A, m, rcond=None)
    return coef, m - A @ coef


def _fit_power(r, m, q0):
    scale = max(np.max(np.abs(m)), 1e-300)
    ms = m / scale

    def objective(logq):
        return float(np.sum(_varpro(r, ms, np.exp(logq))[1] ** 2))

    grid = np.log(np.linspace(0.25, 8.0, 64))
    if q0 > 0:
        grid = np.append(grid, np.log(q0))
    start = grid[int(np.argmin([objective(g) for g in grid]))]
    res = minimize_scalar(objective, bracket=(start - 0.1, start + 0.1), tol=1e-14)
    q = float(np.exp(res.x)) if res.success else float(np.exp(start))
    coef, _ = _varpro(r, ms, q)

    def resid(x):
        return x[0] + x[1] * r ** (-x[2]) - ms

    q = min(max(q, 1e-5), 1e3)
    sol = least_squares(resid, x0=[coef[0], coef[1], q], bounds=([-np.inf, -np.inf, 1e-6], np.inf),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, x_scale="jac")
    x = sol.x
    return x[0] * scale, x[1] * scale, float(x[2]), np.abs(sol.fun) * scale


def extrapolate_mass(samples: Sequence, q0: float = 2.0, noise_floor: float = 0.0) -> FitResult:
    """Fit ``mass(r) = m_inf + c r^-q`` by least squares.

    ``samples`` is a sequence of ``(r_j, mass_j)`` with increasing radii.  The
    error estimate is the larger of the maximum fit residual propagated to
    ``m_inf`` through the fit's sensitivity (worst case over data perturbations
    of that size) and the largest shift of ``m_inf`` when any single radius is
    left out.  Non-monotone decay of the
    successive differences marks the fit NON_CONVERGED without raising.
    Samples varying by less than ``noise_floor`` are treated as constant.
    """
    data = np.asarray(samples, float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise ValueError("extrapolation needs at least three (radius, mass) samples")
    r, mvals = data[:, 0], data[:, 1]
    if np.any(np.diff(r) <= 0):
        raise ValueError("radii must be increasing")
    spread = np.max(np.abs(mvals - mvals[-1]))
    scale = np.max(np.abs(mvals))
    if spread <= max(1e-14 * scale, noise_floor) or scale == 0.0:
        return FitResult(float(mvals[-1]), float(spread), float("nan"), float(spread), True)
    try:
        minf, c, q, res = _fit_power(r, mvals, q0)
    except (ValueError, np.linalg.LinAlgError):
        return FitResult(float(mvals[-1]), float(spread), float("nan"), float(spread), False)
    # worst-case first-order shift of m_inf under data errors of the size of the residual
    jac = np.stack([np.ones_like(r), r ** (-q), -c * np.log(r) * r ** (-q)], axis=-1)
    gain = float(np.sum(np.abs(np.linalg.pinv(jac)[0])))
    err = gain * float(np.max(res))
    if len(r) >= 4:
        for j in range(len(r)):
            keep = np.arange(len(r)) != j
            try:
                mj, _, _, _ = _fit_power(r[keep], mvals[keep], q)
            except (ValueError, np.linalg.LinAlgError):
                continue
            err = max(err, abs(mj - minf))
    diffs = np.abs(np.diff(mvals))
    noise = 1e-12 * scale
    monotone = bool(np.all(diffs[1:] <= diffs[:-1] + noise))
    converged = bool(monotone and q > 0 and np.isfinite(minf))
    return FitResult(float(minf), float(err), q, float(np.max(res)), converged, float(c))


# ---------------------------------------------------------------------------
# Ricci-form mass


def ricci_mass_terms(m: MetricField, rule: QuadratureRule, field_sign: float = RICCI_FIELD_SIGN,
                     workers: int = 1) -> tuple:
    """Hemisphere and equator parts of the Ricci-form mass for every X_a.

    Integrands use g-geometry throughout: modified Einstein tensor, unit
    g-normals and g-area elements.  ``field_sign`` orients X_a = +-grad_b V_(a).
    Returns ``(hemisphere, equator, max_abs_integrand)``.
    """
    bg = m.background

    def hemi(Y):
        curv = curvature(m, Y)
        Gh, g, ginv = curv["einstein_hat"], curv["metric"], curv["metric_inverse"]
        u = Y / np.linalg.norm(Y, axis=-1, keepdims=True)
        bi = bg.inverse(Y)
        nrm_g = np.sqrt(np.einsum("pi,pij,pj->p", u, ginv, u))
        nrm_b = np.sqrt(np.einsum("pi,pij,pj->p", u, bi, u))
        mu_g = np.einsum("pij,pj->pi", ginv, u) / nrm_g[:, None]
        ratio = np.sqrt(np.linalg.det(g) / np.linalg.det(bg.metric(Y))) * nrm_g / nrm_b
        X = field_sign * conformal_fields(Y, m.chart)  # (P, A, n)
        val = np.einsum("pai,pij,pj->ap", X, Gh, mu_g) * ratio[None]
        return np.concatenate([val, np.max(np.abs(Gh), axis=(-1, -2))[None]], axis=0)

    def equator(Y):
        n = Y.shape[-1]
        t = slice(0, n - 1)
        geo = boundary_geometry(m, Y)
        Pi, H, gam = geo["second_fundamental_form"], geo["mean_curvature"], geo["induced_metric"]
        J = Pi - H[:, None, None] * gam
        beta = bg.metric(Y)[:, t, t]
        u = (Y / np.linalg.norm(Y, axis=-1, keepdims=True))[:, t]
        gi = np.linalg.inv(gam)
        nrm_g = np.sqrt(np.einsum("pi,pij,pj->p", u, gi, u))
        nrm_b = np.sqrt(np.einsum("pi,pij,pj->p", u, np.linalg.inv(beta), u))
        theta = np.einsum("pij,pj->pi", gi, u) / nrm_g[:, None]
        ratio = np.sqrt(np.linalg.det(gam) / np.linalg.det(beta)) * nrm_g / nrm_b
        X = field_sign * conformal_fields(Y, m.chart)[:, :, t]
        return np.einsum("pai,pij,pj->ap", X, J, theta) * ratio[None]

    hv = _map_blocks(hemi, rule.nodes, workers)
    ev = _map_blocks(equator, rule.equator_nodes, workers)
    hemisphere = np.sum(hv[:-1] * rule.weights, axis=-1)
    eq = np.sum(ev * rule.equator_weights, axis=-1)
    return hemisphere, eq, float(np.max(hv[-1]))


def ricci_mass_at_radius(m: MetricField, a: int, rule: QuadratureRule, field_sign: float = RICCI_FIELD_SIGN,
                         workers: int = 1) -> float:
    """Ricci-form mass for X_a at one radius, without the dimensional constant."""
    if not 0 <= a <= m.dim - 1:
        raise IndexError(f"static potential index {a} out of range")
    h, e, _ = ricci_mass_terms(m, rule, field_sign, workers)
    return float(h[a] + e[a])


@dataclass
class Calibration:
    d_n: float
    ratios: list
    spread: float
    ok: bool
    sign_flip: bool
    message: str = ""


def calibrate_dn(zoo: Sequence[MetricField], resolution: int = 32, radii=DEFAULT_RADII,
                 tolerance: float = 0.02, field_sign: float = RICCI_FIELD_SIGN, workers: int = 1) -> Calibration:
    """Least-squares ratio of charge-form mass to Ricci-form mass for V_(0).

    Consistency requires every per-(metric, radius) ratio within ``tolerance``
    of the fitted constant; a negative constant is reported as a sign flip.
    """
    zoo = list(zoo)
    if len(zoo) < 2:
        raise ValueError("calibration needs at least two metrics with nonzero mass")
    P, R = [], []
    for m in zoo:
        for r in radii:
            rule = QuadratureRule.build(m.dim, r, resolution)
            flux, eq = mass_terms(m, rule, workers)
            h, e, _ = ricci_mass_terms(m, rule, field_sign, workers)
            P.append(flux[0] - eq[0])
            R.append(h[0] + e[0])
    P, R = np.asarray(P), np.asarray(R)
    if np.any(np.abs(R) < 1e-300) or np.any(np.abs(P) < 1e-300):
        raise ValueError("calibration metrics must have nonzero mass")
    d = float(P @ R / (R @ R))
    ratios = P / R
    spread = float(np.max(np.abs(ratios / d - 1.0)))
    ok = spread <= tolerance and d > 0
    msg = "" if spread <= tolerance else f"ratios inconsistent: spread {spread:.3g} > {tolerance}"
    if d < 0:
        msg = (msg + "; " if msg else "") + "negative ratio: orientation of X_a is flipped"
    return Calibration(d, ratios.tolist(), spread, ok, d < 0, msg)


# ---------------------------------------------------------------------------
# Identity checks


def _one_form_jet(bg, Xlow_fn, Y):
    """nabla X and nabla nabla X for a covector field: A[j,i] = X_{i;j}, B[k,j,i] = X_{i;jk}."""
    Xl, dX, ddX = fd_jet(Xlow_fn, Y, order=2)
    G = bg.christoffel(Y)
    dG = bg.dchristoffel(Y)
    A = dX - np.einsum("...pji,...p->...ji", G, Xl)
    dA = ddX - np.einsum("...kpji,...p->...kji", dG, Xl) - np.einsum("...pji,...kp->...kji", G, dX)
    B = dA - np.einsum("...pkj,...pi->...kji", G, A) - np.einsum("...pki,...jp->...kji", G, A)
    return Xl, A, B


def exactness_residual(V, X: Callable, p: PointLike, chart: Chart = Chart.POLAR) -> np.ndarray:
    """|U(V, L_X b) - div_b VV(V, X)| with VV_ik = V(X_i;k - X_k;i) + 2(X_k V_i - X_i V_k).

    Both sides are assembled independently from the same covariant jet of X.
    """
    Y = as_array(p)
    bg = background(chart)

    def Xlow(Z):
        return np.einsum("...ij,...j->...i", bg.metric(Z), X(Z))

    Xl, A, B = _one_form_jet(bg, Xlow, Y)
    bi = bg.inverse(Y)
    b = bg.metric(Y)
    Vv, dV = _potential_data(V, Y, chart)
    # e = L_X b and its covariant derivative
    e = A + np.swapaxes(A, -1, -2)
    D1 = B + np.swapaxes(B, -1, -2)

    class _J:
        pass

    jet = _J()
    jet.binv, jet.e, jet.D1 = bi, e, D1
    lhs = _charge_from_jet(jet, Vv, dV)
    # right-hand side: b^{jk} VV_{ij;k}
    Xi_j = np.swapaxes(A, -1, -2)  # [i, j] = X_{i;j}
    anti = Xi_j - A  # X_{i;j} - X_{j;i}
    d_anti = np.einsum("...kji->...ijk", B) - np.einsum("...kij->...ijk", B)  # [i,j,k] = (X_i;j - X_j;i);k
    Vup = np.einsum("...jk,...k->...j", bi, dV)
    Xup = np.einsum("...jk,...k->...j", bi, Xl)
    divX = np.einsum("...jk,...kj->...", bi, A)  # X^j_{;j}
    t1 = np.einsum("...ij,...j->...i", anti, Vup) + Vv[..., None] * np.einsum("...jk,...ijk->...i", bi, d_anti)
    # 2 (X_j V_i - X_i V_j)_{;k} b^{jk}
    t2 = 2.0 * (
        divX[..., None] * dV
        + Vv[..., None] * Xl  # X^k V_{i;k} = V X_i
        - np.einsum("...ik,...k->...i", np.swapaxes(A, -1, -2), Vup)  # X_{i;k} V^k
        - Xl * (Vv[..., None] * Y.shape[-1])  # X_i V^k_{;k} = n V X_i
    )
    rhs = t1 + t2
    res = np.sqrt(np.abs(np.einsum("...i,...ij,...j->...", lhs - rhs, bi, lhs - rhs)))
    return res[0] if res.shape[0] == 1 else res


def divergence_of_charge(m: MetricField, V, p: PointLike) -> np.ndarray:
    """div_b U(V, e) from the second covariant jet of e."""
    Y = as_array(p)
    bg = m.background
    jet = covariant_jet(bg, m, Y, order=2)
    bi = jet.binv
    Vv, dV = _potential_data(V, Y, m.chart)
    Vv, dV = Vv[0], dV[0]
    Vup = np.einsum("...ij,...j->...i", bi, dV)
    D1, D2, e = jet.D1, jet.D2, jet.e
    n = Y.shape[-1]
    W = np.einsum("...jk,...kij->...i", bi, D1) - np.einsum("...jk,...ijk->...i", bi, D1)
    divW = np.einsum("...mi,...jk,...mkij->...", bi, bi, D2) - np.einsum("...mi,...jk,...mijk->...", bi, bi, D2)
    tr = np.einsum("...ij,...ij->...", bi, e)
    # div(V W) + div(-e(grad V)) + div(tr e dV), with nabla^2 V = V b
    out = np.einsum("...i,...i->...", Vup, W) + Vv * divW
    out -= np.einsum("...mi,...mij,...j->...", bi, D1, Vup) + Vv * tr
    out += np.einsum("...jk,...mjk,...mi,...i->...", bi, D1, bi, dV) + tr * Vv * n
    return out


def expansion_residual(m: MetricField, V, p: PointLike, eps: float) -> np.ndarray:
    """|V (R_{b + eps e} + n(n-1)) - div_b U(V, eps e)|: quadratic in eps."""
    if eps == 0.0:
        return np.zeros(as_array(p).shape[:-1])
    me = scaled(m, eps)
    Y = as_array(p)
    Vv = _potential_data(V, Y, m.chart)[0][0]
    lhs = Vv * curvature(me, Y)["scalar_excess"]
    return np.abs(lhs - divergence_of_charge(me, V, Y))


# ---------------------------------------------------------------------------
# Mass vector and report


@dataclass
class MassReport:
    metric: str
    dimension: int
    radii: list
    flux: list
    equator: list
    mass: list
    extrapolated: list
    error: list
    exponent: list
    causal_class: str
    status: list = field(default_factory=list)
    ricci_mass: Optional[list] = None
    d_n: Optional[float] = None
    residuals: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def clean(x):
            if isinstance(x, float) and not np.isfinite(x):
                return None
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, np.generic):
                return clean(x.item())
            if isinstance(x, np.ndarray):
                return clean(x.tolist())
            return x

        return clean({
            "schema": SCHEMA,
            "metric": self.metric,
            "dimension": self.dimension,
            "radii": self.radii,
            "flux": self.flux,
            "equator": self.equator,
            "mass": self.mass,
            "extrapolated": self.extrapolated,
            "error": self.error,
            "exponent": self.exponent,
            "causal_class": self.causal_class,
            "status": self.status,
            "ricci_mass": self.ricci_mass,
            "d_n": self.d_n,
            "residuals": self.residuals,
            "config": self.config,
            "checks": self.checks,
            "errors": self.errors,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def to_table(self) -> str:
        n = self.dimension
        lines = [f"metric: {self.metric}   n = {n}   class: {self.causal_class}"]
        if self.radii:
            head = ["r"] + [f"mass_{a}" for a in range(n)] + [f"equator_{a}" for a in range(n)]
            rows = [head]
            for j, r in enumerate(self.radii):
                rows.append([f"{r:g}"] + [f"{v:.10e}" for v in self.mass[j]] + [f"{v:.3e}" for v in self.equator[j]])
            rows.append(["inf"] + [f"{v:.10e}" for v in self.extrapolated] + [""] * n)
            rows.append(["error"] + [f"{v:.3e}" for v in self.error] + [""] * n)
            rows.append(["q"] + [("nan" if v is None or not np.isfinite(v) else f"{v:.4f}") for v in self.exponent]
                        + [""] * n)
            widths = [max(len(row[i]) for row in rows) for i in range(len(head))]
            for row in rows:
                lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip())
        if self.ricci_mass is not None:
            lines.append("ricci mass (per radius, a=0): " + ", ".join(f"{v[0]:.6e}" for v in self.ricci_mass))
        if self.d_n is not None:
            lines.append(f"d_n ratio: {self.d_n:.6f}")
        for name, res in self.checks.items():
            lines.append(f"check {name}: {'PASS' if res.get('passed') else 'FAIL'}"
                         + (f"  ({res['error']})" if res.get("error") else ""))
        for err in self.errors:
            lines.append(f"error: {err}")
        return "\n".join(lines) + "\n"


def mass_vector(m: MetricField, resolution: int = 32, radii=DEFAULT_RADII, workers: int = 1,
                validate: bool = True, ricci: bool = False, field_sign: float = RICCI_FIELD_SIGN):
    """Mass vector (one component per basis potential), extrapolated to infinity.

    Returns ``(LorentzVector, MassReport)``.  Components whose extrapolation
    does not settle are marked NON_CONVERGED in the report.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 3 or np.any(np.diff(radii) <= 0):
        raise ValueError("need at least three increasing radii")
    residuals = {}
    if validate and np.isfinite(m.tau):
        dec = validate_decay(m, radii=np.asarray(radii[:4]))
        residuals["decay_slope"] = dec["slope"]
        if not dec["ok"]:
            raise MassError(f"decay validation failed: slope {dec['slope']:.3f} vs tau {m.tau}")
    fluxes, eqs, masses, rm = [], [], [], []
    for r in radii:
        rule = QuadratureRule.build(m.dim, r, resolution)
        flux, eq = mass_terms(m, rule, workers)
        fluxes.append(flux)
        eqs.append(eq)
        masses.append(flux - eq)
        if ricci:
            h, e, _ = ricci_mass_terms(m, rule, field_sign, workers)
            rm.append(h + e)
    masses = np.asarray(masses)
    q0 = 2.0 * m.tau - m.dim if np.isfinite(m.tau) and 2.0 * m.tau > m.dim else 2.0
    floor = 1e-11 * float(np.max(np.abs(masses))) + 1e-14
    fits = [extrapolate_mass(list(zip(radii, masses[:, a])), q0, floor) for a in range(m.dim)]
    P = np.array([f.value for f in fits])
    err = float(max(f.error for f in fits))
    cls = classify(P, err)
    report = MassReport(
        metric=m.name,
        dimension=m.dim,
        radii=radii,
        flux=np.asarray(fluxes).tolist(),
        equator=np.asarray(eqs).tolist(),
        mass=masses.tolist(),
        extrapolated=P.tolist(),
        error=[f.error for f in fits],
        exponent=[f.exponent for f in fits],
        causal_class=cls.value,
        status=[f.status for f in fits],
        residuals=residuals,
        config={"resolution": resolution, "radii": radii, "workers": workers},
    )
    residuals["lorentz_norm"] = float(lorentz_product(P, P))
    residuals["fit_residual"] = [f.max_residual for f in fits]
    if ricci:
        rm = np.asarray(rm)
        report.ricci_mass = rm.tolist()
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = masses[:, 0] / rm[:, 0]
        report.d_n = float(np.mean(ratio)) if np.all(np.isfinite(ratio)) else None
        residuals["d_n_spread"] = float(np.max(np.abs(ratio / np.mean(ratio) - 1.0))) if report.d_n else None
    return LorentzVector(P), report
