"""Command-line driver: build the configured metric, run the selected checks, write the report."""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .geometry import Chart, GeometryError, MetricField
from .mass import (
    MassError,
    MassReport,
    expansion_residual,
    exactness_residual,
    extrapolate_mass,
    mass_vector,
    ricci_mass_terms,
)
from .quadrature import QuadratureRule
from .reference import IsometryElement, StaticPotential, lorentz_product, transform_mass_vector
from .spin import (
    KillingSpec,
    SpinError,
    boundary_chirality,
    build_clifford,
    killing_residual,
    null_cone_inverse,
    v_phi,
    v_phi_pointwise,
)
from .zoo import (
    DiffeoSpec,
    RadialProfile,
    ads_schwarzschild_half,
    conformally_compact,
    decaying_field,
    isometry_pullback,
    load_conformal_data,
    pushforward,
    reference,
    trace_perturbation,
    transported_reference,
)

EXPANSION_EPS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
EINSTEIN_METRICS = ("reference", "transported_reference")


def build_metric(cfg: RunConfig) -> MetricField:
    spec, n = cfg.metric, cfg.n
    if spec.name == "reference":
        return reference(n, Chart.POLAR)
    if spec.name == "ads_schwarzschild":
        return ads_schwarzschild_half(spec.mbar, n)
    if spec.name == "trace_perturbation":
        prof = RadialProfile(spec.profile, spec.amplitude, spec.power, spec.r0, spec.r1)
        return trace_perturbation(prof, n)
    if spec.name == "transported_reference":
        return transported_reference(n, spec.tau, spec.rotation, spec.dilation)
    if spec.name == "conformal":
        path = Path(spec.data)
        if not path.is_absolute():
            path = Path(cfg.base_dir) / path
        data = load_conformal_data(path)
        if data.dim != n:
            raise ConfigError(f"data file is {data.dim}-dimensional but n = {n}", field="metric.data")
        return conformally_compact(data)
    raise ConfigError(f"unknown metric {spec.name!r}", field="metric.name")


class _Context:
    """Lazily computed shared results (the mass vector is used by several checks)."""

    def __init__(self, cfg: RunConfig, metric_factory: Callable[[], MetricField]):
        self.cfg = cfg
        self._factory = metric_factory
        self._metric = None
        self._mass = None

    @property
    def metric(self) -> MetricField:
        if self._metric is None:
            self._metric = self._factory()
        return self._metric

    def mass(self):
        if self._mass is None:
            c = self.cfg
            self._mass = mass_vector(self.metric, c.resolution, c.radii, c.workers, ricci="ricci" in c.checks)
        return self._mass


def _massless(P, err, tol) -> bool:
    return float(np.max(np.abs(P))) <= max(tol.zero, 3.0 * err)


def check_mass(ctx: _Context) -> dict:
    tol = ctx.cfg.tolerances
    P, rep = ctx.mass()
    P = P.components
    scale = float(np.max(np.abs(P)))
    fit = max(rep.residuals["fit_residual"])
    converged = all(s == "OK" for s in rep.status)
    fit_ok = fit <= tol.fit * scale or scale <= tol.zero
    return {
        "passed": bool(converged and fit_ok),
        "causal_class": rep.causal_class,
        "max_abs_component": scale,
        "max_fit_residual": fit,
        "relative_fit_residual": fit / scale if scale > 0 else 0.0,
        "converged": converged,
    }


def check_ricci(ctx: _Context) -> dict:
    tol = ctx.cfg.tolerances
    P, rep = ctx.mass()
    rm = np.asarray(rep.ricci_mass)
    rule = QuadratureRule.build(ctx.cfg.n, ctx.cfg.radii[0], ctx.cfg.resolution)
    ghat = float(ricci_mass_terms(ctx.metric, rule, workers=ctx.cfg.workers)[2])
    out = {"ghat_max": ghat, "d_n": rep.d_n, "d_n_spread": rep.residuals.get("d_n_spread")}
    if ctx.cfg.metric.name in EINSTEIN_METRICS and ghat > tol.killing:
        out.update(passed=False, error=f"Einstein metric with |G_hat| = {ghat:.3g}")
        return out
    if _massless(P.components, max(rep.error), tol):
        # no ratio to calibrate: the Ricci-form mass must vanish as well
        fitR = extrapolate_mass(list(zip(rep.radii, rm[:, 0])), 2.0, 1e-11 * float(np.max(np.abs(rm))) + 1e-14)
        out["ricci_extrapolated"] = fitR.value
        out["passed"] = bool(abs(fitR.value) <= max(tol.zero, 3.0 * (fitR.error + max(rep.error))))
        return out
    spread = rep.residuals.get("d_n_spread")
    out["passed"] = bool(rep.d_n is not None and rep.d_n > 0 and spread is not None and spread <= tol.dn_spread)
    if rep.d_n is not None and rep.d_n < 0:
        out["error"] = "negative ratio: conformal field orientation flipped"
    return out


def check_invariance(ctx: _Context) -> dict:
    cfg, tol = ctx.cfg, ctx.cfg.tolerances
    inv = cfg.invariance
    P, rep = ctx.mass()
    iso = IsometryElement.boost(cfg.n, inv.axis, inv.rapidity)
    d = DiffeoSpec(decaying_field(cfg.n, inv.tau, inv.rotation, inv.dilation), inv.tau)
    moved = pushforward(isometry_pullback(ctx.metric, iso), d)
    P2, rep2 = mass_vector(moved, cfg.resolution, cfg.radii, cfg.workers)
    expected = transform_mass_vector(iso, P.components)
    got = P2.components
    err = max(rep.error) + max(rep2.error)
    scale = float(np.max(np.abs(expected)))
    dev = float(np.max(np.abs(got - expected)))
    n1, n2 = lorentz_product(P.components, P.components), lorentz_product(got, got)
    out = {
        "expected": expected.tolist(),
        "measured": got.tolist(),
        "max_component_deviation": dev,
        "lorentz_norm": [n1, n2],
    }
    if _massless(expected, err, tol):
        out["passed"] = bool(float(np.max(np.abs(got))) <= max(tol.zero, 3.0 * err))
        return out
    out["relative_component_deviation"] = dev / scale
    out["relative_norm_change"] = abs(n2 - n1) / abs(n1) if n1 != 0 else float("inf")
    out["passed"] = bool(dev <= tol.invariance * scale and out["relative_norm_change"] <= tol.invariance)
    return out


def _upper_points(rng, count: int, n: int, rmin: float, rmax: float) -> np.ndarray:
    Y = rng.normal(size=(count, n))
    Y[:, -1] = np.abs(Y[:, -1])
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    return Y * rng.uniform(rmin, rmax, size=(count, 1))


def check_exactness(ctx: _Context) -> dict:
    cfg = ctx.cfg
    n = cfg.n
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(cfg.samples):
        C = 0.3 * rng.normal(size=(n, n, n))
        L = rng.normal(size=(n, n))

        def X(Y, C=C, L=L):
            return np.einsum("kij,...i,...j->...k", C, Y, Y) + Y @ L.T

        Y = _upper_points(rng, 1, n, 0.5, 3.0)
        for a in range(n):
            worst = max(worst, float(np.max(exactness_residual(StaticPotential.basis(a, n), X, Y))))
    return {"passed": bool(worst < cfg.tolerances.exactness), "max_residual": worst, "fields": cfg.samples}


def check_expansion(ctx: _Context) -> dict:
    cfg, m = ctx.cfg, ctx.metric
    rng = np.random.default_rng(cfg.seed)
    rmin = max(2.0, 1.5 * m.radial_extent)
    Y = _upper_points(rng, 1, cfg.n, rmin, rmin + 2.0)
    V = StaticPotential.basis(0, cfg.n)
    res = np.array([float(expansion_residual(m, V, Y, e)[0]) for e in EXPANSION_EPS])
    out = {"eps": list(EXPANSION_EPS), "residuals": res.tolist(), "point": Y[0].tolist()}
    if np.max(res) < 1e-13:
        out.update(passed=True, slope=None, note="perturbation vanishes at the sample point")
        return out
    slope = float(np.polyfit(np.log(EXPANSION_EPS), np.log(res), 1)[0])
    out.update(slope=slope, passed=bool(abs(slope - 2.0) <= cfg.tolerances.expansion_slope))
    return out


def spin_suite(n: int, samples: int = 200, seed: int = 0, tol=None) -> dict:
    """Clifford invariants, Killing residuals for a full basis, V_Phi identities."""
    rep = build_clifford(n)
    rng = np.random.default_rng(seed)
    cliff = max(rep.residuals().values())
    X = rng.normal(size=(samples, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    X *= rng.uniform(0.0, 0.95, size=(samples, 1)) ** (1.0 / n)
    X[:, -1] = np.abs(X[:, -1])
    dirs = rng.integers(0, n, size=samples)
    bc = boundary_chirality(rep)
    specs = []
    for sign in (1, -1):
        if rep.doubled:
            # u ranges over the module; the partner block is fixed by the chirality
            specs += [KillingSpec.chiral(rep, u, 1, sign) for u in np.eye(rep.rank, dtype=complex)]
        else:
            for chir in (1, -1):
                specs += [KillingSpec(u, sign) for u in bc.eigenbasis(chir).T]
    killing = 0.0
    for spec in specs:
        for a in range(n):
            sel = dirs == a
            if np.any(sel):
                killing = max(killing, float(np.max(killing_residual(spec, X[sel], a, rep))))
    u = rng.normal(size=rep.rank) + 1j * rng.normal(size=rep.rank)
    spec = KillingSpec.chiral(rep, u, 1)
    lhs, rhs = v_phi_pointwise(spec, X, rep)
    pointwise = float(np.max(np.abs(lhs - rhs)))
    trip = 0.0
    for _ in range(5):
        w = rng.normal(size=n - 1)
        V = np.concatenate([[np.linalg.norm(w)], w]) * rng.uniform(0.5, 2.0)
        trip = max(trip, float(np.max(np.abs(v_phi(null_cone_inverse(V, rep), rep).coeffs - V))))
    out = {
        "clifford_residual": cliff,
        "killing_residual": killing,
        "basis_specs": len(specs),
        "chirality_ranks": [int(bc.eigenbasis(1).shape[1]), int(bc.eigenbasis(-1).shape[1])],
        "pointwise_residual": pointwise,
        "round_trip_residual": trip,
    }
    if tol is not None:
        out["passed"] = bool(cliff <= tol.clifford and killing <= tol.killing and pointwise <= tol.pointwise
                             and trip <= tol.round_trip)
    return out


def check_spin(ctx: _Context) -> dict:
    cfg = ctx.cfg
    return spin_suite(cfg.n, 200, cfg.seed, cfg.tolerances)


CHECK_FUNCS = {
    "mass": check_mass,
    "ricci": check_ricci,
    "invariance": check_invariance,
    "exactness": check_exactness,
    "expansion": check_expansion,
    "spin": check_spin,
}
_NEEDS_MASS = ("mass", "ricci", "invariance")


def _empty_report(cfg: RunConfig, name: str) -> MassReport:
    return MassReport(metric=name, dimension=cfg.n, radii=[], flux=[], equator=[], mass=[], extrapolated=[],
                      error=[], exponent=[], causal_class="NOT_COMPUTED")


def run(cfg: RunConfig, metric_factory: Callable[[], MetricField] | None = None) -> tuple:
    """Execute the selected checks; returns ``(MassReport, exit_status)``.

    Exit status is 0 exactly when every selected check passed.  Engine errors
    are recorded in the report rather than raised.
    """
    ctx = _Context(cfg, metric_factory or (lambda: build_metric(cfg)))
    results, errors = {}, []
    report = None
    if any(c in cfg.checks for c in _NEEDS_MASS):
        try:
            report = ctx.mass()[1]
        except (MassError, GeometryError, ConfigError, ValueError, OSError) as exc:
            errors.append(f"mass: {exc}")
    for name in cfg.checks:
        try:
            if name in _NEEDS_MASS and report is None:
                raise MassError("mass vector unavailable")
            results[name] = CHECK_FUNCS[name](ctx)
        except (MassError, GeometryError, ConfigError, SpinError, ValueError, OSError) as exc:
            results[name] = {"passed": False, "error": f"{type(exc).__name__}: {exc}"}
            errors.append(f"{name}: {exc}")
    if report is None:
        try:
            label = ctx.metric.name
        except Exception:  # noqa: BLE001 - the metric itself may be the failure
            label = cfg.metric.name
        report = _empty_report(cfg, label)
    report.checks = results
    report.errors = errors
    report.config = cfg.to_dict()
    status = 0 if results and all(r.get("passed") for r in results.values()) and not errors else 1
    return report, status


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: MassReport, cfg: RunConfig) -> list:
    out = Path(cfg.out)
    if not out.is_absolute():
        out = Path(cfg.base_dir) / out
    paths = []
    if cfg.format in ("json", "both"):
        p = out / f"{cfg.report_name}.json"
        _atomic_write(p, report.to_json() + "\n")
        paths.append(p)
    if cfg.format in ("table", "both"):
        p = out / f"{cfg.report_name}.txt"
        _atomic_write(p, report.to_table())
        paths.append(p)
    return paths


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypmass", description="Mass of asymptotically hyperbolic metrics with boundary.")
    ap.add_argument("--config", required=True, help="run configuration file")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--workers", type=int, help="quadrature worker threads")
    ap.add_argument("--seed", type=int, help="seed for sampled checks")
    ap.add_argument("--format", choices=("json", "table", "both"), help="report format")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        # command-line paths are relative to the working directory
        out = str(Path(args.out).resolve()) if args.out else None
        cfg = cfg.with_overrides(out=out, workers=args.workers, seed=args.seed, format=args.format)
    except (ConfigError, OSError) as exc:
        print(f"hypmass: config error: {exc}", file=sys.stderr)
        return 2
    report, status = run(cfg)
    for p in write_report(report, cfg):
        print(f"wrote {p}")
    for name, res in report.checks.items():
        print(f"{name:<11} {'PASS' if res.get('passed') else 'FAIL'}")
    return status


if __name__ == "__main__":
    sys.exit(main())
