"""Clifford algebra, chirality and imaginary Killing spinors on the half-ball model.

Spinor components are taken in the frame ``E_i = omega d/dx'_i`` that is
orthonormal for ``omega^-2 delta``, so ``c(E_i)`` acts by the gamma matrix
``gamma_i``.  For odd ``n`` spinors live in the doubled bundle ``S + S`` with
Clifford action ``diag(c, -c)`` and chirality the swap of the two factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Optional

import numpy as np

from .geometry import ANGLE_MARGIN, GeometryError, background, Chart
from .reference import StaticPotential, lorentz_product, static_basis_values

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


class SpinError(ValueError):
    pass


def _kron(*ms):
    return reduce(np.kron, ms, np.eye(1, dtype=complex))


@dataclass(frozen=True)
class CliffordRep:
    """Gamma matrices of Cl(n) with ``gamma_i^2 = -1``, plus the chirality on the spinor bundle.

    ``gammas`` act on the irreducible module of rank ``2^k``; ``clifford`` and
    ``chirality`` act on the bundle carrying the chirality (the module itself
    for even ``n``, two copies of it for odd ``n``).
    """

    dim: int
    gammas: np.ndarray
    clifford: np.ndarray
    chirality: np.ndarray

    @property
    def rank(self) -> int:
        return self.gammas.shape[-1]

    @property
    def bundle_rank(self) -> int:
        return self.clifford.shape[-1]

    @property
    def doubled(self) -> bool:
        return self.dim % 2 == 1

    def c(self, x) -> np.ndarray:
        """Clifford multiplication by the vector(s) ``x`` on the irreducible module."""
        return np.tensordot(np.asarray(x, float), self.gammas, axes=([-1], [0]))

    def residuals(self) -> dict:
        n, r = self.dim, self.rank
        eye = np.eye(r)
        anti = max(np.max(np.abs(self.gammas[i] @ self.gammas[j] + self.gammas[j] @ self.gammas[i]
                                 + 2.0 * (i == j) * eye)) for i in range(n) for j in range(n))
        skew = max(np.max(np.abs(g.conj().T + g)) for g in self.gammas)
        Q = self.chirality
        E = np.eye(self.bundle_rank)
        return {
            "anticommutation": float(anti),
            "skew_adjoint": float(skew),
            "chirality_selfadjoint": float(np.max(np.abs(Q.conj().T - Q))),
            "chirality_involution": float(np.max(np.abs(Q @ Q - E))),
            "chirality_anticommutes": float(max(np.max(np.abs(Q @ c + c @ Q)) for c in self.clifford)),
        }


@lru_cache(maxsize=None)
def _build(n: int) -> CliffordRep:
    k = n // 2
    herm = []
    for j in range(k):
        pre = [_SZ] * j
        post = [_I2] * (k - j - 1)
        herm.append(_kron(*pre, _SX, *post))
        herm.append(_kron(*pre, _SY, *post))
    if n % 2:
        herm.append(_kron(*([_SZ] * k)))
    gammas = np.array([1j * e for e in herm])
    if n % 2 == 0:
        vol = reduce(np.matmul, gammas)
        # fix the phase so the volume element is a self-adjoint involution
        Q = vol * (1j ** k)
        if np.max(np.abs(Q @ Q - np.eye(len(Q)))) > 1e-12:
            Q = -Q
        clifford = gammas
    else:
        r = len(gammas[0])
        Z = np.zeros((r, r), dtype=complex)
        clifford = np.array([np.block([[g, Z], [Z, -g]]) for g in gammas])
        Q = np.block([[Z, np.eye(r)], [np.eye(r), Z]]).astype(complex)
    for arr in (gammas, clifford, Q):
        arr.setflags(write=False)
    return CliffordRep(n, gammas, clifford, Q)


def build_clifford(n: int) -> CliffordRep:
    if not isinstance(n, (int, np.integer)) or not 3 <= n <= 8:
        raise SpinError(f"unsupported dimension n={n}; need 3 <= n <= 8")
    return _build(int(n))


@dataclass(frozen=True)
class BoundaryChirality:
    """``Q c(nu)`` for the inward normal of the face, with its eigenprojections."""

    operator: np.ndarray
    plus: np.ndarray
    minus: np.ndarray

    def projection(self, sign: int) -> np.ndarray:
        return self.plus if sign > 0 else self.minus

    def eigenbasis(self, sign: int) -> np.ndarray:
        """Orthonormal basis (columns) of the +-1 eigenspace."""
        w, U = np.linalg.eigh(self.operator)
        return U[:, (w > 0) if sign > 0 else (w < 0)]


def boundary_chirality(rep: CliffordRep) -> BoundaryChirality:
    nu = rep.clifford[rep.dim - 1]  # inward unit normal = E_n on the face
    op = rep.chirality @ nu
    eye = np.eye(rep.bundle_rank)
    return BoundaryChirality(op, 0.5 * (eye + op), 0.5 * (eye - op))


# ---------------------------------------------------------------------------
# Killing spinors


@dataclass(frozen=True)
class KillingSpec:
    """Data of an imaginary Killing section with ``nabla Phi = sign (i/2) c(X) Phi``.

    Even ``n``: ``phi_{u,sign}``.  Odd ``n``: the pair ``(phi_{u,sign}, phi_{v,-sign})``
    in the doubled bundle.
    """

    u: np.ndarray
    sign: int = 1
    v: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, complex))
        if self.v is not None:
            object.__setattr__(self, "v", np.asarray(self.v, complex))
        if self.sign not in (1, -1):
            raise SpinError("sign must be +1 or -1")

    @classmethod
    def chiral(cls, rep: CliffordRep, u, chirality: int = 1, sign: int = 1) -> "KillingSpec":
        """A spec satisfying the chirality condition ``Q c(nu) Phi = chirality * Phi`` on the face.

        Even ``n`` projects ``u`` onto the eigenspace; odd ``n`` pairs ``u``
        with ``v = chirality * c(nu) u``.
        """
        u = np.asarray(u, complex)
        if rep.doubled:
            return cls(u, sign, chirality * (rep.gammas[-1] @ u))
        return cls(boundary_chirality(rep).projection(chirality) @ u, sign)

    def is_trivial(self) -> bool:
        return not np.any(self.u) and (self.v is None or not np.any(self.v))


def _check_ball(X):
    X = np.asarray(X, float)
    if np.any(np.sum(X * X, axis=-1) >= 1.0):
        raise GeometryError("ball point must satisfy |x'| < 1")
    return X


def _half(rep: CliffordRep, u, sign: int, X):
    """omega^-1/2 (1 + sign i c(x)) u at points X; shape (..., rank)."""
    w = 0.5 * (1.0 - np.sum(X * X, axis=-1))
    cx = rep.c(X)
    phi = u + sign * 1j * np.einsum("...ab,b->...a", cx, u)
    return phi / np.sqrt(w)[..., None]


def killing_spinor_eval(spec: KillingSpec, p, rep: Optional[CliffordRep] = None) -> np.ndarray:
    X = _check_ball(getattr(p, "coords", p))
    n = X.shape[-1]
    rep = rep or build_clifford(n)
    first = _half(rep, spec.u, spec.sign, X)
    if not rep.doubled:
        return first
    v = np.zeros_like(spec.u) if spec.v is None else spec.v
    return np.concatenate([first, _half(rep, v, -spec.sign, X)], axis=-1)


def _frame_connection(X):
    """conn[a, i, j] = bhat(nabla_{E_a} E_i, E_j) for the frame E_i = omega d_i."""
    bg = background(Chart.BALL)
    n = X.shape[-1]
    w = bg.conformal_factor(X)
    dw = -X  # d omega / d x
    G = bg.christoffel(X)  # [k, a, i]
    # nabla_{E_a} E_i = omega (d_a omega delta_i^k + omega Gamma^k_ai) d_k
    nab = w[..., None, None, None] * (dw[..., :, None, None] * np.eye(n)[None, :, :]
                                      + w[..., None, None, None] * np.moveaxis(G, -3, -1))
    # bhat(d_k, E_j) = omega^-2 * omega delta_kj = delta_kj / omega
    return nab / w[..., None, None, None]


def section_residual(section, p, direction: int, sign: int, rep: Optional[CliffordRep] = None) -> np.ndarray:
    """|nabla_{E_a} phi - sign (i/2) c(E_a) phi| for a section given as a function of x'.

    ``section`` maps points ``(..., n)`` to frame components ``(..., bundle_rank)``.
    The covariant derivative is ``E_a(phi) + 1/4 sum_ij conn_ij(E_a) c_i c_j phi``
    with frame derivatives by a fourth-order central stencil.
    """
    X = _check_ball(getattr(p, "coords", p))
    n = X.shape[-1]
    if np.any(np.linalg.norm(X, axis=-1) > 1.0 - ANGLE_MARGIN):
        raise GeometryError("Killing residual needs an interior margin from |x'| = 1")
    rep = rep or build_clifford(n)
    a = int(direction)
    if not 0 <= a < n:
        raise IndexError("frame direction out of range")
    w = 0.5 * (1.0 - np.sum(X * X, axis=-1))
    # the step follows the conformal scale so truncation stays flat as |x'| -> 1
    h = 1e-3 * w
    d = np.zeros_like(X)
    d[..., a] = h

    def ev(k):
        return section(X + k * d)

    dphi = (8.0 * (ev(1) - ev(-1)) - (ev(2) - ev(-2))) / (12.0 * h[..., None])
    phi = section(X)
    conn = _frame_connection(X)[..., a, :, :]
    cl = rep.clifford
    spin = 0.25 * np.einsum("...ij,iab,jbc->...ac", conn, cl, cl)
    nabla = w[..., None] * dphi + np.einsum("...ab,...b->...a", spin, phi)
    res = nabla - sign * 0.5j * np.einsum("ab,...b->...a", cl[a], phi)
    return np.linalg.norm(res, axis=-1)


def killing_residual(spec: KillingSpec, p, direction: int, rep: Optional[CliffordRep] = None) -> np.ndarray:
    """Killing-equation residual of the explicit section of ``spec``.

    With this connection and ``c(X)^2 = -|X|^2``, ``phi_{u,+}`` solves
    ``nabla phi = (i/2) c(X) phi``; the opposite pairing leaves an O(1) residual.
    """
    X = _check_ball(getattr(p, "coords", p))
    rep = rep or build_clifford(X.shape[-1])
    return section_residual(lambda Y: killing_spinor_eval(spec, Y, rep), X, direction, spec.sign, rep)


# ---------------------------------------------------------------------------
# Squared norms of Killing spinors as static potentials


def _half_coefficients(rep: CliffordRep, u, sign: int) -> np.ndarray:
    """Coefficients of |phi_{u,sign}|^2: 2 (|u|^2, sign i <gamma_i u, u>)."""
    n = rep.dim
    z = np.empty(n + 1)
    z[0] = 2.0 * np.vdot(u, u).real
    for i in range(n):
        val = 1j * np.vdot(u, rep.gammas[i] @ u)  # i <gamma_i u, u>, real
        z[i + 1] = 2.0 * sign * val.real
    return z


def v_phi_components(spec: KillingSpec, rep: CliffordRep) -> np.ndarray:
    """All ``n + 1`` coefficients, including the one along x'_n."""
    z = _half_coefficients(rep, spec.u, spec.sign)
    if rep.doubled and spec.v is not None:
        z = z + _half_coefficients(rep, spec.v, -spec.sign)
    return z


def v_phi(spec: KillingSpec, rep: CliffordRep, tol: float = 1e-10) -> StaticPotential:
    """V_Phi = <Phi, Phi> in the basis {V_(0), ..., V_(n-1)}.

    The coefficient along the normal coordinate must vanish (chirality); a
    nonzero one raises.
    """
    if spec.is_trivial():
        raise SpinError("v_phi needs a nontrivial spec")
    z = v_phi_components(spec, rep)
    if abs(z[-1]) > tol * max(1.0, z[0]):
        raise SpinError("spec violates the chirality condition: normal coefficient is nonzero")
    return StaticPotential(z[:-1])


def null_cone_inverse(V, rep: CliffordRep, chirality: int = 1, sign: int = 1, tol: float = 1e-8) -> KillingSpec:
    """A chirality-compatible spec with ``v_phi(spec) = V`` for V on the future null cone.

    ``u`` is the normalized projection of the first standard basis vector with
    the largest overlap onto the joint +1 eigenspace of ``sign * i c(xi)`` (xi
    the unit spatial direction of V) and of the boundary chirality; its
    leading nonzero component is made real and positive.
    """
    z = np.asarray(getattr(V, "coeffs", V), float)
    n = rep.dim
    if z.shape != (n,):
        raise SpinError(f"expected {n} coefficients")
    q = lorentz_product(z, z)
    if abs(q) > tol * max(1.0, float(z @ z)) or z[0] <= 0:
        raise SpinError("V is not on the future null cone")
    xi = np.zeros(n)
    xi[: n - 1] = z[1:] / z[0]
    xi /= np.linalg.norm(xi)
    M = sign * 1j * rep.c(xi)
    P = 0.5 * (np.eye(rep.rank) + M)
    if not rep.doubled:
        P = P @ boundary_chirality(rep).projection(chirality)
    overlaps = np.linalg.norm(P, axis=0)
    u = P[:, int(np.argmax(overlaps))]
    u = u / np.linalg.norm(u)
    lead = u[np.argmax(np.abs(u) > 1e-12)]
    u = u * (abs(lead) / lead)
    factor = 4.0 if rep.doubled else 2.0
    u = u * np.sqrt(z[0] / factor)
    return KillingSpec.chiral(rep, u, chirality, sign) if rep.doubled else KillingSpec(u, sign)


def v_phi_pointwise(spec: KillingSpec, X, rep: CliffordRep) -> tuple:
    """(|Phi(x')|^2, sum_a z_a V_(a)(x')) at ball points, for comparison."""
    X = _check_ball(X)
    phi = killing_spinor_eval(spec, X, rep)
    lhs = np.sum(np.abs(phi) ** 2, axis=-1)
    z = v_phi_components(spec, rep)
    w = 0.5 * (1.0 - np.sum(X * X, axis=-1))
    vals = np.concatenate([static_basis_values(X, Chart.BALL), (X[..., -1] / w)[..., None]], axis=-1)
    return lhs, vals @ z
