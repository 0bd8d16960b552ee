"""Product quadrature on coordinate hemispheres and their equators.

Hemisphere ``{|y| = r, y_n >= 0}``: Gauss-Legendre in the latitude above the
boundary face, Gauss-Legendre in the remaining colatitudes and a trapezoid
rule in the periodic azimuth.  The induced metric of ``b`` on ``|y| = r`` is
exactly ``r^2`` times the round metric, so weights carry ``r^(n-1)`` (and
``r^(n-2)`` on the equator).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gamma, pi

import numpy as np


def sphere_area(d: int) -> float:
    """Area of the unit sphere S^d in R^(d+1)."""
    return 2.0 * pi ** ((d + 1) / 2) / gamma((d + 1) / 2)


@lru_cache(maxsize=None)
def _unit_sphere_rule(d: int, N: int):
    if d == 0:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 1:
        phi = np.arange(2 * N) * (pi / N)
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return nodes, np.full(2 * N, pi / N)
    t, w = np.polynomial.legendre.leggauss(N)
    theta = 0.5 * pi * (t + 1.0)
    w = 0.5 * pi * w * np.sin(theta) ** (d - 1)
    sub_nodes, sub_w = _unit_sphere_rule(d - 1, N)
    nodes = np.concatenate(
        [
            np.repeat(np.cos(theta), len(sub_w))[:, None],
            (np.sin(theta)[:, None, None] * sub_nodes[None, :, :]).reshape(-1, d),
        ],
        axis=-1,
    )
    return nodes, np.outer(w, sub_w).ravel()


def unit_sphere_rule(d: int, N: int):
    nodes, w = _unit_sphere_rule(d, N)
    return nodes.copy(), w.copy()


@lru_cache(maxsize=None)
def _unit_hemisphere_rule(n: int, N: int):
    """Rule on {|y| = 1, y_n >= 0} in R^n."""
    t, w = np.polynomial.legendre.leggauss(N)
    psi = 0.25 * pi * (t + 1.0)  # latitude above the face, in (0, pi/2)
    w = 0.25 * pi * w * np.cos(psi) ** (n - 2)
    eq_nodes, eq_w = _unit_sphere_rule(n - 2, N)
    nodes = np.concatenate(
        [
            (np.cos(psi)[:, None, None] * eq_nodes[None, :, :]).reshape(-1, n - 1),
            np.repeat(np.sin(psi), len(eq_w))[:, None],
        ],
        axis=-1,
    )
    return nodes, np.outer(w, eq_w).ravel()


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and b-area weights on S^{n-1}_{r,+} and on its equator S^{n-2}_r."""

    dim: int
    radius: float
    resolution: int
    nodes: np.ndarray
    weights: np.ndarray
    equator_nodes: np.ndarray
    equator_weights: np.ndarray

    @classmethod
    def build(cls, n: int, radius: float, N: int) -> "QuadratureRule":
        if n < 2:
            raise ValueError("dimension must be at least 2")
        if N < 2:
            raise ValueError("resolution must be at least 2")
        hn, hw = _unit_hemisphere_rule(n, N)
        en, ew = _unit_sphere_rule(n - 2, N)
        eq = np.concatenate([en, np.zeros((len(ew), 1))], axis=-1)
        return cls(
            dim=n,
            radius=float(radius),
            resolution=N,
            nodes=radius * hn,
            weights=radius ** (n - 1) * hw,
            equator_nodes=radius * eq,
            equator_weights=radius ** (n - 2) * ew,
        )

    @property
    def hemisphere_area(self) -> float:
        return 0.5 * sphere_area(self.dim - 1) * self.radius ** (self.dim - 1)

    @property
    def equator_area(self) -> float:
        return sphere_area(self.dim - 2) * self.radius ** (self.dim - 2)

    def area_residuals(self) -> tuple:
        return (
            abs(self.weights.sum() / self.hemisphere_area - 1.0),
            abs(self.equator_weights.sum() / self.equator_area - 1.0),
        )
