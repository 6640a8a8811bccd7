"""Topological derivatives and the topological estimator.

The topological derivative is the leading-order change of a quantity of
interest per unit hole measure when an infinitesimal traction-free hole is
nucleated at a point.  The 2D plane-stress form used here,

    T = (4 σ(z):σ(λ) − tr σ(z) tr σ(λ)) / E,

is written in terms of the adjoint strain so that no modulus is needed:
``T = 4/(1+ν) σ:ε + (3ν−1)/(1−ν²) tr σ tr ε``.  For uniaxial stress ``s`` and
the compliance functional it reduces to the dilute circular-hole value
``3 s²/E``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fem
from .adjoint import AdjointPair, QuantitySpec
from .mesh import Mesh, Pore


def _check_nu(nu: float):
    if nu == 0.5:
        raise ValueError("nu = 0.5 makes the topological derivative singular")
    if not (0.0 <= nu < 0.5):
        raise ValueError("Poisson ratio must lie in [0, 0.5)")


def _ddot(a, b):
    return np.einsum("...ij,...ij->...", a, b)


def _trace(a):
    return np.einsum("...ii->...", a)


def topo_derivative_3d(sigma, eps_adj, nu: float):
    """3D spherical-hole topological derivative (isotropic elasticity).

    ``(3/4)(1−ν)/(7−5ν) [10 σ:ε − (1−5ν)/(1−2ν) tr σ tr ε]`` with ``ε`` the
    adjoint strain.  Accepts stacks of ``3×3`` tensors.
    """
    _check_nu(nu)
    s = np.asarray(sigma, dtype=float)
    e = np.asarray(eps_adj, dtype=float)
    c = 0.75 * (1.0 - nu) / (7.0 - 5.0 * nu)
    return c * (10.0 * _ddot(s, e) - (1.0 - 5.0 * nu) / (1.0 - 2.0 * nu) * _trace(s) * _trace(e))


def topo_derivative_2d(sigma, eps_adj, nu: float):
    """Plane-stress circular-hole topological derivative.

    Accepts stacks of ``2×2`` in-plane tensors.
    """
    _check_nu(nu)
    s = np.asarray(sigma, dtype=float)
    e = np.asarray(eps_adj, dtype=float)
    return 4.0 / (1.0 + nu) * _ddot(s, e) + (3.0 * nu - 1.0) / (1.0 - nu * nu) * _trace(s) * _trace(e)


@dataclass(frozen=True, eq=False)
class TopoField:
    """Per-element topological derivative on the dense mesh."""

    mesh: Mesh
    values: np.ndarray
    spec: QuantitySpec

    def at(self, point) -> float:
        """Value at a point; area-weighted over elements sharing an edge or vertex."""
        return float(fem.evaluate_element_field_at(self.mesh, self.values, point))

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["element", "T"])
            for i, v in enumerate(self.values.tolist()):
                w.writerow([i, format(v, ".17g")])


def topo_field(mesh: Mesh, pair: AdjointPair) -> TopoField:
    """Evaluate the 2D topological derivative in every element."""
    nu = pair.primary.material.nu
    vals = topo_derivative_2d(pair.primary.stress, pair.adjoint.strain, nu)
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite topological derivative")
    vals = np.asarray(vals)
    vals.setflags(write=False)
    return TopoField(mesh, vals, pair.spec)


def d_topo(pore: Pore, t_center: float, xi: float, thickness: float = 1.0) -> float:
    """Topological estimate for the pore shrunk by ``xi``.

    Equals ``thickness · xi² · area(pore) · T(center)``.  With ``xi = 1`` this
    is the standalone topological estimate using the full pore area.
    """
    if not (0.0 < xi <= 1.0):
        raise ValueError("xi must lie in (0, 1]")
    return float(thickness * xi * xi * pore.area * t_center)
