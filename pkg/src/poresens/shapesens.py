"""Design speed, boundary shape sensitivity and the integrated shape estimator.

A pore scaled by ``η`` about its center moves its boundary with speed
``V = X − X_c`` (unit-scale coordinates), so the normal speed
``V_n = (X − X_c)·n`` does not depend on ``η``.  With ``n`` pointing out of
the pore into the material, the derivative of a quantity of interest is

    dΨ/dη = SIGN · t · ∫_{Γ_η} σ(z):ε(λ) V_n dΓ,

and since the exterior fields are scale invariant while ``dΓ_η = η dΓ``,
integrating ``η`` from ``ξ`` to 1 gives the factor ``(1 − ξ²)/2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exterior import ExteriorSolution, total_surface_fields
from .mesh import MeshError, Pore

# Global sign of the boundary integral.  With n pointing into the material
# and V_n > 0 for a growing pore, the compliance integrand is non-negative
# and growth must raise compliance, hence +1.
SIGN = 1.0


@dataclass(frozen=True, eq=False)
class DesignSpeedField:
    """Normal design speed at the midpoints of the pore boundary segments."""

    vn: np.ndarray
    lengths: np.ndarray


def design_speed(pore: Pore | np.ndarray, center=None) -> DesignSpeedField:
    """Normal speed ``(X − X_c)·n`` per boundary segment.

    Accepts a :class:`Pore` or a raw counterclockwise polygon plus center.
    """
    if isinstance(pore, Pore):
        b, c = pore.boundary, pore.center
    else:
        b, c = np.asarray(pore, dtype=float), np.asarray(center, dtype=float)
    d = np.roll(b, -1, axis=0) - b
    L = np.linalg.norm(d, axis=1)
    n = np.column_stack([d[:, 1], -d[:, 0]]) / L[:, None]
    mid = 0.5 * (b + np.roll(b, -1, axis=0))
    vn = np.einsum("ij,ij->i", mid - c, n)
    if np.any(vn <= 0):
        raise MeshError(f"pore is not star-shaped about its center (segment {int(np.argmax(vn <= 0))})")
    return DesignSpeedField(vn, L)


def shape_sensitivity(primary_total, adjoint_total, speeds: DesignSpeedField,
                      thickness: float = 1.0) -> float:
    """Midpoint-rule boundary integral of ``σ(z):ε(λ) V_n``.

    ``primary_total`` and ``adjoint_total`` are ``(σ, ε)`` pairs of per-segment
    tensor stacks, for example from :func:`total_surface_fields`.
    """
    sig = np.asarray(primary_total[0])
    eps = np.asarray(adjoint_total[1])
    if not (len(sig) == len(eps) == len(speeds.vn)):
        raise ValueError("mismatched boundary discretizations")
    dens = np.einsum("nij,nij->n", sig, eps)
    return float(SIGN * thickness * np.sum(dens * speeds.vn * speeds.lengths))


def d_shape(pore: Pore, primary_ext: ExteriorSolution, adjoint_ext: ExteriorSolution,
            xi: float, thickness: float = 1.0) -> float:
    """Shape estimate integrated over pore scales ``η ∈ [ξ, 1]``."""
    if not (0.0 < xi < 1.0):
        raise ValueError("xi must lie in (0, 1)")
    if primary_ext.n_elements != adjoint_ext.n_elements or not np.array_equal(
            primary_ext.pore.boundary, adjoint_ext.pore.boundary):
        raise ValueError("mismatched boundary discretizations")
    speeds = design_speed(primary_ext.pore)
    dpsi = shape_sensitivity(total_surface_fields(primary_ext), total_surface_fields(adjoint_ext),
                             speeds, thickness)
    return 0.5 * (1.0 - xi * xi) * dpsi
