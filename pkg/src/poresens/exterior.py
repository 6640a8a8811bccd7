"""Exterior Neumann problem around a single pore by a boundary-element method.

The pore sits in an infinite plane-stress sheet loaded at infinity by a
constant stress ``σ₀``.  The disturbance field ``z_E`` decays at infinity and
cancels the far-field traction on the pore surface, ``σ_E·n = −σ₀·n``.  The
problem is discretized with constant elements and midpoint collocation using
the Kelvin fundamental solution; plane stress is handled with the effective
Poisson ratio ``ν/(1+ν)``.  All kernel integrals over straight elements are
evaluated in closed form.

Because the exterior problem carries no length scale, its surface stresses
are identical for every uniformly scaled copy of the pore; the estimator
solves it once per pore and driving field.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .fem import Material
from .mesh import Pore


class ExteriorError(RuntimeError):
    pass


def kirsch_reference(s, theta):
    """Hoop stress on a circular hole under remote uniaxial stress ``s``.

    ``theta`` is measured in radians from the load axis.
    """
    return s * (1.0 - 2.0 * np.cos(2.0 * np.asarray(theta, dtype=float)))


def _kernel_integrals(src, a, b, nu_bar, mu, self_mask=None):
    """Integrals of the Kelvin kernels over straight elements.

    ``src`` holds ``M`` source points, ``a`` and ``b`` the ``N`` element end
    points.  The element normal is the left-hand normal of ``b − a`` rotated
    so that it points out of the elastic domain (into the pore for a
    counterclockwise pore boundary).  Returns ``G`` and ``H`` of shape
    ``(M, N, 2, 2)``; ``self_mask`` marks source points lying at element
    midpoints, where ``H`` has zero principal value.
    """
    d = b - a
    L = np.linalg.norm(d, axis=1)
    tau = d / L[:, None]
    n = np.column_stack([-tau[:, 1], tau[:, 0]])      # into the pore
    rel = a[None, :, :] - src[:, None, :]
    p1 = np.einsum("mnk,nk->mn", rel, tau)
    p2 = p1 + L[None, :]
    h = np.einsum("mnk,nk->mn", rel, n)
    if self_mask is not None:
        h = np.where(self_mask, 0.0, h)
    zero_h = np.abs(h) <= 1e-13 * L[None, :]
    h = np.where(zero_h, 0.0, h)
    hs = np.where(zero_h, 1.0, h)

    def atan(p):
        return np.where(zero_h, 0.0, np.arctan(p / hs))

    def lnr(p):
        return 0.5 * np.log(p * p + h * h)

    A1, A2 = atan(p1), atan(p2)
    r1s, r2s = p1 * p1 + h * h, p2 * p2 + h * h
    ln1, ln2 = lnr(p1), lnr(p2)

    # displacement kernel pieces
    I_ln = (p2 * ln2 - p2 + h * A2) - (p1 * ln1 - p1 + h * A1)
    I_pp = (p2 - h * A2) - (p1 - h * A1)
    I_ph = h * (ln2 - ln1)
    I_hh = h * (A2 - A1)
    # traction kernel pieces
    theta = A2 - A1
    J_hhh = (h * p2 / (2 * r2s) + 0.5 * A2) - (h * p1 / (2 * r1s) + 0.5 * A1)
    J_hpp = (0.5 * A2 - h * p2 / (2 * r2s)) - (0.5 * A1 - h * p1 / (2 * r1s))
    J_hhp = -h * h / (2 * r2s) + h * h / (2 * r1s)
    J_p = ln2 - ln1

    tt = np.einsum("ni,nj->nij", tau, tau)[None]
    tn = np.einsum("ni,nj->nij", tau, n)[None]
    nn = np.einsum("ni,nj->nij", n, n)[None]
    sym = tn + tn.transpose(0, 1, 3, 2)
    skew = tn - tn.transpose(0, 1, 3, 2)
    eye = np.eye(2)[None, None]
    x = lambda v: v[..., None, None]  # noqa: E731

    cu = -1.0 / (8.0 * math.pi * mu * (1.0 - nu_bar))
    G = cu * ((3.0 - 4.0 * nu_bar) * x(I_ln) * eye - (x(I_pp) * tt + x(I_ph) * sym + x(I_hh) * nn))
    ct = -1.0 / (4.0 * math.pi * (1.0 - nu_bar))
    H = ct * ((1.0 - 2.0 * nu_bar) * x(theta) * eye
              + 2.0 * (x(J_hpp) * tt + x(J_hhp) * sym + x(J_hhh) * nn)
              - (1.0 - 2.0 * nu_bar) * x(J_p) * skew)
    return G, H


def _plane_strain_constants(material: Material):
    return material.nu / (1.0 + material.nu), material.shear_modulus


@dataclass(frozen=True, eq=False)
class ExteriorSolution:
    """Boundary data of the exterior problem on the (unit-scale) pore.

    ``u`` and ``traction`` are per boundary element (midpoint values);
    ``traction`` is the prescribed disturbance traction ``−σ₀·n`` with ``n``
    the pore normal pointing into the material.  ``hoop_strain_vertex`` is
    the total tangential strain at the polygon vertices.
    """

    pore: Pore
    far_field: np.ndarray
    material: Material
    u: np.ndarray
    traction: np.ndarray
    hoop_strain_vertex: np.ndarray

    @property
    def n_elements(self) -> int:
        return len(self.u)

    @cached_property
    def hoop_strain(self) -> np.ndarray:
        """Total tangential strain at element midpoints."""
        v = self.hoop_strain_vertex
        return 0.5 * (v + np.roll(v, -1))

    @property
    def hoop_stress(self) -> np.ndarray:
        """Total tangential stress at element midpoints."""
        return self.material.E * self.hoop_strain

    @property
    def hoop_stress_vertex(self) -> np.ndarray:
        return self.material.E * self.hoop_strain_vertex

    def displacement_at(self, points) -> np.ndarray:
        """Disturbance displacement at points of the elastic domain."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        nu_bar, mu = _plane_strain_constants(self.material)
        a = self.pore.boundary
        b = np.roll(a, -1, axis=0)
        G, H = _kernel_integrals(pts, a, b, nu_bar, mu)
        # the elastic domain sees the traction with its own (inward) normal
        return -np.einsum("mnij,nj->mi", G, self.traction) - np.einsum("mnij,nj->mi", H, self.u)

    def to_csv(self, path) -> None:
        """Write ``(arclength, hoop stress)`` at element midpoints."""
        L = self.pore.lengths
        s = np.cumsum(L) - 0.5 * L
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["arclength", "hoop_stress"])
            for si, hi in zip(s.tolist(), self.hoop_stress.tolist()):
                w.writerow([format(si, ".17g"), format(hi, ".17g")])


def _check_far_field(s) -> np.ndarray:
    s = np.asarray(s, dtype=float).reshape(2, 2)
    if not np.all(np.isfinite(s)):
        raise ExteriorError("far field is not finite")
    if s[0, 1] != s[1, 0] and not math.isclose(s[0, 1], s[1, 0], rel_tol=1e-12, abs_tol=1e-300):
        raise ExteriorError("far field must be symmetric")
    return 0.5 * (s + s.T)


def exterior_solve(pore: Pore, far_field, material: Material, n_elements: int | None = None) -> ExteriorSolution:
    """Solve the exterior Neumann problem driven by the far-field stress.

    ``n_elements`` defaults to the number of pore boundary segments; when it
    differs, the pore boundary is resampled at equal arclength.
    """
    return exterior_solve_many(pore, [far_field], material, n_elements)[0]


def exterior_solve_many(pore: Pore, far_fields, material: Material,
                        n_elements: int | None = None) -> list[ExteriorSolution]:
    """Exterior solutions for several far fields sharing one factorization."""
    sigmas = [_check_far_field(s) for s in far_fields]
    if n_elements is not None and n_elements != len(pore.boundary):
        pore = resample_pore(pore, n_elements)
    N = len(pore.boundary)
    if N < 16:
        raise ExteriorError("at least 16 boundary elements are required")
    nu_bar, mu = _plane_strain_constants(material)
    a = pore.boundary
    b = np.roll(a, -1, axis=0)
    n_pore = pore.normals
    mid = pore.midpoints
    system = None
    out = []
    for sigma0 in sigmas:
        t = -np.einsum("ij,nj->ni", sigma0, n_pore)
        if not np.any(sigma0):
            out.append(ExteriorSolution(pore, sigma0, material, np.zeros((N, 2)), t, np.zeros(N)))
            continue
        if system is None:
            G, H = _kernel_integrals(mid, a, b, nu_bar, mu, self_mask=np.eye(N, dtype=bool))
            A = H.transpose(0, 2, 1, 3).reshape(2 * N, 2 * N) + 0.5 * np.eye(2 * N)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("error", LinAlgWarning)
                    system = (lu_factor(A), G)
            except (ValueError, LinAlgWarning, np.linalg.LinAlgError) as exc:
                raise ExteriorError(f"rank-deficient boundary system: {exc}") from exc
        lu, G = system
        # the domain's outward normal points into the pore, flipping the traction sign
        rhs = np.einsum("mnij,nj->mi", G, -t).reshape(-1)
        u = lu_solve(lu, rhs).reshape(N, 2)
        if not np.all(np.isfinite(u)):
            raise ExteriorError("rank-deficient boundary system")
        # tangential strain of the disturbance at vertices from chord differences
        dm = mid - np.roll(mid, 1, axis=0)
        du = u - np.roll(u, 1, axis=0)
        eps_E = np.einsum("ni,ni->n", dm, du) / np.einsum("ni,ni->n", dm, dm)
        tv = dm / np.linalg.norm(dm, axis=1)[:, None]
        eps_0t = np.einsum("ni,ij,nj->n", tv, _compliance(material, sigma0), tv)
        out.append(ExteriorSolution(pore, sigma0, material, u, t, eps_0t + eps_E))
    return out


def _compliance(material: Material, sigma: np.ndarray) -> np.ndarray:
    E, nu = material.E, material.nu
    tr = np.trace(sigma)
    return ((1.0 + nu) * sigma - nu * tr * np.eye(2)) / E


def resample_pore(pore: Pore, n: int) -> Pore:
    """Pore boundary resampled at ``n`` points of equal arclength."""
    b = pore.boundary
    closed = np.vstack([b, b[:1]])
    s = np.concatenate([[0.0], np.cumsum(pore.lengths)])
    q = np.linspace(0.0, s[-1], n, endpoint=False)
    pts = np.column_stack([np.interp(q, s, closed[:, 0]), np.interp(q, s, closed[:, 1])])
    return Pore(pore.id, pore.center, pts)


def total_surface_fields(sol: ExteriorSolution) -> tuple[np.ndarray, np.ndarray]:
    """Total stress and strain tensors at element midpoints.

    On the traction-free surface the stress is uniaxial along the tangent,
    ``σ = σ_tt t⊗t``, and the plane-stress strain is
    ``(σ_tt/E)(t⊗t − ν n⊗n)``.
    """
    if sol is None or sol.u is None:
        raise ExteriorError("unsolved exterior problem")
    tt = np.einsum("ni,nj->nij", sol.pore.tangents, sol.pore.tangents)
    nn = np.einsum("ni,nj->nij", sol.pore.normals, sol.pore.normals)
    s = sol.hoop_stress
    sigma = s[:, None, None] * tt
    eps = (s / sol.material.E)[:, None, None] * (tt - sol.material.nu * nn)
    return sigma, eps
