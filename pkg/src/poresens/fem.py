"""Plane-stress linear elasticity with constant-strain triangles.

Global dofs are interleaved, ``2*i`` for x and ``2*i + 1`` for y of node
``i``.  Dirichlet conditions are imposed by eliminating the constrained dofs,
so the reduced stiffness stays symmetric positive definite; its sparse LU
factors are kept on the returned field and reused for adjoint solves.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from cvxopt import cholmod, matrix as cvx_matrix, spmatrix as cvx_spmatrix

from .mesh import Mesh, MeshError, nearest_node


class SolverError(RuntimeError):
    """Raised when the linear system cannot be solved."""


# --------------------------------------------------------------------------
# Material and boundary conditions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Material:
    """Isotropic plane-stress material.

    ``thickness`` overrides the mesh thickness when given.
    """

    E: float
    nu: float
    thickness: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.E) and self.E > 0):
            raise ValueError("Young's modulus must be positive")
        if not (0.0 <= self.nu < 0.5):
            raise ValueError("Poisson ratio must lie in [0, 0.5)")
        if self.thickness is not None and not self.thickness > 0:
            raise ValueError("thickness must be positive")

    @property
    def shear_modulus(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    def elasticity_matrix(self) -> np.ndarray:
        """Plane-stress matrix in Voigt order (xx, yy, engineering xy)."""
        E, nu = self.E, self.nu
        c = E / (1.0 - nu * nu)
        return c * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - nu)]])

    def stress_from_strain(self, eps: np.ndarray) -> np.ndarray:
        """Plane-stress constitutive law applied to ``(..., 2, 2)`` strain tensors."""
        E, nu = self.E, self.nu
        tr = eps[..., 0, 0] + eps[..., 1, 1]
        lam = E * nu / (1.0 - nu * nu)
        two_mu = E / (1.0 + nu)
        sig = two_mu * eps
        sig[..., 0, 0] += lam * tr
        sig[..., 1, 1] += lam * tr
        return sig

    def thickness_for(self, mesh: Mesh) -> float:
        return float(self.thickness if self.thickness is not None else mesh.thickness)


_COMPONENTS = {"x": (0,), "y": (1,), "xy": (0, 1), "both": (0, 1)}


def _components(c) -> tuple[int, ...]:
    if isinstance(c, str):
        try:
            return _COMPONENTS[c]
        except KeyError:
            raise ValueError(f"unknown component {c!r}") from None
    comps = tuple(sorted({int(k) for k in c}))
    if not comps or any(k not in (0, 1) for k in comps):
        raise ValueError(f"invalid components {c!r}")
    return comps


@dataclass(frozen=True)
class Dirichlet:
    """Prescribed displacement on an edge tag, node set or explicit node list."""

    target: str | Sequence[int]
    components: str | Sequence[int] = "xy"
    value: float | Sequence[float] = 0.0


@dataclass(frozen=True)
class Traction:
    """Surface traction (force per unit area) on the edges carrying ``tag``."""

    tag: str
    vector: Sequence[float]


@dataclass(frozen=True)
class PointLoad:
    """Nodal force at a node index or at the node nearest to a point ``(x, y)``."""

    node: int | Sequence[float]
    force: Sequence[float]

    def node_in(self, mesh: Mesh) -> int:
        if np.ndim(self.node) == 0:
            n = int(self.node)
            if not 0 <= n < mesh.n_nodes:
                raise MeshError(f"point load node {n} out of range")
            return n
        return nearest_node(mesh, self.node)


@dataclass(frozen=True)
class BoundaryConditions:
    dirichlet: tuple = ()
    tractions: tuple = ()
    point_loads: tuple = ()
    body_force: Sequence[float] | None = None

    def scaled(self, alpha: float) -> "BoundaryConditions":
        """Same constraints with every load multiplied by ``alpha``."""
        return BoundaryConditions(
            self.dirichlet,
            tuple(Traction(t.tag, tuple(alpha * np.asarray(t.vector, dtype=float))) for t in self.tractions),
            tuple(PointLoad(p.node, tuple(alpha * np.asarray(p.force, dtype=float))) for p in self.point_loads),
            None if self.body_force is None else tuple(alpha * np.asarray(self.body_force, dtype=float)),
        )


def _target_nodes(mesh: Mesh, target) -> np.ndarray:
    if isinstance(target, str):
        return mesh.nodes_with_tag(target)
    nodes = np.unique(np.asarray(target, dtype=np.int64))
    if nodes.size and (nodes.min() < 0 or nodes.max() >= mesh.n_nodes):
        raise MeshError("Dirichlet node index out of range")
    return nodes


def dirichlet_dofs(mesh: Mesh, bcs: BoundaryConditions) -> tuple[np.ndarray, np.ndarray]:
    """Constrained dofs (sorted) and their prescribed values.

    A dof named by several conditions takes the value of the last one.
    """
    vals: dict[int, float] = {}
    for bc in bcs.dirichlet:
        nodes = _target_nodes(mesh, bc.target)
        comps = _components(bc.components)
        v = np.broadcast_to(np.asarray(bc.value, dtype=float), (2,))
        for k in comps:
            for n in nodes.tolist():
                vals[2 * n + k] = float(v[k])
    dofs = np.array(sorted(vals), dtype=np.int64)
    return dofs, np.array([vals[d] for d in dofs.tolist()], dtype=float)


# --------------------------------------------------------------------------
# Element kernels and assembly
# --------------------------------------------------------------------------

def strain_displacement(mesh: Mesh) -> np.ndarray:
    """CST strain-displacement matrices, shape ``(n_elements, 3, 6)``."""
    p = mesh.nodes[mesh.elements]
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    two_a = (2.0 * mesh.areas)[:, None]
    b, c = b / two_a, c / two_a
    B = np.zeros((mesh.n_elements, 3, 6))
    B[:, 0, 0::2] = b
    B[:, 1, 1::2] = c
    B[:, 2, 0::2] = c
    B[:, 2, 1::2] = b
    return B


def element_dofs(mesh: Mesh) -> np.ndarray:
    e = mesh.elements
    return np.stack([2 * e, 2 * e + 1], axis=2).reshape(-1, 6)


def assemble_stiffness(mesh: Mesh, material: Material) -> sp.csr_matrix:
    """Global stiffness matrix; exactly symmetric by construction."""
    B = strain_displacement(mesh)
    D = material.elasticity_matrix()
    w = material.thickness_for(mesh) * mesh.areas
    Ke = np.einsum("eki,kl,elj->eij", B, D, B) * w[:, None, None]
    Ke = 0.5 * (Ke + Ke.transpose(0, 2, 1))
    dofs = element_dofs(mesh)
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    n = 2 * mesh.n_nodes
    return sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_loads(mesh: Mesh, material: Material, bcs: BoundaryConditions) -> np.ndarray:
    """Consistent nodal load vector from tractions, point loads and body force."""
    t = material.thickness_for(mesh)
    f = np.zeros(2 * mesh.n_nodes)
    for tr in bcs.tractions:
        edges = mesh.edges_with_tag(tr.tag)
        if len(edges) == 0:
            raise MeshError(f"no boundary edges tagged {tr.tag!r}")
        vec = np.asarray(tr.vector, dtype=float).reshape(2)
        L = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
        share = 0.5 * t * L
        for k in range(2):
            np.add.at(f, 2 * edges[:, 0] + k, share * vec[k])
            np.add.at(f, 2 * edges[:, 1] + k, share * vec[k])
    for pl in bcs.point_loads:
        n = pl.node_in(mesh)
        f[2 * n: 2 * n + 2] += np.asarray(pl.force, dtype=float).reshape(2)
    if bcs.body_force is not None:
        fb = np.asarray(bcs.body_force, dtype=float).reshape(2)
        share = t * mesh.areas / 3.0
        for k in range(2):
            for j in range(3):
                np.add.at(f, 2 * mesh.elements[:, j] + k, share * fb[k])
    if not np.all(np.isfinite(f)):
        raise SolverError("non-finite load")
    return f


# --------------------------------------------------------------------------
# Factorization and solution fields
# --------------------------------------------------------------------------

class Factorization:
    """Sparse Cholesky factors of the stiffness with constrained dofs eliminated.

    Immutable after construction; :meth:`solve` may be called from several
    threads (calls into the factorization library are serialized).
    """

    _lock = threading.Lock()

    def __init__(self, K: sp.csr_matrix, fixed: np.ndarray):
        n = K.shape[0]
        mask = np.ones(n, dtype=bool)
        mask[fixed] = False
        self.n = n
        self.K = K
        self.fixed = fixed
        self.free = np.flatnonzero(mask)
        Kff = K[self.free][:, self.free]
        self.K_fc = K[self.free][:, fixed].tocsr()
        m = Kff.shape[0]
        if m == 0:
            raise SolverError("every dof is constrained")
        low = sp.tril(Kff).tocoo()
        A = cvx_spmatrix(cvx_matrix(low.data.astype(float)), cvx_matrix(low.row.astype(np.int64)),
                         cvx_matrix(low.col.astype(np.int64)), (m, m))
        with self._lock:
            opts = dict(cholmod.options)
            cholmod.options.update({"supernodal": 2, "postorder": True})
            try:
                self._factor = cholmod.symbolic(A, uplo="L")
                cholmod.numeric(A, self._factor)
            except ArithmeticError as exc:
                raise SolverError(f"singular stiffness (insufficient constraints): {exc}") from exc
            finally:
                cholmod.options.clear()
                cholmod.options.update(opts)
        d = cholmod.diag(self._factor)
        d = np.asarray(d).ravel()
        if np.min(d) <= 1e-13 * np.max(d):
            raise SolverError("singular stiffness (insufficient constraints)")

    def solve(self, f: np.ndarray, fixed_values: np.ndarray | None = None) -> np.ndarray:
        """Full displacement vector for load ``f`` and prescribed ``fixed_values``."""
        u = np.zeros(self.n)
        rhs = f[self.free].copy()
        if fixed_values is not None and np.any(fixed_values):
            u[self.fixed] = fixed_values
            rhs -= self.K_fc @ fixed_values
        b = cvx_matrix(rhs)
        with self._lock:
            cholmod.solve(self._factor, b)
        u[self.free] = np.asarray(b).ravel()
        if not np.all(np.isfinite(u)):
            raise SolverError("solution is not finite (singular stiffness)")
        return u


@dataclass(frozen=True, eq=False)
class SolutionField:
    """Nodal displacements with recovered per-element strain and stress.

    ``u`` has shape ``(n_nodes, 2)``; ``strain`` and ``stress`` are
    ``(n_elements, 2, 2)`` symmetric tensors.  ``load`` is the external
    nodal load vector the field was solved for.
    """

    mesh: Mesh
    material: Material
    u: np.ndarray
    strain: np.ndarray
    stress: np.ndarray
    load: np.ndarray
    factorization: Factorization | None = field(default=None, repr=False)

    @property
    def vector(self) -> np.ndarray:
        return self.u.reshape(-1)

    @cached_property
    def energy(self) -> float:
        """Strain energy ½ aᵀKa."""
        a = self.vector
        if self.factorization is not None:
            return 0.5 * float(a @ (self.factorization.K @ a))
        t = self.material.thickness_for(self.mesh)
        dens = np.einsum("eij,eij->e", self.stress, self.strain)
        return 0.5 * t * float(np.dot(dens, self.mesh.areas))

    def residual(self) -> float:
        """Relative residual of K a = f on the unconstrained dofs."""
        fac = self.factorization
        r = (fac.K @ self.vector - self.load)[fac.free]
        scale = max(np.linalg.norm(self.load[fac.free]), np.linalg.norm((fac.K @ self.vector)[fac.free]), 1e-300)
        return float(np.linalg.norm(r) / scale)


def field_from_displacement(mesh: Mesh, material: Material, a: np.ndarray, load: np.ndarray,
                            factorization: Factorization | None = None) -> SolutionField:
    """Recover CST strains and stresses from a nodal displacement vector."""
    B = strain_displacement(mesh)
    v = np.einsum("eij,ej->ei", B, a[element_dofs(mesh)])
    eps = np.empty((mesh.n_elements, 2, 2))
    eps[:, 0, 0] = v[:, 0]
    eps[:, 1, 1] = v[:, 1]
    eps[:, 0, 1] = eps[:, 1, 0] = 0.5 * v[:, 2]
    sig = material.stress_from_strain(eps)
    u = a.reshape(-1, 2).copy()
    for arr in (u, eps, sig):
        arr.setflags(write=False)
    return SolutionField(mesh, material, u, eps, sig, load, factorization)


def factorize(mesh: Mesh, material: Material, bcs: BoundaryConditions) -> tuple[Factorization, np.ndarray]:
    fixed, values = dirichlet_dofs(mesh, bcs)
    K = assemble_stiffness(mesh, material)
    return Factorization(K, fixed), values


def solve_primary(mesh: Mesh, material: Material, bcs: BoundaryConditions) -> SolutionField:
    """Solve the plane-stress problem and recover element stresses.

    The factorization is kept on the result for reuse by adjoint solves.
    """
    if not np.all(np.isfinite(mesh.nodes)):
        raise SolverError("non-finite input")
    fac, values = factorize(mesh, material, bcs)
    f = assemble_loads(mesh, material, bcs)
    a = fac.solve(f, values)
    return field_from_displacement(mesh, material, a, f, fac)


def solve_with_factorization(fac: Factorization, mesh: Mesh, material: Material,
                             load: np.ndarray) -> SolutionField:
    """Solve for another load with homogeneous Dirichlet values."""
    a = fac.solve(np.asarray(load, dtype=float))
    return field_from_displacement(mesh, material, a, np.asarray(load, dtype=float), fac)


# --------------------------------------------------------------------------
# Point sampling
# --------------------------------------------------------------------------

def locate(mesh: Mesh, point, tol: float = 1e-10) -> np.ndarray:
    """Elements whose closure contains ``point``."""
    q = np.asarray(point, dtype=float).reshape(2)
    p = mesh.nodes[mesh.elements]
    x0, y0 = p[:, 0, 0], p[:, 0, 1]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    rx, ry = q[0] - x0, q[1] - y0
    l1 = (rx * d2[:, 1] - ry * d2[:, 0]) / det
    l2 = (d1[:, 0] * ry - d1[:, 1] * rx) / det
    l0 = 1.0 - l1 - l2
    return np.flatnonzero((l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol))


def evaluate_element_field_at(mesh: Mesh, values: np.ndarray, point) -> np.ndarray:
    """Piecewise-constant element field at ``point``.

    On an edge or vertex the incident elements are averaged with area
    weights.
    """
    hits = locate(mesh, point)
    if hits.size == 0:
        raise MeshError(f"point {tuple(np.ravel(point))} lies outside the mesh")
    if hits.size == 1:
        return np.array(values[hits[0]])
    w = mesh.areas[hits]
    return np.tensordot(w / w.sum(), values[hits], axes=1)


def evaluate_stress_at(mesh: Mesh, field: SolutionField, point) -> np.ndarray:
    return evaluate_element_field_at(mesh, field.stress, point)


def evaluate_strain_at(mesh: Mesh, field: SolutionField, point) -> np.ndarray:
    return evaluate_element_field_at(mesh, field.strain, point)
