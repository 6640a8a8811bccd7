"""Quantities of interest, their adjoint loads and adjoint solves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem
from .mesh import Mesh, MeshError, nearest_node, select_region

COMPLIANCE = "compliance"
NODAL_DISP = "nodal_disp"
REGION_AVG_DISP = "region_avg_disp"
KINDS = (COMPLIANCE, NODAL_DISP, REGION_AVG_DISP)


@dataclass(frozen=True)
class QuantitySpec:
    """Which quantity of interest to evaluate.

    ``node`` (or ``point``, resolved to the nearest node of whichever mesh
    the quantity is evaluated on) is used by nodal displacement; ``region``
    (an element-set name or explicit element indices) or ``box`` by the
    region-averaged displacement.  ``name`` is a display label only.
    """

    kind: str
    component: str = "y"
    node: int | None = None
    region: str | tuple | None = None
    point: tuple | None = None
    box: tuple | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown quantity kind {self.kind!r}")
        if self.component not in ("x", "y"):
            raise ValueError("component must be 'x' or 'y'")
        if self.kind == NODAL_DISP and self.node is None and self.point is None:
            raise ValueError("nodal_disp needs a node or a point")
        if self.kind == REGION_AVG_DISP and self.region is None and self.box is None:
            raise ValueError("region_avg_disp needs a region or a box")
        for name in ("region", "point", "box"):
            v = getattr(self, name)
            if isinstance(v, (list, np.ndarray)):
                object.__setattr__(self, name, tuple(v))

    @property
    def label(self) -> str:
        return self.name or self.kind

    @property
    def comp(self) -> int:
        return 0 if self.component == "x" else 1

    @classmethod
    def from_dict(cls, d: dict) -> "QuantitySpec":
        d = dict(d)
        for key in ("point", "box"):
            if d.get(key) is not None:
                d[key] = tuple(float(v) for v in d[key])
        if isinstance(d.get("region"), list):
            d["region"] = tuple(int(e) for e in d["region"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind != COMPLIANCE:
            d["component"] = self.component
        if self.node is not None:
            d["node"] = int(self.node)
        if self.region is not None:
            d["region"] = self.region if isinstance(self.region, str) else [int(e) for e in self.region]
        if self.point is not None:
            d["point"] = [float(v) for v in self.point]
        if self.box is not None:
            d["box"] = [float(v) for v in self.box]
        if self.name is not None:
            d["name"] = self.name
        return d


def region_elements(spec: QuantitySpec, mesh: Mesh) -> np.ndarray:
    if spec.region is None:
        return select_region(mesh, spec.box)
    if isinstance(spec.region, str):
        if spec.region not in mesh.element_sets:
            raise MeshError(f"unknown element set {spec.region!r}")
        el = np.asarray(mesh.element_sets[spec.region])
    else:
        el = np.unique(np.asarray(spec.region, dtype=np.int64))
        if el.size and (el.min() < 0 or el.max() >= mesh.n_elements):
            raise MeshError("region element index out of range")
    if el.size == 0:
        raise MeshError("empty region")
    return el


def spec_node(spec: QuantitySpec, mesh: Mesh) -> int:
    if spec.node is None:
        return nearest_node(mesh, spec.point)
    if not 0 <= spec.node < mesh.n_nodes:
        raise MeshError(f"node {spec.node} out of range")
    return int(spec.node)


def adjoint_load(spec: QuantitySpec, mesh: Mesh, primary_load: np.ndarray | None = None) -> np.ndarray:
    """Nodal load vector driving the adjoint problem of ``spec``.

    Compliance returns the primary load itself; nodal displacement a unit
    load at the node; the region average the consistent load of a constant
    body force ``1/area`` over the region, which sums to exactly one.
    """
    n = 2 * mesh.n_nodes
    if spec.kind == COMPLIANCE:
        if primary_load is None:
            raise ValueError("compliance adjoint needs the primary load")
        return np.asarray(primary_load, dtype=float)
    g = np.zeros(n)
    if spec.kind == NODAL_DISP:
        g[2 * spec_node(spec, mesh) + spec.comp] = 1.0
        return g
    el = region_elements(spec, mesh)
    a = mesh.areas[el]
    share = np.repeat(a / (3.0 * a.sum()), 3)
    np.add.at(g, 2 * mesh.elements[el].ravel() + spec.comp, share)
    return g


@dataclass(frozen=True, eq=False)
class AdjointPair:
    primary: fem.SolutionField
    adjoint: fem.SolutionField
    spec: QuantitySpec


def solve_adjoint(spec: QuantitySpec, primary: fem.SolutionField) -> AdjointPair:
    """Adjoint field for ``spec`` reusing the primary factorization.

    For compliance with homogeneous Dirichlet values the adjoint system is
    the primary system itself, so the primary field is returned as the
    adjoint.
    """
    fac = primary.factorization
    if fac is None:
        raise fem.SolverError("primary field carries no factorization")
    mesh, mat = primary.mesh, primary.material
    if spec.kind == COMPLIANCE:
        a = primary.vector
        if fac.fixed.size == 0 or not np.any(a[fac.fixed]):
            return AdjointPair(primary, primary, spec)
    g = adjoint_load(spec, mesh, primary.load)
    return AdjointPair(primary, fem.solve_with_factorization(fac, mesh, mat, g), spec)


def evaluate_quantity(spec: QuantitySpec, mesh: Mesh, field: fem.SolutionField,
                      loads: np.ndarray | None = None) -> float:
    """Value of the quantity of interest for a solved field."""
    if field.u.shape[0] != mesh.n_nodes:
        raise MeshError("field does not belong to this mesh")
    if spec.kind == COMPLIANCE:
        f = field.load if loads is None else np.asarray(loads, dtype=float)
        return float(field.vector @ f)
    if spec.kind == NODAL_DISP:
        return float(field.u[spec_node(spec, mesh), spec.comp])
    el = region_elements(spec, mesh)
    a = mesh.areas[el]
    ubar = field.u[mesh.elements[el], spec.comp].mean(axis=1)
    return float(np.dot(a, ubar) / a.sum())
