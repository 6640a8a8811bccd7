"""Triangle meshes, pore polygons, mesh generation and JSON I/O.

Meshes are linear-triangle (CST) meshes with tagged boundary edges.  Pores
are closed counterclockwise polygons at full scale together with the center
about which they are scaled.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import shapely

from . import delaunay, schemas

SCHEMA = "poresens/1"


class MeshError(ValueError):
    """Raised when a mesh or pore violates one of its invariants."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def polygon_area(xy: np.ndarray) -> float:
    """Signed shoelace area; positive for counterclockwise vertex order."""
    xy = np.asarray(xy, dtype=float)
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def triangle_areas(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    p0, p1, p2 = (nodes[elements[:, k]] for k in range(3))
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))


# --------------------------------------------------------------------------
# Mesh
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable 2D linear-triangle mesh.

    ``boundary_edges`` is an ``(k, 2)`` array of node pairs, ``edge_tags`` the
    matching tag strings.  ``node_sets`` and ``element_sets`` map names to
    index arrays.  Construction validates every invariant and raises
    :class:`MeshError` on the first violation.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: tuple[str, ...]
    node_sets: dict = field(default_factory=dict)
    element_sets: dict = field(default_factory=dict)
    thickness: float = 1.0

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "nodes", _frozen(np.reshape(self.nodes, (-1, 2)), float))
        set_(self, "elements", _frozen(np.reshape(self.elements, (-1, 3)), np.int64))
        set_(self, "boundary_edges", _frozen(np.reshape(self.boundary_edges, (-1, 2)), np.int64))
        set_(self, "edge_tags", tuple(str(t) for t in self.edge_tags))
        set_(self, "node_sets", {k: _frozen(v, np.int64) for k, v in sorted(self.node_sets.items())})
        set_(self, "element_sets", {k: _frozen(v, np.int64) for k, v in sorted(self.element_sets.items())})
        set_(self, "thickness", float(self.thickness))
        self._validate()

    # -- derived quantities -------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @cached_property
    def areas(self) -> np.ndarray:
        return triangle_areas(self.nodes, self.elements)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    @cached_property
    def edges(self) -> np.ndarray:
        """Distinct undirected edges, sorted node pairs."""
        return delaunay.unique_edges(self.elements, self.n_nodes)[0]

    @cached_property
    def boundary_loops(self) -> list[np.ndarray]:
        """Boundary loops as node index cycles; the outer loop comes first."""
        nbr: dict[int, list[int]] = {}
        for a, b in self.boundary_edges:
            nbr.setdefault(int(a), []).append(int(b))
            nbr.setdefault(int(b), []).append(int(a))
        seen: set[int] = set()
        loops = []
        for start in sorted(nbr):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            prev, cur = start, nbr[start][0]
            while cur != start:
                loop.append(cur)
                seen.add(cur)
                a, b = nbr[cur]
                prev, cur = cur, (b if a == prev else a)
            loops.append(np.array(loop))
        loops.sort(key=lambda lp: -abs(polygon_area(self.nodes[lp])))
        return loops

    @property
    def n_holes(self) -> int:
        return max(len(self.boundary_loops) - 1, 0)

    def euler_characteristic(self) -> int:
        return self.n_nodes - len(self.edges) + self.n_elements

    def edges_with_tag(self, tag: str) -> np.ndarray:
        mask = np.array([t == tag for t in self.edge_tags], dtype=bool)
        return self.boundary_edges[mask]

    def nodes_with_tag(self, tag: str) -> np.ndarray:
        """Nodes on edges carrying ``tag``, or the node set of that name."""
        if tag in self.node_sets:
            return np.asarray(self.node_sets[tag])
        e = self.edges_with_tag(tag)
        if len(e) == 0:
            raise MeshError(f"unknown edge tag or node set {tag!r}")
        return np.unique(e)

    def min_angle(self) -> float:
        """Smallest interior angle over all elements, in degrees."""
        p = self.nodes[self.elements]
        angles = []
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cos = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
        return float(np.min(angles))

    # -- validation ---------------------------------------------------------
    def _validate(self):
        n = len(self.nodes)
        if not np.all(np.isfinite(self.nodes)):
            raise MeshError("non-finite node coordinate")
        if len(self.boundary_edges) != len(self.edge_tags):
            raise MeshError("boundary_edges and edge_tags differ in length")
        for name, idx in (("elements", self.elements), ("boundary_edges", self.boundary_edges)):
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                bad = int(np.argmax((idx < 0) | (idx >= n)).__index__() // idx.shape[1])
                raise MeshError(f"node index out of range in {name} at entry {bad}")
        for name, idx in self.node_sets.items():
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise MeshError(f"node index out of range in node set {name!r}")
        for name, idx in self.element_sets.items():
            if idx.size and (idx.min() < 0 or idx.max() >= len(self.elements)):
                raise MeshError(f"element index out of range in element set {name!r}")
        if self.thickness <= 0:
            raise MeshError("thickness must be positive")

        areas = triangle_areas(self.nodes, self.elements)
        bad = np.flatnonzero(areas <= 0)
        if bad.size:
            kind = "negative" if areas[bad[0]] < 0 else "zero"
            raise MeshError(f"{kind} element area at element {bad[0]}")

        # edges used by exactly one element are the boundary
        uniq, counts = delaunay.unique_edges(self.elements, n)
        if np.any(counts > 2):
            raise MeshError("edge shared by more than two elements (non-manifold)")
        topo = {tuple(x) for x in uniq[counts == 1]}
        given = [tuple(sorted(x)) for x in self.boundary_edges.tolist()]
        if len(set(given)) != len(given):
            raise MeshError("duplicate boundary edge")
        if set(given) != topo:
            missing = sorted(topo - set(given))
            extra = sorted(set(given) - topo)
            raise MeshError(f"boundary edges do not match mesh boundary (missing {missing[:3]}, extra {extra[:3]})")

        deg: dict[int, int] = {}
        for a, b in given:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        odd = [k for k, d in deg.items() if d != 2]
        if odd:
            raise MeshError(f"boundary does not partition into closed loops at node {odd[0]}")

        used = np.zeros(n, dtype=bool)
        used[self.elements.ravel()] = True
        if not used.all():
            raise MeshError(f"node {int(np.argmin(used))} is not referenced by any element")

        loops = self.boundary_loops
        if len(self.elements) and len(loops) < 1:
            raise MeshError("mesh has no boundary loop")
        holes = len(loops) - 1
        chi = n - len(uniq) + len(self.elements)
        if chi != 1 - holes:
            raise MeshError(f"Euler relation violated: V-E+T={chi}, expected {1 - holes}")


# --------------------------------------------------------------------------
# Pores
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Pore:
    """A pore polygon at full scale with the center it shrinks toward."""

    id: str
    center: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "center", _frozen(np.reshape(self.center, 2), float))
        b = np.reshape(np.asarray(self.boundary, dtype=float), (-1, 2))
        if len(b) > 1 and np.allclose(b[0], b[-1]):
            b = b[:-1]
        object.__setattr__(self, "boundary", _frozen(b, float))
        self._validate()

    def _validate(self):
        b = self.boundary
        if len(b) < 3 or not np.all(np.isfinite(b)):
            raise MeshError(f"pore {self.id}: degenerate boundary")
        if polygon_area(b) <= 0:
            raise MeshError(f"pore {self.id}: boundary must be counterclockwise with positive area")
        if not shapely.LinearRing(b).is_simple:
            raise MeshError(f"pore {self.id}: boundary self-intersects")
        vn = np.einsum("ij,ij->i", self.midpoints - self.center, self.normals)
        if np.any(vn <= 0):
            k = int(np.argmax(vn <= 0))
            raise MeshError(f"pore {self.id}: not star-shaped about its center (segment {k})")

    @cached_property
    def area(self) -> float:
        return polygon_area(self.boundary)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.boundary, -1, axis=0) - self.boundary, axis=1)

    @property
    def perimeter(self) -> float:
        return float(self.lengths.sum())

    @cached_property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.boundary + np.roll(self.boundary, -1, axis=0))

    @cached_property
    def tangents(self) -> np.ndarray:
        d = np.roll(self.boundary, -1, axis=0) - self.boundary
        return d / np.linalg.norm(d, axis=1)[:, None]

    @cached_property
    def normals(self) -> np.ndarray:
        """Unit normals pointing out of the pore, into the material."""
        t = self.tangents
        return np.column_stack([t[:, 1], -t[:, 0]])

    @cached_property
    def polygon(self) -> shapely.Polygon:
        return shapely.Polygon(self.boundary)

    @property
    def max_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.boundary - self.center, axis=1)))

    def scaled(self, eta: float) -> "Pore":
        """The pore shrunk (or grown) radially about its center."""
        return Pore(self.id, self.center, self.center + eta * (self.boundary - self.center))

    def translated(self, offset) -> "Pore":
        off = np.asarray(offset, dtype=float)
        return Pore(self.id, self.center + off, self.boundary + off)

    def rotated(self, angle: float) -> "Pore":
        """Rotate about the pore center by ``angle`` radians."""
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return Pore(self.id, self.center, self.center + (self.boundary - self.center) @ rot.T)


def circle_pore(pore_id: str, center, radius: float, n: int = 64, phase: float = 0.0) -> Pore:
    """Circular pore discretized as a regular ``n``-gon inscribed in the circle."""
    th = phase + 2 * np.pi * np.arange(n) / n
    c = np.asarray(center, dtype=float)
    return Pore(pore_id, c, c + radius * np.column_stack([np.cos(th), np.sin(th)]))


def ellipse_pore(pore_id: str, center, a: float, b: float, n: int = 64, angle: float = 0.0) -> Pore:
    """Elliptical pore with semi-axes ``a`` (along ``angle``) and ``b``."""
    th = 2 * np.pi * np.arange(n) / n
    local = np.column_stack([a * np.cos(th), b * np.sin(th)])
    c_, s_ = math.cos(angle), math.sin(angle)
    rot = np.array([[c_, -s_], [s_, c_]])
    c = np.asarray(center, dtype=float)
    return Pore(pore_id, c, c + local @ rot.T)


# --------------------------------------------------------------------------
# Queries
# --------------------------------------------------------------------------

def nearest_node(mesh: Mesh, point) -> int:
    """Index of the node closest to ``point``; ties go to the lowest index."""
    if mesh.n_nodes == 0:
        raise MeshError("empty mesh")
    d2 = np.sum((mesh.nodes - np.asarray(point, dtype=float)) ** 2, axis=1)
    return int(np.argmin(d2))


def select_region(mesh: Mesh, box) -> np.ndarray:
    """Elements whose centroid lies in the closed box ``(x0, y0, x1, y1)``."""
    if mesh.n_elements == 0:
        raise MeshError("empty mesh")
    x0, y0, x1, y1 = map(float, box)
    c = mesh.centroids
    sel = np.flatnonzero((c[:, 0] >= x0) & (c[:, 0] <= x1) & (c[:, 1] >= y0) & (c[:, 1] <= y1))
    if sel.size == 0:
        raise MeshError("empty region")
    return sel


def with_sets(mesh: Mesh, node_sets: dict | None = None, element_sets: dict | None = None) -> Mesh:
    """Copy of ``mesh`` with additional named sets."""
    ns = dict(mesh.node_sets)
    ns.update(node_sets or {})
    es = dict(mesh.element_sets)
    es.update(element_sets or {})
    return Mesh(mesh.nodes, mesh.elements, mesh.boundary_edges, mesh.edge_tags, ns, es, mesh.thickness)


# --------------------------------------------------------------------------
# Generation
# --------------------------------------------------------------------------

def rectangle_outline(width: float, height: float, origin=(0.0, 0.0)):
    """Counterclockwise rectangle vertices and the tags of its four sides."""
    x0, y0 = map(float, origin)
    verts = np.array([[x0, y0], [x0 + width, y0], [x0 + width, y0 + height], [x0, y0 + height]])
    return verts, ["bottom", "right", "top", "left"]


def generate_rect_mesh(width: float, height: float, h: float, thickness: float = 1.0) -> Mesh:
    """Structured right-triangle grid on ``[0, width] x [0, height]``.

    The grid pitch is ``width / round(width / h)`` (and likewise in y), so
    node coordinates are exact multiples of the pitch.
    """
    if not (width > 0 and height > 0 and h > 0):
        raise MeshError("degenerate dimensions")
    # one cell across the short side is allowed, so a 2 x 1 plate meshes at h = 1
    if h > min(width, height):
        raise MeshError("h too large: need h <= min(width, height)")
    nx = max(int(round(width / h)), 1)
    ny = max(int(round(height / h)), 1)
    xs = np.arange(nx + 1) * (width / nx)
    ys = np.arange(ny + 1) * (height / ny)
    xs[-1], ys[-1] = width, height
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[1:, :-1].ravel()
    elements = np.vstack([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    # interleave so the two triangles of a cell are adjacent in numbering
    elements = elements.reshape(2, -1, 3).transpose(1, 0, 2).reshape(-1, 3)

    edges, tags = [], []
    for i in range(nx):
        edges.append((idx[0, i], idx[0, i + 1])); tags.append("bottom")
    for j in range(ny):
        edges.append((idx[j, nx], idx[j + 1, nx])); tags.append("right")
    for i in range(nx, 0, -1):
        edges.append((idx[ny, i], idx[ny, i - 1])); tags.append("top")
    for j in range(ny, 0, -1):
        edges.append((idx[j, 0], idx[j - 1, 0])); tags.append("left")
    node_sets = {
        "bottom": idx[0, :], "top": idx[ny, :], "left": idx[:, 0], "right": idx[:, nx],
    }
    return Mesh(nodes, elements, np.array(edges), tags, node_sets, {}, thickness)


def _check_pores(outer_poly: shapely.Polygon, pores: Sequence[Pore]):
    for p in pores:
        if not outer_poly.contains(p.polygon) or outer_poly.exterior.distance(p.polygon) <= 0:
            raise MeshError(f"pore {p.id} touches or lies outside the outer boundary")
    for i, p in enumerate(pores):
        for q in pores[i + 1:]:
            if p.polygon.intersects(q.polygon):
                raise MeshError("pores overlap")


def _insert_outline_points(outer, tags, points, rtol=1e-12):
    """Move points lying on the outline into it as vertices.

    Returns the new outline, its tags and the remaining interior points.
    """
    verts = [np.asarray(v, dtype=float) for v in outer]
    tags = list(tags)
    scale = float(np.ptp(outer, axis=0).max())
    interior = []
    for q in points:
        q = np.asarray(q, dtype=float)
        placed = False
        for i in range(len(verts)):
            a, b = verts[i], verts[(i + 1) % len(verts)]
            d = b - a
            t = float(np.dot(q - a, d) / np.dot(d, d))
            if np.linalg.norm(a + np.clip(t, 0, 1) * d - q) > rtol * scale:
                continue
            if 0 < t < 1 and min(np.linalg.norm(q - a), np.linalg.norm(q - b)) > rtol * scale:
                verts.insert(i + 1, q)
                tags.insert(i + 1, tags[i])
            placed = True
            break
        if not placed:
            interior.append(q)
    return np.array(verts), tags, interior


@dataclass(frozen=True, eq=False)
class MatchedMeshes:
    """A porous mesh and its pore-filled twin, identical outside the pores.

    ``porous_nodes`` maps porous-mesh node indices to dense-mesh indices.
    """

    porous: Mesh
    dense: Mesh
    porous_nodes: np.ndarray


def _build_meshes(outer, outer_tags, pores, h, *, grading, pore_size, boxes, min_angle,
                  extra_points, thickness):
    outer = np.asarray(outer, dtype=float)
    if polygon_area(outer) <= 0:
        raise MeshError("outer polygon must be counterclockwise")
    if outer_tags is None:
        outer_tags = [f"outer{i}" for i in range(len(outer))]
    outer_poly = shapely.Polygon(outer)
    if not outer_poly.is_valid:
        raise MeshError("outer polygon is not simple")
    pores = list(pores)
    _check_pores(outer_poly, pores)
    if h <= 0:
        raise MeshError("h must be positive")

    outer, outer_tags, extra_points = _insert_outline_points(outer, list(outer_tags), extra_points)
    loops = [(outer, list(outer_tags))]
    for p in pores:
        loops.append((np.asarray(p.boundary), [f"pore:{p.id}"] * len(p.boundary)))
    polylines = []
    for box in boxes or {}:
        x0, y0, x1, y1 = map(float, boxes[box])
        polylines.append((np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]), f"region:{box}"))

    if pore_size is None or np.ndim(pore_size) == 0:
        pore_size = [pore_size] * len(pores)
    if len(pore_size) != len(pores):
        raise MeshError("one pore size per pore is required")
    pore_sizes = []
    for p, ps in zip(pores, pore_size):
        s = float(np.mean(p.lengths))
        pore_sizes.append(min(h / 4.0, s) if ps is None else min(float(ps), s))
        if pore_sizes[-1] <= 0:
            raise MeshError("pore size must be positive")

    def size(xy):
        s = np.full(len(xy), float(h))
        for p, sp in zip(pores, pore_sizes):
            reach = p.max_radius + (h - sp) / grading
            near = np.flatnonzero(np.sum((xy - p.center) ** 2, axis=1) < reach * reach)
            if near.size:
                d = delaunay.distance_to_boundary(xy[near], p.boundary)
                s[near] = np.minimum(s[near], sp + grading * d)
        return s

    region_polys = [outer_poly] + [p.polygon for p in pores]
    tri = delaunay.refine(loops, polylines, region_polys, size, h, min_angle=min_angle,
                          extra_points=extra_points)
    pts, tris, region = tri.points, tri.triangles, tri.regions

    def assemble(keep_mask):
        elems = tris[keep_mask]
        used = np.unique(elems)
        remap = -np.ones(len(pts), dtype=np.int64)
        remap[used] = np.arange(len(used))
        uniq, counts = delaunay.unique_edges(elems, len(pts))
        bnd = uniq[counts == 1]
        seg_tag = {tuple(sorted(s)): t for s, t in zip(tri.segments.tolist(), tri.segment_tags)}
        tags = []
        for a, b in bnd.tolist():
            t = seg_tag.get((a, b))
            if t is None:
                raise MeshError("internal meshing error: boundary edge is not a constraint segment")
            tags.append(t)
        # orient boundary edges consistently with the element that owns them
        npts = len(pts)
        directed = elems[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        fwd = np.isin(bnd[:, 0] * npts + bnd[:, 1], directed[:, 0] * npts + directed[:, 1])
        oriented = np.where(fwd[:, None], bnd, bnd[:, ::-1])
        node_sets = {}
        for t in sorted(set(tri.segment_tags)):
            on = np.unique(np.array([s for s, tt in zip(tri.segments.tolist(), tri.segment_tags) if tt == t]))
            on = on[remap[on] >= 0]
            node_sets[t] = remap[on]
        elem_sets = {}
        kept_region = region[keep_mask]
        elem_sets["material"] = np.flatnonzero(kept_region == 0)
        for k, p in enumerate(pores, start=1):
            inside = np.flatnonzero(kept_region == k)
            if inside.size:
                elem_sets[f"pore:{p.id}"] = inside
        if boxes:
            cent = pts[elems].mean(axis=1)
            for name, box in boxes.items():
                x0, y0, x1, y1 = map(float, box)
                sel = np.flatnonzero((cent[:, 0] >= x0) & (cent[:, 0] <= x1)
                                     & (cent[:, 1] >= y0) & (cent[:, 1] <= y1) & (kept_region == 0))
                elem_sets[name] = sel
        mesh = Mesh(pts[used], remap[elems], remap[oriented].reshape(-1, 2), tags,
                    node_sets, elem_sets, thickness)
        return mesh, used

    porous, used_p = assemble(region == 0)
    dense, used_d = assemble(region >= 0)
    inv = -np.ones(len(pts), dtype=np.int64)
    inv[used_d] = np.arange(len(used_d))
    return MatchedMeshes(porous, dense, inv[used_p])


def generate_porous_mesh(outer, pores: Sequence[Pore], h: float, *, outer_tags=None,
                         grading: float = 0.3, pore_size: float | None = None,
                         regions: dict | None = None, min_angle: float = 20.0,
                         extra_points: Iterable = (), thickness: float = 1.0) -> Mesh:
    """Conforming Delaunay mesh of ``outer`` minus the pore polygons.

    Element size is ``h`` away from pores and grades linearly (rate
    ``grading``) down to ``min(h/4, mean pore segment length)`` on each pore
    boundary; ``pore_size`` (a scalar or one value per pore) overrides
    ``h/4``.  ``regions`` maps names to boxes ``(x0, y0, x1, y1)`` whose
    edges are inserted as constraints and exposed as element sets, and
    ``extra_points`` become mesh nodes (points on the outline are inserted
    into it).
    """
    return generate_matched_meshes(outer, pores, h, outer_tags=outer_tags, grading=grading,
                                   pore_size=pore_size, regions=regions, min_angle=min_angle,
                                   extra_points=extra_points, thickness=thickness).porous


def generate_matched_meshes(outer, pores: Sequence[Pore], h: float, *, outer_tags=None,
                            grading: float = 0.3, pore_size: float | None = None,
                            regions: dict | None = None, min_angle: float = 20.0,
                            extra_points: Iterable = (), thickness: float = 1.0) -> MatchedMeshes:
    """Porous mesh plus the same triangulation with pore interiors filled in.

    The two meshes share every node and element outside the pores, so the
    difference of a quantity between them carries no far-field
    discretization noise.
    """
    extra = [np.asarray(p.center) for p in pores] + [np.asarray(x, dtype=float) for x in extra_points]
    return _build_meshes(outer, outer_tags, pores, h, grading=grading, pore_size=pore_size,
                         boxes=regions, min_angle=min_angle, extra_points=extra, thickness=thickness)


# --------------------------------------------------------------------------
# JSON I/O
# --------------------------------------------------------------------------

def _canonical(obj) -> str:
    if isinstance(obj, dict):
        return "{" + ",".join(json.dumps(str(k)) + ":" + _canonical(obj[k]) for k in sorted(obj)) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canonical(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError("non-finite float in JSON output")
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Sorted-key JSON with every float written to 17 significant digits."""
    return _canonical(obj)


def mesh_to_dict(mesh: Mesh) -> dict:
    return {
        "schema": SCHEMA,
        "nodes": [[float(x), float(y)] for x, y in mesh.nodes],
        "elements": mesh.elements.tolist(),
        "boundary_edges": [{"n": [int(a), int(b)], "tag": t}
                           for (a, b), t in zip(mesh.boundary_edges.tolist(), mesh.edge_tags)],
        "node_sets": {k: v.tolist() for k, v in mesh.node_sets.items()},
        "element_sets": {k: v.tolist() for k, v in mesh.element_sets.items()},
        "thickness": float(mesh.thickness),
    }


def mesh_from_dict(d: dict) -> Mesh:
    try:
        edges = d.get("boundary_edges", [])
        return Mesh(
            nodes=np.array(d["nodes"], dtype=float).reshape(-1, 2),
            elements=np.array(d["elements"], dtype=np.int64).reshape(-1, 3),
            boundary_edges=np.array([e["n"] for e in edges], dtype=np.int64).reshape(-1, 2),
            edge_tags=[e.get("tag", "") for e in edges],
            node_sets=d.get("node_sets", {}),
            element_sets=d.get("element_sets", {}),
            thickness=d.get("thickness", 1.0),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"mesh parse error: {exc}") from exc


def load_mesh(path) -> Mesh:
    try:
        d = json.loads(Path(path).read_text())
        schemas.validate(d, schemas.MESH, "mesh")
    except (json.JSONDecodeError, ValueError) as exc:
        raise MeshError(f"mesh parse error: {exc}") from exc
    return mesh_from_dict(d)


def save_mesh(mesh: Mesh, path) -> None:
    Path(path).write_text(canonical_json(mesh_to_dict(mesh)) + "\n")


def pores_to_list(pores: Sequence[Pore]) -> list:
    return [{"id": p.id, "center": [float(v) for v in p.center],
             "boundary": [[float(x), float(y)] for x, y in p.boundary]} for p in pores]


def pores_from_list(items: list) -> list[Pore]:
    pores = []
    for it in items:
        b = np.asarray(it["boundary"], dtype=float)
        if polygon_area(b) < 0:
            b = b[::-1]
        pores.append(Pore(it["id"], it["center"], b))
    ids = [p.id for p in pores]
    if len(set(ids)) != len(ids):
        raise MeshError("duplicate pore id")
    return pores


def load_pores(path) -> list[Pore]:
    try:
        d = json.loads(Path(path).read_text())
        schemas.validate(d, schemas.PORES, "pores file")
    except (json.JSONDecodeError, ValueError) as exc:
        raise MeshError(f"pores parse error: {exc}") from exc
    if isinstance(d, dict):
        d = d["pores"]
    return pores_from_list(d)


def save_pores(pores: Sequence[Pore], path) -> None:
    Path(path).write_text(canonical_json(pores_to_list(pores)) + "\n")
