"""Conforming Delaunay refinement of polygonal domains.

Constraint segments are split at their midpoints until no vertex lies inside
any diametral circle, at which point every subsegment is a Delaunay edge.
Bad triangles (small angle or too large for the local size field) are then
refined by circumcenter insertion in batches, Ruppert style: a circumcenter
that would encroach a subsegment is discarded and the subsegment split
instead.  Each pass re-triangulates the whole point set with Qhull.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import shapely
from scipy.spatial import Delaunay, cKDTree

log = logging.getLogger(__name__)


@dataclass
class Triangulation:
    points: np.ndarray
    triangles: np.ndarray      # counterclockwise, region >= 0 only
    regions: np.ndarray        # 0 material, k > 0 inside region polygon k
    segments: np.ndarray       # constraint subsegments (node pairs)
    segment_tags: list


def distance_to_boundary(xy: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Unsigned distance from points to the boundary of a closed polygon."""
    xy = np.asarray(xy, dtype=float)
    a = np.asarray(verts, dtype=float)
    b = np.roll(a, -1, axis=0)
    d = b - a
    L2 = np.einsum("ij,ij->i", d, d)
    best = np.full(len(xy), np.inf)
    chunk = max(1, 200000 // max(len(a), 1))
    for s in range(0, len(xy), chunk):
        p = xy[s:s + chunk, None, :]
        t = np.clip(np.einsum("pij,ij->pi", p - a[None], d) / L2[None], 0.0, 1.0)
        q = a[None] + t[..., None] * d[None]
        best[s:s + chunk] = np.sqrt(np.min(np.sum((p - q) ** 2, axis=2), axis=1))
    return best


def _hex_lattice(bounds, spacing):
    x0, y0, x1, y1 = bounds
    dy = spacing * math.sqrt(3) / 2
    ny = int(math.ceil((y1 - y0) / dy)) + 1
    nx = int(math.ceil((x1 - x0) / spacing)) + 2
    j, i = np.mgrid[0:ny, 0:nx]
    x = x0 + (i + 0.5 * (j % 2)) * spacing
    y = y0 + j * dy
    return np.column_stack([x.ravel(), y.ravel()])


class _Regions:
    def __init__(self, polys):
        self.outer = polys[0]
        shapely.prepare(self.outer)
        self.inner = []
        for p in polys[1:]:
            c = np.array(p.centroid.coords[0])
            r = float(np.max(np.linalg.norm(np.asarray(p.exterior.coords) - c, axis=1)))
            shapely.prepare(p)
            self.inner.append((p, c, r))

    def __call__(self, xy):
        out = np.full(len(xy), -1, dtype=np.int64)
        if len(xy) == 0:
            return out
        out[shapely.contains_xy(self.outer, xy[:, 0], xy[:, 1])] = 0
        for k, (p, c, r) in enumerate(self.inner, start=1):
            near = np.flatnonzero(np.sum((xy - c) ** 2, axis=1) <= r * r * (1 + 1e-9))
            if near.size:
                hit = shapely.contains_xy(p, xy[near, 0], xy[near, 1])
                out[near[hit]] = k
        return out


def _encroached_segments(points, segs, tol=1e-9):
    """Indices of segments whose open diametral circle holds another vertex."""
    a, b = points[segs[:, 0]], points[segs[:, 1]]
    mid = 0.5 * (a + b)
    rad = 0.5 * np.linalg.norm(b - a, axis=1) * (1 - tol)
    tree = cKDTree(points)
    hits = tree.query_ball_point(mid, rad)
    bad = []
    for k, lst in enumerate(hits):
        s0, s1 = segs[k]
        if any(i != s0 and i != s1 for i in lst):
            bad.append(k)
    return np.array(bad, dtype=np.int64)


def _cands_encroaching(cands, points, segs, tol=1e-9):
    """For each candidate point, one segment it encroaches (or -1)."""
    a, b = points[segs[:, 0]], points[segs[:, 1]]
    mid = 0.5 * (a + b)
    rad = 0.5 * np.linalg.norm(b - a, axis=1)
    out = -np.ones(len(cands), dtype=np.int64)
    if len(cands) == 0:
        return out
    tree = cKDTree(mid)
    hits = tree.query_ball_point(cands, float(rad.max()))
    for i, lst in enumerate(hits):
        if not lst:
            continue
        lst = np.asarray(lst)
        d = np.linalg.norm(mid[lst] - cands[i], axis=1)
        ok = np.flatnonzero(d < rad[lst] * (1 - tol))
        if ok.size:
            out[i] = lst[ok[np.argmin(d[ok] / rad[lst[ok]])]]
    return out


def _split(points, segs, tags, which):
    """Split segments ``which`` at their midpoints."""
    if len(which) == 0:
        return points, segs, tags
    which = np.unique(which)
    mids = 0.5 * (points[segs[which, 0]] + points[segs[which, 1]])
    new_idx = np.arange(len(points), len(points) + len(which))
    points = np.vstack([points, mids])
    keep = np.ones(len(segs), dtype=bool)
    keep[which] = False
    first = np.column_stack([segs[which, 0], new_idx])
    second = np.column_stack([new_idx, segs[which, 1]])
    new_tags = [t for k, t in enumerate(tags) if keep[k]]
    new_tags += [tags[k] for k in which] * 2
    segs = np.vstack([segs[keep], first, second])
    return points, segs, new_tags


def _tri_geometry(p):
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    ab = b - a
    ac = c - a
    bc = c - b
    la, lb, lc = (np.linalg.norm(bc, axis=1), np.linalg.norm(ac, axis=1), np.linalg.norm(ab, axis=1))
    cross = ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0]
    area = 0.5 * np.abs(cross)
    R = la * lb * lc / np.maximum(4 * area, 1e-300)
    # smallest angle is opposite the shortest edge
    lmin = np.minimum(np.minimum(la, lb), lc)
    sin_min = np.clip(lmin / (2 * R), 0.0, 1.0)
    ang = np.degrees(np.arcsin(sin_min))
    d = 2 * cross
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ac2 = np.einsum("ij,ij->i", ac, ac)
    ux = (ac[:, 1] * ab2 - ab[:, 1] * ac2) / np.where(d == 0, np.inf, d)
    uy = (ab[:, 0] * ac2 - ac[:, 0] * ab2) / np.where(d == 0, np.inf, d)
    cc = a + np.column_stack([ux, uy])
    return ang, R, cc


def unique_edges(simplices, n_points=None):
    """Distinct undirected edges of a triangle list and their multiplicities."""
    simplices = np.asarray(simplices, dtype=np.int64)
    if n_points is None:
        n_points = int(simplices.max()) + 1 if simplices.size else 1
    e = np.sort(simplices[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    keys, counts = np.unique(e[:, 0] * n_points + e[:, 1], return_counts=True)
    return np.column_stack([keys // n_points, keys % n_points]), counts


def _missing_segments(simplices, segs, n_points):
    """Indices of constraint segments that are not triangulation edges."""
    e = np.sort(simplices[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    s = np.sort(segs, axis=1)
    return np.flatnonzero(~np.isin(s[:, 0] * n_points + s[:, 1], e[:, 0] * n_points + e[:, 1]))


def refine(loops, polylines, region_polys, size, h, *, min_angle=20.0, extra_points=(),
           max_passes=200) -> Triangulation:
    """Refine a conforming Delaunay triangulation of a polygonal domain.

    ``loops`` is a list of ``(vertices, edge_tags)`` closed loops (outer
    boundary first), ``polylines`` a list of ``(vertices, tag)`` closed
    internal constraint loops, ``region_polys`` the shapely polygons used
    to classify triangles (outer first), ``size`` a vectorized target edge
    length and ``h`` its maximum.
    """
    classify = _Regions(region_polys)
    pts, segs, tags = [], [], []

    def add_loop(verts, etags):
        base = len(pts)
        n = len(verts)
        pts.extend(np.asarray(verts, dtype=float).tolist())
        for i in range(n):
            segs.append((base + i, base + (i + 1) % n))
            tags.append(etags[i])

    for verts, etags in loops:
        add_loop(verts, etags)
    for verts, tag in polylines:
        add_loop(verts, [tag] * len(verts))
    points = np.array(pts, dtype=float)
    segs = np.array(segs, dtype=np.int64)

    # merge coincident input vertices (e.g. a region box touching the boundary)
    uniq, inv = np.unique(np.round(points, 12), axis=0, return_inverse=True)
    if len(uniq) < len(points):
        first = np.full(len(uniq), -1)
        for i, k in enumerate(inv.ravel()):
            if first[k] < 0:
                first[k] = i
        points = points[first]
        segs = inv.ravel()[segs]
    segs_sorted = np.sort(segs, axis=1)
    _, keep = np.unique(segs_sorted, axis=0, return_index=True)
    keep = np.sort(keep)
    segs = segs[keep]
    tags = [tags[k] for k in keep]

    # initial subdivision of long constraint segments
    while True:
        a, b = points[segs[:, 0]], points[segs[:, 1]]
        L = np.linalg.norm(b - a, axis=1)
        long_ = np.flatnonzero(L > 1.0001 * size(0.5 * (a + b)))
        if long_.size == 0:
            break
        points, segs, tags = _split(points, segs, tags, long_)

    extra = np.asarray(list(extra_points), dtype=float).reshape(-1, 2)
    # interior seeds on a hexagonal lattice at the coarsest size
    seeds = _hex_lattice(region_polys[0].bounds, h)
    seeds = seeds[classify(seeds) >= 0]
    if len(seeds):
        tree = cKDTree(np.vstack([points, extra]) if len(extra) else points)
        d, _ = tree.query(seeds)
        seeds = seeds[d > 0.5 * size(seeds)]
        enc = _cands_encroaching(seeds, points, segs)
        seeds = seeds[enc < 0]
    points = np.vstack([points, extra, seeds])

    # split segments until none is encroached by an existing vertex
    for _ in range(200):
        bad = _encroached_segments(points, segs)
        if bad.size == 0:
            break
        points, segs, tags = _split(points, segs, tags, bad)

    for npass in range(max_passes):
        dt = Delaunay(points)
        simp = dt.simplices
        P = points[simp]
        cent = P.mean(axis=1)
        reg = classify(cent)
        inside = reg >= 0
        missing = _missing_segments(simp, segs, len(points))
        encroached = _encroached_segments(points, segs)
        to_split = np.union1d(encroached, missing)
        if to_split.size:
            points, segs, tags = _split(points, segs, tags, to_split)
            continue

        ang, R, cc = _tri_geometry(P)
        s_loc = size(cent)
        ratio = np.maximum(R / (0.65 * s_loc), np.where(ang < min_angle, 1.0 + (min_angle - ang) / min_angle, 0.0))
        bad = np.flatnonzero(inside & (ratio > 1.0))
        log.debug("pass %d: %d points, %d bad triangles", npass, len(points), bad.size)
        if bad.size == 0:
            break
        order = bad[np.argsort(-ratio[bad], kind="stable")]
        cands = cc[order]
        enc = _cands_encroaching(cands, points, segs)
        split_these = np.unique(enc[enc >= 0])
        ok = enc < 0
        cand_reg = classify(cands)
        ok &= cand_reg >= 0
        cands = cands[ok]
        if len(cands):
            s_c = size(cands)
            tree = cKDTree(cands)
            nbrs = tree.query_ball_point(cands, 0.5 * s_c)
            taken = np.zeros(len(cands), dtype=bool)
            for i, lst in enumerate(nbrs):
                if not any(taken[j] for j in lst if j != i):
                    taken[i] = True
            cands = cands[taken]
        if len(cands) == 0 and split_these.size == 0:
            log.warning("refinement stalled with %d bad triangles", bad.size)
            break
        points = np.vstack([points, cands])
        points, segs, tags = _split(points, segs, tags, split_these)
    else:
        log.warning("refinement hit the pass limit")

    dt = Delaunay(points)
    simp = dt.simplices
    P = points[simp]
    cent = P.mean(axis=1)
    reg = classify(cent)
    keep = reg >= 0
    simp, reg = simp[keep], reg[keep]
    P = points[simp]
    cross = ((P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1])
             - (P[:, 2, 0] - P[:, 0, 0]) * (P[:, 1, 1] - P[:, 0, 1]))
    flip = cross < 0
    simp[flip] = simp[flip][:, [0, 2, 1]]
    if _missing_segments(simp, segs, len(points)).size:
        raise RuntimeError("constraint segment lost in final triangulation")
    return Triangulation(points, simp.astype(np.int64), reg, segs, tags)
