import json
import math

import numpy as np
import pytest
import shapely
from hypothesis import given, settings, strategies as st

from poresens import delaunay
from poresens.mesh import (Mesh, MeshError, Pore, canonical_json, circle_pore, ellipse_pore,
                           generate_matched_meshes, generate_porous_mesh, generate_rect_mesh,
                           load_mesh, load_pores, mesh_to_dict, nearest_node, polygon_area,
                           rectangle_outline, save_mesh, triangle_areas, save_pores, select_region)


def _write(tmp_path, doc, name="m.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


TRIANGLE = {"nodes": [[0, 0], [1, 0], [0, 1]], "elements": [[0, 1, 2]],
            "boundary_edges": [{"n": [0, 1], "tag": "a"}, {"n": [1, 2], "tag": "b"},
                               {"n": [2, 0], "tag": "c"}]}


def _check_invariants(m: Mesh, holes: int):
    assert np.all(m.areas > 0)
    assert m.n_holes == holes
    assert m.euler_characteristic() == 1 - holes


# -- load / save -----------------------------------------------------------

def test_load_single_triangle(tmp_path):
    m = load_mesh(_write(tmp_path, TRIANGLE))
    assert (m.n_nodes, len(m.edges), m.n_elements, m.n_holes) == (3, 3, 1, 0)
    assert m.euler_characteristic() == 1


def test_load_clockwise_triangle_rejected(tmp_path):
    doc = dict(TRIANGLE, elements=[[0, 2, 1]])
    with pytest.raises(MeshError, match="negative element area at element 0"):
        load_mesh(_write(tmp_path, doc))


def test_load_index_out_of_range(tmp_path):
    doc = dict(TRIANGLE, elements=[[0, 1, 5]])
    with pytest.raises(MeshError, match="out of range"):
        load_mesh(_write(tmp_path, doc))


def test_load_parse_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(MeshError, match="parse error"):
        load_mesh(p)
    with pytest.raises(MeshError, match="parse error"):
        load_mesh(_write(tmp_path, {"nodes": [[0, 0]]}))


def test_round_trip_byte_identical(tmp_path):
    m = generate_porous_mesh(*rectangle_outline(20, 10)[:1], [circle_pore("p1", (10, 5), 2, 24)], 2.0,
                             outer_tags=rectangle_outline(20, 10)[1])
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    save_mesh(m, a)
    save_mesh(load_mesh(a), b)
    assert a.read_bytes() == b.read_bytes()
    assert canonical_json(mesh_to_dict(load_mesh(a))) == canonical_json(mesh_to_dict(m))


def test_floats_serialized_with_17_digits():
    text = canonical_json({"x": 0.1})
    assert float(json.loads(text)["x"]) == 0.1
    assert "0.10000000000000001" in text


def test_pores_round_trip(tmp_path):
    pores = [circle_pore("p1", (1, 2), 0.5, 16), ellipse_pore("p2", (5, 5), 2, 1, 20, 0.3)]
    path = tmp_path / "p.json"
    save_pores(pores, path)
    back = load_pores(path)
    assert [p.id for p in back] == ["p1", "p2"]
    for p, q in zip(pores, back):
        assert np.array_equal(p.boundary, q.boundary)


# -- rectangle meshes ------------------------------------------------------

def test_rect_mesh_2x1():
    m = generate_rect_mesh(2, 1, 1)
    assert (m.n_nodes, m.n_elements, len(m.boundary_edges)) == (6, 4, 6)
    assert set(m.edge_tags) == {"left", "right", "top", "bottom"}


def test_rect_mesh_benchmark_counts():
    m = generate_rect_mesh(200, 100, 5)
    assert (m.n_nodes, m.n_elements) == (41 * 21, 1600)
    assert len(m.boundary_loops) == 1
    _check_invariants(m, 0)
    assert np.array_equal(m.nodes[:, 0] / 5.0, np.round(m.nodes[:, 0] / 5.0))


def test_rect_mesh_h_too_large():
    with pytest.raises(MeshError, match="h too large"):
        generate_rect_mesh(1, 1, 2)
    with pytest.raises(MeshError, match="degenerate"):
        generate_rect_mesh(0, 1, 0.1)


# -- porous meshes ---------------------------------------------------------

def test_porous_mesh_without_pores():
    ol, tags = rectangle_outline(30, 20)
    m = generate_porous_mesh(ol, [], 4.0, outer_tags=tags)
    _check_invariants(m, 0)
    assert math.isclose(m.areas.sum(), 600.0, rel_tol=1e-12)


def test_porous_mesh_area_and_quality():
    ol, tags = rectangle_outline(200, 100)
    pore = circle_pore("p1", (100, 50), 10, 64)
    m = generate_porous_mesh(ol, [pore], 10.0, outer_tags=tags)
    gon = 0.5 * 64 * 100 * math.sin(2 * math.pi / 64)
    assert abs(gon - 313.65) < 5e-3
    assert abs(m.areas.sum() - (20000 - gon)) < 1e-6
    assert math.isclose(m.areas.sum(), 20000 - pore.area, rel_tol=1e-9)
    _check_invariants(m, 1)
    assert m.min_angle() >= 15.0
    assert "pore:p1" in m.edge_tags
    # no element inside the pore
    assert not np.any(np.linalg.norm(m.centroids - pore.center, axis=1) < 9.9)


def test_porous_mesh_is_graded_near_pores():
    ol, tags = rectangle_outline(200, 100)
    pore = circle_pore("p1", (100, 50), 5, 64)
    m = generate_porous_mesh(ol, [pore], 10.0, outer_tags=tags)
    r = np.linalg.norm(m.centroids - pore.center, axis=1)
    assert np.sqrt(m.areas[r < 7]).mean() < 0.5 * np.sqrt(m.areas[r > 40]).mean()


def test_overlapping_pores_rejected():
    ol, tags = rectangle_outline(50, 50)
    pores = [circle_pore("a", (20, 25), 5, 32), circle_pore("b", (27, 25), 5, 32)]
    with pytest.raises(MeshError, match="pores overlap"):
        generate_porous_mesh(ol, pores, 5.0, outer_tags=tags)


def test_pore_outside_rejected():
    ol, tags = rectangle_outline(50, 50)
    with pytest.raises(MeshError, match="outer boundary"):
        generate_porous_mesh(ol, [circle_pore("a", (2, 25), 5, 32)], 5.0, outer_tags=tags)


def test_matched_meshes_share_outside_elements():
    ol, tags = rectangle_outline(40, 20)
    mm = generate_matched_meshes(ol, [circle_pore("p1", (20, 10), 3, 32)], 3.0, outer_tags=tags)
    assert np.array_equal(mm.porous.nodes, mm.dense.nodes[mm.porous_nodes])
    assert mm.dense.n_holes == 0 and mm.porous.n_holes == 1
    assert math.isclose(mm.dense.areas.sum(), 800.0, rel_tol=1e-12)


def test_regions_and_extra_points_inserted():
    ol, tags = rectangle_outline(40, 20)
    m = generate_porous_mesh(ol, [], 4.0, outer_tags=tags, regions={"box": (10, 5, 20, 15)},
                             extra_points=[(33.3, 7.7), (40.0, 10.0)])
    assert np.min(np.linalg.norm(m.nodes - (33.3, 7.7), axis=1)) == 0
    assert np.min(np.linalg.norm(m.nodes - (40.0, 10.0), axis=1)) == 0
    el = m.element_sets["box"]
    assert math.isclose(m.areas[el].sum(), 100.0, rel_tol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 0.9), st.floats(0.1, 0.9), st.floats(0.5, 2.0)),
                min_size=1, max_size=4))
def test_porous_mesh_invariants_property(specs):
    ol, tags = rectangle_outline(40, 20)
    pores = []
    for k, (fx, fy, r) in enumerate(specs):
        c = np.array([2 + fx * 36, 2 + fy * 16])
        if min(c[0], 40 - c[0], c[1], 20 - c[1]) < r + 0.5:
            continue
        if any(np.linalg.norm(c - q.center) < r + q.max_radius + 0.5 for q in pores):
            continue
        pores.append(circle_pore(f"p{k}", c, r, 16))
    m = generate_porous_mesh(ol, pores, 3.0, outer_tags=tags)
    _check_invariants(m, len(pores))
    assert m.min_angle() >= 15.0
    assert math.isclose(m.areas.sum(), 800.0 - sum(p.area for p in pores), rel_tol=1e-9)


def test_refined_triangulation_covers_square():
    verts, tags = rectangle_outline(10, 10)
    tri = delaunay.refine([(verts, tags)], [], [shapely.Polygon(verts)], lambda xy: np.full(len(xy), 2.0), 2.0)
    area = np.sum(np.abs(triangle_areas(tri.points, tri.triangles)))
    assert math.isclose(area, 100.0, rel_tol=1e-12)


# -- queries ---------------------------------------------------------------

def test_nearest_node_exact_and_ties():
    m = generate_rect_mesh(2, 1, 1)
    assert nearest_node(m, m.nodes[4]) == 4
    assert nearest_node(m, (0.5, 0.0)) == 0


def test_select_region():
    m = generate_rect_mesh(2, 1, 1)
    assert np.array_equal(select_region(m, (0, 0, 2, 1)), np.arange(4))
    with pytest.raises(MeshError, match="empty region"):
        select_region(m, (0.0, 0.4, 2.0, 0.6))


# -- pores -----------------------------------------------------------------

def test_pore_area_and_star_shape():
    p = circle_pore("p", (0, 0), 1.0, 64)
    assert math.isclose(p.area, polygon_area(p.boundary))
    star = np.array([[1, 0], [0.2, 0.2], [0, 1], [-1, 0], [0, -1]], float)
    Pore("s", (0, 0), star)
    bad = np.array([[2, 0], [-0.5, 0.1], [0, 2], [-2, 0], [0, -2]], float)
    with pytest.raises(MeshError):
        Pore("b", (0, 0), bad)
    with pytest.raises(MeshError):
        Pore("c", (5, 5), circle_pore("x", (0, 0), 1, 16).boundary)
