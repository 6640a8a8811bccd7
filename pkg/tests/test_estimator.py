import json
import math

import numpy as np
import pytest

from poresens import benchmark, estimator, fem
from poresens.adjoint import QuantitySpec
from poresens.estimator import EstimateReport, EstimatorConfig, effectivity
from poresens.mesh import circle_pore, ellipse_pore, with_sets

from conftest import patch_problem

SPECS = benchmark.quantity_specs()


def small_pores():
    return [circle_pore("a", (60, 30), 2.0, 32), ellipse_pore("b", (120, 60), 3.0, 1.5, 40, 0.4),
            circle_pore("c", (150, 45), 1.0, 24)]


def run(pores, mesh, state=None, bcs=None, threads=None):
    return estimator.estimate(mesh, benchmark.material(), bcs or benchmark.boundary_conditions(), SPECS,
                              pores, EstimatorConfig(threads=threads), state=state)


# -- effectivity -------------------------------------------------------------

def test_effectivity_examples():
    e = effectivity(10.0, 7.0, 3.0)
    assert e.I_psi == 1.0 and e.I_D == 1.0
    e = effectivity(16.207, 16.199, 0.0)
    assert round(e.I_psi, 5) == 0.99951
    assert effectivity(5.0, 4.0, 0.0).I_D == 0.0
    assert effectivity(0.0, 1.0, 1.0).I_psi is None
    assert effectivity(1.0, 1.0, 0.5).I_D is None
    assert not effectivity(1.0, 1.0, 0.5).defined


def test_config_validation():
    for kw in ({"xi": 0.0}, {"xi": 1.0}, {"bem_elements": 8}, {"threads": 0}):
        with pytest.raises(ValueError):
            EstimatorConfig(**kw)


# -- estimate ----------------------------------------------------------------

def test_zero_pores(bench_mesh, bench_state):
    for r in run([], bench_mesh, bench_state):
        assert r.D == 0 and r.psi_pred == r.psi0


def test_pore_in_zero_stress_region():
    m = benchmark.dense_mesh(5.0)
    held = np.flatnonzero(m.nodes[:, 0] >= 150.0)
    m = with_sets(m, node_sets={"held": held})
    bcs = fem.BoundaryConditions(dirichlet=(fem.Dirichlet("left", "xy"), fem.Dirichlet("held", "xy")),
                                 tractions=(fem.Traction("top", (0.0, -1000.0)),))
    specs = [QuantitySpec("compliance"), QuantitySpec("nodal_disp", "y", point=(100.0, 50.0))]
    reps = estimator.estimate(m, benchmark.material(), bcs, specs, [circle_pore("p", (175, 50), 5.0, 64)])
    for r in reps:
        assert abs(r.contributions[0].d_pore) <= 1e-6 * abs(r.psi0)


def test_report_invariants(bench_mesh, bench_state):
    for r in run(small_pores(), bench_mesh, bench_state):
        assert [c.pore_id for c in r.contributions] == ["a", "b", "c"]
        for c in r.contributions:
            assert c.d_pore == c.d_topo + c.d_shape
        assert r.psi_pred == r.psi0 + r.D
    ring_dist = []
    for p, c in zip(small_pores(), run(small_pores(), bench_mesh, bench_state)[0].contributions):
        import shapely
        ring_dist.append(shapely.LinearRing(p.boundary).distance(shapely.Point(c.max_von_mises_at)))
    assert max(ring_dist) < 1e-9


def test_superposition_is_exact(bench_mesh, bench_state):
    pores = small_pores()
    multi = run(pores, bench_mesh, bench_state)
    singles = [run([p], bench_mesh, bench_state) for p in pores]
    for k, r in enumerate(multi):
        d = [s[k].contributions[0].d_pore for s in singles]
        assert r.psi_pred == r.psi0 + math.fsum(d)
        assert [c.d_pore for c in r.contributions] == d


def test_thread_count_does_not_change_results(bench_mesh, bench_state):
    pores = small_pores()
    a = [r.to_dict() for r in run(pores, bench_mesh, bench_state, threads=1)]
    b = [r.to_dict() for r in run(pores, bench_mesh, bench_state, threads=8)]
    assert json.dumps(a) == json.dumps(b)


def test_load_linearity():
    m = benchmark.dense_mesh(5.0)
    pores = small_pores()
    alpha = 2.5
    base = run(pores, m)
    scaled = run(pores, m, bcs=benchmark.boundary_conditions(benchmark.PRESSURE * alpha))
    for r0, r1 in zip(base, scaled):
        power = 2 if r0.spec.kind == "compliance" else 1
        f = alpha ** power
        assert math.isclose(r1.psi0, f * r0.psi0, rel_tol=1e-10)
        assert math.isclose(r1.D, f * r0.D, rel_tol=1e-10)
        for c0, c1 in zip(r0.contributions, r1.contributions):
            assert math.isclose(c1.d_pore, f * c0.d_pore, rel_tol=1e-10)
        # effectivities are invariant when the exact change scales the same way
        e0 = effectivity(1.01 * r0.psi0, r0.psi0, r0.D)
        e1 = effectivity(1.01 * r1.psi0, r1.psi0, r1.D)
        assert math.isclose(e0.I_psi, e1.I_psi, rel_tol=1e-10)
        assert math.isclose(e0.I_D, e1.I_D, rel_tol=1e-10)


def test_translation_invariance_in_uniform_stress():
    m, mat, bcs = patch_problem(width=200.0, height=100.0, h=5.0)
    pores = [circle_pore("p1", (50, 50), 3.0, 48), circle_pore("p2", (150, 50), 3.0, 48)]
    r = estimator.estimate(m, mat, bcs, [QuantitySpec("compliance")], pores)[0]
    a, b = (c.d_pore for c in r.contributions)
    assert abs(a / b - 1) < 0.01


def test_assumption_warnings(bench_mesh):
    pores = [circle_pore("a", (100, 3), 2.0, 32), circle_pore("b", (100, 9), 2.0, 32)]
    w = estimator.assumption_warnings(bench_mesh, pores)
    assert any("distance to surface" in s for s in w)
    assert any("pores a and b" in s for s in w)
    assert estimator.assumption_warnings(bench_mesh, [benchmark.centered_pore(5.0)]) == []


def test_duplicate_ids_and_outside_center(bench_mesh, bench_state):
    with pytest.raises(ValueError, match="duplicate"):
        run([circle_pore("a", (50, 50), 1, 16), circle_pore("a", (60, 50), 1, 16)], bench_mesh, bench_state)
    from poresens.mesh import Pore
    with pytest.raises(ValueError, match="outside"):
        run([Pore("z", (300, 50), circle_pore("z", (300, 50), 1, 16).boundary)], bench_mesh, bench_state)


def test_report_round_trip(bench_mesh, bench_state):
    for r in run(small_pores(), bench_mesh, bench_state):
        back = EstimateReport.from_dict(json.loads(json.dumps(r.to_dict())))
        assert back.to_dict() == r.to_dict()


# -- oracle ------------------------------------------------------------------

def _oracle(pores, **kw):
    ol, tags = benchmark.outline()
    return estimator.run_oracle(ol, pores, benchmark.material(), benchmark.boundary_conditions(), SPECS,
                                kw.pop("h", 10.0), outer_tags=tags, **kw)


def test_oracle_without_pores_matches_dense(bench_state):
    o = _oracle([], converge_on="value")
    for psi, ref in zip(o.psi, bench_state.psi0):
        assert abs(psi / ref - 1) < 5e-3
    assert o.delta == [0.0, 0.0, 0.0]


def test_oracle_monotone_in_pore_size(bench_state):
    o5 = _oracle([benchmark.centered_pore(5.0)], tol=2e-2)
    o10 = _oracle([benchmark.centered_pore(10.0)], tol=2e-2)
    assert o10.psi[0] > o5.psi[0] > o5.psi0[0]
    assert o10.psi[0] > bench_state.psi0[0]


def test_oracle_non_convergence_reports_history():
    with pytest.raises(estimator.OracleError) as info:
        _oracle([benchmark.centered_pore(5.0)], tol=1e-12, max_refinements=1)
    assert len(info.value.history) == 2


def test_oracle_needs_transferable_specs():
    ol, tags = benchmark.outline()
    with pytest.raises(ValueError, match="point"):
        estimator.run_oracle(ol, [], benchmark.material(), benchmark.boundary_conditions(),
                             [QuantitySpec("nodal_disp", node=3)], 10.0, outer_tags=tags)


def test_attach_oracle_and_csv(bench_mesh, bench_state):
    pore = benchmark.centered_pore(5.0)
    reps = run([pore], bench_mesh, bench_state)
    o = _oracle([pore], tol=2e-2)
    with pytest.raises(ValueError, match="spec mismatch"):
        estimator.attach_oracle(reps[:2], o)
    estimator.attach_oracle(reps, o)
    text = estimator.comparison_csv(reps)
    lines = text.splitlines()
    assert lines[0] == ",".join(estimator.CSV_COLUMNS)
    assert len(lines) == 4
    for r in reps:
        e = r.effectivity()
        assert e.I_D == r.D / (r.psi_exact - r.psi0_reference)
