import math

import numpy as np
import pytest

from poresens import adjoint, benchmark, fem
from poresens.adjoint import QuantitySpec
from poresens.mesh import MeshError

from conftest import patch_problem

L, W, S, E = 4.0, 2.0, 3.0e3, 2.0e5


@pytest.fixture(scope="module")
def patch():
    m, mat, bcs = patch_problem(L, W, 0.5, S, E)
    return m, mat, fem.solve_primary(m, mat, bcs)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuantitySpec("stress")
    with pytest.raises(ValueError):
        QuantitySpec("nodal_disp")
    with pytest.raises(ValueError):
        QuantitySpec("region_avg_disp", "z", box=(0, 0, 1, 1))


def test_spec_dict_round_trip():
    for s in benchmark.quantity_specs() + [QuantitySpec("region_avg_disp", "x", region=(1, 2, 3))]:
        assert QuantitySpec.from_dict(s.to_dict()) == s


def test_compliance_adjoint_load_is_primary_load(patch):
    m, _, f = patch
    g = adjoint.adjoint_load(QuantitySpec("compliance"), m, f.load)
    assert np.array_equal(g, f.load)


def test_nodal_adjoint_load_is_unit_delta(patch):
    m, _, _ = patch
    g = adjoint.adjoint_load(QuantitySpec("nodal_disp", "y", node=7), m)
    assert g[15] == 1.0 and np.count_nonzero(g) == 1


def test_region_adjoint_load_sums_to_one(patch):
    m, _, _ = patch
    g = adjoint.adjoint_load(QuantitySpec("region_avg_disp", "y", box=(1.0, 0.0, 2.5, 1.5)), m)
    assert math.fsum(g[1::2]) == pytest.approx(1.0, abs=1e-15)
    assert not np.any(g[0::2])


def test_bad_node_and_region(patch):
    m, _, _ = patch
    with pytest.raises(MeshError, match="out of range"):
        adjoint.adjoint_load(QuantitySpec("nodal_disp", node=10 ** 6), m)
    with pytest.raises(MeshError, match="empty region"):
        adjoint.adjoint_load(QuantitySpec("region_avg_disp", box=(10, 10, 11, 11)), m)


def test_compliance_is_self_adjoint(patch):
    _, _, f = patch
    pair = adjoint.solve_adjoint(QuantitySpec("compliance"), f)
    assert np.array_equal(pair.adjoint.u, f.u)


def test_zero_adjoint_load_gives_zero_field(patch):
    m, mat, f = patch
    lam = fem.solve_with_factorization(f.factorization, m, mat, np.zeros(2 * m.n_nodes))
    assert not np.any(lam.u)


def test_closed_form_patch_quantities(patch):
    m, _, f = patch
    tip = QuantitySpec("nodal_disp", "x", point=(L, W / 2))
    assert math.isclose(adjoint.evaluate_quantity(tip, m, f), S * L / E, rel_tol=1e-10)
    comp = adjoint.evaluate_quantity(QuantitySpec("compliance"), m, f)
    assert math.isclose(comp, S * S * L * W * 1.0 / E, rel_tol=1e-10)


def test_zero_field_gives_zero_quantities(patch):
    m, mat, f = patch
    zero = fem.field_from_displacement(m, mat, np.zeros(2 * m.n_nodes), np.zeros(2 * m.n_nodes))
    for s in (QuantitySpec("compliance"), QuantitySpec("nodal_disp", node=3),
              QuantitySpec("region_avg_disp", box=(0, 0, L, W))):
        assert adjoint.evaluate_quantity(s, m, zero) == 0.0


def test_adjoint_consistency_identity(bench_mesh, bench_state):
    for pair, psi in zip(bench_state.pairs, bench_state.psi0):
        if pair.spec.kind == "compliance":
            continue
        assert math.isclose(pair.adjoint.vector @ bench_state.primary.load, psi, rel_tol=1e-10)


def test_named_region(bench_mesh):
    from poresens.mesh import select_region, with_sets
    m = with_sets(bench_mesh, element_sets={"tipbox": select_region(bench_mesh, benchmark.REGION)})
    f = fem.solve_primary(m, benchmark.material(), benchmark.boundary_conditions())
    a = adjoint.evaluate_quantity(QuantitySpec("region_avg_disp", region="tipbox"), m, f)
    b = adjoint.evaluate_quantity(QuantitySpec("region_avg_disp", box=benchmark.REGION), m, f)
    assert a == b
