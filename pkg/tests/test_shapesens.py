import math

import numpy as np
import pytest

from poresens import benchmark, estimator, exterior, fem, shapesens
from poresens.exterior import exterior_solve_many, total_surface_fields
from poresens.mesh import MeshError, circle_pore, ellipse_pore

MAT = fem.Material(1.0e5, 0.3)


def sens(pore, sig, lam, n=None):
    a, b = exterior_solve_many(pore, [sig, lam], MAT, n)
    return shapesens.shape_sensitivity(total_surface_fields(a), total_surface_fields(b),
                                       shapesens.design_speed(a.pore))


def test_design_speed_circle():
    n, apothem = 64, 5.0
    p = circle_pore("p", (1, 2), apothem / math.cos(math.pi / n), n)
    v = shapesens.design_speed(p)
    assert np.allclose(v.vn, apothem, rtol=0, atol=1e-12)


def test_design_speed_axis_point():
    a, b = 3.0, 1.0
    poly = np.array([[a, -0.2], [a, 0.2], [0, b], [-a, 0], [0, -b]])
    assert shapesens.design_speed(poly, (0, 0)).vn[0] == pytest.approx(a, abs=1e-15)


def test_design_speed_non_star():
    poly = np.array([[2, 0], [-0.5, 0.1], [0, 2], [-2, 0], [0, -2]], float)
    with pytest.raises(MeshError, match="star"):
        shapesens.design_speed(poly, (0, 0))


def test_zero_adjoint():
    p = circle_pore("p", (0, 0), 1.0, 32)
    assert sens(p, np.diag([1.0, 0.0]), np.zeros((2, 2))) == 0


def test_compliance_positive():
    p = ellipse_pore("p", (0, 0), 2.0, 1.0, 48, 0.3)
    sig = np.array([[1.0, 0.4], [0.4, -0.3]])
    assert sens(p, sig, sig) > 0


def test_bilinearity_and_d_shape():
    p = ellipse_pore("p", (0, 0), 2.0, 1.0, 48, 0.3)
    sig = np.array([[1.0, 0.4], [0.4, -0.3]])
    lam = np.array([[0.2, -0.1], [-0.1, 0.5]])
    a, b = exterior_solve_many(p, [sig, lam], MAT)
    a2, b2 = exterior_solve_many(p, [3.0 * sig, 3.0 * lam], MAT)
    base = shapesens.d_shape(p, a, b, 1e-3)
    assert math.isclose(shapesens.d_shape(p, a2, b2, 1e-3), 9.0 * base, rel_tol=1e-10)
    assert abs(shapesens.d_shape(p, a, b, 1 - 1e-12)) < 1e-10 * abs(base)
    assert math.isclose(shapesens.d_shape(p, a, b, 0.5), base * 0.75 / (1 - 1e-6), rel_tol=1e-12)
    with pytest.raises(ValueError):
        shapesens.d_shape(p, a, b, 1.0)


def test_mismatched_discretizations():
    p = circle_pore("p", (0, 0), 1.0, 32)
    a = exterior.exterior_solve(p, np.eye(2), MAT)
    b = exterior.exterior_solve(p, np.eye(2), MAT, 64)
    with pytest.raises(ValueError, match="mismatched"):
        shapesens.d_shape(p, a, b, 0.1)


def test_rotation_invariance():
    p = ellipse_pore("p", (0, 0), 2.0, 1.0, 48, 0.3)
    sig = np.array([[1.0, 0.4], [0.4, -0.3]])
    lam = np.array([[0.2, -0.1], [-0.1, 0.5]])
    base = sens(p, sig, lam)
    for ang in (math.pi / 2, 0.7):
        c, s = math.cos(ang), math.sin(ang)
        Q = np.array([[c, -s], [s, c]])
        r = sens(p.rotated(ang), Q @ sig @ Q.T, Q @ lam @ Q.T)
        assert math.isclose(r, base, rel_tol=1e-10)


def test_discretization_convergence():
    p = circle_pore("p", (0, 0), 1.0, 512)
    sig = np.diag([1.0, 0.0])
    v64, v128 = sens(p, sig, sig, 64), sens(p, sig, sig, 128)
    assert abs(v128 / v64 - 1) < 0.02


def test_sign_invariant_on_benchmark(bench_state):
    cfg = estimator.EstimatorConfig()
    for c in ((100.0, 50.0), (40.0, 70.0), (150.0, 25.0)):
        contrib = estimator.pore_contributions(bench_state, circle_pore("p", c, 2.0, 64), cfg)[0]
        assert contrib.d_shape > 0


def _finite_difference_ratio(radius, state):
    specs = benchmark.quantity_specs()
    ol, tags = benchmark.outline()
    pore = benchmark.centered_pore(radius)
    sig = fem.evaluate_stress_at(state.mesh, state.primary, benchmark.CENTER)
    ratios = []
    delta = {}
    step = 0.05 * radius
    for r in (radius - step, radius + step):
        o = estimator.run_oracle(ol, [benchmark.centered_pore(r)], benchmark.material(),
                                 benchmark.boundary_conditions(), specs, 5.0, outer_tags=tags,
                                 max_refinements=3)
        delta[r] = np.array(o.delta)
    fd = (delta[radius + step] - delta[radius - step]) / (2 * step / radius)
    for k, pair in enumerate(state.pairs):
        lam = fem.evaluate_stress_at(state.mesh, pair.adjoint, benchmark.CENTER)
        a, b = exterior_solve_many(pore, [sig, lam], benchmark.material(), 256)
        val = shapesens.shape_sensitivity(total_surface_fields(a), total_surface_fields(b),
                                          shapesens.design_speed(a.pore))
        ratios.append(val / fd[k])
    return np.array(ratios)


@pytest.mark.slow
def test_matches_direct_fe_finite_difference_small_pore(bench_state):
    ratios = _finite_difference_ratio(2.0, bench_state)
    print("dPsi/deta over central difference at R=2:", np.round(ratios, 4))
    assert np.all(np.abs(ratios - 1) < 0.10)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="uniform far-field model: ratio 0.81 at R=10 (0.94 at R=5, 0.99 at R=2)")
def test_matches_direct_fe_finite_difference_large_pore(bench_state):
    ratios = _finite_difference_ratio(10.0, bench_state)
    print("dPsi/deta over central difference at R=10:", np.round(ratios, 4))
    assert np.all(np.abs(ratios - 1) < 0.10)
