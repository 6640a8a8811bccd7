import numpy as np
import pytest

from poresens import benchmark, estimator, fem


@pytest.fixture(scope="session")
def bench_mesh():
    return benchmark.dense_mesh(2.5)


@pytest.fixture(scope="session")
def bench_state(bench_mesh):
    return estimator.solve_dense(bench_mesh, benchmark.material(), benchmark.boundary_conditions(),
                                 benchmark.quantity_specs())


def patch_problem(width=4.0, height=2.0, h=0.5, s=3.0e3, E=2.0e5, nu=0.3):
    """Rectangle stretched by traction ``s`` on its right edge, minimally held on the left."""
    from poresens.mesh import generate_rect_mesh, nearest_node, with_sets
    m = generate_rect_mesh(width, height, h)
    m = with_sets(m, node_sets={"pin": [nearest_node(m, (0.0, 0.0))]})
    bcs = fem.BoundaryConditions(
        dirichlet=(fem.Dirichlet("left", "x", 0.0), fem.Dirichlet("pin", "y", 0.0)),
        tractions=(fem.Traction("right", (s, 0.0)),))
    return m, fem.Material(E, nu), bcs


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: dict = {}


@pytest.fixture(scope="session")
def criterion():
    """Record one summary line per acceptance criterion (printed after the run)."""
    def record(number: int, passed: bool, detail: str):
        _CRITERIA[number] = (passed, detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        passed, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
