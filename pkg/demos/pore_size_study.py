"""Effectivity of the porosity estimate against direct FE for a centered pore.

Runs the clamped-plate benchmark for several pore radii and prints I_D
of the combined, topological and shape estimates for each quantity.
Takes a few minutes; pass radii on the command line to pick others.
"""
import sys

from poresens import benchmark, estimator

radii = [float(r) for r in sys.argv[1:]] or [0.5, 2.0, 5.0, 10.0, 20.0]
specs = benchmark.quantity_specs()
material, bcs = benchmark.material(), benchmark.boundary_conditions()
outline, tags = benchmark.outline()
state = estimator.solve_dense(benchmark.dense_mesh(2.5), material, bcs, specs)

print(f"{'R':>5} {'quantity':>11} {'I_D':>8} {'I_D topo':>9} {'I_D shape':>10}")
for R in radii:
    pores = [benchmark.centered_pore(R)]
    reports = estimator.estimate(state.mesh, material, bcs, specs, pores, state=state)
    o = estimator.run_oracle(outline, pores, material, bcs, specs, 5.0, outer_tags=tags, max_refinements=3)
    estimator.attach_oracle(reports, o)
    for r in reports:
        print(f"{R:5g} {r.spec.label:>11} {r.effectivity().I_D:8.4f} "
              f"{r.effectivity('topo').I_D:9.4f} {r.effectivity('shape').I_D:10.4f}")
