"""Hoop stress around a circular pore under remote uniaxial tension.

Compares the exterior boundary-element solution with the Kirsch formula
and shows the first-order convergence of constant elements.
"""
import numpy as np

from poresens import fem
from poresens.exterior import exterior_solve, kirsch_reference
from poresens.mesh import circle_pore

s = 1.0
material = fem.Material(6.89e10, 0.35)
for n in (32, 64, 128, 256):
    pore = circle_pore("p", (0.0, 0.0), 1.0, n)
    sol = exterior_solve(pore, np.diag([s, 0.0]), material)
    theta = np.arctan2(pore.midpoints[:, 1], pore.midpoints[:, 0])
    err = np.max(np.abs(sol.hoop_stress - kirsch_reference(s, theta)))
    print(f"N={n:4d}  max hoop {sol.hoop_stress.max():.5f} (exact 3)  max error {err:.5f}")
