"""The clamped-beam benchmark and the pore layouts of its parameter studies.

A 200 × 100 plate is clamped on its left edge and loaded by a uniform
downward pressure of 1000 on its top edge (E = 6.89e10, ν = 0.35, unit
thickness).  Three quantities are tracked: compliance, the vertical
displacement of the mid-height node on the free end, and the vertical
displacement averaged over a box near the free end.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from . import fem
from .adjoint import QuantitySpec
from .mesh import Pore, circle_pore, ellipse_pore, generate_rect_mesh, rectangle_outline

WIDTH, HEIGHT = 200.0, 100.0
YOUNG, POISSON = 6.89e10, 0.35
PRESSURE = 1000.0
TIP = (200.0, 50.0)
REGION = (160.0, 40.0, 190.0, 60.0)
CENTER = (100.0, 50.0)
DENSITY_BOX = (60.0, 20.0, 140.0, 80.0)


def material() -> fem.Material:
    return fem.Material(YOUNG, POISSON)


def boundary_conditions(pressure: float = PRESSURE) -> fem.BoundaryConditions:
    return fem.BoundaryConditions(
        dirichlet=(fem.Dirichlet("left", "xy", 0.0),),
        tractions=(fem.Traction("top", (0.0, -pressure)),),
    )


def quantity_specs() -> list[QuantitySpec]:
    return [
        QuantitySpec("compliance", name="compliance"),
        QuantitySpec("nodal_disp", "y", point=TIP, name="tip_disp"),
        QuantitySpec("region_avg_disp", "y", box=REGION, name="reg_disp"),
    ]


def outline():
    return rectangle_outline(WIDTH, HEIGHT)


def dense_mesh(h: float = 2.5):
    return generate_rect_mesh(WIDTH, HEIGHT, h)


def centered_pore(radius: float, n: int = 64, pore_id: str = "p1") -> Pore:
    return circle_pore(pore_id, CENTER, radius, n)


def surface_pore(radius: float, gap_ratio: float, n: int = 64) -> Pore:
    """Pore at mid-span whose edge sits ``gap_ratio · 2R`` above the bottom edge."""
    return circle_pore("p1", (CENTER[0], gap_ratio * 2.0 * radius + radius), radius, n)


def pore_pair(radius: float, gap_ratio: float, n: int = 64) -> list[Pore]:
    """Two equal pores side by side at mid-height, edges ``gap_ratio · 2R`` apart."""
    half = radius + 0.5 * gap_ratio * 2.0 * radius
    return [circle_pore("p1", (CENTER[0] - half, CENTER[1]), radius, n),
            circle_pore("p2", (CENTER[0] + half, CENTER[1]), radius, n)]


def pore_grid(per_side: int, radius: float = 2.0, box=DENSITY_BOX, n: int = 32) -> list[Pore]:
    """``per_side²`` equal pores evenly spread over ``box``."""
    x0, y0, x1, y1 = box
    xs = x0 + (np.arange(per_side) + 0.5) * (x1 - x0) / per_side
    ys = y0 + (np.arange(per_side) + 0.5) * (y1 - y0) / per_side
    return [circle_pore(f"p{j * per_side + i + 1}", (x, y), radius, n)
            for j, y in enumerate(ys) for i, x in enumerate(xs)]


def ellipse_circularity(aspect: float) -> float:
    """Circularity ``2√(πA)/P`` of an ellipse with axis ratio ``aspect = b/a``."""
    a, b = 1.0, aspect
    h = ((a - b) / (a + b)) ** 2
    perim = math.pi * (a + b) * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))
    return 2.0 * math.sqrt(math.pi * math.pi * a * b) / perim


def elliptic_pore(circularity: float, radius: float = 5.0, n: int = 64, angle: float = 0.0) -> Pore:
    """Centered ellipse of area ``πR²`` with the requested circularity."""
    if not (0.0 < circularity <= 1.0):
        raise ValueError("circularity must lie in (0, 1]")
    aspect = 1.0 if circularity >= 1.0 - 1e-12 else brentq(
        lambda q: ellipse_circularity(q) - circularity, 1e-4, 1.0, xtol=1e-14)
    a = radius / math.sqrt(aspect)
    return ellipse_pore("p1", CENTER, a, a * aspect, n, angle)


def random_pores(count: int = 36, porosity: float = 0.003, seed: int = 7, n: int = 32,
                 margin: float = 10.0, min_gap_factor: float = 4.0) -> list[Pore]:
    """Deterministic scatter of circular pores with total area ``porosity · W · H``.

    Radii follow a lognormal spread around the mean; centers are drawn
    inside the plate away from its edges, rejecting placements closer than
    ``min_gap_factor`` radii to an existing pore.
    """
    rng = np.random.default_rng(seed)
    raw = rng.lognormal(0.0, 0.3, count)
    radii = raw * math.sqrt(porosity * WIDTH * HEIGHT / (math.pi * np.sum(raw ** 2)))
    centers: list[np.ndarray] = []
    for r in radii:
        for _ in range(10000):
            c = rng.uniform([margin, margin], [WIDTH - margin, HEIGHT - margin])
            if all(np.linalg.norm(c - q) > min_gap_factor * max(r, rq) + r + rq
                   for q, rq in zip(centers, radii)):
                centers.append(c)
                break
        else:
            raise RuntimeError("could not place pores; lower the count or the gap factor")
    return [circle_pore(f"p{k + 1}", c, r, n) for k, (c, r) in enumerate(zip(centers, radii))]
