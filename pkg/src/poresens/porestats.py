"""Pore descriptors, spatial statistics and distribution fitting.

Descriptors follow the usual porosity-characterization set: equivalent
diameter, circularity (2D) or sphericity (3D), distance to the nearest
neighbouring pore and distance to the part surface.  Five families are
fitted by maximum likelihood and ranked by AIC (BIC breaks ties).  Pore
templates are drawn at deterministic lognormal quantiles and each pore is
represented by its nearest template in (aspect ratio, major semi-axis)
coordinates.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import shapely
from scipy import special, stats

from .mesh import Pore

FAMILIES = ("normal", "gamma", "weibull", "lognormal", "exponential")
DESCRIPTOR_COLUMNS = ["id", "eq_diameter", "sphericity", "dist_surface", "dist_pore"]
NORM_NOTE = ("template distances use raw (aspect ratio, major semi-axis) coordinates "
             "without scaling, although the two axes carry different units")


class StatsError(ValueError):
    pass


# --------------------------------------------------------------------------
# Descriptors
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Descriptors2D:
    area: float
    eq_diameter: float
    circularity: float


@dataclass(frozen=True)
class Descriptors3D:
    volume: float
    area: float
    sphericity: float


def descriptors_2d(polygon) -> Descriptors2D:
    """Area, equivalent diameter ``√(4A/π)`` and circularity ``2√(πA)/P``."""
    if isinstance(polygon, Pore):
        polygon = polygon.boundary
    pts = np.asarray(polygon, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise StatsError("polygon needs at least three 2D vertices")
    poly = shapely.Polygon(pts)
    perim = float(np.sum(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)))
    area = abs(float(poly.area))
    if perim <= 0 or area <= 1e-12 * perim * perim:
        raise StatsError("degenerate polygon (zero area)")
    if not poly.is_valid:
        raise StatsError("polygon is not simple")
    return Descriptors2D(area, math.sqrt(4.0 * area / math.pi), 2.0 * math.sqrt(math.pi * area) / perim)


def _check_closed(faces: np.ndarray) -> None:
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    m = int(faces.max()) + 1
    fwd = e[:, 0] * m + e[:, 1]
    rev = e[:, 1] * m + e[:, 0]
    if np.unique(fwd).size != fwd.size or not np.array_equal(np.sort(fwd), np.sort(rev)):
        raise StatsError("surface is open or inconsistently oriented")


def descriptors_3d(vertices, faces) -> Descriptors3D:
    """Volume (divergence theorem), area and sphericity ``π^{1/3}(6V)^{2/3}/A``."""
    v = np.asarray(vertices, dtype=float)
    f = np.asarray(faces, dtype=np.int64)
    if f.ndim != 2 or f.shape[1] != 3 or len(f) < 4:
        raise StatsError("a closed surface needs at least four triangles")
    _check_closed(f)
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    cr = np.cross(b - a, c - a)
    volume = float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)
    area = float(0.5 * np.linalg.norm(cr, axis=1).sum())
    if volume <= 0:
        raise StatsError("negative volume (inverted surface)")
    return Descriptors3D(volume, area, math.pi ** (1.0 / 3.0) * (6.0 * volume) ** (2.0 / 3.0) / area)


@dataclass(frozen=True, eq=False)
class SpatialStats:
    """Boundary-to-boundary distances per pore; ``nearest_pore`` is NaN for a lone pore."""

    nearest_pore: np.ndarray
    surface: np.ndarray
    warnings: list = field(default_factory=list)


def spatial_stats(pores: Sequence, outer) -> SpatialStats:
    polys = [shapely.Polygon(p.boundary if isinstance(p, Pore) else p) for p in pores]
    if not polys:
        raise StatsError("at least one pore is required")
    ring = shapely.Polygon(np.asarray(outer, dtype=float)).exterior
    surface = np.array([ring.distance(p.exterior) for p in polys])
    near = np.full(len(polys), np.nan)
    warnings = []
    if len(polys) < 2:
        warnings.append("single pore: nearest-pore distance undefined")
    else:
        tree = shapely.STRtree(polys)
        for i, p in enumerate(polys):
            # exclusive=True skips the pore itself
            idx = tree.query_nearest(p, exclusive=True, all_matches=True)
            near[i] = min(p.distance(polys[j]) for j in np.atleast_1d(idx))
    return SpatialStats(near, surface, warnings)


def cumulative_distribution(values) -> tuple[np.ndarray, np.ndarray]:
    """Sorted values and the fraction of samples at or below each."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    if x.size == 0:
        raise StatsError("no values")
    return x, np.searchsorted(x, x, side="right") / x.size


def cdf_at(values, q) -> float:
    x = np.sort(np.asarray(values, dtype=float).ravel())
    return float(np.searchsorted(x, q, side="right") / x.size)


@dataclass(frozen=True, eq=False)
class DescriptorTable:
    ids: list
    eq_diameter: np.ndarray
    sphericity: np.ndarray
    dist_surface: np.ndarray
    dist_pore: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)

    def rows(self) -> list[list]:
        return [[i, float(d), float(s), float(ds), float(dp)] for i, d, s, ds, dp in
                zip(self.ids, self.eq_diameter, self.sphericity, self.dist_surface, self.dist_pore)]


def descriptor_table(pores: Sequence[Pore], outer) -> DescriptorTable:
    d2 = [descriptors_2d(p) for p in pores]
    sp = spatial_stats(pores, outer)
    return DescriptorTable([p.id for p in pores], np.array([d.eq_diameter for d in d2]),
                           np.array([d.circularity for d in d2]), sp.surface, sp.nearest_pore)


def write_descriptor_csv(table: DescriptorTable, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DESCRIPTOR_COLUMNS)
        for row in table.rows():
            w.writerow([row[0]] + ["" if math.isnan(v) else format(v, ".17g") for v in row[1:]])


def read_descriptor_csv(path) -> DescriptorTable:
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(DESCRIPTOR_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise StatsError(f"descriptor CSV lacks columns {sorted(missing)}")
        rows = list(reader)

    def col(name):
        return np.array([float(r[name]) if r[name] not in ("", None) else np.nan for r in rows])

    return DescriptorTable([r["id"] for r in rows], col("eq_diameter"), col("sphericity"),
                           col("dist_surface"), col("dist_pore"))


# --------------------------------------------------------------------------
# Distribution fitting
# --------------------------------------------------------------------------

def aic(log_likelihood: float, k: int) -> float:
    return 2.0 * k - 2.0 * log_likelihood


def bic(log_likelihood: float, k: int, n: int) -> float:
    return k * math.log(n) - 2.0 * log_likelihood


@dataclass(frozen=True)
class FamilyFit:
    family: str
    params: dict
    k: int
    n: int
    log_likelihood: float

    @property
    def aic(self) -> float:
        return aic(self.log_likelihood, self.k)

    @property
    def bic(self) -> float:
        return bic(self.log_likelihood, self.k, self.n)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params), "k": self.k,
                "log_likelihood": self.log_likelihood, "aic": self.aic, "bic": self.bic}


@dataclass(frozen=True, eq=False)
class FitResult:
    n: int
    fits: dict
    selected: str
    notes: list

    def to_dict(self) -> dict:
        return {"n": self.n, "selected": self.selected, "notes": list(self.notes),
                "families": [self.fits[f].to_dict() for f in FAMILIES if f in self.fits]}


def _safeguarded_newton(g, dg, lo, hi, x0, tol=1e-12, maxiter=200):
    """Root of an increasing or decreasing ``g`` bracketed by ``[lo, hi]``.

    Newton steps that leave the current bracket are replaced by bisection.
    """
    glo = g(lo)
    if glo * g(hi) > 0:
        raise StatsError("root not bracketed")
    x = min(max(x0, lo), hi)
    for _ in range(maxiter):
        gx = g(x)
        if gx == 0:
            return x
        if (gx < 0) == (glo < 0):
            lo, glo = x, gx
        else:
            hi = x
        d = dg(x)
        step = x - gx / d if d != 0 else None
        x_new = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        if abs(x_new - x) <= tol * max(1.0, abs(x)):
            return x_new
        x = x_new
    raise StatsError("Newton iteration did not converge")


def _bracket(g, x0, grow):
    lo = hi = x0
    for _ in range(200):
        if g(lo) * g(hi) <= 0:
            return lo, hi
        lo, hi = lo / grow, hi * grow
    raise StatsError("could not bracket root")


def _fit_gamma(x, n):
    s = math.log(x.mean()) - np.log(x).mean()
    if s <= 0:
        raise StatsError("constant data")
    g = lambda a: math.log(a) - special.digamma(a) - s  # noqa: E731
    dg = lambda a: 1.0 / a - special.polygamma(1, a)  # noqa: E731
    a0 = (3 - s + math.sqrt((s - 3) ** 2 + 24 * s)) / (12 * s)
    a = _safeguarded_newton(g, dg, *_bracket(g, a0, 2.0), a0)
    scale = x.mean() / a
    ll = float((a - 1) * np.log(x).sum() - n * a * math.log(scale) - n * special.gammaln(a)
               - x.sum() / scale)
    return {"shape": a, "scale": scale}, ll


def _fit_weibull(x, n):
    lx = np.log(x)
    mlx = lx.mean()

    def parts(c):
        w = np.exp(c * (lx - lx.max()))      # x^c up to a common factor
        return w.sum(), (w * lx).sum(), (w * lx * lx).sum()

    def g(c):
        s0, s1, _ = parts(c)
        return s1 / s0 - 1.0 / c - mlx

    def dg(c):
        s0, s1, s2 = parts(c)
        return s2 / s0 - (s1 / s0) ** 2 + 1.0 / (c * c)

    c0 = 1.2 / max(lx.std(), 1e-12)
    c = _safeguarded_newton(g, dg, *_bracket(g, c0, 2.0), c0)
    scale = math.exp(mlx + math.log(np.mean(np.exp(c * (lx - mlx)))) / c)
    z = x / scale
    ll = float(n * math.log(c) - n * c * math.log(scale) + (c - 1) * lx.sum() - np.sum(z ** c))
    return {"shape": c, "scale": scale}, ll


def _fit_family(family, x, n):
    if family == "normal":
        mu, sd = x.mean(), x.std()
        if sd <= 0:
            raise StatsError("constant data")
        return {"mu": mu, "sigma": sd}, float(-0.5 * n * (math.log(2 * math.pi * sd * sd) + 1.0)), 2
    if np.any(x <= 0):
        raise StatsError("non-positive data")
    if family == "lognormal":
        lx = np.log(x)
        mu, sd = lx.mean(), lx.std()
        if sd <= 0:
            raise StatsError("constant data")
        return ({"mu": mu, "sigma": sd},
                float(-0.5 * n * (math.log(2 * math.pi * sd * sd) + 1.0) - lx.sum()), 2)
    if family == "exponential":
        rate = 1.0 / x.mean()
        return {"rate": rate}, float(n * math.log(rate) - n), 1
    if family == "gamma":
        return (*_fit_gamma(x, n), 2)
    if family == "weibull":
        return (*_fit_weibull(x, n), 2)
    raise StatsError(f"unknown family {family!r}")


def fit_distributions(values, families: Sequence[str] = FAMILIES) -> FitResult:
    """Maximum-likelihood fits ranked by AIC, ties broken by BIC.

    Families that cannot be fitted (non-positive data, no convergence) are
    skipped with a note.
    """
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if n < 10:
        raise StatsError("at least 10 values are required")
    if not np.all(np.isfinite(x)):
        raise StatsError("values must be finite")
    fits, notes = {}, []
    for fam in families:
        try:
            params, ll, k = _fit_family(fam, x, n)
        except StatsError as exc:
            notes.append(f"{fam} skipped: {exc}")
            continue
        fits[fam] = FamilyFit(fam, {p: float(v) for p, v in params.items()}, k, n, ll)
    if not fits:
        raise StatsError("no family could be fitted")
    best = min(fits.values(), key=lambda f: (f.aic, f.bic))
    return FitResult(n, fits, best.family, notes)


def fit_report(results: dict) -> dict:
    """JSON-ready report with one table (family rows) per fitted variable."""
    return {"schema": "poresens/1", "tables": {name: r.to_dict() for name, r in results.items()}}


# --------------------------------------------------------------------------
# Regression and templates
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Regression:
    slope: float
    intercept: float
    r: float
    r_log: float | None

    def __call__(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)


def linear_regression(x, y) -> Regression:
    """Least-squares line on raw axes; ``r_log`` is the correlation on log axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise StatsError("need at least three paired values")
    res = stats.linregress(x, y)
    r_log = None
    if np.all(x > 0) and np.all(y > 0) and min(np.std(np.log(x)), np.std(np.log(y))) > 1e-9:
        r_log = float(stats.pearsonr(np.log(x), np.log(y))[0])
    return Regression(float(res.slope), float(res.intercept), float(res.rvalue), r_log)


@dataclass(frozen=True)
class Template:
    aspect: float
    major: float


def sample_templates(mu: float, sigma: float, regression: Regression, count: int = 50) -> list[Template]:
    """Templates at the lognormal quantiles ``(i − 0.5)/count`` of the aspect ratio."""
    if count < 1:
        raise StatsError("count must be positive")
    q = (np.arange(1, count + 1) - 0.5) / count
    aspect = np.exp(mu + sigma * special.ndtri(q))
    major = regression(aspect)
    return [Template(float(a), float(m)) for a, m in zip(aspect, major)]


def match_template(point, templates: Sequence[Template]) -> int:
    """Index of the template nearest to ``(aspect, major)``; lowest index wins ties."""
    if not templates:
        raise StatsError("empty template list")
    t = np.array([[tp.aspect, tp.major] for tp in templates])
    d = np.linalg.norm(t - np.asarray(point, dtype=float), axis=1)
    return int(np.argmin(d))
