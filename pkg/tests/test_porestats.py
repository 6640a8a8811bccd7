import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import spatial, stats

from poresens import porestats as ps
from poresens.mesh import circle_pore, rectangle_outline


def unit_sphere(n=2000):
    k = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * k / n)
    th = math.pi * (1 + 5 ** 0.5) * k
    v = np.column_stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)])
    f = spatial.ConvexHull(v).simplices.copy()
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    flip = np.einsum("ij,ij->i", np.cross(b - a, c - a), a) < 0
    f[flip] = f[flip][:, ::-1]
    return v, f


CUBE_V = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], float)
CUBE_F = np.array([[0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5], [0, 4, 5], [0, 5, 1],
                   [2, 3, 7], [2, 7, 6], [0, 2, 6], [0, 6, 4], [1, 5, 7], [1, 7, 3]])


# -- descriptors -------------------------------------------------------------

def test_circle_descriptors():
    d = ps.descriptors_2d(circle_pore("p", (0, 0), 1.0, 256))
    assert abs(d.eq_diameter - 2.0) < 1e-3
    assert abs(d.circularity - 1.0) < 1e-3


def test_square_circularity():
    d = ps.descriptors_2d([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert math.isclose(d.circularity, math.sqrt(math.pi) / 2, rel_tol=1e-14)
    assert abs(d.circularity - 0.8862) < 1e-4


def test_degenerate_polygon():
    with pytest.raises(ps.StatsError, match="zero area"):
        ps.descriptors_2d([[0, 0], [1, 0], [2, 0]])


def test_sphere_and_cube_sphericity():
    v, f = unit_sphere()
    assert abs(ps.descriptors_3d(v, f).sphericity - 1) < 5e-3
    d = ps.descriptors_3d(CUBE_V, CUBE_F)
    assert math.isclose(d.volume, 1.0, rel_tol=1e-14)
    assert math.isclose(d.sphericity, math.pi ** (1 / 3) * 6 ** (2 / 3) / 6, rel_tol=1e-14)
    assert abs(d.sphericity - 0.806) < 1e-3


def test_inverted_and_open_surfaces():
    with pytest.raises(ps.StatsError, match="negative volume"):
        ps.descriptors_3d(CUBE_V, CUBE_F[:, ::-1])
    with pytest.raises(ps.StatsError, match="open"):
        ps.descriptors_3d(CUBE_V, CUBE_F[:-1])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0.2, 5.0), st.floats(0, 1)), min_size=3, max_size=30))
def test_isoperimetric_bound(radial):
    # star-shaped polygon from sorted angles and random radii
    ang = np.sort(np.array([a for _, a in radial]) * 2 * math.pi)
    if np.min(np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))) < 1e-3 or ang[-1] - ang[0] < math.pi:
        return
    r = np.array([q for q, _ in radial])
    pts = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    try:
        d = ps.descriptors_2d(pts)
    except ps.StatsError:
        return
    assert 0 < d.circularity <= 1 + 1e-9


# -- spatial statistics ------------------------------------------------------

def test_spatial_distances():
    ol, _ = rectangle_outline(40, 20)
    pores = [circle_pore("a", (10, 10), 2, 256), circle_pore("b", (20, 10), 3, 256)]
    s = ps.spatial_stats(pores, ol)
    assert np.allclose(s.nearest_pore, 5.0, atol=1e-3)
    assert np.allclose(s.surface, [8.0, 7.0], atol=1e-3)


def test_tangent_pore_and_single_pore():
    ol = [[0, 0], [10, 0], [10, 10], [0, 10]]
    # the square pore shares part of the left side of the outline
    s = ps.spatial_stats([np.array([[0, 2], [2, 2], [2, 4], [0, 4]], float)], ol)
    assert s.surface[0] == 0.0
    assert math.isnan(s.nearest_pore[0]) and s.warnings


def test_cdf():
    x, frac = ps.cumulative_distribution([3, 1, 4, 2])
    assert list(x) == [1, 2, 3, 4] and frac[-1] == 1.0
    assert np.all(np.diff(frac) >= 0)
    assert ps.cdf_at([1, 2, 3, 4], 2) == 0.5


def test_descriptor_csv_round_trip(tmp_path):
    ol, _ = rectangle_outline(40, 20)
    pores = [circle_pore("a", (10, 10), 2, 64), circle_pore("b", (20, 10), 3, 64)]
    t = ps.descriptor_table(pores, ol)
    path = tmp_path / "d.csv"
    ps.write_descriptor_csv(t, path)
    assert path.read_text().splitlines()[0] == ",".join(ps.DESCRIPTOR_COLUMNS)
    back = ps.read_descriptor_csv(path)
    assert back.ids == t.ids and np.array_equal(back.eq_diameter, t.eq_diameter)
    assert np.array_equal(back.dist_pore, t.dist_pore)


# -- information criteria and fits ------------------------------------------

def test_table_rows_identities():
    assert round(ps.aic(-2423.443, 2), 3) == 4850.886
    assert round(ps.aic(-3667.927, 1), 3) == 7337.854
    assert math.isclose(ps.bic(-2423.443, 2, 1320), 2 * math.log(1320) + 4846.886, rel_tol=1e-15)


def test_lognormal_recovery():
    x = np.random.default_rng(2024).lognormal(0.3, 0.5, 2000)
    r = ps.fit_distributions(x)
    assert r.selected == "lognormal"
    p = r.fits["lognormal"].params
    assert abs(p["mu"] / 0.3 - 1) < 0.05 and abs(p["sigma"] / 0.5 - 1) < 0.05
    for f in r.fits.values():
        assert f.aic == 2 * f.k - 2 * f.log_likelihood
        assert f.bic == f.k * math.log(f.n) - 2 * f.log_likelihood


def test_fits_match_scipy_likelihoods():
    x = np.random.default_rng(5).gamma(2.5, 1.3, 800)
    r = ps.fit_distributions(x)
    a, _, scale = stats.gamma.fit(x, floc=0)
    ll_gamma = stats.gamma.logpdf(x, a, 0, scale).sum()
    assert r.fits["gamma"].log_likelihood >= ll_gamma - 1e-6
    c, _, scale = stats.weibull_min.fit(x, floc=0)
    assert r.fits["weibull"].log_likelihood >= stats.weibull_min.logpdf(x, c, 0, scale).sum() - 1e-6
    mu, sd = stats.norm.fit(x)
    assert math.isclose(r.fits["normal"].log_likelihood, stats.norm.logpdf(x, mu, sd).sum(), rel_tol=1e-10)
    assert r.selected == "gamma"


def test_non_positive_data_skips_families():
    x = np.random.default_rng(1).normal(0.0, 1.0, 200)
    r = ps.fit_distributions(x)
    assert set(r.fits) == {"normal"} and r.selected == "normal"
    assert len(r.notes) == 4
    with pytest.raises(ps.StatsError):
        ps.fit_distributions([1.0, 2.0])


def test_fit_report_layout():
    x = np.random.default_rng(3).lognormal(0, 1, 100)
    rep = ps.fit_report({"eq_diameter": ps.fit_distributions(x)})
    rows = rep["tables"]["eq_diameter"]["families"]
    assert [r["family"] for r in rows] == list(ps.FAMILIES)
    assert {"log_likelihood", "aic", "bic", "params", "k"} <= set(rows[0])


# -- regression and templates ------------------------------------------------

def test_regression_recovers_line():
    x = np.linspace(1, 10, 50)
    y = 2 * x + 1e-9 * np.sin(7 * x)
    r = ps.linear_regression(x, y)
    assert abs(r.slope - 2) < 1e-6 and r.r > 1 - 1e-9
    assert r.r_log is not None


def test_template_quantiles_straddle_median():
    reg = ps.Regression(1.0, 0.0, 1.0, None)
    t = ps.sample_templates(0.0, 1.0, reg)
    assert len(t) == 50
    assert t[24].aspect < 1.0 < t[25].aspect
    assert t == ps.sample_templates(0.0, 1.0, reg)
    assert t[0].major == t[0].aspect


def test_match_template():
    reg = ps.Regression(2.0, 1.0, 1.0, None)
    t = ps.sample_templates(0.0, 0.5, reg, 10)
    assert ps.match_template((9.0, -3.0), t[:1]) == 0
    k = 6
    assert ps.match_template((t[k].aspect, t[k].major), t) == k
    dup = [ps.Template(1.0, 1.0), ps.Template(1.0, 1.0)]
    assert ps.match_template((1.0, 1.0), dup) == 0
    with pytest.raises(ps.StatsError, match="empty"):
        ps.match_template((1.0, 1.0), [])
