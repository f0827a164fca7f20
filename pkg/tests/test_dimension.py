import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from levilab import dimension as dm
from levilab.exceptions import DependencyError, EmptySystemError, ParameterError
from levilab.hyperbolic import apply_matrix, mobius_derivative_spherical
from levilab.suspension import CIRCLE, preset, schottky_discs


@pytest.fixture(scope="module")
def sch_sample():
    return dm.sample_limit_set(preset("schottky(4, 1)").rep, 10)


def small_disc_oracle(c, r):
    """Dimension of the symmetric Schottky Cantor set in the small-disc regime.

    Leading-order contraction of a letter is (r/2c)^2 when followed by the
    same generator and r^2/2c^2 when followed by the other one, so the
    pressure equation is (r/2c)^(2s) + 2 (r^2/2c^2)^s = 1.
    """
    g = lambda s: (r / (2 * c)) ** (2 * s) + 2 * (r * r / (2 * c * c)) ** s - 1
    return brentq(g, 1e-6, 2.0)


# -- limit sets ---------------------------------------------------------------

def test_trivial_limit_set_is_a_point():
    s = dm.sample_limit_set(preset("trivial").rep, 10, base=0.3j)
    assert len(s) == 1 and s.points[0] == 0.3j


def test_depth_guard():
    with pytest.raises(ParameterError):
        dm.sample_limit_set(preset("schottky(4, 1)").rep, 15)


def test_exhaustive_small_depth_is_reduced_words():
    rep = preset("schottky(4, 1)").rep
    s = dm.sample_limit_set(rep, 2)
    assert s.exhaustive and s.n_words == 12 and len(s) == 12
    letters = [1, -1, 3, -3]  # b1, b2 are trivial in this preset
    ref = {complex(apply_matrix(rep.word_matrix((b, a)), 0j)) for a in letters for b in letters
           if a != -b}
    for z in s.points:
        assert min(abs(z - w) for w in ref) < 1e-12


def test_schottky_ping_pong(sch_sample):
    assert len(sch_sample) > 1000
    discs = schottky_discs(4.0, 1.0)
    inside = np.zeros(len(sch_sample), dtype=bool)
    for c, r, _ in discs:
        inside |= np.abs(sch_sample.points - c) <= r * (1 + 1e-9)
    assert inside.all()


def test_fuchsian_limit_set_fills_circle():
    s = dm.sample_limit_set("fuchsian-boundary", 10, max_points=60_000, seed=1)
    assert s.fiber_type == CIRCLE and not s.exhaustive
    ang = np.sort(np.mod(np.angle(s.embedded()[:, 0] + 1j * s.embedded()[:, 1]), 2 * math.pi))
    gaps = np.diff(np.r_[ang, ang[0] + 2 * math.pi])
    assert gaps.max() < 0.1


def test_dedup_resolution():
    rep = preset("schottky(4, 1)").rep
    s = dm.sample_limit_set(rep, 6)
    x = s.embedded()
    d = np.linalg.norm(x[:, None] - x[None], axis=-1)
    d[np.diag_indices_from(d)] = 1.0
    assert d.min() > 1e-10


def test_limit_set_csv(tmp_path, sch_sample):
    p = tmp_path / "ls.csv"
    dm.export_limit_set_csv(sch_sample, p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["re", "im"] and len(rows) == len(sch_sample) + 1
    assert complex(float(rows[1][0]), float(rows[1][1])) == sch_sample.points[0]


# -- box counting ---------------------------------------------------------------

def test_circle_box_dimension():
    theta = np.linspace(0, 2 * math.pi, 20000, endpoint=False)
    rep = dm.box_counting(np.stack([np.cos(theta), np.sin(theta)], axis=1))
    assert abs(rep.box_dimension - 1.0) < 0.05


def test_single_point_box_dimension():
    rep = dm.box_counting(np.zeros((1000, 2)))
    assert rep.box_dimension == 0.0


def test_box_counting_preconditions():
    with pytest.raises(ParameterError):
        dm.box_counting(np.zeros((999, 2)))
    with pytest.raises(ParameterError):
        dm.box_counting(np.random.default_rng(0).normal(size=(2000, 2)),
                        radii=np.geomspace(0.01, 0.1, 8))
    with pytest.raises(ParameterError):
        dm.box_counting(np.random.default_rng(0).normal(size=(2000, 2)),
                        radii=np.geomspace(0.001, 0.1, 7))


def test_schottky_box_dimension_matches_small_disc_oracle(sch_sample):
    rep = dm.box_counting(sch_sample)
    assert 0.0 <= rep.box_dimension <= 2.0
    assert rep.fit_r2 > 0.95
    assert abs(rep.box_dimension - small_disc_oracle(4.0, 1.0)) < 0.1
    s5 = dm.sample_limit_set(preset("schottky(5, 1)").rep, 10)
    assert abs(dm.box_counting(s5).box_dimension - small_disc_oracle(5.0, 1.0)) < 0.1


def test_small_disc_oracle_frozen():
    assert small_disc_oracle(4.0, 1.0) == pytest.approx(0.298, abs=1e-3)
    assert small_disc_oracle(5.0, 1.0) == pytest.approx(0.266, abs=1e-3)


def test_shrinking_discs_shrink_dimension():
    dims = [dm.box_counting(dm.sample_limit_set(preset(f"schottky({c}, 1)").rep, 10)).box_dimension
            for c in (3.0, 4.0, 5.0)]
    assert dims[0] > dims[1] > dims[2]


_SAMPLES = {}


def _sample(kind):
    if kind not in _SAMPLES:
        if kind.startswith("schottky"):
            _SAMPLES[kind] = dm.sample_limit_set(preset(kind).rep, 9).embedded()
        else:
            t = np.linspace(0, 2 * math.pi, 100_000, endpoint=False)
            _SAMPLES[kind] = np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=1)
    return _SAMPLES[kind]


# Limit-set samples and a resolved circle. A short arc resolved with few
# boxes at the top radius is a known counterexample for the fitted slope
# (the union fit averages the two power laws), so it is not drawn here.
KINDS = ["schottky(4, 1)", "schottky(5, 1)", "schottky(3, 0.75)", "schottky(6, 1.5)"]
RADII = np.geomspace(1e-5, 0.1, 12)


@given(st.sampled_from(KINDS), st.sampled_from(KINDS))
def test_box_dimension_union_monotone(a, b):
    xa, xb = _sample(a), _sample(b)
    da = dm.box_counting(xa, RADII).box_dimension
    db = dm.box_counting(xb, RADII).box_dimension
    du = dm.box_counting(np.vstack([xa, xb]), RADII).box_dimension
    assert du >= max(da, db) - 0.05


def test_box_dimension_union_with_circle():
    radii = np.geomspace(1e-3, 0.1, 10)
    xc, xk = _sample("circle"), _sample("schottky(4, 1)")
    dc = dm.box_counting(xc, radii).box_dimension
    dk = dm.box_counting(xk, radii).box_dimension
    du = dm.box_counting(np.vstack([xc, xk]), radii).box_dimension
    assert abs(dc - 1) < 0.05
    assert du >= max(dc, dk) - 0.05


# -- holonomy IFS ------------------------------------------------------------------

def test_schottky_ifs():
    f = preset("schottky(4, 1)")
    ifs = dm.build_holonomy_ifs(f)
    assert len(ifs.maps) == 2
    assert ifs.recheck()
    assert all(0 < r < 1 for r in ifs.ratios)
    # images strictly inside the chart disc and pairwise disjoint
    circles = ifs.image_circles()
    for o, rad in circles:
        assert abs(o - ifs.center) + rad <= ifs.radius * (1 - 1e-6)
    (o1, r1), (o2, r2) = circles
    assert abs(o1 - o2) > r1 + r2
    # disjointness on boundary samples
    th = np.linspace(0, 2 * math.pi, 1000, endpoint=False)
    ring = ifs.center + ifs.radius * np.exp(1j * th)
    im = [apply_matrix(h.matrix, ring) for h in ifs.maps]
    assert np.min(np.abs(im[0][:, None] - im[1][None])) > 0


def test_ifs_koebe_bound():
    ifs = dm.build_holonomy_ifs(preset("schottky(4, 1)"))
    rng = np.random.default_rng(0)
    z = ifs.center + ifs.radius * np.sqrt(rng.uniform(size=2000)) * np.exp(2j * math.pi * rng.uniform(size=2000))
    for h in ifs.maps:
        m = h.normalized().matrix
        ld = -2 * np.log(np.abs(m[1, 0] * z + m[1, 1]))
        ld0 = -2 * math.log(abs(m[1, 0] * ifs.center + m[1, 1]))
        assert np.max(np.abs(ld - ld0)) <= ifs.kappa + 1e-12


def test_trivial_ifs_is_empty():
    with pytest.raises(EmptySystemError):
        dm.build_holonomy_ifs(preset("trivial"))


def test_moran_examples():
    assert dm.solve_moran([1 / 3, 1 / 3]) == pytest.approx(math.log(2) / math.log(3), abs=1e-10)
    with pytest.raises(ParameterError):
        dm.solve_moran([0.5])
    with pytest.raises(ParameterError):
        dm.solve_moran([0.5, 1.0])
    with pytest.raises(ParameterError):
        dm.solve_moran([0.5, 0.0])


def test_moran_bracket_contains_box_dimension(sch_sample):
    ifs = dm.build_holonomy_ifs(preset("schottky(4, 1)"))
    lo, hi = dm.moran_bracket(ifs)
    s = dm.moran_dimension(ifs)
    assert lo <= s <= hi
    assert lo <= dm.box_counting(sch_sample).box_dimension <= hi


ratios = st.lists(st.floats(1e-4, 0.95), min_size=2, max_size=8)


@given(ratios)
def test_moran_residual(r):
    s = dm.solve_moran(r)
    assert abs(sum(x ** s for x in r) - 1) < 1e-9


@given(ratios, st.integers(0, 7), st.floats(0.1, 0.99))
def test_moran_monotone(r, i, shrink):
    i %= len(r)
    smaller = list(r)
    smaller[i] *= shrink
    assert dm.solve_moran(smaller) <= dm.solve_moran(r) + 1e-9


# -- inequality --------------------------------------------------------------------

def test_inequality_needs_estimates():
    with pytest.raises(DependencyError):
        dm.verify_dimension_inequality("fuchsian-boundary", lyapunov=0.1, entropy=1.0)
    with pytest.raises(DependencyError):
        dm.verify_dimension_inequality("fuchsian-boundary", lyapunov=-1.0, entropy=0.0)


def test_inequality_fuchsian_near_equality():
    r = dm.verify_dimension_inequality("fuchsian-boundary", lyapunov=-1.0, entropy=1.0,
                                       with_ifs=False, max_points=60_000)
    assert r.passed and r.near_equality and r.entropy_kind == "leaf"
    assert abs(r.dimension - 1) < 0.1
    assert "pass" in r.summary()


def test_inequality_reports_universal_cover_entropy():
    r = dm.verify_dimension_inequality("schottky(4, 1)", lyapunov=-2.0, entropy=0.5)
    assert r.entropy_kind == "universal-cover upper bound" and r.notes
    assert r.moran_bracket[0] <= r.dimension <= r.moran_bracket[1]
    assert r.passed and r.margin == pytest.approx(r.dimension - 0.25)
