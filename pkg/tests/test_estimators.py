import math
import warnings

import numpy as np
import pytest
from sklearn.base import clone

from levilab import estimators as es
from levilab.dimension import sample_limit_set, box_counting
from levilab.exceptions import ParameterError
from levilab.suspension import SPHERE, preset, schottky_discs

# exact finite-horizon pointwise values -(1/t) E log p(t, r_t), frozen from
# the radial quadrature in entropy_bias (kernel checked independently in
# test_brownian)
POINTWISE_EXACT = {10.0: 1.535, 20.0: 1.2875, 25.0: 1.2349, 50.0: 1.1247}


# -- lyapunov ----------------------------------------------------------------

def test_lyapunov_trivial_is_zero():
    r = es.lyapunov_exponent("trivial", horizon=10.0, n_paths=64, step=0.05)
    assert r.value == 0.0 and r.std_error == 0.0


@pytest.mark.parametrize("kw", [dict(n_paths=63), dict(horizon=9.0), dict(step=0.2),
                                dict(metric="x"), dict(seed=-1)])
def test_lyapunov_preconditions(kw):
    args = dict(horizon=10.0, n_paths=64, step=0.05)
    args.update(kw)
    with pytest.raises(ParameterError):
        es.lyapunov_exponent("fuchsian-boundary", **args)


def test_lyapunov_reproducible_across_threads():
    kw = dict(horizon=10.0, n_paths=300, step=0.05, seed=4)
    a = es.lyapunov_exponent("schottky(4, 1)", threads=1, **kw)
    b = es.lyapunov_exponent("schottky(4, 1)", threads=2, **kw)
    assert repr(a.value) == repr(b.value) and repr(a.std_error) == repr(b.std_error)
    assert a.std_error >= 0 and a.params["preset"] == "schottky(4, 1)"


def test_lyapunov_horizon_doubling():
    a = es.lyapunov_exponent("fuchsian-boundary", horizon=12.0, n_paths=192, step=0.02, seed=1)
    b = es.lyapunov_exponent("fuchsian-boundary", horizon=24.0, n_paths=192, step=0.02, seed=2)
    assert abs(a.value - b.value) < 3 * math.hypot(a.std_error, b.std_error)


def test_schottky_exponent_is_negative():
    r = es.lyapunov_exponent("schottky(4, 1)", horizon=20.0, n_paths=128, step=0.02, seed=0)
    assert r.value + 3 * r.std_error < 0


def test_lyapunov_estimator_wrapper():
    est = es.LyapunovEstimator("trivial", horizon=10.0, n_paths=64, step=0.05)
    assert clone(est).get_params()["preset"] == "trivial"
    assert est.fit().exponent_ == 0.0


# -- entropy ---------------------------------------------------------------------

@pytest.mark.parametrize("t", sorted(POINTWISE_EXACT))
def test_entropy_bias_frozen(t):
    assert es.entropy_bias(t) == pytest.approx(POINTWISE_EXACT[t], abs=5e-4)


def test_entropy_bias_decreases_to_one():
    vals = [es.entropy_bias(t) for t in (10.0, 20.0, 50.0, 100.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert 1.0 < vals[-1] < 1.1


def test_pointwise_entropy_matches_exact_bias():
    r = es.kaimanovich_entropy(horizon=20.0, n_paths=1024, step=0.02, seed=3, method="pointwise")
    assert abs(r.value - POINTWISE_EXACT[20.0]) < 3 * r.std_error + 0.01


def test_increment_entropy_short_run():
    r = es.kaimanovich_entropy(horizon=30.0, n_paths=512, step=0.02, seed=1)
    assert abs(r.value - 1.0) < 0.1
    assert r.params["method"] == "increment"
    assert r.value > 0


def test_entropy_time_change_scales():
    kw = dict(horizon=40.0, n_paths=512, step=0.02, seed=5)
    full = es.kaimanovich_entropy(**kw)
    half = es.kaimanovich_entropy(generator_scale=0.5, **kw)
    assert half.value / full.value == pytest.approx(0.5, abs=0.06)


def test_entropy_bias_warning():
    with pytest.warns(es.BiasWarning):
        r = es.kaimanovich_entropy(horizon=5.0, n_paths=128, step=0.05)
    assert r.warnings


def test_entropy_needs_simply_connected_leaves():
    with pytest.raises(ParameterError):
        es.kaimanovich_entropy("schottky(4, 1)", horizon=5.0, n_paths=64, step=0.05)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", es.BiasWarning)
        r = es.kaimanovich_entropy("schottky(4, 1)", horizon=5.0, n_paths=64, step=0.05,
                                   assume_simply_connected=True)
    assert r.value > 0 and r.params["leaves"] == "universal cover"


def test_entropy_bad_method():
    with pytest.raises(ParameterError):
        es.kaimanovich_entropy(horizon=20.0, n_paths=64, method="integral")


def test_entropy_estimator_wrapper():
    est = es.EntropyEstimator(horizon=20.0, n_paths=128, step=0.05)
    est.fit()
    assert est.entropy_ > 0 and est.report_.n_samples == 128


# -- harmonic measure ---------------------------------------------------------------

def test_trivial_harmonic_measure_is_uniform():
    h = es.harmonic_measure("trivial", horizon=0.0, n_paths=4000, bins=16, seed=2)
    assert h.total == 4000 and h.counts.sum() == 4000
    assert h.fiber_type == SPHERE
    stat, p = h.chi2_uniform()
    assert p > 0.01


def test_fuchsian_harmonic_measure_has_full_support():
    h = es.harmonic_measure("fuchsian-boundary", horizon=5.0, n_paths=10_000, bins=64,
                            step=0.05, seed=1)
    assert h.empty_bins == 0
    edges = h.edges[0]
    assert edges[0] == 0 and abs(edges[-1] - 2 * math.pi) < 1e-15
    rep = es.local_dimension(h)
    assert abs(rep.slope - 1.0) < 0.1


def test_schottky_harmonic_measure_concentrates():
    # the reduced word grows slowly (about 0.18 letters per unit time), so
    # the fiber law needs a long horizon to settle on the limit set
    h = es.harmonic_measure("schottky(4, 1)", horizon=50.0, n_paths=2000, bins=64,
                            step=0.05, seed=1)
    assert h.mass_in_discs(schottky_discs(4.0, 1.0)) > 0.99
    rep = es.local_dimension(h)
    sample = sample_limit_set(preset("schottky(4, 1)").rep, 10)
    assert rep.slope <= box_counting(sample).box_dimension + 0.1


def test_histogram_bins_check():
    with pytest.raises(ParameterError):
        es.harmonic_measure("trivial", horizon=0.0, n_paths=10, bins=8)


def test_sphere_bins_are_equal_area():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40000, 3))
    x /= np.linalg.norm(x, axis=1)[:, None]
    # back to P^1 via inverse stereographic projection
    z = (x[:, 0] + 1j * x[:, 1]) / (1 - x[:, 2])
    u, v = z / np.sqrt(1 + abs(z) ** 2), 1 / np.sqrt(1 + abs(z) ** 2)
    h = es.fiber_histogram(u.astype(complex), v.astype(complex), SPHERE, 64)
    assert h.bins == 64 and h.chi2_uniform()[1] > 0.01


# -- local dimension ---------------------------------------------------------------

def test_uniform_circle_slope_is_one():
    theta = np.random.default_rng(1).uniform(0, 2 * math.pi, 5000)
    rep = es.local_dimension(theta)
    assert abs(rep.slope - 1.0) < 0.1 and rep.r2 > 0.99 and not rep.low_confidence


def test_uniform_sphere_slope_is_two():
    x = np.random.default_rng(2).normal(size=(20000, 3))
    x /= np.linalg.norm(x, axis=1)[:, None]
    rep = es.local_dimension(x, radii=np.geomspace(0.02, 2.0, 10), average="mass")
    assert abs(rep.slope - 2.0) < 0.1


def test_local_dimension_preconditions():
    with pytest.raises(ParameterError):
        es.local_dimension(np.zeros(999))
    with pytest.raises(ParameterError):
        es.local_dimension(np.linspace(0, 1, 2000), radii=[0.01, 0.1])
    with pytest.raises(ParameterError):
        es.local_dimension(np.linspace(0, 1, 2000), average="median")


def test_degenerate_fit_flagged():
    # two clusters: mass is flat in r, the fit is poor
    x = np.r_[np.zeros(1000), np.full(1000, math.pi)]
    rep = es.local_dimension(x)
    assert rep.low_confidence


def test_local_dimension_estimator():
    theta = np.random.default_rng(3).uniform(0, 2 * math.pi, 3000)
    est = es.LocalDimensionEstimator(n_centers=300).fit(theta)
    assert abs(est.slope_ - 1.0) < 0.1
    assert clone(est).get_params()["n_centers"] == 300
