import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levilab import suspension as su
from levilab.brownian import BrownianPath, simulate_path
from levilab.estimators import lyapunov_exponent
from levilab.exceptions import ParameterError
from levilab.hyperbolic import (
    BoundaryPoint, HPoint, MoebiusMap, apply_matrix, half_plane_distance, hyperbolic_distance,
    mobius_derivative_spherical,
)


# -- octagon -------------------------------------------------------------------

def test_octagon_relator_and_area(octagon):
    assert octagon.relator_error() < 1e-6
    assert abs(octagon.area() - 4 * math.pi) < 1e-9
    assert abs(sum(octagon.interior_angles()) - 2 * math.pi) < 1e-9
    assert octagon.side_pairing_error() < 1e-8
    assert octagon.genus == 2 and len(octagon.generators) == 4


def test_octagon_is_regular(octagon):
    verts = [HPoint(complex(v), "disc") for v in octagon.vertices]
    d = [hyperbolic_distance(HPoint(octagon.center), v) for v in verts]
    assert max(d) - min(d) < 1e-12
    assert abs(d[0] - octagon.circumradius) < 1e-12


def test_generators_are_real(octagon):
    assert all(g.is_real(1e-12) for g in octagon.generators)


def test_relator_is_identity(octagon):
    assert octagon.relator().allclose(MoebiusMap.identity(), tol=1e-6)


def test_reduce_interior_point(octagon):
    z = HPoint(0.05 + 1.1j)
    w, word = su.reduce_to_domain(octagon, z)
    assert word == () and w == z


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_reduce_single_generator(octagon, k):
    z = HPoint(complex(apply_matrix(octagon.letter(k).matrix, octagon.center)))
    w, word = su.reduce_to_domain(octagon, z)
    assert word == (-k,)
    assert abs(w.coord - octagon.center) < 1e-12


def test_reduce_round_trip(octagon):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        # points up to distance ~8 from the centre
        z = HPoint(complex(rng.normal(0, 3), math.exp(rng.normal(0, 1.5))))
        w, word = su.reduce_to_domain(octagon, z)
        assert octagon.contains(w.coord)
        back = apply_matrix(np.linalg.inv(octagon.word_matrix(word)), w.coord)
        worst = max(worst, hyperbolic_distance(HPoint(complex(back)), z))
    assert worst < 1e-7


def test_domain_samples_are_inside(octagon):
    gens = [np.random.default_rng(i) for i in range(500)]
    pts = su.sample_domain_points(octagon, gens, 500)
    assert all(octagon.contains(p) for p in pts)


def test_letter_names():
    assert su.letter_name(-3) == "a2^-1"
    assert su.parse_letter("b2^-1") == -4
    with pytest.raises(ParameterError):
        su.parse_letter("c1")


# -- representations and presets ------------------------------------------------

def test_representation_relator_validation(octagon):
    bad = [MoebiusMap.from_matrix([[2, 0], [0, 0.5]]), MoebiusMap.from_matrix([[1, 1], [0, 1]]),
           MoebiusMap.identity(), MoebiusMap.identity()]
    with pytest.raises(ParameterError):
        su.FiberRepresentation(tuple(bad), "bad")


def test_presets(fuchsian, schottky41, trivial_f):
    assert fuchsian.fiber_type == su.CIRCLE and fuchsian.rep.is_real
    assert fuchsian.simply_connected_leaves
    assert schottky41.fiber_type == su.SPHERE
    assert not schottky41.simply_connected_leaves
    assert trivial_f.rep.is_trivial
    for f in (fuchsian, schottky41, trivial_f):
        assert f.rep.relator_error() < 1e-6
    assert su.preset("schottky(c=5, r=1)").schottky_params == (5.0, 1.0)
    with pytest.raises(ParameterError):
        su.preset("nope")
    with pytest.raises(ParameterError):
        su.schottky(1.0, 1.0)


def test_circle_fiber_needs_real_rep(octagon, schottky41):
    with pytest.raises(ParameterError):
        su.SuspensionFoliation(octagon, schottky41.rep, su.CIRCLE)


# -- holonomy ------------------------------------------------------------------

def test_trivial_rep_has_zero_derivative(trivial_f):
    for seed in range(3):
        p = simulate_path(HPoint(1j), 5.0, 0.01, seed=seed)
        s = su.holonomy_along_path(trivial_f, p, 0.4 + 0.1j)
        assert s.log_deriv == 0.0
        assert s.fiber_point == pytest.approx(0.4 + 0.1j)


@pytest.mark.parametrize("name", ["fuchsian-boundary", "schottky(4, 1)"])
def test_word_recomputation(name):
    f = su.preset(name)
    p = simulate_path(HPoint(0.1 + 1.05j), 8.0, 0.01, seed=1)
    start = 0.3 if f.fiber_type == su.CIRCLE else 0.3 + 0.2j
    s = su.holonomy_along_path(f, p, start)
    assert len(s.word) > 0
    W = f.rep.word_matrix(s.word)
    assert abs(complex(apply_matrix(W, start)) - s.fiber_point) < 1e-6 * max(1, abs(s.fiber_point))
    # chain-rule product of the letter derivatives
    u = start
    total = 0.0
    for k in s.word:
        m = f.rep.letter(k)
        total += math.log(mobius_derivative_spherical(m, u))
        u = complex(apply_matrix(m.matrix, u))
    assert abs(total - s.log_deriv) < 1e-6
    # the base word reduces the endpoint to the reported base point
    Wb = f.base.word_matrix(s.word)
    assert abs(complex(apply_matrix(Wb, p.samples[-1])) - s.base_point.coord) < 1e-6


def test_lifted_point_follows_the_path(fuchsian):
    p = simulate_path(HPoint(1j), 10.0, 0.01, seed=2)
    s = su.holonomy_along_path(fuchsian, p, 0.0)
    lifted = complex(apply_matrix(s.deck, s.base_point.coord))
    assert half_plane_distance(lifted, p.samples[-1]) < 1e-9


def _reframe(samples, deck):
    """Samples of a path moved by the inverse deck map into the domain frame."""
    return apply_matrix(np.linalg.inv(deck), samples)


@given(st.integers(0, 10_000), st.integers(50, 450))
def test_cocycle_additivity(seed, k):
    f = su.preset("fuchsian-boundary")
    p = simulate_path(HPoint(0.2 + 1.3j), 5.0, 0.01, seed=seed)
    full = su.holonomy_along_path(f, p, 0.7)
    a = BrownianPath(p.step, p.samples[:k + 1], k * p.step, 0, p.increments[:k])
    sa = su.holonomy_along_path(f, a, 0.7)
    rest = _reframe(p.samples[k:], sa.deck)
    b = BrownianPath(p.step, rest, (len(rest) - 1) * p.step, 0)
    sb = su.holonomy_along_path(f, b, sa.fiber_homogeneous)
    assert abs(sa.log_deriv + sb.log_deriv - full.log_deriv) < 1e-8


def test_step_too_large_is_rejected(fuchsian):
    samples = np.array([1j, 1j * math.exp(8.0)])
    p = BrownianPath(1.0, samples, 1.0, 0)
    with pytest.raises(ParameterError):
        su.holonomy_along_path(fuchsian, p, 0.0)


def test_metric_option(fuchsian):
    p = simulate_path(HPoint(1j), 5.0, 0.01, seed=4)
    with pytest.raises(ParameterError):
        su.holonomy_along_path(fuchsian, p, 0.0, metric="bogus")
    a = su.holonomy_along_path(fuchsian, p, 0.3, metric=su.AFFINE)
    s = su.holonomy_along_path(fuchsian, p, 0.3)
    # the two metrics differ by a bounded additive term on P^1
    z0, z1 = 0.3, a.fiber_point
    bound = math.log((1 + z0 ** 2) * (1 + abs(z1) ** 2)) + 1e-9
    assert abs(a.log_deriv - s.log_deriv) <= bound


def test_fuchsian_contraction_rate(fuchsian):
    w = su.run_paths(fuchsian, np.arange(96), 0, 30.0, 0.02, burn_in=5.0)
    rate = w.logd / 30.0
    assert abs(rate.mean() + 1.0) < 4 * rate.std(ddof=1) / math.sqrt(rate.size) + 0.05


def test_metric_independence_of_exponent():
    kw = dict(horizon=12.0, n_paths=128, step=0.02, seed=1)
    s = lyapunov_exponent("fuchsian-boundary", **kw)
    a = lyapunov_exponent("fuchsian-boundary", metric=su.AFFINE, **kw)
    assert abs(s.value - a.value) < 3 * math.hypot(s.std_error, a.std_error)


def test_conjugation_invariance(schottky41):
    h = MoebiusMap.from_matrix([[1.3, 0.2 + 0.4j], [-0.3j, 0.9]])
    conj = su.SuspensionFoliation(schottky41.base, schottky41.rep.conjugate(h), su.SPHERE)
    kw = dict(horizon=12.0, n_paths=128, step=0.02, seed=3)
    a = lyapunov_exponent(schottky41, **kw)
    b = lyapunov_exponent(conj, **kw)
    assert abs(a.value - b.value) < 3 * math.hypot(a.std_error, b.std_error)


# -- geodesic flow ----------------------------------------------------------------

@pytest.mark.parametrize("seed", range(3))
def test_geodesic_lift_is_exact(fuchsian, seed):
    rng = np.random.default_rng(seed)
    z = HPoint(complex(rng.normal(), math.exp(rng.normal() * 0.5)))
    xi = BoundaryPoint(float(rng.normal() * 2))
    lift = su.lift_geodesic_trajectory(fuchsian, z, xi, 10.0)
    assert lift.max_defect < 1e-6
    assert lift.endpoint == xi
    assert abs(lift.rho_lower - 1) < 1e-6 and abs(lift.rho_upper - 1) < 1e-6
    assert lift.crossings > 0


def test_geodesic_lift_holonomy_at_endpoint(fuchsian):
    # the fiber at the forward endpoint is the unstable direction: |h'| grows like e^T
    lift = su.lift_geodesic_trajectory(fuchsian, HPoint(1j), BoundaryPoint(0.3), 20.0)
    assert abs(lift.log_deriv / 20.0 - 1.0) < 0.2


def test_geodesic_lift_rejects_bad_T(fuchsian):
    with pytest.raises(ParameterError):
        su.lift_geodesic_trajectory(fuchsian, HPoint(1j), BoundaryPoint(0.0), 0.0)


def test_geodesic_endpoint_examples():
    assert su.geodesic_endpoint(HPoint(1j), math.pi / 2).is_infinite
    assert abs(su.geodesic_endpoint(HPoint(1j), -math.pi / 2).coord) < 1e-15
    d = 0.4
    assert su.geodesic_endpoint(HPoint(1j), d).coord == pytest.approx(math.tan(d / 2 + math.pi / 4))


def test_endpoint_continuity():
    eps = 1e-3
    base = su.geodesic_endpoint(HPoint(0.2 + 1j), 0.3).coord.real
    moved = su.geodesic_endpoint(HPoint(0.2 + eps + 1j), 0.3).coord.real
    assert 0 < abs(moved - base) < 10 * eps


# -- flow jacobian -----------------------------------------------------------------

def test_jacobian_zero_time():
    r = su.flow_jacobian_check(0.0, 50_000, seed=1)
    assert abs(r.ratio - 1.0) < 0.01


@pytest.mark.parametrize("t", [1.0, 2.0])
def test_jacobian_scaling(t):
    r = su.flow_jacobian_check(t, 50_000, seed=2)
    assert r.expected == pytest.approx(math.exp(t))
    assert r.rel_error < 0.01 and r.ok


def test_jacobian_range():
    with pytest.raises(ParameterError):
        su.flow_jacobian_check(5.5)
