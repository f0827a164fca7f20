from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from levilab import surface as sf
from levilab.exceptions import NoWitnessError, ParameterError

coef = st.integers(-20, 20)
classes = st.builds(sf.DivisorClass, coef, coef)
contexts = st.builds(sf.RuledSurfaceContext, st.integers(2, 10))


def test_context():
    ctx = sf.RuledSurfaceContext(2)
    assert ctx.chi == -2
    assert sf.intersect(sf.SIGMA, sf.SIGMA, ctx) == -2
    assert sf.intersect(sf.SIGMA, sf.PHI, ctx) == 1
    assert sf.intersect(sf.PHI, sf.PHI, ctx) == 0
    for g in (0, 1):
        with pytest.raises(ParameterError):
            sf.RuledSurfaceContext(g)
    with pytest.raises(ParameterError):
        sf.RuledSurfaceContext(2.5)


def test_canonical_class_and_adjunction():
    for g in (2, 3, 17):
        ctx = sf.RuledSurfaceContext(g)
        k = sf.canonical_class(ctx)
        assert k == sf.DivisorClass(-2, 0)
        # genus formula on sigma (a copy of the base curve) and on a fiber
        assert sf.intersect(k, sf.SIGMA, ctx) + sf.intersect(sf.SIGMA, sf.SIGMA, ctx) == 2 * g - 2
        assert sf.intersect(k, sf.PHI, ctx) == -2


@given(classes, classes, classes, contexts, st.integers(-5, 5))
def test_intersection_symmetric_bilinear(c1, c2, c3, ctx, k):
    assert sf.intersect(c1, c2, ctx) == sf.intersect(c2, c1, ctx)
    assert sf.intersect(c1 + c2, c3, ctx) == sf.intersect(c1, c3, ctx) + sf.intersect(c2, c3, ctx)
    assert sf.intersect(k * c1, c2, ctx) == k * sf.intersect(c1, c2, ctx)


def test_ampleness_matches_nakai_on_grid():
    for g in range(2, 11):
        ctx = sf.RuledSurfaceContext(g)
        for a in range(-20, 21):
            for b in range(-20, 21):
                c = sf.DivisorClass(a, b)
                assert sf.is_ample(c, ctx) == sf.nakai_moishezon(c, ctx), (g, a, b)


def test_ampleness_examples():
    ctx = sf.RuledSurfaceContext(2)
    E = sf.construction_class_E(ctx)
    assert (E + sf.canonical_class(ctx)).as_tuple() == (1, 10)
    assert sf.is_ample(E + sf.canonical_class(ctx), ctx)
    assert not sf.is_ample(sf.canonical_class(ctx), ctx)
    assert not sf.is_ample(sf.PHI, ctx)


@pytest.mark.parametrize("g,L", [(2, (2, 5)), (3, (2, 9))])
def test_reider_witness(g, L):
    ctx = sf.RuledSurfaceContext(g)
    E = sf.construction_class_E(ctx)
    w = sf.reider_very_ample_witness(E, ctx)
    assert w.L.as_tuple() == L
    assert 4 * w.L + sf.canonical_class(ctx) == 2 * E
    assert w.identity_holds and w.L_ample and sf.is_ample(w.L, ctx)


def test_reider_divisibility_failure():
    ctx = sf.RuledSurfaceContext(2)
    with pytest.raises(NoWitnessError):
        sf.reider_very_ample_witness(sf.DivisorClass(1, 1), ctx)


@given(classes, contexts)
def test_reider_output_is_ample(target, ctx):
    try:
        w = sf.reider_very_ample_witness(target, ctx)
    except NoWitnessError:
        return
    assert sf.is_ample(w.L, ctx)
    assert 4 * w.L + sf.canonical_class(ctx) == 2 * target


def test_double_cover_examples():
    inv = sf.double_cover_invariants(sf.RuledSurfaceContext(2))
    assert (inv.chi_cover, inv.euler_class_cover, inv.ratio) == (-24, -4, Fraction(1, 6))
    assert sf.double_cover_invariants(sf.RuledSurfaceContext(11)).ratio == Fraction(10, 51)


def test_ratio_tends_to_one_fifth_monotonically():
    prev = Fraction(0)
    for g in list(range(2, 200)) + [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6]:
        inv = sf.double_cover_invariants(sf.RuledSurfaceContext(g))
        assert inv.chi_cover == 10 * inv.chi - 4
        assert prev < inv.ratio < Fraction(1, 5)
        prev = inv.ratio
    assert Fraction(1, 5) - prev < Fraction(1, 10 ** 6)


def test_ratio_table():
    assert sf.ratio_table([2, 3]) == [(2, Fraction(1, 6)), (3, Fraction(2, 11))]


def test_foliation_adjunction():
    assert sf.p2_foliation_degrees(4) == {"K_S": -3, "N_F": 6, "K_F": 3}
    assert sf.foliation_adjunction_check(K_S=5, N_F=0)["K_F"] == 5
    with pytest.raises(ParameterError):
        sf.foliation_adjunction_check(K_S=1)
    with pytest.raises(ParameterError):
        sf.foliation_adjunction_check(K_S=1, N_F=1, K_F=3)


@given(st.integers(-10 ** 6, 10 ** 6), st.integers(-10 ** 6, 10 ** 6))
def test_adjunction_additive(k, n):
    out = sf.foliation_adjunction_check(K_S=k, N_F=n)
    assert out["K_F"] == k + n
    assert sf.foliation_adjunction_check(N_F=n, K_F=out["K_F"])["K_S"] == k


def test_p2_lyapunov():
    assert sf.p2_lyapunov(2) == -4
    assert sf.p2_lyapunov(5) == Fraction(-7, 4)
    with pytest.raises(ParameterError):
        sf.p2_lyapunov(1)
    vals = [sf.p2_lyapunov(d) for d in range(2, 10 ** 4 + 1)]
    assert all(a < b < -1 for a, b in zip(vals, vals[1:]))


def test_construction_report():
    rep = sf.construction_report(2)
    assert rep["ratio"] == "1/6" and rep["L"] == (2, 5) and rep["E_plus_K_ample"]
    assert rep["K_dot_sigma_plus_sigma_squared"] == 2


def test_large_genus_is_exact():
    ctx = sf.RuledSurfaceContext(10 ** 30)
    E = sf.construction_class_E(ctx)
    assert sf.is_ample(E + sf.canonical_class(ctx), ctx)
    assert isinstance(sf.intersect(E, E, ctx), int)
