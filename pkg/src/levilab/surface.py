"""Exact intersection arithmetic on the ruled surface over a genus-g curve.

Classes are a*sigma + b*phi in H^2 = Z sigma + Z phi, where sigma is the
diagonal section (sigma^2 = chi = 2 - 2g) and phi a fiber. Everything is
plain Python integers and Fractions, so sweeps to large genus are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral

from .exceptions import NoWitnessError, ParameterError


def _int(x, name):
    if isinstance(x, bool) or not isinstance(x, Integral):
        raise ParameterError(f"{name} must be an integer, got {x!r}")
    return int(x)


@dataclass(frozen=True)
class RuledSurfaceContext:
    genus: int

    def __post_init__(self):
        g = _int(self.genus, "genus")
        if g < 2:
            # the ampleness criterion needs sigma^2 = chi < 0
            raise ParameterError(f"genus must be at least 2 (chi < 0), got {g}")
        object.__setattr__(self, "genus", g)

    @property
    def chi(self):
        return 2 - 2 * self.genus


@dataclass(frozen=True)
class DivisorClass:
    """a [sigma] + b [phi]."""

    a: int
    b: int

    def __post_init__(self):
        object.__setattr__(self, "a", _int(self.a, "a"))
        object.__setattr__(self, "b", _int(self.b, "b"))

    def __add__(self, other):
        return DivisorClass(self.a + other.a, self.b + other.b)

    def __sub__(self, other):
        return DivisorClass(self.a - other.a, self.b - other.b)

    def __neg__(self):
        return DivisorClass(-self.a, -self.b)

    def __mul__(self, k):
        k = _int(k, "multiplier")
        return DivisorClass(k * self.a, k * self.b)

    __rmul__ = __mul__

    def as_tuple(self):
        return (self.a, self.b)


SIGMA = DivisorClass(1, 0)
PHI = DivisorClass(0, 1)


def intersect(c1, c2, ctx):
    """a1 a2 chi + a1 b2 + a2 b1."""
    return c1.a * c2.a * ctx.chi + c1.a * c2.b + c2.a * c1.b


def canonical_class(ctx):
    return DivisorClass(-2, 0)


def is_ample(c, ctx):
    """Ampleness on this surface: a > 0 and chi*a + b > 0."""
    return c.a > 0 and ctx.chi * c.a + c.b > 0


def nakai_moishezon(c, ctx):
    """Positivity against sigma, phi and on itself."""
    return (intersect(c, SIGMA, ctx) > 0 and intersect(c, PHI, ctx) > 0
            and intersect(c, c, ctx) > 0)


def construction_class_E(ctx):
    """Numerical class of E with 2E = 6 sigma + 4(1 - 2chi) phi."""
    return DivisorClass(3, 2 * (1 - 2 * ctx.chi))


@dataclass(frozen=True)
class ReiderWitness:
    L: DivisorClass
    target: DivisorClass
    identity_holds: bool
    L_ample: bool


def reider_very_ample_witness(target, ctx):
    """L with 4L + K = 2E, checked exactly, and L ample."""
    k = canonical_class(ctx)
    rhs = 2 * target - k
    if rhs.a % 4 or rhs.b % 4:
        raise NoWitnessError(f"2E - K = {rhs.as_tuple()} is not divisible by 4")
    L = DivisorClass(rhs.a // 4, rhs.b // 4)
    holds = 4 * L + k == 2 * target
    ample = is_ample(L, ctx)
    if not (holds and ample):
        raise NoWitnessError(f"candidate L = {L.as_tuple()} is not ample")
    return ReiderWitness(L, target, holds, ample)


@dataclass(frozen=True)
class CoverInvariants:
    chi: int
    chi_cover: int
    euler_class_cover: int
    ratio: Fraction


def double_cover_invariants(ctx):
    """Euler characteristic and Euler class of the double cover's circle bundle."""
    chi = ctx.chi
    # Hurwitz: two sheets, 4(1 - 2chi) branch fibers
    chi_cover = 2 * chi + 4 * (2 * chi - 1)
    eu = 2 * chi
    return CoverInvariants(chi, chi_cover, eu, Fraction(eu, chi_cover))


def ratio_table(genera):
    return [(g, double_cover_invariants(RuledSurfaceContext(g)).ratio) for g in genera]


def foliation_adjunction_check(K_S=None, N_F=None, K_F=None):
    """K_F = K_S|F + N_F on formal degrees: give two, get all three back."""
    given = {k: v for k, v in (("K_S", K_S), ("N_F", N_F), ("K_F", K_F)) if v is not None}
    if len(given) < 2:
        raise ParameterError("give at least two of K_S, N_F, K_F")
    for k, v in given.items():
        _int(v, k)
    if K_F is None:
        K_F = K_S + N_F
    elif K_S is None:
        K_S = K_F - N_F
    elif N_F is None:
        N_F = K_F - K_S
    if K_F != K_S + N_F:
        raise ParameterError(f"inconsistent degrees: {K_F} != {K_S} + {N_F}")
    return {"K_S": K_S, "N_F": N_F, "K_F": K_F}


def p2_foliation_degrees(d):
    """Degrees of N_F and K_F for a degree-d foliation of the plane, and K restricted."""
    d = _int(d, "d")
    return foliation_adjunction_check(N_F=d + 2, K_F=d - 1)


def p2_lyapunov(d):
    """-(d + 2) / (d - 1), exactly."""
    d = _int(d, "d")
    if d < 2:
        raise ParameterError(f"degree must be at least 2, got {d}")
    return Fraction(-(d + 2), d - 1)


def construction_report(genus):
    """Every class and check of the ramified-cover construction for one genus."""
    ctx = RuledSurfaceContext(genus)
    k = canonical_class(ctx)
    E = construction_class_E(ctx)
    w = reider_very_ample_witness(E, ctx)
    inv = double_cover_invariants(ctx)
    return {
        "genus": ctx.genus,
        "chi": ctx.chi,
        "sigma_squared": intersect(SIGMA, SIGMA, ctx),
        "K_X": k.as_tuple(),
        "K_dot_sigma_plus_sigma_squared": intersect(k, SIGMA, ctx) + intersect(SIGMA, SIGMA, ctx),
        "K_dot_phi": intersect(k, PHI, ctx),
        "E": E.as_tuple(),
        "E_plus_K": (E + k).as_tuple(),
        "E_plus_K_ample": is_ample(E + k, ctx),
        "L": w.L.as_tuple(),
        "4L_plus_K_equals_2E": w.identity_holds,
        "L_ample": w.L_ample,
        "chi_cover": inv.chi_cover,
        "euler_class_cover": inv.euler_class_cover,
        "ratio": str(inv.ratio),
    }
