"""Hyperbolic plane geometry in the disc and upper half-plane models.

The half-plane is the working model; the disc is used for radial and
boundary formulas. Curvature is normalized to -1, so in the disc

    ds^2 = 4 |dz|^2 / (1 - |z|^2)^2

and in the half-plane ``ds^2 = |dz|^2 / y^2``.

Point types are immutable. The array helpers at the bottom of the module
(``half_plane_distance``, ``apply_matrix`` ...) work on plain complex
ndarrays and are what the simulation code uses in its inner loops.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateMapError, ParameterError

DISC = "disc"
HALF_PLANE = "half-plane"
MODELS = (DISC, HALF_PLANE)

INF = math.inf

#: Number of compositions after which a MoebiusMap is renormalized to det 1.
RENORMALIZE_EVERY = 32

_BOUNDARY_TOL = 1e-12


def _check_model(model):
    if model not in MODELS:
        raise ParameterError(f"unknown model {model!r}; expected one of {MODELS}")


@dataclass(frozen=True)
class HPoint:
    """A point of the hyperbolic plane in a given model."""

    coord: complex
    model: str = HALF_PLANE

    def __post_init__(self):
        _check_model(self.model)
        z = complex(self.coord)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ParameterError(f"point coordinates must be finite, got {z}")
        if self.model == DISC and not abs(z) < 1.0:
            raise ParameterError(f"disc point must satisfy |z| < 1, got {z}")
        if self.model == HALF_PLANE and not z.imag > 0.0:
            raise ParameterError(f"half-plane point must satisfy Im z > 0, got {z}")
        object.__setattr__(self, "coord", z)

    def to_model(self, model):
        _check_model(model)
        if model == self.model:
            return self
        return cayley(self)


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of the ideal boundary.

    In the disc the coordinate is projected onto the unit circle; in the
    half-plane it is real or ``INF``.
    """

    coord: complex
    model: str = HALF_PLANE

    def __post_init__(self):
        _check_model(self.model)
        z = self.coord
        if self.model == HALF_PLANE:
            if _is_inf(z):
                object.__setattr__(self, "coord", INF)
                return
            z = complex(z)
            if abs(z.imag) > _BOUNDARY_TOL * max(1.0, abs(z.real)):
                raise ParameterError(f"half-plane boundary point must be real, got {z}")
            object.__setattr__(self, "coord", complex(z.real, 0.0))
        else:
            if _is_inf(z):
                raise ParameterError("disc boundary point cannot be infinite")
            z = complex(z)
            r = abs(z)
            if abs(r - 1.0) > _BOUNDARY_TOL:
                raise ParameterError(f"disc boundary point must satisfy |z| = 1, got |z| = {r!r}")
            object.__setattr__(self, "coord", z / r)

    @property
    def is_infinite(self):
        return self.model == HALF_PLANE and _is_inf(self.coord)

    def to_model(self, model):
        _check_model(model)
        if model == self.model:
            return self
        return cayley(self)


def _is_inf(z):
    try:
        return math.isinf(abs(complex(z)))
    except (TypeError, OverflowError):
        return False


@dataclass(frozen=True, eq=False)
class MoebiusMap:
    """A Moebius transformation z -> (a z + b) / (c z + d).

    Built through :meth:`from_matrix`, which scales to det 1. Composition with
    ``@`` is the matrix product; the result is rescaled to det 1 once every
    ``RENORMALIZE_EVERY`` compositions.
    """

    a: complex
    b: complex
    c: complex
    d: complex
    _since_normalized: int = field(default=0, repr=False, compare=False)

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise ParameterError(f"expected a 2x2 matrix, got shape {m.shape}")
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) < 1e-14:
            raise DegenerateMapError(f"matrix is not invertible (|det| = {abs(det):.3e})")
        s = cmath.sqrt(det)
        m = m / s
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    @classmethod
    def identity(cls):
        return cls(1 + 0j, 0j, 0j, 1 + 0j)

    @property
    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def is_real(self, tol=1e-12):
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        return all(abs(x.imag) <= tol * scale for x in (self.a, self.b, self.c, self.d))

    def normalized(self):
        return MoebiusMap.from_matrix(self.matrix)

    def inverse(self):
        # inverse of a det-1 matrix up to the det factor, which cancels projectively
        det = self.det
        if abs(det) < 1e-14:
            raise DegenerateMapError("cannot invert a singular map")
        return MoebiusMap(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def __matmul__(self, other):
        if not isinstance(other, MoebiusMap):
            return NotImplemented
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        count = self._since_normalized + other._since_normalized + 1
        if count >= RENORMALIZE_EVERY:
            return MoebiusMap.from_matrix([[a, b], [c, d]])
        return MoebiusMap(a, b, c, d, count)

    def __call__(self, z):
        return apply_matrix(self.matrix, z)

    def trace(self):
        return self.a + self.d

    def allclose(self, other, tol=1e-10, projective=True):
        """Entrywise comparison, up to sign when ``projective``."""
        m1, m2 = self.normalized().matrix, other.normalized().matrix
        err = np.abs(m1 - m2).max()
        if projective:
            err = min(err, np.abs(m1 + m2).max())
        return err <= tol


@dataclass(frozen=True)
class GeodesicRay:
    """Unit-speed geodesic ray from ``start`` towards ``endpoint``."""

    start: HPoint
    endpoint: BoundaryPoint

    def __post_init__(self):
        object.__setattr__(self, "start", self.start.to_model(HALF_PLANE))
        object.__setattr__(self, "endpoint", self.endpoint.to_model(HALF_PLANE))

    def frame(self):
        """Real det-1 matrix g with g(i) = start and g(inf) = endpoint."""
        return geodesic_frame(self.start.coord, self.endpoint.coord)

    def __call__(self, s):
        """Half-plane coordinates of the ray at arc length(s) ``s``."""
        s = np.asarray(s, dtype=float)
        return apply_matrix(self.frame(), 1j * np.exp(s))


# ---------------------------------------------------------------------------
# public operations on typed points

def mobius_apply(g, z):
    """Apply ``g`` to a point or boundary point, keeping the model.

    In the half-plane ``g`` must have real entries (an element of PSL(2,R)).
    """
    if not isinstance(g, MoebiusMap):
        raise ParameterError("g must be a MoebiusMap")
    if abs(g.det) < 1e-14:
        raise DegenerateMapError(f"map is not invertible (|det| = {abs(g.det):.3e})")
    if z.model == HALF_PLANE and not g.is_real(1e-10):
        raise ParameterError("half-plane isometries must have real entries")
    if isinstance(z, HPoint):
        w = complex(apply_matrix(g.matrix, z.coord))
        return HPoint(w, z.model)
    if isinstance(z, BoundaryPoint):
        if z.is_infinite:
            w = g.a / g.c if g.c != 0 else INF
        else:
            w = complex(apply_matrix(g.matrix, z.coord))
        if z.model == HALF_PLANE and not _is_inf(w):
            w = complex(w).real
        return BoundaryPoint(w, z.model)
    raise ParameterError(f"cannot apply a Moebius map to {type(z).__name__}")


def mobius_derivative_spherical(g, z):
    """Derivative of ``g`` at ``z`` measured in the round metric of P^1.

    Equals ``|g'(z)| (1 + |z|^2) / (1 + |g(z)|^2)``; ``z`` may be ``INF``
    or an array. For a det-1 matrix and homogeneous coordinates (u, v) the
    value is ``(|u|^2 + |v|^2) / (|a u + b v|^2 + |c u + d v|^2)``.
    """
    m = g.normalized().matrix if isinstance(g, MoebiusMap) else np.asarray(g, dtype=complex)
    u, v = homogeneous(z)
    return spherical_derivative_homogeneous(m, u, v)


def hyperbolic_distance(x, y):
    """Poincare distance between two points (models converted as needed)."""
    if y.model != x.model:
        y = y.to_model(x.model)
    if x.model == HALF_PLANE:
        return float(half_plane_distance(x.coord, y.coord))
    return float(disc_distance(x.coord, y.coord))


def cayley(p):
    """Switch models: half-plane -> disc by (z - i)/(z + i), disc -> half-plane by i(1 + w)/(1 - w)."""
    if isinstance(p, HPoint):
        if p.model == HALF_PLANE:
            w = complex(half_plane_to_disc(p.coord))
            # guard the strict inequality for points extremely close to the boundary
            if abs(w) >= 1.0:
                w = w / abs(w) * np.nextafter(1.0, 0.0)
            return HPoint(w, DISC)
        return HPoint(complex(disc_to_half_plane(p.coord)), HALF_PLANE)
    if isinstance(p, BoundaryPoint):
        if p.model == HALF_PLANE:
            if p.is_infinite:
                return BoundaryPoint(1 + 0j, DISC)
            return BoundaryPoint(complex(half_plane_to_disc(p.coord)), DISC)
        if abs(p.coord - 1) < 1e-15:
            return BoundaryPoint(INF, HALF_PLANE)
        return BoundaryPoint(complex(disc_to_half_plane(p.coord)).real, HALF_PLANE)
    raise ParameterError(f"cannot apply the Cayley transform to {type(p).__name__}")


def cayley_inverse(p):
    """Inverse Cayley transform; the model flip makes it the same map."""
    return cayley(p)


def busemann(xi, x, y):
    """Busemann cocycle B_xi(x, y) = lim [d(x, z) - d(y, z)] as z -> xi.

    Normalized so that in the half-plane with xi = inf, B(x, y) = log(Im y / Im x).
    """
    xi = xi.to_model(HALF_PLANE)
    zx = x.to_model(HALF_PLANE).coord
    zy = y.to_model(HALF_PLANE).coord
    if xi.is_infinite:
        return math.log(zy.imag) - math.log(zx.imag)
    c = xi.coord.real
    return (math.log(zy.imag) - 2 * math.log(abs(zy - c))) - (
        math.log(zx.imag) - 2 * math.log(abs(zx - c)))


def geodesic_ray(start, endpoint):
    return GeodesicRay(start, endpoint)


# ---------------------------------------------------------------------------
# array helpers

def half_plane_distance(z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return 2.0 * np.arcsinh(np.abs(z - w) / (2.0 * np.sqrt(z.imag * w.imag)))


def disc_distance(z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    den = np.sqrt((1.0 - np.abs(z) ** 2) * (1.0 - np.abs(w) ** 2))
    return 2.0 * np.arcsinh(np.abs(z - w) / den)


def half_plane_to_disc(z):
    z = np.asarray(z, dtype=complex)
    return (z - 1j) / (z + 1j)


def disc_to_half_plane(w):
    w = np.asarray(w, dtype=complex)
    return 1j * (1 + w) / (1 - w)


#: Cayley matrices, half-plane -> disc and back (det 1 up to scale).
CAYLEY = np.array([[1, -1j], [1, 1j]], dtype=complex) / cmath.sqrt(2j)
CAYLEY_INV = np.array([[1j, 1j], [-1, 1]], dtype=complex) / cmath.sqrt(2j)


def apply_matrix(m, z):
    """Moebius action on complex scalars/arrays; ``inf`` maps to a/c."""
    m = np.asarray(m, dtype=complex)
    zc = np.asarray(z).astype(complex)
    inf_mask = np.isinf(zc.real) | np.isinf(zc.imag)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = m[0, 0] * zc + m[0, 1]
        den = m[1, 0] * zc + m[1, 1]
        out = num / den
    if np.any(inf_mask):
        out = np.where(inf_mask, m[0, 0] / m[1, 0] if m[1, 0] != 0 else np.inf, out)
    pole = den == 0
    if np.any(pole & ~inf_mask):
        out = np.where(pole & ~inf_mask, np.inf, out)
    return out if out.ndim else out[()]


def homogeneous(z):
    """Unit-norm homogeneous coordinates (u, v) of points of P^1."""
    z = np.asarray(z).astype(complex)
    inf_mask = np.isinf(z.real) | np.isinf(z.imag)
    big = (np.abs(z) > 1.0) & ~inf_mask
    u = np.where(inf_mask, 1.0 + 0j, np.where(big, 1.0 + 0j, z))
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(inf_mask, 0j, np.where(big, 1.0 / np.where(big, z, 1.0), 1.0 + 0j))
    n = np.sqrt(np.abs(u) ** 2 + np.abs(v) ** 2)
    return u / n, v / n


def from_homogeneous(u, v):
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = u / v
    return np.where(v == 0, np.inf + 0j, z)


def spherical_derivative_homogeneous(m, u, v):
    uu = m[0, 0] * u + m[0, 1] * v
    vv = m[1, 0] * u + m[1, 1] * v
    return (np.abs(u) ** 2 + np.abs(v) ** 2) / (np.abs(uu) ** 2 + np.abs(vv) ** 2)


def geodesic_frame(z, xi):
    """Real det-1 matrix taking i to ``z`` and inf to the real point ``xi``."""
    x, y = z.real, z.imag
    if _is_inf(xi):
        s = math.sqrt(y)
        return np.array([[s, x / s], [0.0, 1.0 / s]], dtype=complex)
    xi = complex(xi).real
    c = 1.0 / math.sqrt(((xi - x) ** 2 + y * y) / y)
    a = xi * c
    d = c * (xi - x) / y
    b = -c * y + d * x
    return np.array([[a, b], [c, d]], dtype=complex)


def to_disc_matrix(m):
    """Conjugate a half-plane matrix to act on the disc."""
    return CAYLEY @ np.asarray(m, dtype=complex) @ CAYLEY_INV


def to_half_plane_matrix(m):
    return CAYLEY_INV @ np.asarray(m, dtype=complex) @ CAYLEY
