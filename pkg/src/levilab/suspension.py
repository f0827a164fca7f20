"""Flat P^1-bundles over the genus-2 surface and their holonomy.

The base is the quotient of the half-plane by the deck group of the
regular octagon with interior angles pi/4, centred at the disc origin
(i in the half-plane) and glued by the standard side pairings. A
representation of the surface group into PSL(2, C) acts on the fiber;
the suspension is the quotient of H x P^1 by the diagonal action.

Paths are followed in the fundamental domain. Each time the projected
path leaves the octagon it is moved back by a deck transformation and the
fiber coordinate is moved by the matching representation element, which
is how the holonomy cocycle and its derivative are accumulated.

Words are sequences of signed generator indices: ``1, 2, 3, 4`` stand for
a1, b1, a2, b2 and negative values for their inverses. A word lists the
letters in the order they were applied, so the reduced point equals
``L_n(...L_1(z))``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import _streams
from .brownian import BrownianPath, n_steps_for, step_increment
from .exceptions import ParameterError, ReductionError
from .hyperbolic import (
    DISC, HALF_PLANE, BoundaryPoint, HPoint, MoebiusMap, geodesic_frame,
    half_plane_distance, half_plane_to_disc, to_half_plane_matrix,
)

GENERATOR_NAMES = ("a1", "b1", "a2", "b2")
MAX_REDUCTION_STEPS = 10_000
SPHERE = "sphere"
CIRCLE = "circle"
SPHERICAL = "spherical"
AFFINE = "affine"

# side s is glued to side PAIRING[s]
PAIRING = (2, 3, 0, 1, 6, 7, 4, 5)
# letter of the deck move that brings back a point which left through side s
SIDE_LETTER = (-1, 2, 1, -2, -3, 4, 3, -4)
# relative tolerance of the outside test; keeps boundary points from bouncing
_SIDE_TOL = 1e-12


def _rot(a):
    return np.array([[np.exp(0.5j * a), 0], [0, np.exp(-0.5j * a)]])


def _trans(theta, length):
    ch, sh = math.cosh(length / 2), math.sinh(length / 2)
    return _rot(theta) @ np.array([[ch, sh], [sh, ch]], dtype=complex) @ _rot(-theta)


def _real_map(m):
    g = MoebiusMap.from_matrix(m)
    if g.matrix.real[0, 0] < 0:
        g = MoebiusMap.from_matrix(-g.matrix)
    return MoebiusMap.from_matrix(g.matrix.real.astype(complex))


def letter_name(letter):
    name = GENERATOR_NAMES[abs(letter) - 1]
    return name if letter > 0 else name + "^-1"


def parse_letter(name):
    name = name.strip()
    inv = name.endswith("^-1")
    base = name[:-3] if inv else name
    if base not in GENERATOR_NAMES:
        raise ParameterError(f"unknown generator {name!r}")
    k = GENERATOR_NAMES.index(base) + 1
    return -k if inv else k


@dataclass(frozen=True, eq=False)
class SurfaceGroup:
    """Deck group of the genus-2 surface with its octagonal Dirichlet domain.

    ``side_maps[s]`` carries the octagon onto its neighbour across side s;
    ``vertices`` are in the disc, side s runs from ``vertices[s]`` to
    ``vertices[s + 1]``. All maps act on the half-plane (real entries).
    """

    generators: tuple
    side_maps: tuple
    vertices: np.ndarray
    pairing: tuple = PAIRING
    genus: int = 2
    center: complex = 1j
    names: tuple = GENERATOR_NAMES

    def __post_init__(self):
        if self.genus < 2:
            raise ParameterError("genus must be at least 2")
        if any(not g.is_real(1e-9) for g in self.generators):
            raise ParameterError("surface group generators must have real entries")
        # neighbour centres h_s(i) and the letters that undo each crossing
        c = np.array([complex(h(self.center)) for h in self.side_maps])
        object.__setattr__(self, "_centers", c)
        object.__setattr__(self, "_undo", np.stack(
            [self.word_matrix([SIDE_LETTER[s]]).real for s in range(len(c))]))
        object.__setattr__(self, "_redo", np.stack(
            [h.matrix.real for h in self.side_maps]))

    @property
    def n_sides(self):
        return len(self.side_maps)

    @property
    def fundamental_domain(self):
        """Sides as ``(start, end)`` disc vertex pairs, with the pairing."""
        v = self.vertices
        sides = [(v[s], v[(s + 1) % len(v)]) for s in range(len(v))]
        return sides, self.pairing

    def letter(self, k):
        g = self.generators[abs(k) - 1]
        return g if k > 0 else g.inverse()

    def word_matrix(self, word):
        m = np.eye(2, dtype=complex)
        for k in word:
            m = self.letter(k).matrix @ m
        return m

    def relator(self):
        """[a1, b1][a2, b2] with [a, b] = a b a^-1 b^-1."""
        a1, b1, a2, b2 = self.generators
        out = MoebiusMap.identity()
        for a, b in ((a1, b1), (a2, b2)):
            out = out @ a @ b @ a.inverse() @ b.inverse()
        return out.normalized()

    def relator_error(self):
        m = self.relator().matrix
        eye = np.eye(2)
        return float(min(np.abs(m - eye).max(), np.abs(m + eye).max()))

    def interior_angles(self):
        v = self.vertices
        n = len(v)
        out = np.empty(n)
        for k in range(n):
            p, a, b = v[k], v[k - 1], v[(k + 1) % n]
            # move the vertex to 0, where geodesics through it are straight
            fa = (a - p) / (1 - np.conj(p) * a)
            fb = (b - p) / (1 - np.conj(p) * b)
            out[k] = abs(np.angle(fb / fa))
        return out

    def area(self):
        """Hyperbolic area of the octagon from its angles (Gauss-Bonnet)."""
        n = len(self.vertices)
        return (n - 2) * math.pi - float(self.interior_angles().sum())

    def side_pairing_error(self):
        """Largest endpoint mismatch when a side is carried onto its partner."""
        sides, pairing = self.fundamental_domain
        err = 0.0
        for s, h in enumerate(self.side_maps):
            src = [_disc_to_hp_scalar(x) for x in sides[pairing[s]]]
            img = half_plane_to_disc(np.array([complex(h(z)) for z in src]))
            target = np.array(sides[s])
            err = max(err, float(min(np.abs(img - target[::-1]).max(),
                                     np.abs(img - target).max())))
        return err

    def outside_side(self, z):
        """Index of the side a half-plane point lies beyond, or -1 if inside."""
        s = self._worst_side(np.atleast_1d(np.asarray(z, dtype=complex)))
        return int(s[0])

    def _worst_side(self, z):
        q0 = np.abs(z - self.center) ** 2
        c = self._centers
        q = np.abs(z[:, None] - c[None, :]) ** 2 / c.imag[None, :]
        s = np.argmin(q, axis=1)
        beyond = q[np.arange(len(z)), s] < q0 * (1.0 - _SIDE_TOL)
        return np.where(beyond, s, -1)

    def contains(self, z, tol=1e-9):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        q0 = np.abs(z - self.center) ** 2
        c = self._centers
        q = np.abs(z[:, None] - c[None, :]) ** 2 / c.imag[None, :]
        return np.all(q >= q0[:, None] * (1.0 - tol) - tol, axis=1)

    @property
    def circumradius(self):
        return float(np.arctanh(np.abs(self.vertices[0])) * 2)

    @property
    def inradius(self):
        return float(np.arccosh(1.0 / math.tan(math.pi / len(self.vertices))))


def _disc_to_hp_scalar(w):
    return complex(1j * (1 + w) / (1 - w))


def build_genus2_octagon():
    """Regular hyperbolic octagon with angles pi/4 and its side pairings."""
    n = 8
    inr = math.acosh(1.0 / math.tan(math.pi / n))
    theta = [2 * math.pi * k / n for k in range(n)]

    def glue(i, j):
        # side i -> side j, the octagon landing on the far side of j
        return _trans(theta[j], 2 * inr) @ _rot(theta[j] + math.pi - theta[i])

    side_maps = tuple(_real_map(to_half_plane_matrix(glue(PAIRING[s], s)))
                      for s in range(n))
    a1, b1, a2, b2 = side_maps[0], side_maps[3], side_maps[4], side_maps[7]
    cosh_circ = 1.0 / math.tan(math.pi / n) ** 2
    rv = math.tanh(0.5 * math.acosh(cosh_circ))
    vertices = rv * np.exp(1j * (np.array(theta) - math.pi / n))
    g = SurfaceGroup(generators=(a1, b1, a2, b2), side_maps=side_maps, vertices=vertices)
    err = g.relator_error()
    if err > 1e-6:
        raise ReductionError(f"octagon relator check failed (error {err:.2e})")
    return g


def reduce_to_domain(g, z):
    """Move ``z`` into the closed fundamental domain.

    Returns the reduced point (in the model of ``z``) and the word of deck
    moves applied, as a tuple of signed generator indices.
    """
    model = z.model
    w = z.to_model(HALF_PLANE).coord
    word = []
    for _ in range(MAX_REDUCTION_STEPS):
        s = g.outside_side(w)
        if s < 0:
            out = HPoint(w, HALF_PLANE)
            return (out.to_model(model) if model != HALF_PLANE else out), tuple(word)
        word.append(SIDE_LETTER[s])
        m = g._undo[s]
        w = complex((m[0, 0] * w + m[0, 1]) / (m[1, 0] * w + m[1, 1]))
        w = complex(w.real, max(w.imag, np.finfo(float).tiny))
    raise ReductionError(f"reduction did not terminate in {MAX_REDUCTION_STEPS} steps")


def sample_domain_points(g, rng, size):
    """Points of the octagon drawn from the hyperbolic area measure.

    Polar rejection sampling in the disc around the centre; ``rng`` is one
    generator per point (a sequence) or a single generator.
    """
    cosh_r = math.cosh(g.circumradius)
    gens = rng if isinstance(rng, (list, tuple)) else [rng] * size
    out = np.empty(size, dtype=complex)
    batch = 64
    for k, gen in enumerate(gens[:size]):
        while True:
            u = gen.random((batch, 2))
            rho = np.arccosh(1.0 + u[:, 0] * (cosh_r - 1.0))
            w = np.tanh(rho / 2) * np.exp(2j * math.pi * u[:, 1])
            hp = 1j * (1 + w) / (1 - w)
            ok = g.contains(hp, tol=0.0)
            if ok.any():
                out[k] = hp[np.argmax(ok)]
                break
    return out


# -- representations -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiberRepresentation:
    """Images of a1, b1, a2, b2 in PSL(2, C)."""

    images: tuple
    name: str = "custom"
    faithful: bool = False

    def __post_init__(self):
        if len(self.images) != 4:
            raise ParameterError("a representation needs one image per generator")
        imgs = tuple(g if isinstance(g, MoebiusMap) else MoebiusMap.from_matrix(g)
                     for g in self.images)
        object.__setattr__(self, "images", tuple(g.normalized() for g in imgs))
        err = self.relator_error()
        if err > 1e-6:
            raise ParameterError(f"representation violates the surface relator (error {err:.2e})")

    def letter(self, k):
        g = self.images[abs(k) - 1]
        return g if k > 0 else g.inverse().normalized()

    def word_matrix(self, word):
        m = np.eye(2, dtype=complex)
        for k in word:
            m = self.letter(k).matrix @ m
        return m

    def relator_error(self):
        a1, b1, a2, b2 = self.images
        out = MoebiusMap.identity()
        for a, b in ((a1, b1), (a2, b2)):
            out = out @ a @ b @ a.inverse() @ b.inverse()
        m = out.normalized().matrix
        eye = np.eye(2)
        return float(min(np.abs(m - eye).max(), np.abs(m + eye).max()))

    @property
    def is_real(self):
        return all(g.is_real(1e-9) for g in self.images)

    @property
    def is_trivial(self):
        return all(g.allclose(MoebiusMap.identity(), 1e-12) for g in self.images)

    def conjugate(self, h):
        """The representation g -> h g h^-1."""
        hi = h.inverse()
        return FiberRepresentation(tuple((h @ g @ hi).normalized() for g in self.images),
                                   name=f"{self.name}^h", faithful=self.faithful)


@dataclass(frozen=True, eq=False)
class SuspensionFoliation:
    """Suspension of a representation over the octagon group."""

    base: SurfaceGroup
    rep: FiberRepresentation
    fiber_type: str = SPHERE
    simply_connected_leaves: bool | None = None

    def __post_init__(self):
        if self.fiber_type not in (SPHERE, CIRCLE):
            raise ParameterError(f"fiber_type must be {SPHERE!r} or {CIRCLE!r}")
        if self.fiber_type == CIRCLE and not self.rep.is_real:
            raise ParameterError("a circle fiber needs a representation with real entries")
        if self.simply_connected_leaves is None:
            # generic leaves are H / ker(rep); only a faithful rep makes them planes
            object.__setattr__(self, "simply_connected_leaves", bool(self.rep.faithful))
        letters = [SIDE_LETTER[s] for s in range(self.base.n_sides)]
        mats = np.stack([self.rep.letter(k).matrix for k in letters])
        ident = np.array([self.rep.letter(k).allclose(MoebiusMap.identity(), 1e-14)
                          for k in letters])
        object.__setattr__(self, "_fiber_undo", mats)
        object.__setattr__(self, "_fiber_identity", ident)

    @property
    def name(self):
        return self.rep.name

    def random_fiber(self, gens):
        """Uniform fiber points in unit homogeneous coordinates, one per generator."""
        if self.fiber_type == CIRCLE:
            x = np.stack([gen.standard_normal(2) for gen in gens]).astype(complex)
        else:
            r = np.stack([gen.standard_normal(4) for gen in gens])
            x = r[:, :2] + 1j * r[:, 2:]
        x /= np.sqrt((np.abs(x) ** 2).sum(axis=1))[:, None]
        return x[:, 0], x[:, 1]


def trivial(base=None):
    base = base or build_genus2_octagon()
    rep = FiberRepresentation(tuple(MoebiusMap.identity() for _ in range(4)), name="trivial")
    return SuspensionFoliation(base, rep, SPHERE, simply_connected_leaves=False)


def fuchsian_boundary(base=None):
    """The base group acting on the boundary circle of the half-plane."""
    base = base or build_genus2_octagon()
    rep = FiberRepresentation(base.generators, name="fuchsian-boundary", faithful=True)
    return SuspensionFoliation(base, rep, CIRCLE)


def schottky_map(p, q, r):
    """Loxodromic map sending the outside of |z - p| = r onto the inside of |z - q| = r."""
    return MoebiusMap.from_matrix([[q / r, -p * q / r - r], [1.0 / r, -p / r]])


def schottky_discs(c, r):
    """Isometric discs as ``(center, radius, letter)``: the image disc of each letter."""
    return [(c + 0j, r, 1), (-c + 0j, r, -1), (1j * c, r, 3), (-1j * c, r, -3)]


def schottky(c=4.0, r=1.0, base=None):
    """a1, a2 to a classical Schottky pair on discs of radius r at +-c, +-ic; b1, b2 trivial."""
    if not (r > 0 and c > 0):
        raise ParameterError("schottky needs c > 0 and r > 0")
    if not c > r * math.sqrt(2):
        raise ParameterError(f"schottky discs overlap: need c > r*sqrt(2), got c={c}, r={r}")
    base = base or build_genus2_octagon()
    ident = MoebiusMap.identity()
    ga = schottky_map(-c, c, r)
    gb = schottky_map(-1j * c, 1j * c, r)
    rep = FiberRepresentation((ga, ident, gb, ident), name=f"schottky({c:g}, {r:g})")
    f = SuspensionFoliation(base, rep, SPHERE, simply_connected_leaves=False)
    object.__setattr__(f, "schottky_params", (float(c), float(r)))
    return f


_PRESET_RE = re.compile(r"^\s*schottky\s*\(\s*(.*?)\s*\)\s*$")


def preset(name):
    """Build a foliation from ``trivial``, ``fuchsian-boundary`` or ``schottky(c, r)``."""
    if isinstance(name, SuspensionFoliation):
        return name
    key = str(name).strip().lower()
    if key == "trivial":
        return trivial()
    if key in ("fuchsian-boundary", "fuchsian"):
        return fuchsian_boundary()
    if key == "schottky":
        return schottky()
    m = _PRESET_RE.match(key)
    if m:
        vals = {"c": 4.0, "r": 1.0}
        parts = [p for p in m.group(1).split(",") if p.strip()]
        for k, p in enumerate(parts):
            if "=" in p:
                a, b = p.split("=", 1)
                a = a.strip()
            else:
                a, b = ("c", "r")[k] if k < 2 else "?", p
            if a not in vals:
                raise ParameterError(f"bad schottky parameter in {name!r}")
            try:
                vals[a] = float(b)
            except ValueError:
                raise ParameterError(f"bad schottky parameter in {name!r}") from None
        return schottky(vals["c"], vals["r"])
    raise ParameterError(f"unknown preset {name!r}; expected trivial, fuchsian-boundary or schottky(c, r)")


# -- holonomy --------------------------------------------------------------

@dataclass(frozen=True)
class HolonomyState:
    """End state of a path followed in the fundamental domain."""

    base_point: HPoint
    word: tuple
    fiber_point: complex
    log_deriv: float
    fiber_homogeneous: tuple = field(default=(1 + 0j, 0j), repr=False)
    deck: np.ndarray | None = field(default=None, repr=False)

    @property
    def word_names(self):
        return [letter_name(k) for k in self.word]


class _Walker:
    """Vectorized state of many paths followed in the fundamental domain.

    ``V`` is the inverse of the accumulated deck transformation, so that
    ``V(z)`` is the lifted point in the universal cover; it also gives the
    frame rotation needed to replay increments exactly.
    """

    def __init__(self, f, z, u, v, metric=SPHERICAL, record=False):
        self.f = f
        self.z = np.asarray(z, dtype=complex).copy()
        n = self.z.size
        self.V = np.tile(np.eye(2), (n, 1, 1))
        self.u = np.asarray(u, dtype=complex).copy()
        self.v = np.asarray(v, dtype=complex).copy()
        self.logd = np.zeros(n)
        self.crossings = np.zeros(n, dtype=np.int64)
        self.metric = metric
        self.words = [[] for _ in range(n)] if record else None
        self._since_norm = 0

    def settle(self, idx=None):
        g = self.f.base
        idx = np.arange(self.z.size) if idx is None else np.asarray(idx)
        for _ in range(MAX_REDUCTION_STEPS):
            if idx.size == 0:
                return
            s = g._worst_side(self.z[idx])
            out = s >= 0
            idx, s = idx[out], s[out]
            if idx.size == 0:
                return
            self._cross(idx, s)
        raise ReductionError(f"reduction did not terminate in {MAX_REDUCTION_STEPS} steps")

    def _cross(self, idx, s):
        g, f = self.f.base, self.f
        m = g._undo[s]
        z = self.z[idx]
        z = (m[:, 0, 0] * z + m[:, 0, 1]) / (m[:, 1, 0] * z + m[:, 1, 1])
        self.z[idx] = z.real + 1j * np.maximum(z.imag, np.finfo(float).tiny)
        self.V[idx] = self.V[idx] @ g._redo[s]
        self.crossings[idx] += 1
        if self.words is not None:
            for i, ss in zip(idx, s):
                self.words[i].append(SIDE_LETTER[ss])
        moving = ~f._fiber_identity[s]
        if not moving.any():
            return
        idx, s = idx[moving], s[moving]
        F = f._fiber_undo[s]
        u, v = self.u[idx], self.v[idx]
        uu = F[:, 0, 0] * u + F[:, 0, 1] * v
        vv = F[:, 1, 0] * u + F[:, 1, 1] * v
        nrm = np.sqrt(np.abs(uu) ** 2 + np.abs(vv) ** 2)
        if self.metric == SPHERICAL:
            self.logd[idx] -= 2.0 * np.log(nrm)
        else:
            with np.errstate(divide="ignore"):
                self.logd[idx] += 2.0 * (np.log(np.abs(v)) - np.log(np.abs(vv)))
        self.u[idx] = uu / nrm
        self.v[idx] = vv / nrm

    def advance(self, w):
        """Move every path by the frame-local increment ``w``."""
        C, D = self.V[:, 1, 0], self.V[:, 1, 1]
        e = C * self.z + D
        e = e / np.abs(e)
        ct, st = e.real, e.imag
        w = (ct * w + st) / (-st * w + ct)
        self.z = self.z.real + self.z.imag * w
        self.settle()
        self._since_norm += 1
        if self._since_norm >= 256:
            # only the projective class of V is used; keep its entries in range
            big = np.abs(self.V).max(axis=(1, 2))
            far = big > 1e64
            if far.any():
                self.V[far] /= big[far, None, None]
            self._since_norm = 0

    def lifted(self):
        V = self.V
        return (V[:, 0, 0] * self.z + V[:, 0, 1]) / (V[:, 1, 0] * self.z + V[:, 1, 1])

    def fiber_points(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.v == 0, np.inf + 0j, self.u / self.v)


def _fiber_homogeneous(f, point):
    if isinstance(point, tuple):
        u, v = complex(point[0]), complex(point[1])
    else:
        z = complex(point)
        if math.isinf(abs(z)):
            u, v = 1 + 0j, 0j
        elif abs(z) > 1:
            u, v = 1 + 0j, 1 / z
        else:
            u, v = z, 1 + 0j
    n = math.hypot(abs(u), abs(v))
    if n == 0:
        raise ParameterError("fiber point has zero homogeneous coordinates")
    u, v = u / n, v / n
    if f.fiber_type == CIRCLE and (abs(u.imag) > 1e-12 or abs(v.imag) > 1e-12):
        raise ParameterError("fiber point must be on the real circle for a circle fiber")
    return u, v


def holonomy_along_path(f, path: BrownianPath, fiber_start, metric=SPHERICAL):
    """Follow ``path`` in the fundamental domain and accumulate holonomy.

    The fiber coordinate is moved by the representation at every domain
    crossing and ``log_deriv`` accumulates the log of its derivative in the
    round metric (``metric='affine'`` uses the affine chart instead).
    ``fiber_start`` is a point of P^1 (complex or ``inf``) or a pair of
    homogeneous coordinates.
    """
    if metric not in (SPHERICAL, AFFINE):
        raise ParameterError(f"metric must be {SPHERICAL!r} or {AFFINE!r}")
    u0, v0 = _fiber_homogeneous(f, fiber_start)
    inc = path.increments
    if inc is None:
        s = np.asarray(path.samples)
        inc = ((s[1:].real - s[:-1].real) + 1j * s[1:].imag) / s[:-1].imag
    diam = 2.0 * f.base.circumradius
    if inc.size and float(half_plane_distance(1j, inc).max()) >= diam:
        raise ParameterError("path step too large: consecutive samples more than one "
                             "domain diameter apart; use a smaller step")
    walker = _Walker(f, [path.samples[0]], [u0], [v0], metric=metric, record=True)
    walker.settle()
    for w in inc:
        walker.advance(np.array([w]))
    if not np.isfinite(walker.logd[0]):
        raise ReductionError("holonomy derivative is not finite")
    return HolonomyState(
        base_point=HPoint(complex(walker.z[0])),
        word=tuple(walker.words[0]),
        fiber_point=complex(walker.fiber_points()[0]),
        log_deriv=float(walker.logd[0]),
        fiber_homogeneous=(complex(walker.u[0]), complex(walker.v[0])),
        deck=walker.V[0].copy(),
    )


def run_paths(f, indices, seed, horizon, step, *, generator_scale=1.0, metric=SPHERICAL,
              starts=None, fibers=None, burn_in=0.0, chunk=256):
    """Simulate a block of paths with per-path streams; returns the walker.

    Base starts come from the area measure on the octagon and fiber starts
    are uniform unless given. During ``burn_in`` the fiber moves but the
    derivative is discarded; ``logd`` covers the following ``horizon``.
    """
    streams = _streams.PathStreams(seed, indices)
    gens = streams._gens
    z0 = sample_domain_points(f.base, gens, len(gens)) if starts is None else starts
    if fibers is None:
        u0, v0 = f.random_fiber(gens)
    else:
        u0, v0 = fibers
    walker = _Walker(f, z0, u0, v0, metric=metric)
    walker.settle()
    for phase, length in (("burn", burn_in), ("main", horizon)):
        if length <= 0:
            continue
        n = n_steps_for(length, step)
        if phase == "main":
            walker.logd[:] = 0.0
        done = 0
        while done < n:
            m = min(chunk, n - done)
            xi = streams.normal((m, 2))
            w = step_increment(xi, step, generator_scale)
            for k in range(m):
                walker.advance(w[:, k])
            done += m
    return walker


# -- geodesic flow ---------------------------------------------------------

@dataclass(frozen=True)
class GeodesicLift:
    """Sampled unit-speed lift of a geodesic-flow orbit."""

    times: np.ndarray
    points: np.ndarray
    endpoint: BoundaryPoint
    rho_lower: float
    rho_upper: float
    max_defect: float
    log_deriv: float = 0.0
    crossings: int = 0


def geodesic_endpoint(start, direction):
    """Boundary point reached from ``start`` along the tangent ``direction``.

    ``direction`` is an angle in the half-plane chart at ``start``
    (0 points in the +x direction, pi/2 towards +i infinity).
    """
    z = start.to_model(HALF_PLANE).coord
    # rotate the vertical geodesic at i onto the requested direction
    th = -0.5 * (direction - math.pi / 2)
    k = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    m = np.array([[math.sqrt(z.imag), z.real / math.sqrt(z.imag)],
                  [0.0, 1.0 / math.sqrt(z.imag)]]) @ k
    if abs(m[1, 0]) < 1e-300:
        return BoundaryPoint(math.inf)
    return BoundaryPoint(m[0, 0] / m[1, 0])


def lift_geodesic_trajectory(f, start, direction, T, step=0.05, fiber_start=None,
                             max_pairs=401):
    """Geodesic from ``start`` to the boundary point ``direction``, sampled every ``step``.

    The curve is exact (image of the vertical geodesic under a frame map), so
    the quasi-geodesic constants come out as 1. Along the way the projected
    geodesic is followed in the fundamental domain and the fiber holonomy is
    accumulated at ``fiber_start`` (default: the endpoint itself).
    """
    if not T > 0:
        raise ParameterError("T must be positive")
    if not isinstance(direction, BoundaryPoint):
        direction = BoundaryPoint(direction)
    z0 = start.to_model(HALF_PLANE).coord
    xi = direction.to_model(HALF_PLANE).coord
    n = max(1, int(math.ceil(T / step)))
    times = np.linspace(0.0, T, n + 1)
    frame = geodesic_frame(z0, xi).real
    e = 1j * np.exp(times)
    pts = (frame[0, 0] * e + frame[0, 1]) / (frame[1, 0] * e + frame[1, 1])

    sel = np.unique(np.linspace(0, n, min(n + 1, max_pairs)).round().astype(int))
    zs, ts = pts[sel], times[sel]
    d = half_plane_distance(zs[:, None], zs[None, :])
    dt = np.abs(ts[:, None] - ts[None, :])
    off = dt > 0
    ratio = d[off] / dt[off]
    defect = float(np.abs(d - dt).max())

    # holonomy along the projected geodesic
    fb = fiber_start
    if fb is None:
        fb = xi if f.fiber_type == CIRCLE else 0.0
    u0, v0 = _fiber_homogeneous(f, fb)
    walker = _Walker(f, [z0], [u0], [v0])
    walker.settle()
    for k in range(n):
        h = times[k + 1] - times[k]
        # local direction is the deck image of the endpoint
        Vi = np.linalg.inv(walker.V[0])
        ld = _apply_real(Vi, xi)
        fr = geodesic_frame(walker.z[0], ld).real
        p = 1j * math.exp(h)
        walker.z[0] = (fr[0, 0] * p + fr[0, 1]) / (fr[1, 0] * p + fr[1, 1])
        walker.settle()
    return GeodesicLift(times=times, points=pts, endpoint=direction,
                        rho_lower=float(ratio.min()), rho_upper=float(ratio.max()),
                        max_defect=defect, log_deriv=float(walker.logd[0]),
                        crossings=int(walker.crossings[0]))


def _apply_real(m, x):
    if math.isinf(abs(complex(x))):
        return m[0, 0] / m[1, 0] if m[1, 0] != 0 else math.inf
    x = complex(x).real
    den = m[1, 0] * x + m[1, 1]
    if den == 0:
        return math.inf
    return (m[0, 0] * x + m[0, 1]) / den


@dataclass(frozen=True)
class JacobianReport:
    t: float
    ratio: float
    expected: float
    rel_error: float
    std_error: float
    n_samples: int

    @property
    def ok(self):
        return self.rel_error <= 0.01


def flow_jacobian_check(t, n_samples=200_000, seed=0):
    """Poincare-area scaling of x + iy -> x + i e^-t y on the box [0,1] x [1,2].

    Both areas are Monte Carlo integrals of 1/y^2 with independent uniform
    samples; the ratio should be e^t.
    """
    t = float(t)
    if not 0.0 <= t <= 5.0:
        raise ParameterError("t must lie in [0, 5]")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    y0 = rng.uniform(1.0, 2.0, n_samples)
    y1 = math.exp(-t) * rng.uniform(1.0, 2.0, n_samples)
    a0 = 1.0 / y0 ** 2
    a1 = math.exp(-t) / y1 ** 2
    m0, m1 = a0.mean(), a1.mean()
    ratio = m1 / m0
    se = ratio * math.sqrt(a0.var(ddof=1) / (n_samples * m0 ** 2)
                           + a1.var(ddof=1) / (n_samples * m1 ** 2))
    expected = math.exp(t)
    return JacobianReport(t=t, ratio=float(ratio), expected=expected,
                          rel_error=abs(ratio / expected - 1.0), std_error=float(se),
                          n_samples=int(n_samples))
