"""Transverse dimension: limit-set samples, box counting, holonomy IFS.

Limit sets are sampled as orbits of a base point under reduced words of a
fixed length. Box counting works in the round embedding of the fiber
(unit circle in R^2 or unit sphere in R^3), where Euclidean boxes are
comparable to chordal balls.

The holonomy IFS is a finite family of representation elements that map a
chart disc strictly inside itself with disjoint images; its Moran
(similarity) dimension, bracketed by the Koebe distortion of the maps,
bounds the dimension of its attractor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from ._validation import check_scalar, check_seed
from .estimators import embed_fiber_points, kaimanovich_entropy, lyapunov_exponent
from .exceptions import DependencyError, EmptySystemError, ParameterError
from .hyperbolic import MoebiusMap, homogeneous
from .suspension import CIRCLE, SPHERE, FiberRepresentation, SuspensionFoliation, preset

MAX_DEPTH = 14
DEFAULT_MAX_POINTS = 200_000
DEDUP_RESOLUTION = 1e-10
INEQUALITY_TOLERANCE = 0.1


@dataclass(frozen=True)
class LimitSetSample:
    """Orbit points of ``base`` under reduced words of length ``word_length``."""

    points: np.ndarray
    word_length: int
    group: FiberRepresentation
    base: complex = 0j
    fiber_type: str = SPHERE
    n_words: int = 0
    exhaustive: bool = True

    def embedded(self):
        return embed_fiber_points(self.points, self.fiber_type)

    def __len__(self):
        return int(self.points.size)


def _moving_letters(rep):
    """Signed generator indices with non-identity images."""
    out = []
    for k in range(1, 5):
        if not rep.letter(k).allclose(MoebiusMap.identity(), 1e-12):
            out += [k, -k]
    return out


def _apply_letters(mats, letter_idx, u, v):
    """Apply ``mats[letter_idx[i]]`` to homogeneous point i."""
    m = mats[letter_idx]
    uu = m[:, 0, 0] * u + m[:, 0, 1] * v
    vv = m[:, 1, 0] * u + m[:, 1, 1] * v
    n = np.sqrt(np.abs(uu) ** 2 + np.abs(vv) ** 2)
    return uu / n, vv / n


def _dedup(u, v, fiber_type):
    x = embed_fiber_points(_from_hom(u, v), fiber_type)
    keys = np.round(x / DEDUP_RESOLUTION).astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    idx = np.sort(idx)
    return u[idx], v[idx]


def _from_hom(u, v):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v == 0, np.inf + 0j, u / v)


def sample_limit_set(rep, depth, base=0j, max_points=DEFAULT_MAX_POINTS, seed=0,
                     fiber_type=None):
    """Images of ``base`` under reduced words of length ``depth``.

    Generators with identity image are left out (their words only repeat
    points). When the number of reduced words exceeds ``max_points``,
    that many words are drawn uniformly at random (seeded) instead.
    Points closer than 1e-10 in the round embedding are merged.
    """
    if isinstance(rep, (str, SuspensionFoliation)):
        f = preset(rep)
        rep, fiber_type = f.rep, fiber_type or f.fiber_type
    fiber_type = fiber_type or (CIRCLE if rep.is_real else SPHERE)
    depth = check_scalar(depth, "depth", lower=0, upper=MAX_DEPTH, integer=True)
    max_points = check_scalar(max_points, "max_points", lower=1, integer=True)
    seed = check_seed(seed)
    letters = _moving_letters(rep)
    u0, v0 = homogeneous(np.array([complex(base)]))
    if not letters or depth == 0:
        return LimitSetSample(_from_hom(u0, v0), depth, rep, complex(base), fiber_type, 1, True)
    mats = np.stack([rep.letter(k).matrix for k in letters])
    inv_pos = np.array([letters.index(-k) for k in letters])
    nl = len(letters)
    n_words = nl * (nl - 1) ** (depth - 1)

    if n_words <= max_points:
        # grow words on the left: level n points carry their first letter
        u = np.repeat(u0, nl)
        v = np.repeat(v0, nl)
        first = np.arange(nl)
        u, v = _apply_letters(mats, first, u, v)
        for _ in range(depth - 1):
            new_first = np.repeat(np.arange(nl), first.size)
            old = np.tile(np.arange(first.size), nl)
            keep = inv_pos[new_first] != first[old]
            new_first, old = new_first[keep], old[keep]
            u, v = _apply_letters(mats, new_first, u[old], v[old])
            first = new_first
        exhaustive = True
    else:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        m = max_points
        word = np.empty((m, depth), dtype=np.int64)
        word[:, 0] = rng.integers(0, nl, m)
        for j in range(1, depth):
            # uniform among the nl - 1 letters that do not cancel the previous one
            step = rng.integers(1, nl, m)
            cand = (inv_pos[word[:, j - 1]] + step) % nl
            word[:, j] = cand
        u = np.repeat(u0, m)
        v = np.repeat(v0, m)
        for j in range(depth - 1, -1, -1):
            u, v = _apply_letters(mats, word[:, j], u, v)
        exhaustive = False
    u, v = _dedup(u, v, fiber_type)
    return LimitSetSample(_from_hom(u, v), depth, rep, complex(base), fiber_type,
                          int(n_words), exhaustive)


def export_limit_set_csv(sample, path):
    """Write the sample as ``re,im`` rows (``inf`` for the point at infinity)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for z in sample.points:
            w.writerow([repr(float(z.real)), repr(float(z.imag))])


# -- box counting ----------------------------------------------------------

@dataclass(frozen=True)
class DimensionReport:
    box_dimension: float
    fit_r2: float
    radii_used: np.ndarray
    counts: np.ndarray = field(repr=False, default=None)
    moran_dimension: float | None = None
    degenerate: bool = False

    def __post_init__(self):
        if not -1e-9 <= self.box_dimension <= 2.0 + 1e-9 and not self.degenerate:
            object.__setattr__(self, "degenerate", True)


def _embed(points):
    if isinstance(points, LimitSetSample):
        return points.embedded()
    x = np.asarray(points)
    if np.iscomplexobj(x) and x.ndim == 1:
        return embed_fiber_points(x, SPHERE)
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def box_counts(x, radii):
    """Number of occupied grid boxes of side r, for each r."""
    lo = x.min(axis=0)
    out = []
    for r in radii:
        keys = np.floor((x - lo) / r).astype(np.int64)
        out.append(len(np.unique(keys, axis=0)))
    return np.array(out)


def auto_radii(x, count=12):
    """Geometric grid between the saturation scale and a quarter of the diameter."""
    n = x.shape[0]
    grid = np.geomspace(1e-6, 0.5, 41)
    span = float(np.max(x.max(axis=0) - x.min(axis=0)))
    c = box_counts(x, grid)
    ok = (c <= n / 30.0) & (grid <= max(span, 1e-12) / 4.0)
    if ok.sum() < 2:
        return np.geomspace(1e-6, 0.5, count)
    lo, hi = grid[ok].min(), grid[ok].max()
    if hi / lo < 100.0:
        lo = hi / 100.0
    return np.geomspace(lo, hi, count)


def box_counting(points, radii=None):
    """Slope of log N(r) against log(1/r).

    ``points`` is a LimitSetSample, complex P^1 points, or Euclidean rows.
    A set that occupies fewer than two boxes at the largest radius is
    reported as degenerate (dimension 0 when all counts are 1).
    """
    x = _embed(points)
    n = x.shape[0]
    if n < 1000:
        raise ParameterError(f"box counting needs at least 1000 points, got {n}")
    radii = auto_radii(x) if radii is None else np.sort(np.asarray(radii, dtype=float))
    if radii.size < 8 or radii[0] <= 0 or radii[-1] / radii[0] < 100.0 * (1 - 1e-12):
        raise ParameterError("box counting needs at least 8 positive radii spanning two decades")
    counts = box_counts(x, radii)
    degenerate = bool(counts[-1] < 2)
    if np.all(counts == counts[0]):
        return DimensionReport(0.0, 1.0, radii, counts, degenerate=degenerate)
    fit = stats.linregress(np.log(1.0 / radii), np.log(counts))
    return DimensionReport(float(fit.slope), float(fit.rvalue ** 2), radii, counts,
                           degenerate=degenerate)


# -- holonomy IFS ----------------------------------------------------------

@dataclass(frozen=True)
class IFSSystem:
    """Maps sending the chart disc D(center, radius) strictly into itself.

    ``log_ratios`` are the per-map means of log|h'| over the disc and
    ``kappa`` bounds |log|h'(z)| - log|h'(center)|| on the sampled disc.
    """

    maps: tuple
    words: tuple
    center: complex
    radius: float
    log_ratios: tuple
    kappa: float
    margin: float = 1e-6

    @property
    def ratios(self):
        return tuple(math.exp(x) for x in self.log_ratios)

    def image_circles(self):
        return [image_circle(h, self.center, self.radius) for h in self.maps]

    def recheck(self, n_boundary=1000):
        """Re-verify containment and disjointness from the stored maps."""
        return _check_maps(self.maps, self.center, self.radius, self.margin, n_boundary)[0]


def image_circle(h, center, radius):
    """Centre and radius of the image of the circle |z - center| = radius."""
    pts = center + radius * np.exp(2j * math.pi * np.array([0.0, 1 / 3, 2 / 3]))
    a, b, c = [complex(h(p)) for p in pts]
    # circumcircle of three points
    d = 2 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag) + c.real * (a.imag - b.imag))
    if abs(d) < 1e-300:
        return complex("nan"), math.inf
    ux = (abs(a) ** 2 * (b.imag - c.imag) + abs(b) ** 2 * (c.imag - a.imag) + abs(c) ** 2 * (a.imag - b.imag)) / d
    uy = (abs(a) ** 2 * (c.real - b.real) + abs(b) ** 2 * (a.real - c.real) + abs(c) ** 2 * (b.real - a.real)) / d
    o = complex(ux, uy)
    return o, abs(a - o)


def _check_maps(maps, center, radius, margin, n_boundary):
    bd = center + radius * np.exp(2j * math.pi * np.arange(n_boundary) / n_boundary)
    info = []
    ok = True
    for h in maps:
        m = h.matrix
        pole = -m[1, 1] / m[1, 0] if m[1, 0] != 0 else complex("inf")
        pole_out = not (abs(pole - center) <= radius + margin)
        o, rr = image_circle(h, center, radius)
        inside = pole_out and abs(o - center) + rr <= radius - margin
        samples = np.asarray(h(bd))
        inside = inside and bool(np.all(np.abs(samples - center) <= radius - margin))
        info.append((o, rr, samples))
        ok = ok and inside
    for i in range(len(info)):
        for j in range(i + 1, len(info)):
            oi, ri, si = info[i]
            oj, rj, sj = info[j]
            sep = abs(oi - oj) - ri - rj
            # sampled boundaries must also stay apart
            d = np.abs(si[:, None] - sj[None, :]).min()
            ok = ok and sep > 0 and d > 0
    return ok, info


def _log_deriv_on_disc(h, center, radius, n=4096, seed=0):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    rad = radius * np.sqrt(rng.random(n))
    z = center + rad * np.exp(2j * math.pi * rng.random(n))
    z = np.concatenate([z, center + radius * np.exp(2j * math.pi * np.arange(512) / 512), [center]])
    m = h.matrix
    return -2.0 * np.log(np.abs(m[1, 0] * z + m[1, 1]))


def schottky_chart(c, r):
    """Chart disc for the pair {a1, a2}: around c and ic, away from -c and -ic."""
    center = complex(c, c) / 2
    inner = abs(c - center) + r
    outer = abs(-c - center) - r
    return center, 0.5 * (inner + outer)


def build_holonomy_ifs(f, radius=None, words=None, center=None, margin=1e-6):
    """Collect candidate words whose holonomy contracts a chart disc.

    Each candidate must map the chart disc strictly inside itself (margin
    ``margin``) with images pairwise disjoint; maps failing the checks are
    dropped, and an empty result raises :class:`EmptySystemError`.
    """
    f = preset(f)
    rep = f.rep
    letters = _moving_letters(rep)
    if not letters:
        raise EmptySystemError(f"representation {rep.name!r} has no non-trivial holonomy")
    if words is None:
        words = [(k,) for k in letters if k > 0]
    words = [tuple(w) for w in words]
    if center is None or radius is None:
        params = getattr(f, "schottky_params", None)
        if params is not None:
            c0, r0 = schottky_chart(*params)
        else:
            # chart around the attracting fixed point of the first word
            h = MoebiusMap.from_matrix(rep.word_matrix(words[0]))
            c0 = _attracting_fixed_point(h)
            poles = []
            for w in words:
                m = rep.word_matrix(w)
                if m[1, 0] != 0:
                    poles.append(-m[1, 1] / m[1, 0])
            r0 = 0.5 * min(abs(p - c0) for p in poles) if poles else 1.0
        center = c0 if center is None else center
        radius = r0 if radius is None else radius
    center = complex(center)
    radius = check_scalar(radius, "radius", lower=0.0, lower_open=True)

    kept, kept_words = [], []
    for w in words:
        h = MoebiusMap.from_matrix(rep.word_matrix(w))
        ok, _ = _check_maps([h], center, radius, margin, 1000)
        if not ok:
            continue
        ld = _log_deriv_on_disc(h, center, radius)
        if ld.max() >= 0:
            continue
        trial = kept + [h]
        if _check_maps(trial, center, radius, margin, 1000)[0]:
            kept.append(h)
            kept_words.append(w)
    if not kept:
        raise EmptySystemError("no candidate word gives a contraction of the chart disc")
    logs, kappa = [], 0.0
    for h in kept:
        ld = _log_deriv_on_disc(h, center, radius)
        logs.append(float(ld.mean()))
        kappa = max(kappa, float(np.abs(ld - ld[-1]).max()))
    return IFSSystem(tuple(kept), tuple(kept_words), center, radius, tuple(logs), kappa, margin)


def _attracting_fixed_point(h):
    a, b, c, d = h.a, h.b, h.c, h.d
    if abs(c) < 1e-14:
        return complex(b / (d - a)) if abs(d - a) > 1e-14 else 0j
    disc = np.sqrt(complex((a - d) ** 2 + 4 * b * c))
    cands = [(a - d + disc) / (2 * c), (a - d - disc) / (2 * c)]
    # attracting: |h'(z)| = 1/|cz + d|^2 < 1
    return complex(min(cands, key=lambda z: -abs(c * z + d)))


def solve_moran(ratios, tol=1e-10):
    """The s with sum(r_i^s) = 1, by bisection."""
    r = np.asarray(ratios, dtype=float)
    if r.size < 2:
        raise ParameterError("a Moran solve needs at least two maps (single-map systems are degenerate)")
    if np.any(r <= 0) or np.any(r >= 1):
        raise ParameterError(f"contraction ratios must lie in (0, 1), got {r.tolist()}")
    g = lambda s: math.fsum(r ** s) - 1.0
    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
    return float(optimize.bisect(g, 0.0, hi, xtol=tol, rtol=4 * np.finfo(float).eps))


def moran_dimension(ifs):
    """Similarity dimension from the per-map mean contraction ratios."""
    if not isinstance(ifs, IFSSystem):
        return solve_moran(ifs)
    return solve_moran(ifs.ratios)


def moran_bracket(ifs):
    """Solutions with every ratio scaled by e^-kappa and e^+kappa.

    A ratio pushed to 1 or beyond by the distortion leaves the upper end
    unbounded (``inf``).
    """
    r = np.asarray(ifs.ratios)
    lo = solve_moran(r * math.exp(-ifs.kappa))
    up = r * math.exp(ifs.kappa)
    hi = solve_moran(up) if np.all(up < 1) else math.inf
    return lo, hi


# -- the inequality --------------------------------------------------------

@dataclass(frozen=True)
class InequalityReport:
    preset: str
    dimension: float
    entropy: float
    exponent: float
    ratio: float
    passed: bool
    near_equality: bool
    margin: float
    tolerance: float = INEQUALITY_TOLERANCE
    entropy_kind: str = "leaf"
    dimension_fit_r2: float = float("nan")
    moran: float | None = None
    moran_bracket: tuple | None = None
    notes: tuple = ()
    params: dict = field(default_factory=dict)

    def summary(self):
        return (f"{self.preset}: d={self.dimension:.4f} h={self.entropy:.4f} "
                f"lambda={self.exponent:.4f} h/|lambda|={self.ratio:.4f} "
                f"{'pass' if self.passed else 'FAIL'}")


def transverse_dimension(f, depth=10, max_points=DEFAULT_MAX_POINTS, seed=0):
    sample = sample_limit_set(f.rep, depth, max_points=max_points, seed=seed,
                              fiber_type=f.fiber_type)
    return box_counting(sample), sample


def verify_dimension_inequality(f, horizon=50.0, n_paths=2048, step=1e-2, seed=0, threads=1,
                                depth=10, max_points=DEFAULT_MAX_POINTS, lyapunov=None,
                                entropy=None, with_ifs=True):
    """Check dim >= h / |lambda| - 0.1 for a suspension.

    ``lyapunov`` and ``entropy`` may be passed as precomputed reports (or
    floats); otherwise they are estimated with the given parameters. When
    the leaves are not simply connected only the universal-cover entropy is
    computable; it bounds the leaf entropy from above and is reported as
    such.
    """
    f = preset(f)
    notes = []
    if lyapunov is None:
        lyapunov = lyapunov_exponent(f, horizon, n_paths, step, seed, threads)
    # the only entropy available is computed with the half-plane kernel
    kind = "leaf" if f.simply_connected_leaves else "universal-cover upper bound"
    if not f.simply_connected_leaves:
        notes.append("leaves are not simply connected: entropy is the universal-cover "
                     "value, an upper bound for the leaf entropy")
    if entropy is None:
        entropy = kaimanovich_entropy(f, horizon, n_paths, step, seed, threads,
                                      assume_simply_connected=True)
    lam = float(getattr(lyapunov, "value", lyapunov))
    h = float(getattr(entropy, "value", entropy))
    if not (math.isfinite(lam) and lam < 0):
        raise DependencyError(f"the inequality needs a negative exponent estimate, got {lam}")
    if not (math.isfinite(h) and h > 0):
        raise DependencyError(f"the inequality needs a positive entropy estimate, got {h}")
    dim, _ = transverse_dimension(f, depth, max_points, seed)
    ratio = h / abs(lam)
    margin = dim.box_dimension - ratio
    moran = bracket = None
    if with_ifs:
        try:
            ifs = build_holonomy_ifs(f)
            moran = moran_dimension(ifs)
            bracket = moran_bracket(ifs)
        except (EmptySystemError, ParameterError) as exc:
            notes.append(f"no holonomy IFS: {exc}")
    return InequalityReport(
        preset=f.name, dimension=dim.box_dimension, entropy=h, exponent=lam, ratio=ratio,
        passed=bool(margin >= -INEQUALITY_TOLERANCE),
        near_equality=bool(abs(margin) < INEQUALITY_TOLERANCE),
        margin=margin, entropy_kind=kind, dimension_fit_r2=dim.fit_r2,
        moran=moran, moran_bracket=bracket, notes=tuple(notes),
        params={"horizon": horizon, "N": n_paths, "step": step, "seed": seed, "depth": depth})
