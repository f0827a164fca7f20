"""Monte Carlo estimators of the ergodic quantities of a suspension.

* ``lyapunov_exponent``: growth rate of the log-derivative of the fiber
  holonomy along Brownian paths.
* ``kaimanovich_entropy``: entropy rate of the heat kernel on the leaves,
  computed with the exact half-plane kernel.
* ``harmonic_measure``: stationary law of the fiber coordinate.
* ``local_dimension``: scaling slope of ball masses of a fiber sample.

All Monte Carlo estimators use one random stream per path (see
``_streams``), so their output does not depend on the thread count.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.integrate import simpson
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator

from . import _streams
from ._validation import check_scalar, check_seed, check_threads
from .brownian import log_heat_kernel, n_steps_for, radial_density, simulate_endpoints
from .exceptions import NumericalError, ParameterError
from .hyperbolic import HPoint, half_plane_distance, homogeneous
from .reports import EstimatorReport
from .suspension import AFFINE, CIRCLE, SPHERICAL, preset, run_paths

#: Below this horizon the entropy estimate carries a visible finite-time bias.
ENTROPY_BIAS_HORIZON = 20.0
#: Allowed relative deviation of the path drift from the generator scale.
DRIFT_TOLERANCE = 0.1


class BiasWarning(UserWarning):
    """An estimate is run in a regime where its finite-horizon bias is large."""


def _foliation(f):
    return preset(f)


def lyapunov_exponent(f, horizon=50.0, n_paths=2048, step=1e-2, seed=0, threads=1,
                      metric=SPHERICAL, generator_scale=1.0, burn_in=None):
    """Mean of log|h'| / t over paths started from a stationary-ish state.

    Base points are drawn from the area measure on the octagon and fibers
    uniformly; a burn-in of ``horizon / 2`` (default) moves the fiber towards
    the harmonic measure before the derivative is accumulated.
    """
    t0 = time.perf_counter()
    f = _foliation(f)
    horizon = check_scalar(horizon, "horizon", lower=10.0)
    n_paths = check_scalar(n_paths, "N", lower=64, integer=True)
    step = check_scalar(step, "step", lower=0.0, upper=0.1, lower_open=True)
    seed = check_seed(seed)
    threads = check_threads(threads)
    if metric not in (SPHERICAL, AFFINE):
        raise ParameterError(f"metric must be {SPHERICAL!r} or {AFFINE!r}")
    burn_in = horizon / 2 if burn_in is None else check_scalar(burn_in, "burn_in", lower=0.0)
    n_steps_for(horizon, step)

    def block(idx):
        w = run_paths(f, idx, seed, horizon, step, generator_scale=generator_scale,
                      metric=metric, burn_in=burn_in)
        return w.logd / horizon

    vals = np.concatenate(_streams.map_blocks(block, n_paths, threads))
    if not np.all(np.isfinite(vals)):
        bad = int(np.sum(~np.isfinite(vals)))
        raise NumericalError("non-finite holonomy derivative", {"non_finite_paths": bad})
    mean, se = _streams.mean_and_se(vals)
    params = {"preset": f.name, "metric": metric, "burn_in": burn_in,
              "generator_scale": generator_scale}
    return EstimatorReport("lyapunov", mean, se, n_paths, horizon, seed, step,
                           time.perf_counter() - t0, params)


def entropy_bias(t, generator_scale=1.0, n=20001):
    """Exact finite-horizon value of -(1/t) E log p(t, r_t), by quadrature.

    The radial law of the exact Brownian motion is integrated against the
    log kernel; the result exceeds the limit 1 by roughly log(t)/(2t).
    """
    ct = generator_scale * t
    r_max = ct + 12.0 * math.sqrt(2.0 * ct) + 10.0
    r = np.linspace(0.0, r_max, n)[1:]
    dens = radial_density(ct, r)
    lp = log_heat_kernel(ct, r)
    return float(-simpson(dens * lp, x=r) / simpson(dens, x=r)) / t


def kaimanovich_entropy(f="fuchsian-boundary", horizon=50.0, n_paths=2048, step=1e-2,
                        seed=0, threads=1, method="increment", generator_scale=1.0,
                        assume_simply_connected=None):
    """Entropy rate of Brownian motion on the leaves.

    ``method='pointwise'`` is -(1/t) E log p(t, d(o, gamma_t)); it converges
    to the entropy only like log(t)/t. ``method='increment'`` (default) uses
    the same paths at t/2 and t,

        ( E[-log p(t, r_t)] - E[-log p(t/2, r_{t/2})] ) / (t/2),

    which removes the t-independent part of the bias and leaves
    about log(2)/t. Both rest on the half-plane kernel, so the leaves must
    be simply connected; pass ``assume_simply_connected=True`` to get the
    universal-cover value (an upper bound for the leaf entropy) anyway.
    """
    t0 = time.perf_counter()
    f = _foliation(f)
    simply = f.simply_connected_leaves if assume_simply_connected is None else assume_simply_connected
    if not simply:
        raise ParameterError(
            f"leaves of {f.name!r} are not simply connected; the half-plane kernel "
            "does not describe them (pass assume_simply_connected=True for the "
            "universal-cover value)")
    horizon = check_scalar(horizon, "horizon", lower=0.0, lower_open=True)
    n_paths = check_scalar(n_paths, "N", lower=64, integer=True)
    step = check_scalar(step, "step", lower=0.0, upper=0.1, lower_open=True)
    seed = check_seed(seed)
    threads = check_threads(threads)
    c = check_scalar(generator_scale, "generator_scale", lower=0.0, lower_open=True)
    if method not in ("increment", "pointwise"):
        raise ParameterError("method must be 'increment' or 'pointwise'")

    notes = []
    if horizon < ENTROPY_BIAS_HORIZON:
        msg = (f"horizon {horizon:g} < {ENTROPY_BIAS_HORIZON:g}: the entropy estimate "
               f"carries a finite-time bias (exact pointwise value "
               f"{entropy_bias(horizon, c):.4f} x scale {c:g})")
        warnings.warn(msg, BiasWarning, stacklevel=2)
        notes.append(msg)

    half = horizon / 2
    times = [half, horizon] if method == "increment" else [horizon]
    ends = simulate_endpoints(HPoint(1j), horizon, step, n_paths, seed, threads,
                              generator_scale=c, record_times=times)
    r = half_plane_distance(1j, ends)
    r_end = r[:, -1]
    drift, drift_se = _streams.mean_and_se(r_end / horizon)
    if horizon >= ENTROPY_BIAS_HORIZON and abs(drift / c - 1.0) > DRIFT_TOLERANCE:
        raise NumericalError("path drift inconsistent with the generator; entropy run rejected",
                             {"drift": drift, "drift_se": drift_se, "generator_scale": c})
    neg_log_end = -log_heat_kernel(c * horizon, r_end)
    if method == "increment":
        neg_log_half = -log_heat_kernel(c * half, r[:, 0])
        vals = (neg_log_end - neg_log_half) / half
    else:
        vals = neg_log_end / horizon
    if not np.all(np.isfinite(vals)):
        raise NumericalError("heat kernel returned non-finite values",
                             {"non_finite": int(np.sum(~np.isfinite(vals)))})
    mean, se = _streams.mean_and_se(vals)
    params = {"preset": f.name, "method": method, "generator_scale": c,
              "drift": drift, "drift_se": drift_se,
              "leaves": "simply connected" if f.simply_connected_leaves else "universal cover"}
    return EstimatorReport("entropy", mean, se, n_paths, horizon, seed, step,
                           time.perf_counter() - t0, params, tuple(notes))


# -- harmonic measure ------------------------------------------------------

def _sphere_grid(bins):
    # bands of equal height are of equal area on the sphere
    divs = [d for d in range(1, bins + 1) if bins % d == 0]
    n_bands = min(divs, key=lambda d: abs(d - math.sqrt(bins / 2.0)))
    return n_bands, bins // n_bands


def to_circle_angle(u, v):
    """Angle in [0, 2pi) of the point u/v of the real projective line."""
    return np.mod(2.0 * np.arctan2(np.real(u), np.real(v)), 2.0 * math.pi)


def to_sphere(u, v):
    """Unit-sphere coordinates of the point u/v (stereographic, inf at the north pole)."""
    w = u * np.conj(v)
    n2 = np.abs(u) ** 2 + np.abs(v) ** 2
    return np.stack([2 * w.real / n2, 2 * w.imag / n2, (np.abs(u) ** 2 - np.abs(v) ** 2) / n2], axis=-1)


@dataclass(frozen=True)
class FiberHistogram:
    """Counts of fiber points in equal-area bins.

    Circle bins are arcs of equal angle; sphere bins are ``n_bands`` bands
    of equal height split into ``n_sectors`` sectors of equal longitude.
    ``points`` keeps the underlying samples as complex P^1 coordinates.
    """

    fiber_type: str
    counts: np.ndarray
    total: int
    edges: tuple
    points: np.ndarray = field(repr=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.counts.sum()) != self.total:
            raise ValueError("histogram counts do not sum to the total")

    @property
    def bins(self):
        return int(self.counts.size)

    @property
    def empty_bins(self):
        return int(np.sum(self.counts == 0))

    def chi2_uniform(self):
        """(statistic, p-value) of a chi-square test against equal bin masses."""
        res = stats.chisquare(self.counts.ravel())
        return float(res.statistic), float(res.pvalue)

    def embedded(self):
        return embed_fiber_points(self.points, self.fiber_type)

    def mass_in_discs(self, discs):
        """Fraction of samples inside the union of ``(center, radius)`` discs."""
        z = self.points
        inside = np.zeros(z.size, dtype=bool)
        for d in discs:
            center, radius = d[0], d[1]
            with np.errstate(invalid="ignore"):
                inside |= np.abs(z - center) <= radius
        return float(inside.mean())


def embed_fiber_points(points, fiber_type):
    """Circle points as unit vectors in R^2, sphere points in R^3."""
    u, v = homogeneous(np.asarray(points))
    if fiber_type == CIRCLE:
        a = to_circle_angle(u, v)
        return np.stack([np.cos(a), np.sin(a)], axis=-1)
    return to_sphere(u, v)


def fiber_histogram(u, v, fiber_type, bins, params=None):
    with np.errstate(divide="ignore", invalid="ignore"):
        pts = np.where(v == 0, np.inf + 0j, u / v)
    if fiber_type == CIRCLE:
        edges = (np.linspace(0.0, 2.0 * math.pi, bins + 1),)
        counts, _ = np.histogram(to_circle_angle(u, v), bins=edges[0])
    else:
        nb, ns = _sphere_grid(bins)
        xyz = to_sphere(u, v)
        z_edges = np.linspace(-1.0, 1.0, nb + 1)
        p_edges = np.linspace(-math.pi, math.pi, ns + 1)
        phi = np.arctan2(xyz[:, 1], xyz[:, 0])
        counts, _, _ = np.histogram2d(np.clip(xyz[:, 2], -1, 1), phi, bins=(z_edges, p_edges))
        counts = counts.astype(np.int64).ravel()
        edges = (z_edges, p_edges)
    return FiberHistogram(fiber_type, np.asarray(counts, dtype=np.int64), int(len(pts)),
                          edges, pts, dict(params or {}))


def harmonic_measure(f, horizon=20.0, n_paths=10_000, bins=64, seed=0, step=1e-2, threads=1):
    """Histogram of fiber coordinates at the end of paths run for ``horizon``.

    Paths start from the area measure on the base and a uniform fiber point;
    the whole horizon serves as burn-in towards the stationary law.
    """
    t0 = time.perf_counter()
    f = _foliation(f)
    bins = check_scalar(bins, "bins", lower=16, integer=True)
    n_paths = check_scalar(n_paths, "N", lower=1, integer=True)
    horizon = check_scalar(horizon, "horizon", lower=0.0)
    step = check_scalar(step, "step", lower=0.0, upper=0.1, lower_open=True)
    seed = check_seed(seed)
    threads = check_threads(threads)

    def block(idx):
        w = run_paths(f, idx, seed, horizon, step)
        return w.u, w.v

    parts = _streams.map_blocks(block, n_paths, threads)
    u = np.concatenate([p[0] for p in parts])
    v = np.concatenate([p[1] for p in parts])
    params = {"preset": f.name, "horizon": horizon, "step": step, "seed": seed,
              "wall_time": time.perf_counter() - t0}
    return fiber_histogram(u, v, f.fiber_type, bins, params)


# -- local dimension -------------------------------------------------------

@dataclass(frozen=True)
class RegressionReport:
    slope: float
    intercept: float
    r2: float
    radii: np.ndarray
    log_mass: np.ndarray
    n_samples: int
    n_centers: int
    low_confidence: bool = False
    zero_fraction: float = 0.0


def _as_points(samples):
    if isinstance(samples, FiberHistogram):
        return samples.embedded()
    x = np.asarray(samples)
    if np.iscomplexobj(x) and x.ndim == 1:
        return embed_fiber_points(x, "sphere")
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        # angles on the circle
        return np.stack([np.cos(x), np.sin(x)], axis=-1)
    return x


def default_radii(n, upper=0.5, count=12):
    lo = upper / 100.0
    return np.geomspace(lo, upper, count)


def local_dimension(samples, radii=None, n_centers=500, seed=0, average="log"):
    """Slope of log mu(B(x, r)) against log r, averaged over sample centres.

    ``samples`` is a FiberHistogram, an array of circle angles, complex P^1
    points, or Euclidean coordinates (rows). Distances are chordal.
    ``average='log'`` averages log masses over centres (pointwise local
    dimension); ``average='mass'`` logs the averaged mass (correlation
    dimension). Centres with an empty ball at some radius are left out of
    that radius.
    """
    x = _as_points(samples)
    n = x.shape[0]
    if n < 1000:
        raise ParameterError(f"local_dimension needs at least 1000 samples, got {n}")
    radii = default_radii(n) if radii is None else np.sort(np.asarray(radii, dtype=float))
    if radii.size < 2 or radii[0] <= 0 or radii[-1] / radii[0] < 100.0 * (1 - 1e-12):
        raise ParameterError("radii must be positive and span at least two decades")
    if average not in ("log", "mass"):
        raise ParameterError("average must be 'log' or 'mass'")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    k = min(int(n_centers), n)
    centers = rng.choice(n, size=k, replace=False)
    tree = cKDTree(x)
    counts = np.stack([tree.query_ball_point(x[centers], r, return_length=True) for r in radii],
                      axis=1) - 1
    mass = counts / (n - 1)
    if average == "mass":
        y = np.log(np.maximum(mass.mean(axis=0), np.finfo(float).tiny))
        zero = 0.0
    else:
        with np.errstate(divide="ignore"):
            lm = np.log(mass)
        ok = np.isfinite(lm)
        zero = float(1.0 - ok.mean())
        y = np.array([lm[ok[:, j], j].mean() if ok[:, j].any() else -np.inf
                      for j in range(radii.size)])
    good = np.isfinite(y)
    lx = np.log(radii[good])
    fit = stats.linregress(lx, y[good])
    r2 = float(fit.rvalue ** 2)
    return RegressionReport(float(fit.slope), float(fit.intercept), r2, radii, y, n, k,
                            low_confidence=bool(r2 < 0.9 or good.sum() < 3), zero_fraction=zero)


class LocalDimensionEstimator(BaseEstimator):
    """Estimator interface around :func:`local_dimension`.

    ``fit(X)`` takes fiber samples in any form the function accepts and
    stores ``slope_``, ``intercept_`` and ``r2_``.
    """

    def __init__(self, radii=None, n_centers=500, average="log", random_state=0):
        self.radii = radii
        self.n_centers = n_centers
        self.average = average
        self.random_state = random_state

    def fit(self, X, y=None):
        rep = local_dimension(X, self.radii, self.n_centers, self.random_state, self.average)
        self.report_ = rep
        self.slope_ = rep.slope
        self.intercept_ = rep.intercept
        self.r2_ = rep.r2
        return self


class LyapunovEstimator(BaseEstimator):
    """``fit()`` runs :func:`lyapunov_exponent` for the configured preset."""

    def __init__(self, preset="fuchsian-boundary", horizon=50.0, n_paths=2048, step=1e-2,
                 seed=0, threads=1, metric=SPHERICAL):
        self.preset = preset
        self.horizon = horizon
        self.n_paths = n_paths
        self.step = step
        self.seed = seed
        self.threads = threads
        self.metric = metric

    def fit(self, X=None, y=None):
        rep = lyapunov_exponent(self.preset, self.horizon, self.n_paths, self.step,
                                self.seed, self.threads, self.metric)
        self.report_ = rep
        self.exponent_ = rep.value
        self.std_error_ = rep.std_error
        return self


class EntropyEstimator(BaseEstimator):
    """``fit()`` runs :func:`kaimanovich_entropy` for the configured preset."""

    def __init__(self, preset="fuchsian-boundary", horizon=50.0, n_paths=2048, step=1e-2,
                 seed=0, threads=1, method="increment", assume_simply_connected=None):
        self.preset = preset
        self.horizon = horizon
        self.n_paths = n_paths
        self.step = step
        self.seed = seed
        self.threads = threads
        self.method = method
        self.assume_simply_connected = assume_simply_connected

    def fit(self, X=None, y=None):
        rep = kaimanovich_entropy(self.preset, self.horizon, self.n_paths, self.step,
                                  self.seed, self.threads, self.method,
                                  assume_simply_connected=self.assume_simply_connected)
        self.report_ = rep
        self.entropy_ = rep.value
        self.std_error_ = rep.std_error
        return self
