"""Brownian motion on the hyperbolic plane and its heat kernel.

The generator is the full Laplace-Beltrami operator (heat equation
d/dt = Delta, no 1/2). In the half-plane, Delta = y^2 (d_xx + d_yy), so

    dX = sqrt(2) Y dW1,    d log Y = sqrt(2) dW2 - dt.

The step scheme is exact for log Y. Given the vertical path, the horizontal
increment is Gaussian with variance 2 * int Y^2 ds; the integral is replaced
by the trapezoid over the step. ``generator_scale`` multiplies the
generator (0.5 gives the probabilists' Delta/2); it exists for cross-checks.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import _streams
from ._validation import check_scalar, check_seed, check_threads
from .exceptions import NumericalError, ParameterError
from .hyperbolic import (DISC, HALF_PLANE, HPoint, disc_to_half_plane,
                         half_plane_distance, half_plane_to_disc)
from .reports import EstimatorReport

MAX_STEP = 0.1


@dataclass(frozen=True)
class BrownianPath:
    """A sampled Brownian trajectory in the half-plane.

    ``increments[k]`` is step k seen from the affine frame at ``samples[k]``
    (the frame sending i to the current point), so that
    ``samples[k + 1] = Re(samples[k]) + Im(samples[k]) * increments[k]``.
    Replaying increments keeps full precision where the absolute
    coordinates underflow towards the boundary.
    """

    step: float
    samples: np.ndarray
    horizon: float
    rng_stream_id: int
    increments: np.ndarray | None = None

    @property
    def start(self):
        return HPoint(complex(self.samples[0]))

    @property
    def times(self):
        return self.step * np.arange(len(self.samples))

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class HeatKernelQuery:
    t: float
    r: float

    def __post_init__(self):
        check_scalar(self.t, "t", lower=0.0, lower_open=True)
        check_scalar(self.r, "r", lower=0.0)


def n_steps_for(horizon, step):
    n = horizon / step
    k = int(round(n))
    if abs(n - k) > 1e-6 * max(1.0, n):
        raise ParameterError(f"horizon {horizon} is not a multiple of step {step}")
    return k


def _check_step(step):
    return check_scalar(step, "step", lower=0.0, upper=MAX_STEP, lower_open=True)


def step_increment(xi, step, scale=1.0):
    """One step started at i, from standard normals ``xi[..., 0:2]``."""
    y = np.exp(-scale * step + math.sqrt(2.0 * scale * step) * xi[..., 1])
    x = np.sqrt(scale * step * (1.0 + y * y)) * xi[..., 0]
    return x + 1j * y


def brownian_step(z, xi, step, scale=1.0):
    """Advance half-plane points ``z`` by one step using normals ``xi[..., 0:2]``."""
    w = step_increment(xi, step, scale)
    return z.real + z.imag * w


def simulate_path(start, horizon, step, seed=0, stream=0, generator_scale=1.0):
    """One Brownian path from ``start`` sampled every ``step`` up to ``horizon``.

    The randomness comes from the stream keyed by ``(seed, stream)``; the same
    stream index in the Monte Carlo estimators reproduces the same path.
    """
    horizon = check_scalar(horizon, "horizon", lower=0.0)
    step = _check_step(step)
    seed = check_seed(seed)
    start = start.to_model(HALF_PLANE)
    n = n_steps_for(horizon, step)
    out = np.empty(n + 1, dtype=complex)
    out[0] = start.coord
    inc = np.empty(n, dtype=complex)
    if n:
        xi = _streams.path_generator(seed, stream).standard_normal((n, 2))
        inc[:] = step_increment(xi, step, generator_scale)
        z = start.coord
        for k in range(n):
            z = z.real + z.imag * inc[k]
            out[k + 1] = z
    return BrownianPath(step=step, samples=out, horizon=n * step,
                        rng_stream_id=int(stream), increments=inc)


def simulate_endpoints(start, horizon, step, n_paths, seed=0, threads=1,
                       generator_scale=1.0, record_times=None, chunk=512):
    """Half-plane positions of ``n_paths`` independent paths.

    Returns an array of shape ``(n_paths,)`` at ``horizon`` or, when
    ``record_times`` is given, ``(n_paths, len(record_times))``.
    """
    step = _check_step(step)
    start = start.to_model(HALF_PLANE).coord
    n = n_steps_for(horizon, step)
    if record_times is None:
        marks = [n]
    else:
        marks = [n_steps_for(t, step) for t in record_times]
        if max(marks) > n:
            raise ParameterError("record_times must not exceed the horizon")
    mark_pos = {m: i for i, m in enumerate(marks)}

    def run(idx):
        streams = _streams.PathStreams(seed, idx)
        z = np.full(len(idx), start, dtype=complex)
        rec = np.empty((len(idx), len(marks)), dtype=complex)
        if 0 in mark_pos:
            rec[:, mark_pos[0]] = z
        k = 0
        while k < n:
            m = min(chunk, n - k)
            xi = streams.normal((m, 2))
            for j in range(m):
                z = brownian_step(z, xi[:, j, :], step, generator_scale)
                k += 1
                if k in mark_pos:
                    rec[:, mark_pos[k]] = z
        return rec

    out = np.concatenate(_streams.map_blocks(run, n_paths, check_threads(threads)))
    return out[:, 0] if record_times is None else out


# ---------------------------------------------------------------------------
# heat kernel

def _log_integrand(v, r, t):
    # p(t, r) = sqrt(2) e^{-t/4} (4 pi t)^{-3/2} int_r^inf s e^{-s^2/4t} (cosh s - cosh r)^{-1/2} ds
    # with s = r + v^2, cosh s - cosh r = 2 sinh((s + r)/2) sinh(v^2/2).
    v = np.asarray(v, dtype=float)
    s = r + v * v
    x = 0.5 * (s + r)
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = np.where(x > 0, x, 1.0)
        # log(2 sinh x) without cancellation for small x
        xc = np.minimum(xs, 1.0)
        log_2sinh = np.where(x < 1.0, np.log(2.0 * xc) + np.log(np.sinh(xc) / xc),
                             xs + np.log(-np.expm1(-2.0 * xs)))
        log_2sinh = np.where(x > 0, log_2sinh, -np.inf)
        h = 0.5 * v * v
        # log(2 v / sqrt(sinh(v^2/2))), finite limit log(2 sqrt 2) at v = 0
        small = h < 1e-8
        hs = np.where(small, 1.0, h)
        tail = np.where(small, 0.5 * math.log(8.0) - h * h / 12.0,
                        math.log(2.0) + 0.5 * np.log(2.0 * hs) - 0.5 * (hs + np.log(-np.expm1(-2.0 * hs)) - math.log(2.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(np.where(s > 0, s, 1.0)) - s * s / (4.0 * t) - 0.5 * log_2sinh + tail
    # s = 0 only when r = v = 0, where the integrand vanishes like sqrt(s)
    return np.where(s > 0, out, -np.inf)


def log_heat_kernel(t, r):
    """log p(t, r), the heat kernel of d/dt = Delta on the curvature -1 plane.

    Scalars go through adaptive quadrature. Arrays use a fixed 256-node
    Gauss-Legendre rule in v on [0, v_max(r)] (the integrand is analytic in
    v), falling back to the adaptive rule wherever the tail check fails.
    """
    t = check_scalar(t, "t", lower=0.0, lower_open=True)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ParameterError("r must be finite and nonnegative")
    if r.ndim == 0:
        return _log_heat_kernel_scalar(t, float(r))
    flat = r.ravel()
    out = np.empty(flat.size)
    for lo in range(0, flat.size, 4096):
        out[lo:lo + 4096] = _log_heat_kernel_fixed(t, flat[lo:lo + 4096])
    return out.reshape(r.shape)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(256)


def _log_heat_kernel_fixed(t, r):
    # v_max puts s = r + v^2 well past the Gaussian decay of exp(-s^2/4t)
    s_max = np.sqrt(np.maximum(r, 2.0 * t) ** 2 + 160.0 * t) + 5.0
    v_max = np.sqrt(s_max - r)
    v = 0.5 * (_GL_NODES[None, :] + 1.0) * v_max[:, None]
    lp = _log_integrand(v, r[:, None], t)
    ref = lp.max(axis=1)
    val = (np.exp(lp - ref[:, None]) * _GL_WEIGHTS[None, :]).sum(axis=1) * 0.5 * v_max
    out = (0.5 * math.log(2.0) - 0.25 * t - 1.5 * math.log(4.0 * math.pi * t)
           + ref + np.log(val))
    bad = ~((lp[:, -1] - ref < math.log(1e-16)) & np.isfinite(out))
    for i in np.flatnonzero(bad):
        out[i] = _log_heat_kernel_scalar(t, float(r[i]))
    return out


@lru_cache(maxsize=65536)
def _log_heat_kernel_scalar(t, r):
    # scale out the integrand maximum, then truncate where it drops below 1e-16 of it
    probe = np.linspace(0.0, math.sqrt(6.0 * t + 2.0 * math.sqrt(t) * 10.0 + 10.0), 257)
    lp = _log_integrand(probe, r, t)
    ref = float(np.max(lp))
    cut = math.log(1e-16)
    vmax = probe[-1]
    while _log_integrand(vmax, r, t) - ref > cut:
        vmax *= 1.5
        if vmax > 1e4:
            raise NumericalError("heat kernel integrand does not decay",
                                 {"t": t, "r": r, "vmax": vmax})
    f = lambda v: math.exp(float(_log_integrand(v, r, t)) - ref)
    val, err, info = integrate.quad(f, 0.0, vmax, limit=400, epsabs=0.0,
                                    epsrel=1e-11, full_output=True)[:3]
    if not (val > 0 and err <= 1e-8 * val):
        raise NumericalError("heat kernel quadrature did not converge",
                             {"t": t, "r": r, "value": val, "abserr": err,
                              "neval": info.get("neval")})
    return 0.5 * math.log(2.0) - 0.25 * t - 1.5 * math.log(4.0 * math.pi * t) + ref + math.log(val)


def heat_kernel(q, r=None):
    """p(t, r) for a :class:`HeatKernelQuery` (or ``heat_kernel(t, r)``)."""
    if r is not None:
        q = HeatKernelQuery(q, r)
    return math.exp(log_heat_kernel(q.t, q.r))


def radial_density(t, r):
    """Density of d(o, gamma(t)): 2 pi sinh(r) p(t, r)."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        log_sinh = r + np.log(-np.expm1(-2.0 * r)) - math.log(2.0)
    return 2.0 * math.pi * np.exp(log_sinh + log_heat_kernel(t, r))


def radial_cdf(t, r_max=None, n=4001):
    """(grid, cdf) of the radial law on [0, r_max] by cumulative quadrature."""
    if r_max is None:
        r_max = t + 12.0 * math.sqrt(2.0 * t) + 8.0
    grid = np.linspace(0.0, r_max, n)
    dens = radial_density(t, grid)
    cdf = integrate.cumulative_simpson(dens, x=grid, initial=0.0)
    return grid, cdf


def kernel_mass(t, r_max=None):
    """int p(t, .) dvol over the plane, by radial quadrature."""
    if r_max is None:
        r_max = t + 12.0 * math.sqrt(2.0 * t) + 8.0
    val, _ = integrate.quad(lambda r: float(radial_density(t, r)), 0.0, r_max,
                            limit=400, points=[t], epsabs=1e-13)
    return val


# ---------------------------------------------------------------------------
# estimators

def drift_estimate(n_paths, horizon, step=1e-2, seed=0, threads=1,
                   generator_scale=1.0, start=None):
    """Mean of d(start, gamma(t)) / t over ``n_paths`` paths; tends to 1."""
    t0 = time.perf_counter()
    n_paths = check_scalar(n_paths, "N", lower=100, integer=True)
    horizon = check_scalar(horizon, "horizon", lower=0.0)
    step = _check_step(step)
    seed = check_seed(seed)
    start = HPoint(1j) if start is None else start
    params = {"generator_scale": generator_scale, "start": str(start.coord),
              "model": start.model}
    if horizon == 0:
        return EstimatorReport("drift", 0.0, 0.0, n_paths, 0.0, seed, step,
                               time.perf_counter() - t0, params)
    z0 = start.to_model(HALF_PLANE).coord
    ends = simulate_endpoints(start, horizon, step, n_paths, seed, threads, generator_scale)
    vals = half_plane_distance(z0, ends) / horizon
    mean, se = _streams.mean_and_se(vals)
    return EstimatorReport("drift", mean, se, n_paths, horizon, seed, step,
                           time.perf_counter() - t0, params)


def log_phi(w):
    """log of (1 - |w|^2) / |1 - w|^2 on the disc (Im of the Cayley image)."""
    w = np.asarray(w, dtype=complex)
    return np.log1p(-np.abs(w) ** 2) - 2.0 * np.log(np.abs(1.0 - w))


def dynkin_check(t, n_paths, seed=0, step=1e-2, threads=1):
    """Mean of log phi(gamma(t)) / t for paths from the disc origin; equals -1."""
    t0 = time.perf_counter()
    t = check_scalar(t, "t", lower=0.5, upper=20.0)
    n_paths = check_scalar(n_paths, "N", lower=2, integer=True)
    seed = check_seed(seed)
    start = HPoint(0j, DISC)
    ends = simulate_endpoints(start, t, step, n_paths, seed, threads)
    w = half_plane_to_disc(ends)
    vals = log_phi(w) / t
    mean, se = _streams.mean_and_se(vals)
    return EstimatorReport("dynkin", mean, se, n_paths, t, seed, step,
                           time.perf_counter() - t0, {"start_model": DISC})


def circle_mean_logphi(r, n=4096):
    """Average of log phi over the circle |w| = r; equals log(1 - r^2)."""
    r = check_scalar(r, "r", lower=0.0, upper=1.0, upper_open=True)
    theta = 2.0 * math.pi * np.arange(n) / n
    return math.fsum(log_phi(r * np.exp(1j * theta))) / n


def endpoint_radial_ks(t, n_paths, step, seed=0, threads=1):
    """Kolmogorov-Smirnov distance between simulated and kernel radial laws."""
    ends = simulate_endpoints(HPoint(1j), t, step, n_paths, seed, threads)
    r = np.sort(half_plane_distance(1j, ends))
    grid, cdf = radial_cdf(t, r_max=max(float(r[-1]) + 1.0, t + 12.0 * math.sqrt(2 * t) + 8.0))
    cdf = cdf / cdf[-1]
    model = np.interp(r, grid, cdf)
    n = len(r)
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    return float(max(np.max(ecdf_hi - model), np.max(model - ecdf_lo)))
