"""The acceptance checks, shared by ``levilab verify`` and the test suite.

Each check returns a :class:`CriterionResult` row. Estimates used by more
than one check (the Fuchsian exponent and the entropy) are computed once
per suite run and reused.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .brownian import drift_estimate, dynkin_check, endpoint_radial_ks, kernel_mass
from .dimension import box_counting, sample_limit_set, verify_dimension_inequality
from .estimators import kaimanovich_entropy, lyapunov_exponent
from .hyperbolic import BoundaryPoint, HPoint
from .suspension import flow_jacobian_check, lift_geodesic_trajectory, preset
from . import surface as sf


@dataclass
class CriterionResult:
    number: str
    name: str
    expected: str
    observed: str
    tolerance: str
    passed: bool
    wall_time: float = 0.0
    values: dict = field(default_factory=dict)

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] criterion {self.number} {self.name}: observed {self.observed}; "
                f"expected {self.expected} ({self.tolerance})")


#: Default tolerance per criterion: half-widths for 1, 4, 5 and 6, standard
#: errors for 2, kernel mass for 3 (with a separate KS bound), relative error
#: for 7 and maximal defect for 8. Criteria 9 and 10 are exact.
TOLERANCES = {"1": 0.05, "2": 3.0, "3": 1e-3, "3-ks": 0.05, "4": 0.05, "5": 0.05,
              "6": 0.1, "7": 0.01, "8": 1e-6}


class Suite:
    """Runs the checks with one seed and thread count, caching shared estimates.

    ``tolerances`` overrides entries of :data:`TOLERANCES`.
    """

    def __init__(self, seed=0, threads=1, tolerances=None):
        self.seed = seed
        self.threads = threads
        self.tol = dict(TOLERANCES)
        for k, v in (tolerances or {}).items():
            if str(k) not in TOLERANCES:
                raise ValueError(f"no adjustable tolerance for criterion {k!r}")
            self.tol[str(k)] = float(v)
        self._cache = {}

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    # shared estimates at the acceptance sizes
    def fuchsian_lyapunov(self):
        return self._cached("lyap-fuchsian", lambda: lyapunov_exponent(
            "fuchsian-boundary", 50.0, 2048, 1e-2, self.seed, self.threads))

    def schottky_lyapunov(self):
        return self._cached("lyap-schottky", lambda: lyapunov_exponent(
            "schottky(4, 1)", 50.0, 2048, 1e-2, self.seed, self.threads))

    def entropy(self):
        return self._cached("entropy", lambda: kaimanovich_entropy(
            "fuchsian-boundary", 50.0, 2048, 1e-2, self.seed, self.threads))

    def entropy_pointwise(self):
        return self._cached("entropy-pointwise", lambda: kaimanovich_entropy(
            "fuchsian-boundary", 50.0, 2048, 1e-2, self.seed, self.threads, method="pointwise"))

    def drift(self):
        return self._cached("drift", lambda: drift_estimate(
            4096, 50.0, 1e-2, self.seed, self.threads))

    def dynkin(self, t):
        return self._cached(("dynkin", t), lambda: dynkin_check(
            t, 10_000, self.seed, 1e-2, self.threads))

    def ks(self):
        return self._cached("ks", lambda: endpoint_radial_ks(
            1.0, 100_000, 1e-2, self.seed, self.threads))

    # -- checks ------------------------------------------------------------
    def c1(self):
        t0 = time.perf_counter()
        r = self.drift()
        elapsed = time.perf_counter() - t0
        w = self.tol["1"]
        ok = abs(r.value - 1.0) <= w and r.wall_time < 120.0
        return CriterionResult("1", "drift", "1", f"{r.value:.4f} +- {r.std_error:.4f} "
                               f"in {r.wall_time:.1f}s", f"+-{w:g}, < 120 s", ok, elapsed,
                               {"drift": r.value})

    def c2(self):
        t0 = time.perf_counter()
        vals, ok, obs = {}, True, []
        for t in (1.0, 5.0, 10.0):
            r = self.dynkin(t)
            vals[f"t={t:g}"] = r.value
            good = abs(r.value + 1.0) <= self.tol["2"] * r.std_error
            ok = ok and good
            obs.append(f"t={t:g}: {r.value:.4f} +- {r.std_error:.4f}")
        return CriterionResult("2", "dynkin", "-1", "; ".join(obs), f"within {self.tol['2']:g} SE", ok,
                               time.perf_counter() - t0, vals)

    def c3(self):
        t0 = time.perf_counter()
        masses = {t: kernel_mass(t) for t in (0.5, 1.0, 2.0)}
        ks = self.ks()
        ok = (all(abs(m - 1.0) <= self.tol["3"] for m in masses.values())
              and ks < self.tol["3-ks"])
        obs = ", ".join(f"mass(t={t:g})={m:.8f}" for t, m in masses.items()) + f", KS={ks:.4f}"
        vals = {f"mass_{t:g}": m for t, m in masses.items()}
        vals["ks"] = ks
        return CriterionResult("3", "heat kernel", "mass 1, KS small", obs,
                               f"|mass-1| <= {self.tol['3']:g}, KS < {self.tol['3-ks']:g}", ok, time.perf_counter() - t0, vals)

    def c4(self):
        t0 = time.perf_counter()
        r = self.entropy()
        p = self.entropy_pointwise()
        ok = abs(r.value - 1.0) <= self.tol["4"]
        obs = (f"{r.value:.4f} +- {r.std_error:.4f} (t/2-increment form; "
               f"pointwise form {p.value:.4f} +- {p.std_error:.4f})")
        return CriterionResult("4", "entropy", "1", obs, f"+-{self.tol['4']:g}", ok,
                               time.perf_counter() - t0,
                               {"entropy": r.value, "entropy_pointwise": p.value})

    def c5(self):
        t0 = time.perf_counter()
        r = self.fuchsian_lyapunov()
        ok = abs(r.value + 1.0) <= self.tol["5"]
        return CriterionResult("5", "lyapunov (fuchsian boundary)", "-1",
                               f"{r.value:.4f} +- {r.std_error:.4f}", f"+-{self.tol['5']:g}", ok,
                               time.perf_counter() - t0, {"lyapunov": r.value})

    def c6_parts(self):
        """The three parts: Fuchsian near-equality, Schottky inequality, Moran bracket."""
        h = self.entropy()
        fuchs = verify_dimension_inequality("fuchsian-boundary", seed=self.seed,
                                            lyapunov=self.fuchsian_lyapunov(), entropy=h,
                                            with_ifs=False)
        schottky = verify_dimension_inequality("schottky(4, 1)", seed=self.seed,
                                               lyapunov=self.schottky_lyapunov(), entropy=h)
        lo, hi = schottky.moran_bracket
        bracket_ok = lo <= schottky.dimension <= hi
        return fuchs, schottky, (lo, hi, bracket_ok)

    def c6(self):
        t0 = time.perf_counter()
        fuchs, sch, (lo, hi, bracket_ok) = self.c6_parts()
        w = self.tol["6"]
        near = abs(fuchs.margin) < w and abs(fuchs.dimension - 1.0) < w
        strict = sch.margin > -w
        ok = near and strict and bracket_ok
        obs = (f"fuchsian d={fuchs.dimension:.3f} h/|l|={fuchs.ratio:.3f}; "
               f"schottky d={sch.dimension:.3f} h/|l|={sch.ratio:.3f} "
               f"(h={sch.entropy:.3f} {sch.entropy_kind}, l={sch.exponent:.3f}); "
               f"moran bracket [{lo:.3f}, {hi:.3f}]")
        return CriterionResult("6", "dimension inequality",
                               "fuchsian near-equality; schottky d >= h/|l| - 0.1; "
                               "bracket contains box dimension", obs, f"{w:g}", ok,
                               time.perf_counter() - t0,
                               {"fuchsian_dimension": fuchs.dimension, "fuchsian_ratio": fuchs.ratio,
                                "schottky_dimension": sch.dimension, "schottky_ratio": sch.ratio,
                                "moran_lower": lo, "moran_upper": hi,
                                "fuchsian_ok": near, "schottky_ok": strict, "bracket_ok": bracket_ok})

    def c7(self):
        t0 = time.perf_counter()
        reps = [flow_jacobian_check(t, seed=self.seed) for t in (0.5, 1.0, 2.0)]
        ok = all(r.rel_error <= self.tol["7"] for r in reps)
        obs = ", ".join(f"t={r.t:g}: {r.ratio:.5f} vs {r.expected:.5f}" for r in reps)
        return CriterionResult("7", "jacobian scaling", "e^t", obs, f"{self.tol['7']:g} relative", ok,
                               time.perf_counter() - t0, {f"t={r.t:g}": r.ratio for r in reps})

    def c8(self, n_curves=8):
        t0 = time.perf_counter()
        f = preset("fuchsian-boundary")
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed)))
        worst = 0.0
        for _ in range(n_curves):
            z = complex(rng.normal(), math.exp(0.5 * rng.normal()))
            xi = float(3.0 * rng.normal())
            lift = lift_geodesic_trajectory(f, HPoint(z), BoundaryPoint(xi), 20.0)
            worst = max(worst, lift.max_defect)
        return CriterionResult("8", "quasi-geodesic exactness", "0", f"max defect {worst:.2e}",
                               f"< {self.tol['8']:g}", worst < self.tol["8"], time.perf_counter() - t0, {"defect": worst})

    def c9(self):
        t0 = time.perf_counter()
        checks = {}
        ctx2 = sf.RuledSurfaceContext(2)
        checks["K = -2 sigma"] = sf.canonical_class(ctx2) == sf.DivisorClass(-2, 0)
        amp, ident, hurwitz = True, True, True
        for g in range(2, 51):
            ctx = sf.RuledSurfaceContext(g)
            E = sf.construction_class_E(ctx)
            K = sf.canonical_class(ctx)
            amp = amp and sf.is_ample(E + K, ctx)
            w = sf.reider_very_ample_witness(E, ctx)
            ident = ident and (4 * w.L + K == 2 * E)
            inv = sf.double_cover_invariants(ctx)
            hurwitz = hurwitz and inv.chi_cover == 10 * ctx.chi - 4
        checks["E + K ample, g <= 50"] = amp
        checks["4L + K = 2E"] = ident
        checks["chi' = 10 chi - 4"] = hurwitz
        r2 = sf.double_cover_invariants(ctx2).ratio
        rbig = sf.double_cover_invariants(sf.RuledSurfaceContext(10 ** 6)).ratio
        checks["ratio(2) = 1/6"] = r2 == Fraction(1, 6)
        checks["|ratio(1e6) - 1/5| < 1e-6"] = abs(rbig - Fraction(1, 5)) < Fraction(1, 10 ** 6)
        checks["p2_lyapunov(2) = -4"] = sf.p2_lyapunov(2) == -4
        checks["p2_lyapunov(5) = -7/4"] = sf.p2_lyapunov(5) == Fraction(-7, 4)
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        obs = "all exact identities hold" if ok else "failed: " + ", ".join(failed)
        return CriterionResult("9", "surface calculator", "exact identities", obs, "exact", ok,
                               time.perf_counter() - t0, {k: bool(v) for k, v in checks.items()})

    def c10(self, other_threads=3):
        """Rerun every Monte Carlo check with another thread count and compare bytes."""
        t0 = time.perf_counter()
        other = Suite(self.seed, other_threads)
        pairs = [
            ("drift", self.drift().value, other.drift().value),
            ("lyapunov", self.fuchsian_lyapunov().value, other.fuchsian_lyapunov().value),
            ("lyapunov schottky", self.schottky_lyapunov().value, other.schottky_lyapunov().value),
            ("entropy", self.entropy().value, other.entropy().value),
            ("entropy pointwise", self.entropy_pointwise().value, other.entropy_pointwise().value),
            ("ks", self.ks(), other.ks()),
        ]
        for t in (1.0, 5.0, 10.0):
            pairs.append((f"dynkin t={t:g}", self.dynkin(t).value, other.dynkin(t).value))
        for t in (0.5, 1.0, 2.0):
            pairs.append((f"jacobian t={t:g}", flow_jacobian_check(t, seed=self.seed).ratio,
                          flow_jacobian_check(t, seed=self.seed).ratio))
        s1 = sample_limit_set(preset("schottky(4, 1)").rep, 10, seed=self.seed)
        d1 = box_counting(s1).box_dimension
        pairs.append(("schottky box dimension", d1, box_counting(s1).box_dimension))
        bad = [name for name, a, b in pairs if repr(float(a)) != repr(float(b))]
        ok = not bad
        obs = (f"{len(pairs)} quantities identical for threads {self.threads} and {other_threads}"
               if ok else "differs: " + ", ".join(bad))
        return CriterionResult("10", "reproducibility", "byte-identical", obs, "exact", ok,
                               time.perf_counter() - t0,
                               {name: (repr(float(a)), repr(float(b))) for name, a, b in pairs})


CRITERIA = ("1", "2", "3", "4", "5", "6", "7", "8", "9", "10")


def verify_suite(seed=0, threads=1, only=None, other_threads=3, tolerances=None):
    """Run the selected acceptance checks; returns the result rows."""
    suite = Suite(seed, threads, tolerances)
    chosen = CRITERIA if only is None else [c for c in CRITERIA if c in set(map(str, only))]
    rows = []
    for c in chosen:
        fn = getattr(suite, f"c{c}")
        rows.append(fn(other_threads) if c == "10" else fn())
    return rows
