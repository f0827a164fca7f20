"""Command-line front end: ``levilab <command> [options]``.

Options can also come from a ``key = value`` config file (``--config``);
flags given on the command line win. Exit status: 0 on success, 2 for
invalid input, 3 for numerical failure, 1 when a verification ran but
did not pass.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from . import __version__, _streams
from ._validation import check_scalar
from .exceptions import (
    DependencyError, EmptySystemError, NoWitnessError, NumericalError, ParameterError,
    ReductionError,
)
from .reports import CSV_COLUMNS, EstimatorReport

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3

COMMANDS = ("drift", "dynkin", "heat-kernel", "exponent", "entropy", "harmonic-measure",
            "limit-set", "dimension", "verify-inequality", "jacobian", "surface", "verify")

# built-in defaults per command; the config file and flags override them
DEFAULTS = {
    "common": {"seed": 0, "step": 1e-2, "format": "csv", "output": None,
               "threads": None, "preset": "fuchsian-boundary"},
    "drift": {"N": 4096, "horizon": 50.0},
    "dynkin": {"N": 10_000, "t": [1.0, 5.0, 10.0]},
    "heat-kernel": {"t": [0.5, 1.0, 2.0], "r": [1.0]},
    "exponent": {"N": 2048, "horizon": 50.0, "metric": "spherical"},
    "entropy": {"N": 2048, "horizon": 50.0, "method": "increment", "generator_scale": 1.0,
                "assume_simply_connected": False},
    "harmonic-measure": {"N": 10_000, "horizon": 20.0, "bins": 64},
    "limit-set": {"depth": 10, "max_points": 200_000},
    "dimension": {"depth": 10, "max_points": 200_000, "radii": None},
    "verify-inequality": {"N": 2048, "horizon": 50.0, "depth": 10},
    "jacobian": {"t": [0.5, 1.0, 2.0], "N": 200_000},
    "surface": {"genus": 2, "format": "json"},
    "verify": {"only": None, "other_threads": 3, "tolerance": None},
}


class CLIError(Exception):
    def __init__(self, message, code=EXIT_INVALID):
        super().__init__(message)
        self.code = code


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).replace(",", " ").split()]


def _bool(text):
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _tolerances(text):
    if isinstance(text, dict):
        return text
    out = {}
    for item in str(text).replace(",", " ").split():
        k, _, v = item.partition("=")
        out[k.strip()] = float(v)
    return out


CONVERTERS = {
    "seed": int, "N": int, "bins": int, "depth": int, "max_points": int, "genus": int,
    "threads": int, "other_threads": int, "horizon": float, "step": float,
    "generator_scale": float, "t": _floats, "r": _floats, "radii": _floats,
    "only": lambda s: [x for x in str(s).replace(",", " ").split()] if not isinstance(s, list) else s,
    "assume_simply_connected": _bool, "tolerance": _tolerances,
}


def load_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CLIError(f"cannot read config file {path!r}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CLIError(f"{path}:{n}: expected key = value")
        k, v = (x.strip() for x in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="levilab", description=__doc__.splitlines()[0],
                                argument_default=argparse.SUPPRESS)
    p.add_argument("--version", action="version", version=f"levilab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, argument_default=argparse.SUPPRESS, **k)

    def common(sp):
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, help=f"worker threads (default ${_streams.THREADS_ENV} or 1)")
        sp.add_argument("--output", "-o", help="result file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json", "text"))
        return sp

    def mc(sp):
        sp.add_argument("--N", "-N", dest="N", type=int, help="number of paths")
        sp.add_argument("--horizon", type=float)
        sp.add_argument("--step", type=float)

    sp = common(sub.add_parser("drift", help="mean d(o, gamma_t)/t"))
    mc(sp)
    sp = common(sub.add_parser("dynkin", help="E log phi(gamma_t)/t from the disc origin"))
    sp.add_argument("--N", "-N", dest="N", type=int)
    sp.add_argument("--t", type=_floats, help="times, comma separated")
    sp.add_argument("--step", type=float)
    sp = common(sub.add_parser("heat-kernel", help="kernel values and normalization"))
    sp.add_argument("--t", type=_floats)
    sp.add_argument("--r", type=_floats)
    for name, hlp in (("exponent", "Lyapunov exponent of a preset"),
                      ("entropy", "entropy of the leafwise heat kernel"),
                      ("harmonic-measure", "stationary fiber histogram"),
                      ("verify-inequality", "dim >= h/|lambda| check")):
        sp = common(sub.add_parser(name, help=hlp))
        mc(sp)
        sp.add_argument("--preset")
        if name == "exponent":
            sp.add_argument("--metric", choices=("spherical", "affine"))
        if name == "entropy":
            sp.add_argument("--method", choices=("increment", "pointwise"))
            sp.add_argument("--generator-scale", dest="generator_scale", type=float)
            sp.add_argument("--assume-simply-connected", dest="assume_simply_connected",
                            action="store_true")
        if name == "harmonic-measure":
            sp.add_argument("--bins", type=int)
        if name == "verify-inequality":
            sp.add_argument("--depth", type=int)
    for name, hlp in (("limit-set", "orbit sample of the limit set (re, im)"),
                      ("dimension", "box-counting and Moran dimension")):
        sp = common(sub.add_parser(name, help=hlp))
        sp.add_argument("--preset")
        sp.add_argument("--depth", type=int)
        sp.add_argument("--max-points", dest="max_points", type=int)
        if name == "dimension":
            sp.add_argument("--radii", type=_floats)
    sp = common(sub.add_parser("jacobian", help="area scaling of the vertical flow"))
    sp.add_argument("--t", type=_floats)
    sp.add_argument("--N", "-N", dest="N", type=int)
    sp = common(sub.add_parser("surface", help="exact construction report"))
    sp.add_argument("--genus", type=int)
    sp = common(sub.add_parser("verify", help="run the acceptance checks"))
    sp.add_argument("--only", type=lambda s: s.replace(",", " ").split(),
                    help="criteria to run, e.g. 1,7,9")
    sp.add_argument("--other-threads", dest="other_threads", type=int)
    sp.add_argument("--tolerance", type=_tolerances, metavar="N=VALUE[,N=VALUE]",
                    help="override a criterion tolerance, e.g. 1=0.001")
    return p


def resolve_config(argv):
    """Merge built-in defaults, the config file and explicit flags."""
    args = vars(build_parser().parse_args(argv))
    cmd = args.pop("command")
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS[cmd])
    path = args.pop("config", None)
    if path:
        for k, v in load_config_file(path).items():
            if k == "command":
                continue
            try:
                cfg[k] = CONVERTERS.get(k, str)(v)
            except ValueError:
                raise CLIError(f"config file: bad value for {k!r}: {v!r}") from None
    cfg.update(args)
    if cfg.get("threads") is None:
        cfg["threads"] = _streams.default_threads()
    cfg["command"] = cmd
    return cfg


def validate(cfg):
    """Check numeric fields against the preconditions of the target operation."""
    cmd = cfg["command"]
    check_scalar(cfg["seed"], "seed", lower=0, integer=True)
    check_scalar(cfg["threads"], "threads", lower=1, integer=True)
    check_scalar(cfg["step"], "step", lower=0.0, upper=0.1, lower_open=True)
    if cfg["format"] not in ("csv", "json", "text"):
        raise ParameterError(f"unknown format {cfg['format']!r}")
    if cmd in ("drift",):
        check_scalar(cfg["N"], "N", lower=100, integer=True)
        check_scalar(cfg["horizon"], "horizon", lower=0.0)
    if cmd == "dynkin":
        check_scalar(cfg["N"], "N", lower=2, integer=True)
        for t in cfg["t"]:
            check_scalar(t, "t", lower=0.5, upper=20.0)
    if cmd == "heat-kernel":
        for t in cfg["t"]:
            check_scalar(t, "t", lower=0.0, lower_open=True)
        for r in cfg["r"]:
            check_scalar(r, "r", lower=0.0)
    if cmd in ("exponent", "verify-inequality"):
        check_scalar(cfg["N"], "N", lower=64, integer=True)
        check_scalar(cfg["horizon"], "horizon", lower=10.0)
    if cmd == "entropy":
        check_scalar(cfg["N"], "N", lower=64, integer=True)
        check_scalar(cfg["horizon"], "horizon", lower=0.0, lower_open=True)
        check_scalar(cfg["generator_scale"], "generator_scale", lower=0.0, lower_open=True)
    if cmd == "harmonic-measure":
        check_scalar(cfg["N"], "N", lower=1, integer=True)
        check_scalar(cfg["bins"], "bins", lower=16, integer=True)
        check_scalar(cfg["horizon"], "horizon", lower=0.0)
    if cmd in ("limit-set", "dimension", "verify-inequality"):
        check_scalar(cfg["depth"], "depth", lower=0, upper=14, integer=True)
    if cmd == "jacobian":
        check_scalar(cfg["N"], "N", lower=2, integer=True)
        for t in cfg["t"]:
            check_scalar(t, "t", lower=0.0, upper=5.0)
    if cmd == "surface":
        check_scalar(cfg["genus"], "genus", lower=2, integer=True)
    if cmd in ("exponent", "entropy", "harmonic-measure", "limit-set", "dimension",
               "verify-inequality"):
        from .suspension import preset
        preset(cfg["preset"])
    out = cfg.get("output")
    if out:
        parent = os.path.dirname(os.path.abspath(out))
        if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
            raise ParameterError(f"output path {out!r} is not writable")
    return cfg


# -- command bodies: each returns (rows-or-dict, exit status) ---------------

def _report_rows(reports):
    return [r.csv_row() | {"_report": r} for r in reports]


def _plain_row(quantity, value, cfg, std_error=0.0, n="", horizon=""):
    return {"quantity": quantity, "value": repr(float(value)), "std_error": repr(float(std_error)),
            "N": str(n), "horizon": "" if horizon == "" else repr(float(horizon)),
            "step": "", "seed": str(cfg["seed"])}


def cmd_drift(cfg):
    from .brownian import drift_estimate
    r = drift_estimate(cfg["N"], cfg["horizon"], cfg["step"], cfg["seed"], cfg["threads"])
    return _report_rows([r]), EXIT_OK


def cmd_dynkin(cfg):
    from .brownian import dynkin_check
    reps = [dynkin_check(t, cfg["N"], cfg["seed"], cfg["step"], cfg["threads"]) for t in cfg["t"]]
    return _report_rows(reps), EXIT_OK


def cmd_heat_kernel(cfg):
    from .brownian import log_heat_kernel, kernel_mass
    rows = []
    for t in cfg["t"]:
        for r in cfg["r"]:
            rows.append(_plain_row(f"p(t={t:g},r={r:g})", math.exp(log_heat_kernel(t, r)), cfg,
                                   horizon=t))
        rows.append(_plain_row(f"mass(t={t:g})", kernel_mass(t), cfg, horizon=t))
    return rows, EXIT_OK


def cmd_exponent(cfg):
    from .estimators import lyapunov_exponent
    r = lyapunov_exponent(cfg["preset"], cfg["horizon"], cfg["N"], cfg["step"], cfg["seed"],
                          cfg["threads"], metric=cfg["metric"])
    return _report_rows([r]), EXIT_OK


def cmd_entropy(cfg):
    from .estimators import kaimanovich_entropy
    r = kaimanovich_entropy(cfg["preset"], cfg["horizon"], cfg["N"], cfg["step"], cfg["seed"],
                            cfg["threads"], method=cfg["method"],
                            generator_scale=cfg["generator_scale"],
                            assume_simply_connected=cfg["assume_simply_connected"] or None)
    return _report_rows([r]), EXIT_OK


def cmd_harmonic_measure(cfg):
    from .estimators import harmonic_measure
    h = harmonic_measure(cfg["preset"], cfg["horizon"], cfg["N"], cfg["bins"], cfg["seed"],
                         cfg["step"], cfg["threads"])
    stat, p = h.chi2_uniform()
    return {"preset": cfg["preset"], "fiber_type": h.fiber_type, "bins": h.bins,
            "total": h.total, "counts": h.counts.tolist(),
            "edges": [e.tolist() for e in h.edges], "empty_bins": h.empty_bins,
            "chi2_uniform": {"statistic": stat, "p_value": p}}, EXIT_OK


def cmd_limit_set(cfg):
    from .dimension import sample_limit_set
    from .suspension import preset
    f = preset(cfg["preset"])
    s = sample_limit_set(f.rep, cfg["depth"], max_points=cfg["max_points"], seed=cfg["seed"],
                         fiber_type=f.fiber_type)
    return {"_table": [("re", "im")] + [(repr(float(z.real)), repr(float(z.imag)))
                                        for z in s.points],
            "preset": cfg["preset"], "depth": s.word_length, "n_points": len(s),
            "exhaustive": s.exhaustive,
            "points": [[float(z.real), float(z.imag)] for z in s.points]}, EXIT_OK


def cmd_dimension(cfg):
    from .dimension import (box_counting, build_holonomy_ifs, moran_bracket, moran_dimension,
                            sample_limit_set)
    from .suspension import preset
    f = preset(cfg["preset"])
    s = sample_limit_set(f.rep, cfg["depth"], max_points=cfg["max_points"], seed=cfg["seed"],
                         fiber_type=f.fiber_type)
    d = box_counting(s, cfg["radii"])
    out = {"preset": cfg["preset"], "n_points": len(s), "box_dimension": d.box_dimension,
           "fit_r2": d.fit_r2, "radii": d.radii_used.tolist(), "counts": d.counts.tolist(),
           "degenerate": d.degenerate}
    try:
        ifs = build_holonomy_ifs(f)
        out.update(moran_dimension=moran_dimension(ifs), moran_bracket=list(moran_bracket(ifs)),
                   ifs_words=[list(w) for w in ifs.words], kappa=ifs.kappa)
    except (EmptySystemError, ParameterError) as exc:
        out["moran_dimension"] = None
        out["ifs_note"] = str(exc)
    return out, EXIT_OK


def cmd_verify_inequality(cfg):
    from .dimension import verify_dimension_inequality
    r = verify_dimension_inequality(cfg["preset"], cfg["horizon"], cfg["N"], cfg["step"],
                                    cfg["seed"], cfg["threads"], cfg["depth"])
    out = {"preset": r.preset, "dimension": r.dimension, "entropy": r.entropy,
           "entropy_kind": r.entropy_kind, "exponent": r.exponent, "ratio": r.ratio,
           "margin": r.margin, "tolerance": r.tolerance, "passed": r.passed,
           "near_equality": r.near_equality, "moran": r.moran,
           "moran_bracket": None if r.moran_bracket is None else list(r.moran_bracket),
           "notes": list(r.notes)}
    return out, (EXIT_OK if r.passed else EXIT_FAILED)


def cmd_jacobian(cfg):
    from .suspension import flow_jacobian_check
    rows = []
    for t in cfg["t"]:
        r = flow_jacobian_check(t, n_samples=cfg["N"], seed=cfg["seed"])
        rows.append(_plain_row(f"area_ratio(t={t:g})", r.ratio, cfg, r.std_error, r.n_samples, t))
    return rows, EXIT_OK


def cmd_surface(cfg):
    from .surface import construction_report, p2_lyapunov, ratio_table
    rep = construction_report(cfg["genus"])
    g = cfg["genus"]
    rep["ratio_table"] = {str(k): str(v) for k, v in ratio_table(range(2, max(g, 12) + 1))}
    rep["p2_lyapunov"] = {str(d): str(p2_lyapunov(d)) for d in range(2, 8)}
    return rep, EXIT_OK


def cmd_verify(cfg):
    from .acceptance import verify_suite
    rows = verify_suite(cfg["seed"], cfg["threads"], cfg["only"], cfg["other_threads"],
                        cfg["tolerance"])
    table = [{"criterion": r.number, "name": r.name, "expected": r.expected,
              "observed": r.observed, "tolerance": r.tolerance,
              "result": "pass" if r.passed else "fail"} for r in rows]
    status = EXIT_OK if all(r.passed for r in rows) else EXIT_FAILED
    return {"_verify": table, "criteria": table}, status


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


# -- output ----------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items() if not k.startswith("_")}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def render(result, cfg):
    fmt = cfg["format"]
    buf = io.StringIO()
    if isinstance(result, list):
        if fmt == "json":
            recs = []
            for row in result:
                r = row.get("_report")
                recs.append(_jsonable(r.to_dict()) if isinstance(r, EstimatorReport)
                            else {k: row[k] for k in CSV_COLUMNS})
            json.dump(recs, buf, indent=2)
            buf.write("\n")
        else:
            w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore",
                               lineterminator="\n")
            w.writeheader()
            for row in result:
                w.writerow(row)
        return buf.getvalue()
    if "_verify" in result and fmt != "json":
        table = result["_verify"]
        cols = ("criterion", "name", "result", "observed", "expected", "tolerance")
        widths = {c: max([len(c)] + [len(str(r[c])) for r in table]) for c in cols[:-1]}
        buf.write("  ".join(c.ljust(widths.get(c, 0)) for c in cols) + "\n")
        for r in table:
            buf.write("  ".join(str(r[c]).ljust(widths.get(c, 0)) for c in cols) + "\n")
        return buf.getvalue()
    if "_table" in result and fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerows(result["_table"])
        return buf.getvalue()
    if fmt == "text":
        data = _jsonable(result)
        width = max((len(k) for k in data), default=0)
        for k, v in data.items():
            buf.write(f"{k.ljust(width)}  {json.dumps(v) if isinstance(v, (dict, list)) else v}\n")
        return buf.getvalue()
    json.dump(_jsonable(result), buf, indent=2, sort_keys=False)
    buf.write("\n")
    return buf.getvalue()


def manifest(cfg, wall_time, status):
    n = cfg.get("N")
    blocks = []
    if isinstance(n, int) and cfg["command"] not in ("jacobian",):
        blocks = [{"block": k, "paths": [int(b[0]), int(b[-1]) + 1]}
                  for k, b in enumerate(_streams.blocks(n))]
    return {
        "config": _jsonable({k: v for k, v in cfg.items()}),
        "tool": "levilab",
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "wall_time": wall_time,
        "exit_status": status,
        "streams": {"scheme": "Philox keyed by SeedSequence(seed, spawn_key=(path_index,))",
                    "seed": cfg["seed"], "block_size": _streams.BLOCK_SIZE,
                    "threads": cfg["threads"], "blocks": blocks},
    }


def run(cfg):
    """Validate and execute one configuration; returns the exit status."""
    t0 = time.perf_counter()
    try:
        validate(cfg)
        result, status = HANDLERS[cfg["command"]](cfg)
    except (ParameterError, NoWitnessError, CLIError, ValueError) as exc:
        print(f"levilab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, ReductionError, DependencyError, EmptySystemError,
            FloatingPointError, ArithmeticError) as exc:
        print(f"levilab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = render(result, cfg)
    out = cfg.get("output")
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
            with open(out + ".manifest.json", "w") as fh:
                json.dump(manifest(cfg, time.perf_counter() - t0, status), fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            print(f"levilab: cannot write output: {exc}", file=sys.stderr)
            return EXIT_INVALID
    else:
        sys.stdout.write(text)
    return status


def main(argv=None):
    try:
        cfg = resolve_config(argv)
    except CLIError as exc:
        print(f"levilab: {exc}", file=sys.stderr)
        return exc.code
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
