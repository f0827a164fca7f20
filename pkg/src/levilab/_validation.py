"""Small argument checks shared by the public entry points."""

import math
import numbers

from .exceptions import ParameterError


def check_scalar(x, name, *, lower=None, upper=None, lower_open=False,
                 upper_open=False, integer=False):
    """Validate a real (or integer) scalar against an interval.

    Returns the value converted to ``float`` (or ``int``).
    """
    if integer:
        if isinstance(x, bool) or not isinstance(x, numbers.Integral):
            raise ParameterError(f"{name} must be an integer, got {x!r}")
        x = int(x)
    else:
        if isinstance(x, bool) or not isinstance(x, numbers.Real):
            raise ParameterError(f"{name} must be a real number, got {x!r}")
        x = float(x)
        if not math.isfinite(x):
            raise ParameterError(f"{name} must be finite, got {x!r}")
    if lower is not None and (x < lower or (lower_open and x == lower)):
        op = ">" if lower_open else ">="
        raise ParameterError(f"{name} must be {op} {lower}, got {x}")
    if upper is not None and (x > upper or (upper_open and x == upper)):
        op = "<" if upper_open else "<="
        raise ParameterError(f"{name} must be {op} {upper}, got {x}")
    return x


def check_seed(seed):
    return check_scalar(seed, "seed", lower=0, integer=True)


def check_threads(threads):
    if threads is None:
        return 1
    return check_scalar(threads, "threads", lower=1, integer=True)
