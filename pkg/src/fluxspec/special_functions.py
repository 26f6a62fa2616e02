"""Bessel functions of the first kind of real nonnegative order and their first roots.

Values come from ``scipy.special.jv``; this module adds argument validation, the
derivative recurrences and bracketed root finding for the first positive zeros
of ``J_s`` and ``J_s'``.
"""

from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np
from numpy.typing import NDArray
from scipy import optimize, special

from .errors import BracketError

logger = logging.getLogger(__name__)

MAX_ORDER = 50.0
SCAN_STEP = 0.25
ROOT_XTOL = 1e-12


def _check_order(s: float) -> float:
    s = float(s)
    if not math.isfinite(s) or s < 0:
        raise ValueError(f"Bessel order must be finite and nonnegative, got {s!r}")
    if s >= MAX_ORDER:
        raise ValueError(f"Bessel order {s!r} is outside the supported range [0, 50)")
    return s


def _check_argument(z: float) -> float:
    z = float(z)
    if not math.isfinite(z) or z < 0:
        raise ValueError(f"Bessel argument must be finite and nonnegative, got {z!r}")
    return z


def bessel_j(s: float, z: float) -> float:
    """Return ``J_s(z)`` for ``s >= 0`` and ``z >= 0``.

    Raises:
        ValueError: If either argument is negative or not finite.
    """

    s = _check_order(s)
    z = _check_argument(z)
    return float(special.jv(s, z))


def bessel_j_values(s: float, z: NDArray[np.float64]) -> NDArray[np.float64]:
    """Vectorized ``J_s`` over an array of nonnegative arguments."""

    s = _check_order(s)
    values = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ValueError("Bessel arguments must be finite and nonnegative")
    return np.asarray(special.jv(s, values), dtype=float)


def bessel_j_derivative(s: float, z: float) -> float:
    """Return ``J_s'(z)`` for ``z > 0``.

    Uses ``J_{s-1}(z) - s J_s(z) / z`` when ``z >= s`` and
    ``-J_{s+1}(z) + s J_s(z) / z`` otherwise, which keeps both branches free of
    cancellation.

    Raises:
        ValueError: If ``z`` is not strictly positive; the behaviour at the
            origin is covered by :func:`limit_z_jprime_over_j`.
    """

    s = _check_order(s)
    z = _check_argument(z)
    if z == 0.0:
        raise ValueError(
            "J_s'(0) is not evaluated directly; use limit_z_jprime_over_j near 0"
        )
    ratio = s * float(special.jv(s, z)) / z
    if z >= s:
        return float(special.jv(s - 1.0, z)) - ratio
    return -float(special.jv(s + 1.0, z)) + ratio


def limit_z_jprime_over_j(s: float) -> float:
    """Return ``lim_{z->0} z J_s'(z) / J_s(z)``, which equals ``s``."""

    s = _check_order(s)
    if s <= 0:
        raise ValueError("The limit is only defined here for positive orders")
    return s


def _first_sign_change(
    func: Callable[[float], float], start: float, stop: float
) -> tuple[float, float, float, float]:
    """Scan ``func`` with a fixed step and return the first bracketing interval."""

    lo = start
    f_lo = func(lo)
    while lo < stop:
        hi = min(lo + SCAN_STEP, stop)
        f_hi = func(hi)
        if f_lo * f_hi < 0:
            return lo, hi, f_lo, f_hi
        if f_hi == 0.0:
            return hi, hi, 0.0, 0.0
        lo, f_lo = hi, f_hi
    raise BracketError(f"No sign change found in ({start:.6g}, {stop:.6g})")


def bracketed_root(
    func: Callable[[float], float], start: float, stop: float
) -> float:
    """Return the first zero of ``func`` after ``start``, refined by Brent bisection."""

    lo, hi, _, _ = _first_sign_change(func, start, stop)
    if lo == hi:
        return lo
    return float(optimize.brentq(func, lo, hi, xtol=ROOT_XTOL))


def first_root_j(s: float) -> float:
    """Return ``j_{s,1}``, the first positive zero of ``J_s``.

    Raises:
        BracketError: If no zero is bracketed in ``(0, 4s + 20)``.
    """

    s = _check_order(s)
    # J_s is positive on (0, j_{s,1}) and j_{s,1} > max(s, j_{0,1}).
    start = max(s, 2.0)
    root = bracketed_root(lambda z: float(special.jv(s, z)), start, 4.0 * s + 20.0)
    logger.debug("j_{%.6g,1} = %.15g", s, root)
    return root


def first_root_j_prime(s: float) -> float:
    """Return ``j'_{s,1}``, the first positive zero of ``J_s'`` for ``s > 0``.

    Raises:
        BracketError: If no zero is bracketed in ``(0, 4s + 20)``.
    """

    s = _check_order(s)
    if s <= 0:
        raise ValueError("first_root_j_prime requires a positive order")
    # J_s' > 0 below sqrt(s(s+2)), a strict lower bound for j'_{s,1}.
    start = 0.999 * math.sqrt(s * (s + 2.0))
    root = bracketed_root(lambda z: bessel_j_derivative(s, z), start, 4.0 * s + 20.0)
    logger.debug("j'_{%.6g,1} = %.15g", s, root)
    return root
