"""Bracketing bisection for monotone scalar equations."""

from __future__ import annotations

from typing import Callable

BRACKET_WIDTH = 1e-10
MAX_ITER = 200


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = BRACKET_WIDTH,
    ftol: float = 0.0,
    max_iter: int = MAX_ITER,
) -> float:
    """Find a root of ``f`` in ``[lo, hi]`` by bisection.

    ``f(lo)`` and ``f(hi)`` must not have the same strict sign. Iteration stops
    once the bracket is narrower than ``xtol`` *and* ``|f(mid)| <= ftol``, when
    the midpoint can no longer be split in floating point, or after
    ``max_iter`` halvings. With the default ``ftol=0`` the bracket is driven
    down to adjacent floats.

    Returns:
        The midpoint of the final bracket (or an endpoint that is an exact root).
    """
    f_lo = f(lo)
    if f_lo == 0.0:
        return lo
    f_hi = f(hi)
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError(f"root not bracketed: f({lo})={f_lo}, f({hi})={f_hi}")
    rising = f_hi > 0
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == rising:
            hi = mid
        else:
            lo = mid
        if hi - lo <= xtol and abs(f_mid) <= ftol:
            break
    return 0.5 * (lo + hi)
