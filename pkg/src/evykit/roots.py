"""Vectorised bracketing and bisection for monotone feasibility predicates."""
from __future__ import annotations

import numpy as np

from .core import DomainError

EFFORT_TOL = 1e-9
CATCH_TOL = 1e-6
MAX_BISECT = 200
MAX_DOUBLINGS = 1100


def largest_feasible(pred, lo, hi, xtol, rtol=0.0, max_iter=MAX_BISECT):
    """Bisect for the supremum of ``{x in [lo, hi] : pred(x)}``.

    ``pred`` must be vectorised and monotone (True, then False) on each
    bracket, with ``pred(lo)`` True.  The feasible end is returned, so
    ``pred(result)`` holds wherever ``pred(lo)`` did.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    at_hi = np.asarray(pred(hi), dtype=bool)
    lo = np.where(at_hi, hi, lo)
    for _ in range(max_iter):
        width = hi - lo
        if np.all(width <= xtol + rtol * np.abs(hi)):
            break
        mid = lo + 0.5 * width
        ok = np.asarray(pred(mid), dtype=bool)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def bracket_above(pred, lo, initial_step, stop=None, max_doublings=MAX_DOUBLINGS):
    """Find ``hi > lo`` where ``pred`` fails (or ``stop`` holds) by doubling.

    Raises DomainError if no bracket is found, which for growth factors
    means the model is not *nice* (its factor never drops to zero).
    """
    lo = np.array(lo, dtype=float)
    step = np.broadcast_to(np.asarray(initial_step, dtype=float), lo.shape).copy()
    hi = lo + step
    done = ~np.asarray(pred(hi), dtype=bool)
    if stop is not None:
        done |= np.asarray(stop(hi), dtype=bool)
    for _ in range(max_doublings):
        if np.all(done):
            return hi
        step = np.where(done, step, 2.0 * step)
        hi = np.where(done, hi, lo + step)
        if not np.all(np.isfinite(hi)):
            break
        d = ~np.asarray(pred(hi), dtype=bool)
        if stop is not None:
            d |= np.asarray(stop(hi), dtype=bool)
        done |= d
    raise DomainError("no upper bracket found: growth factor does not decay with effort")
