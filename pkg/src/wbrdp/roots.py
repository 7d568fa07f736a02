"""Safeguarded Newton iteration for monotone scalar equations."""

import math

FTOL = 1e-12
MAXITER = 200


def safeguarded_newton(f, lo, hi, x0=None, ftol=FTOL, maxiter=MAXITER):
    """Root of a monotone function on a sign-changing bracket.

    Parameters
    ----------
    f : callable
        ``f(x) -> (value, derivative)``.
    lo, hi : float
        Bracket with ``f(lo)`` and ``f(hi)`` of opposite sign (either order
        of monotonicity is accepted).
    x0 : float, optional
        Starting point; clipped into the bracket. Defaults to the midpoint.

    Returns
    -------
    float
        A point with ``|f(x)| <= ftol``, or the best point found once the
        bracket has shrunk to adjacent floats or ``maxiter`` is reached.

    A Newton step is replaced by bisection when it would leave the bracket
    or when it is longer than half the step taken two iterations earlier.
    """
    flo, _ = f(lo)
    if flo == 0.0:
        return lo
    positive_at_lo = flo > 0
    x = 0.5 * (lo + hi) if x0 is None else min(max(x0, lo), hi)
    step = step_old = hi - lo
    best, best_val = x, math.inf
    for _ in range(maxiter):
        fx, dfx = f(x)
        if abs(fx) < best_val:
            best, best_val = x, abs(fx)
        if abs(fx) <= ftol:
            return x
        if (fx > 0) == positive_at_lo:
            lo = x
        else:
            hi = x
        if hi - lo <= 4.0 * math.ulp(max(abs(lo), abs(hi), 1e-300)):
            break
        newton_ok = dfx != 0.0 and math.isfinite(dfx)
        x_new = x - fx / dfx if newton_ok else math.nan
        if not (lo < x_new < hi) or abs(2.0 * fx) > abs(step_old * dfx):
            step_old, step = step, 0.5 * (hi - lo)
            x = lo + step
        else:
            step_old, step = step, x - x_new
            x = x_new
    return best
