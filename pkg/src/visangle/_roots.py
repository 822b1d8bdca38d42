"""Vectorised bracketed root finding (bisection-safeguarded Newton).

Every caller in this package knows a sign-changing bracket analytically, so
the solver never searches for one; it only refuses to start without it.
"""
from __future__ import annotations

import numpy as np

from .errors import NoBracket


def solve_bracketed(fun, lo, hi, fprime: bool = False, xtol: float = 1e-12, maxiter: int = 200):
    """Solve ``fun(x) = 0`` elementwise on ``[lo, hi]``.

    ``fun(x, sel)`` acts on arrays; ``sel`` indexes the per-element
    parameters that belong to the entries of ``x`` (the solver only
    re-evaluates unconverged entries).  With ``fprime`` set, ``fun`` returns
    ``(f, f')`` and the iteration is
    Newton, falling back to bisection whenever the Newton step leaves the
    bracket or fails to halve the previous step (the classic ``rtsafe``
    rule).  Without it, plain bisection.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    scalar = lo.ndim == 0
    lo, hi = np.atleast_1d(lo), np.atleast_1d(hi)

    everything = slice(None)
    value = (lambda x, s: fun(x, s)[0]) if fprime else fun
    flo = value(lo, everything)
    fhi = value(hi, everything)
    if np.any(flo * fhi > 0):
        bad = int(np.flatnonzero(flo * fhi > 0)[0])
        raise NoBracket(
            f"no sign change on [{lo[bad]:.6g}, {hi[bad]:.6g}]: "
            f"f = ({flo[bad]:.3e}, {fhi[bad]:.3e})")
    # orient so that g(lo) <= 0 <= g(hi)
    sgn = np.where(fhi >= flo, 1.0, -1.0)

    x = 0.5 * (lo + hi)
    x = np.where(flo == 0, lo, np.where(fhi == 0, hi, x))
    done = (flo == 0) | (fhi == 0)
    dx_old = hi - lo
    dx = dx_old.copy()

    for _ in range(maxiter):
        if np.all(done):
            break
        act = ~done
        xa = x[act]
        if fprime:
            g, dg = fun(xa, act)
            g, dg = sgn[act] * g, sgn[act] * dg
        else:
            g = sgn[act] * fun(xa, act)
        la, ha = lo[act], hi[act]
        la = np.where(g < 0, xa, la)
        ha = np.where(g > 0, xa, ha)
        lo[act], hi[act] = la, ha
        mid = 0.5 * (la + ha)
        if fprime:
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = xa - g / dg
            ok = (
                np.isfinite(newton) & (newton >= la) & (newton <= ha)
                & (np.abs(2.0 * g) <= np.abs(dx_old[act] * dg))
            )
            xn = np.where(ok, newton, mid)
        else:
            xn = mid
        xn = np.where(g == 0, xa, xn)
        step = np.abs(xn - xa)
        dx_old[act] = dx[act]
        dx[act] = step
        x[act] = xn
        done[act] = (step <= xtol) | (ha - la <= xtol) | (g == 0)
    return float(x[0]) if scalar else x
