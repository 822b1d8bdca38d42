"""Visual angle of a convex body from exterior points.

Two independent routes:

* from an arbitrary point, via the two support lines through it
  (zeros of ``h(psi) = P . n(psi) - p(psi)``);
* on a circle of radius R in body-adapted coordinates ``(R, phi)``, via the
  fundamental relation ``arccos(p/R) + arccos(p1/R) = pi - w`` with
  ``p1 = p(phi + pi - w)``.

``P(R, phi)`` is the point of the circle lying on the support line with
normal ``phi``, reached by turning counter-clockwise from the normal, so its
polar angle is ``theta = phi + arccos(p(phi)/R)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ._roots import solve_bracketed
from .errors import CircleTooSmall, DegenerateTangency, PointInsideBody
from .support import TWO_PI, FourierSupport, _harmonic_sums, evaluate, width

log = logging.getLogger(__name__)

ROOT_TOL = 1e-12
FD_STEP = 1e-5
FD_RTOL = 1e-4


@dataclass(frozen=True)
class VisualAngleSample:
    R: float
    theta: float
    phi: float
    w: float
    w_phi: float | None = None


def _flat(*arrays):
    b = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in arrays])
    shape = b[0].shape
    return shape, [x.reshape(-1).copy() for x in b]


# -- tangent normals ----------------------------------------------------------

def _tangent_normals(body: FourierSupport, x, y, seed, tol=ROOT_TOL):
    """Normals (phi1, phi2) of the two support lines through (x, y).

    ``seed`` must satisfy h(seed) > 0.  Then h(seed + pi) < 0, so each of
    ``[seed - pi, seed]`` and ``[seed, seed + pi]`` holds exactly one zero.
    """
    def h(psi, s):
        p, dp, _ = _harmonic_sums(body, psi, 1)
        c, sn = np.cos(psi), np.sin(psi)
        return x[s] * c + y[s] * sn - p, -x[s] * sn + y[s] * c - dp

    phi2 = solve_bracketed(h, seed, seed + math.pi, fprime=True, xtol=tol)
    phi1 = solve_bracketed(h, seed - math.pi, seed, fprime=True, xtol=tol)
    return phi1, phi2


def _grid_size(body: FourierSupport) -> int:
    return 4 * max(64, 8 * body.n_coeffs)


def visual_angle_points(body: FourierSupport, x, y, seed=None):
    """Visual angle at many points; returns ``(w, phi1, phi2)`` arrays.

    Without ``seed`` the positive arc of h is located on a grid (refined by
    a bounded maximisation where the arc is narrower than a cell).
    """
    shape, (x, y) = _flat(x, y)
    if seed is None:
        seed = _positive_seed(body, x, y)
    else:
        seed = np.broadcast_to(np.asarray(seed, dtype=float), shape).reshape(-1)
    phi1, phi2 = _tangent_normals(body, x, y, seed)
    w = math.pi - (phi2 - phi1)
    return w.reshape(shape), phi1.reshape(shape), phi2.reshape(shape)


def _positive_seed(body: FourierSupport, x, y):
    m = _grid_size(body)
    grid = np.arange(m) * (TWO_PI / m)
    pg = evaluate(body, grid)
    cg, sg = np.cos(grid), np.sin(grid)
    seed = np.empty(x.size)
    scale = max(abs(body.a0), 1.0)
    for i in range(x.size):
        h = x[i] * cg + y[i] * sg - pg
        j = int(np.argmax(h))
        if h[j] > 0:
            seed[i] = grid[j]
            continue
        cell = TWO_PI / m
        res = minimize_scalar(
            lambda t: -(x[i] * math.cos(t) + y[i] * math.sin(t) - evaluate(body, t)),
            bounds=(grid[j] - cell, grid[j] + cell), method="bounded",
            options={"xatol": 1e-14})
        hmax = -res.fun
        if hmax > 1e-12 * scale:
            seed[i] = res.x
        elif hmax >= -1e-12 * scale:
            raise DegenerateTangency(
                f"point ({x[i]:.6g}, {y[i]:.6g}) lies on the boundary (distance {hmax:.2e})")
        else:
            raise PointInsideBody(f"point ({x[i]:.6g}, {y[i]:.6g}) is not exterior")
    return seed


def visual_angle_point(body: FourierSupport, P) -> VisualAngleSample:
    """Visual angle from a single Cartesian point ``P = (x, y)``.

    The returned ``phi`` is the normal of the first support line, i.e. the
    body-adapted parameter with ``P = P(R, phi)``.
    """
    px, py = float(P[0]), float(P[1])
    w, phi1, _ = visual_angle_points(body, px, py)
    R = math.hypot(px, py)
    theta = math.atan2(py, px)
    phi = float(np.mod(phi1, TWO_PI))
    return VisualAngleSample(R=R, theta=theta, phi=phi, w=float(w))


# -- fundamental relation on a circle ------------------------------------------

def _require_circle(body: FourierSupport, R: float):
    pmax = body.max_p()
    if not R > pmax:
        raise CircleTooSmall(f"R = {R:.6g} does not exceed max p = {pmax:.6g}")


def fundamental_residual(body: FourierSupport, R, phi, w):
    """G(w) = p^2 + p1^2 + 2 p p1 cos w - R^2 sin^2 w with p1 = p(phi + pi - w)."""
    p = evaluate(body, phi)
    p1 = evaluate(body, np.asarray(phi) + math.pi - np.asarray(w))
    return p * p + p1 * p1 + 2 * p * p1 * np.cos(w) - (R * np.sin(w)) ** 2


def solve_w(body: FourierSupport, R: float, phi, tol: float = ROOT_TOL, check: bool = True):
    """Vectorised w(R, phi) from the fundamental relation.

    With ``beta = arccos(p/R)`` the relation reads
    ``p(phi + pi - w) = -R cos(w + beta)``; on ``[pi/2 - beta, pi - beta]``
    the difference of the two sides changes sign exactly once.
    """
    if check:
        _require_circle(body, R)
    shape, (phi,) = _flat(phi)
    beta = np.arccos(evaluate(body, phi) / R)

    def resid(w, s):
        p1, dp1, _ = _harmonic_sums(body, phi[s] + math.pi - w, 1)
        return -R * np.cos(w + beta[s]) - p1, R * np.sin(w + beta[s]) + dp1

    w = solve_bracketed(resid, 0.5 * math.pi - beta, math.pi - beta, fprime=True, xtol=tol)
    if check:
        g = fundamental_residual(body, R, phi, w)
        bad = np.abs(g) > 1e-8 * R * R
        if np.any(bad):
            log.warning("fundamental relation residual %.3e at R=%g",
                        float(np.max(np.abs(g))), R)
    return w.reshape(shape)


def visual_angle_on_circle(body: FourierSupport, R: float, phi: float) -> VisualAngleSample:
    w = float(solve_w(body, R, float(phi)))
    theta = float(phi) + math.acos(evaluate(body, float(phi)) / R)
    return VisualAngleSample(R=R, theta=theta, phi=float(phi), w=w)


def _phi_derivative_terms(body, R, phi, w):
    p, dp, _ = body.derivs(phi)
    p1, dp1, _ = body.derivs(np.asarray(phi) + math.pi - w)
    return p, dp, p1, dp1


def w_phi_derived(body: FourierSupport, R, phi, w):
    """dw/dphi by implicit differentiation of G(phi, w) = 0."""
    p, dp, p1, dp1 = _phi_derivative_terms(body, R, phi, w)
    cw, sw = np.cos(w), np.sin(w)
    num = p * dp + p1 * dp1 + (dp * p1 + p * dp1) * cw
    den = R * R * sw * cw + p1 * dp1 + p * dp1 * cw + p * p1 * sw
    return num / den


def w_phi_printed(body: FourierSupport, R, phi, w):
    """dw/dphi with the shortened denominator
    ``R^2 sin w cos w + p1 p1' + p p1' + p p1`` (no cos w / sin w factors on
    the last two terms).  Kept only to measure how far it is off."""
    p, dp, p1, dp1 = _phi_derivative_terms(body, R, phi, w)
    cw, sw = np.cos(w), np.sin(w)
    num = p * dp + p1 * dp1 + (dp * p1 + p * dp1) * cw
    den = R * R * sw * cw + p1 * dp1 + p * dp1 + p * p1
    return num / den


def w_phi_fd(body: FourierSupport, R: float, phi, h: float = FD_STEP):
    phi = np.asarray(phi, dtype=float)
    return (solve_w(body, R, phi + h, check=False) - solve_w(body, R, phi - h, check=False)) / (2 * h)


def _agree(x, ref, rtol=FD_RTOL, atol=1e-9):
    return np.abs(x - ref) <= rtol * np.abs(ref) + atol


def w_phi_diagnostics(body: FourierSupport, R: float, phi) -> dict:
    """Derived, printed and finite-difference w_phi side by side."""
    w = solve_w(body, R, phi)
    derived = w_phi_derived(body, R, phi, w)
    printed = w_phi_printed(body, R, phi, w)
    fd = w_phi_fd(body, R, phi)
    return {
        "w": w, "derived": derived, "printed": printed, "fd": fd,
        "derived_agrees": bool(np.all(_agree(derived, fd))),
        "printed_agrees": bool(np.all(_agree(printed, fd))),
        "printed_max_rel_dev": float(np.max(np.abs(printed - fd) / np.maximum(np.abs(fd), 1e-300))),
    }


_printed_reported = False


def w_phi_on_circle(body: FourierSupport, R: float, phi, w=None, check: bool = True):
    """dw/dphi on the circle of radius R, cross-checked against finite differences.

    The implicit formula is evaluated with the derivative of G taken in full.
    When ``check`` is set the finite-difference value is computed as well;
    a disagreement of the derived formula is logged as an error, one of the
    printed formula is logged once as a warning.
    """
    global _printed_reported
    if w is None:
        w = solve_w(body, R, phi)
    derived = w_phi_derived(body, R, phi, w)
    if check:
        fd = w_phi_fd(body, R, phi)
        if not np.all(_agree(derived, fd)):
            log.error("implicit w_phi disagrees with finite differences at R=%g", R)
        if not _printed_reported and not np.all(_agree(w_phi_printed(body, R, phi, w), fd)):
            _printed_reported = True
            log.warning("printed w_phi denominator disagrees with finite differences "
                        "at R=%g; using the fully differentiated form", R)
    return float(derived) if np.ndim(derived) == 0 else derived


# -- polar <-> body-adapted coordinates -----------------------------------------

def theta_of_phi(body: FourierSupport, R: float, phi):
    return np.asarray(phi) + np.arccos(evaluate(body, phi) / R)


def jacobian(body: FourierSupport, R: float, phi):
    """d theta / d phi = 1 - p' / sqrt(R^2 - p^2)."""
    p, dp, _ = body.derivs(phi)
    return 1.0 - dp / np.sqrt(R * R - p * p)


def _require_monotone(body: FourierSupport, R: float):
    _require_circle(body, R)
    n = max(1024, 16 * body.n_coeffs)
    phi = np.arange(n) * (TWO_PI / n)
    jmin = float(np.min(jacobian(body, R, phi)))
    if jmin <= 0:
        raise CircleTooSmall(f"theta(phi) not monotone at R = {R:.6g} (min Jacobian {jmin:.3e})")


def polar_to_body_param(body: FourierSupport, R: float, theta, tol: float = ROOT_TOL):
    """Invert ``theta = phi + arccos(p(phi)/R)``; phi lies in ``[theta - pi, theta]``."""
    _require_monotone(body, R)
    shape, (theta,) = _flat(theta)

    def resid(phi, s):
        p, dp, _ = _harmonic_sums(body, phi, 1)
        return phi + np.arccos(p / R) - theta[s], 1.0 - dp / np.sqrt(R * R - p * p)

    phi = solve_bracketed(resid, theta - math.pi, theta, fprime=True, xtol=tol)
    phi = phi.reshape(shape)
    return float(phi) if phi.ndim == 0 else phi


def visual_angle_polar(body: FourierSupport, R: float, theta):
    """w at the point with polar coordinates (R, theta)."""
    phi = polar_to_body_param(body, R, theta)
    return solve_w(body, R, phi)


# -- circle averages -----------------------------------------------------------

@dataclass(frozen=True)
class CircleMeans:
    R: float
    N: int
    Rw_phi: float
    Rw_theta: float
    energy_phi: float
    energy_theta: float


def circle_samples(body: FourierSupport, R: float, N: int):
    """phi grid with theta(phi), w and w_phi on the circle of radius R."""
    _require_monotone(body, R)
    phi = np.arange(N) * (TWO_PI / N)
    w = solve_w(body, R, phi)
    w_phi = w_phi_derived(body, R, phi, w)
    # spot check on a few nodes keeps the implicit formula honest
    idx = np.linspace(0, N - 1, 4).astype(int)
    w_phi_on_circle(body, R, phi[idx], w[idx], check=True)
    return phi, theta_of_phi(body, R, phi), w, w_phi


def circle_mean_estimates(body: FourierSupport, R: float, N: int = 1024) -> CircleMeans:
    """Periodic trapezoidal estimates of ``R int w``, ``int R^2 (w^2 - w'^2)``
    over the circle of radius R, in the phi and in the theta parametrisation.

    The theta integrals are pulled back to phi with ``dtheta = J dphi`` and
    ``w_theta = w_phi / J``.
    """
    if N < 512:
        raise ValueError("N must be at least 512")
    phi, _, w, w_phi = circle_samples(body, R, N)
    J = jacobian(body, R, phi)
    h = TWO_PI / N
    return CircleMeans(
        R=R, N=N,
        Rw_phi=float(R * h * np.sum(w)),
        Rw_theta=float(R * h * np.sum(w * J)),
        energy_phi=float(R * R * h * np.sum(w * w - w_phi * w_phi)),
        energy_theta=float(R * R * h * np.sum((w * w - (w_phi / J) ** 2) * J)),
    )


def width_limit_error(body: FourierSupport, R: float, phi):
    """R w(R, phi) - a(phi); tends to zero uniformly as R grows."""
    return R * solve_w(body, R, phi) - width(body, phi)
