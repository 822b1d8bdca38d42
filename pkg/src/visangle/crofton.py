"""Integrals of functions of the visual angle over the exterior of a body.

``exterior_integral`` is the brute-force route: polar quadrature of
``f(w(P))`` outside the body plus an analytic tail.  ``cgr_rhs`` is the
closed-form series in the body's Fourier amplitudes and the moments of f'.
The two are independent and are checked against each other.
"""
from __future__ import annotations

import math
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .angle import visual_angle_points
from .errors import SingularAtZero, TailTooLarge
from .support import TWO_PI, FourierSupport, metrics, perturbed, radial_function, width

MOMENT_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class AngleWeightFunction:
    """A weight f on [0, pi] with f(w) = O(w^3) at 0.

    ``df`` defaults to central differences; ``c3`` (the limit of f(w)/w^3)
    defaults to f(1e-3)/1e-9.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray] | None = None
    c3: float | None = None

    def __post_init__(self):
        if self.df is None:
            h = 1e-6
            object.__setattr__(self, "df", lambda w, _f=self.f: (_f(w + h) - _f(w - h)) / (2 * h))
        if self.c3 is None:
            object.__setattr__(self, "c3", float(self.f(np.float64(1e-3))) / 1e-9)

    def __call__(self, w):
        return self.f(w)

    def cubic_ratio_ok(self) -> bool:
        """f(0) = 0 and f(w)/w^3 does not grow between w = 1e-2 and 1e-3."""
        f0 = float(self.f(np.float64(0.0)))
        r2 = float(self.f(np.float64(1e-2))) / 1e-6
        r3 = float(self.f(np.float64(1e-3))) / 1e-9
        return abs(f0) <= 1e-14 and np.isfinite(r3) and abs(r3) <= 1.05 * abs(r2) + 1e-8

    def check(self) -> None:
        if not self.cubic_ratio_ok():
            raise SingularAtZero(f"{self.name}: f(w) is not O(w^3) as w -> 0")

    def __mul__(self, lam: float) -> "AngleWeightFunction":
        return AngleWeightFunction(
            f"{lam:g}*{self.name}",
            lambda w: lam * self.f(w), lambda w: lam * self.df(w), lam * self.c3)

    __rmul__ = __mul__

    def __add__(self, other: "AngleWeightFunction") -> "AngleWeightFunction":
        return AngleWeightFunction(
            f"{self.name}+{other.name}",
            lambda w: self.f(w) + other.f(w), lambda w: self.df(w) + other.df(w),
            self.c3 + other.c3)


def _half_sin2(w):
    return 2.0 * np.sin(0.5 * w) ** 2  # 1 - cos w without cancellation


CROFTON = AngleWeightFunction("crofton", lambda w: w - np.sin(w), _half_sin2, 1.0 / 6.0)
SIN3 = AngleWeightFunction(
    "sin3", lambda w: (4.0 / 3.0) * np.sin(w) ** 3,
    lambda w: 4.0 * np.sin(w) ** 2 * np.cos(w), 4.0 / 3.0)
DISC_AREA = AngleWeightFunction(
    "disc_area", lambda w: 8.0 * np.sin(0.5 * w) ** 3 * np.cos(0.5 * w),
    lambda w: 12.0 * (np.sin(0.5 * w) * np.cos(0.5 * w)) ** 2 - 4.0 * np.sin(0.5 * w) ** 4, 1.0)
CUBIC = AngleWeightFunction("cubic", lambda w: w ** 3, lambda w: 3.0 * w ** 2, 1.0)

BUILTIN = {"crofton": CROFTON, "sin3": SIN3, "disc_area": DISC_AREA, "cubic": CUBIC}


def from_expression(expr: str) -> AngleWeightFunction:
    """Weight from a sympy expression in ``w``; derivative and c3 are symbolic."""
    import sympy as sp

    w = sp.Symbol("w", real=True)
    e = sp.sympify(expr, locals={"w": w})
    de = sp.diff(e, w)
    c3 = float(sp.limit(e / w ** 3, w, 0))
    return AngleWeightFunction(
        expr, sp.lambdify(w, e, "numpy"), sp.lambdify(w, de, "numpy"), c3)


def weight_function(name: str) -> AngleWeightFunction:
    return BUILTIN[name] if name in BUILTIN else from_expression(name)


# -- moments ---------------------------------------------------------------

@lru_cache(maxsize=None)
def _gauss_panels(a: float, b: float, panels: int, order: int):
    x, wts = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wts[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class Moments:
    M: float
    alpha: np.ndarray  # alpha[j-1] for j = 1..J

    def alpha_j(self, j: int) -> float:
        return float(self.alpha[j - 1])


def moments(f: AngleWeightFunction, J_max: int) -> Moments:
    """``M(f) = int_0^pi f'/(1 - cos w)`` and ``alpha_j = int_0^pi f' j cos(j w)``.

    Composite Gauss-Legendre on ``[eps, pi]``; the sliver ``[0, eps]`` is
    added from the cubic behaviour f' ~ 3 c3 w^2.
    """
    f.check()
    panels = max(16, J_max // 2)
    nodes, wts = _gauss_panels(MOMENT_EPS, math.pi, panels, 32)
    d = f.df(nodes)
    M = float(np.sum(wts * d / _half_sin2(nodes))) + 6.0 * f.c3 * MOMENT_EPS
    j = np.arange(1, J_max + 1)
    alpha = (j * (np.cos(np.outer(j, nodes)) @ (wts * d))
             + f.c3 * j * MOMENT_EPS ** 3)
    return Moments(M=M, alpha=alpha)


def cgr_rhs(body: FourierSupport, f: AngleWeightFunction, J_max: int | None = None) -> float:
    """Closed-form value of the exterior integral as a series in c_k^2.

    ``-f(pi) F + L^2 M / 2pi + pi sum_{k even} c_k^2 (M + 2 sum_{j<k odd} alpha_j)
    + pi sum_{k odd} c_k^2 (-2 sum_{j<k even} alpha_j)``
    """
    K = body.K_max
    J = max(J_max or 0, K, 1)
    mom = moments(f, J)
    met = metrics(body)
    alpha = np.concatenate([[0.0], mom.alpha])  # alpha[j] now indexed by j
    odd_cum = np.cumsum(np.where(np.arange(J + 1) % 2 == 1, alpha, 0.0))
    even_cum = np.cumsum(np.where((np.arange(J + 1) % 2 == 0), alpha, 0.0))
    total = -float(f.f(np.float64(math.pi))) * met.F + met.L ** 2 / TWO_PI * mom.M
    for k in range(2, K + 1):
        c2 = body.c2_at(k)
        if c2 == 0.0:
            continue
        if k % 2 == 0:
            total += math.pi * c2 * (mom.M + 2.0 * odd_cum[k - 1])
        else:
            total += math.pi * c2 * (-2.0 * even_cum[k - 1])
    return float(total)


# -- brute-force exterior integral --------------------------------------------

def _env_grid(default: int) -> int:
    val = os.environ.get("VAL_GRID")
    return int(val) if val else default


@dataclass(frozen=True)
class ExteriorConfig:
    """Quadrature settings.  ``R_max`` defaults to ``r_max_factor * 2 max p``."""

    r_max_factor: float = 50.0
    R_max: float | None = None
    n_gauss: int = 64
    n_theta: int = field(default_factory=lambda: _env_grid(1024))
    slab_ratio: float = math.e
    tail_fraction: float = 0.02


@dataclass(frozen=True)
class ExteriorIntegralResult:
    value: float
    R_max: float
    tail: float
    n_theta: int
    n_radial: int
    quadrature: float

    def to_dict(self) -> dict:
        return {"value": self.value, "R_max": self.R_max, "tail": self.tail,
                "n_theta": self.n_theta, "n_radial": self.n_radial,
                "quadrature": self.quadrature}


@dataclass(frozen=True, eq=False)
class VisualAngleField:
    """Visual angle on the polar quadrature nodes of the truncated exterior."""

    w: np.ndarray          # (n_theta, n_radial)
    weights: np.ndarray    # dA weights, same shape
    R_max: float
    width_cubed: float     # int_0^2pi a^3 dtheta
    n_theta: int
    n_radial: int

    def integrate(self, f: AngleWeightFunction) -> tuple[float, float]:
        """(truncated integral, cubic tail) for the weight f."""
        inner = float(np.sum(self.weights * f.f(self.w)))
        tail = f.c3 * self.width_cubed / self.R_max
        return inner, tail


def _radial_nodes(rho: np.ndarray, R_max: float, n_gauss: int, n_log: int):
    """Per-theta radial nodes/weights (weights include the area factor R).

    ``[rho, 2 rho]`` uses ``R = rho + s^2`` to absorb the square-root
    behaviour of w at the boundary; ``[2 rho, R_max]`` is split into
    ``n_log`` equal slabs in log R.
    """
    x, gw = np.polynomial.legendre.leggauss(n_gauss)
    u, uw = 0.5 * (x + 1.0), 0.5 * gw  # on [0, 1]
    smax = np.sqrt(rho)[:, None]
    s = smax * u[None, :]
    R0 = rho[:, None] + s * s
    W0 = (2.0 * s * smax * uw[None, :]) * R0
    lo = np.log(2.0 * rho)[:, None]
    span = (math.log(R_max) - lo) / n_log
    Rs, Ws = [R0], [W0]
    for i in range(n_log):
        t = lo + span * (i + u[None, :])
        R = np.exp(t)
        Rs.append(R)
        Ws.append(R * R * span * uw[None, :])
    return np.hstack(Rs), np.hstack(Ws)


_FIELD_CACHE: "OrderedDict[tuple, VisualAngleField]" = OrderedDict()
_FIELD_CACHE_SIZE = 16


def _body_key(body: FourierSupport) -> tuple:
    return body.a0, body.a.tobytes(), body.b.tobytes()


def visual_angle_field(body: FourierSupport, cfg: ExteriorConfig | None = None) -> VisualAngleField:
    """Visual angle on the quadrature nodes; cached per (coefficients, config)
    so that several weights on one body share the expensive root solves."""
    cfg = cfg or ExteriorConfig()
    key = (_body_key(body), cfg)
    if key in _FIELD_CACHE:
        _FIELD_CACHE.move_to_end(key)
        return _FIELD_CACHE[key]
    fld = _compute_field(body, cfg)
    _FIELD_CACHE[key] = fld
    if len(_FIELD_CACHE) > _FIELD_CACHE_SIZE:
        _FIELD_CACHE.popitem(last=False)
    return fld


def clear_field_cache() -> None:
    _FIELD_CACHE.clear()


def _compute_field(body: FourierSupport, cfg: ExteriorConfig) -> VisualAngleField:
    pmax = body.max_p()
    R_max = cfg.R_max or cfg.r_max_factor * 2.0 * pmax
    n = cfg.n_theta
    theta = np.arange(n) * (TWO_PI / n)
    rho, phi_b = radial_function(body, theta)
    if R_max <= 2.0 * np.max(rho):
        raise ValueError(f"R_max = {R_max:g} too small for this body")
    n_log = max(1, math.ceil(math.log(R_max / (2.0 * np.min(rho))) / math.log(cfg.slab_ratio)))
    R, W = _radial_nodes(rho, R_max, cfg.n_gauss, n_log)
    W = W * (TWO_PI / n)
    x = R * np.cos(theta)[:, None]
    y = R * np.sin(theta)[:, None]
    seed = np.broadcast_to(phi_b[:, None], R.shape)
    w, _, _ = visual_angle_points(body, x, y, seed=seed)
    width_cubed = float(np.sum(width(body, theta) ** 3) * (TWO_PI / n))
    return VisualAngleField(w=w, weights=W, R_max=R_max, width_cubed=width_cubed,
                            n_theta=n, n_radial=R.shape[1])


def exterior_integral(body: FourierSupport, f: AngleWeightFunction,
                      cfg: ExteriorConfig | None = None) -> ExteriorIntegralResult:
    """``int_{P outside K} f(w(P)) dP``: polar quadrature to R_max plus the
    tail ``c3 int a^3 dtheta / R_max`` from ``w ~ a/R``."""
    f.check()
    cfg = cfg or ExteriorConfig()
    fld = visual_angle_field(body, cfg)
    inner, tail = fld.integrate(f)
    value = inner + tail
    if abs(tail) > cfg.tail_fraction * abs(value):
        raise TailTooLarge(f"tail {tail:.3e} exceeds {cfg.tail_fraction:g} of value {value:.3e}")
    return ExteriorIntegralResult(value=value, R_max=fld.R_max, tail=tail,
                                  n_theta=fld.n_theta, n_radial=fld.n_radial,
                                  quadrature=inner)


def crofton_rhs(body: FourierSupport) -> float:
    m = metrics(body)
    return m.L ** 2 / 2.0 - math.pi * m.F


def crofton_check(body: FourierSupport, cfg: ExteriorConfig | None = None) -> float:
    """Relative error of the exterior integral of w - sin w against L^2/2 - pi F."""
    lhs = exterior_integral(body, CROFTON, cfg).value
    rhs = crofton_rhs(body)
    return abs(lhs - rhs) / abs(rhs)


# -- uniqueness experiment ------------------------------------------------------

@dataclass(frozen=True)
class UniquenessFit:
    a: float
    b: float
    residual: float
    ms: tuple[int, ...]
    t: float
    integrals: tuple[float, ...]
    L: float
    F: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "residual": self.residual, "ms": list(self.ms),
                "t": self.t, "integrals": list(self.integrals), "L": self.L, "F": list(self.F)}


def fit_linear_model(I: Sequence[float], L2: Sequence[float], F: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares ``I = a L^2 + b F`` via 2x2 normal equations (F centred).

    Returns ``(a, b, residual)`` with the residual normalised by max |I|.
    """
    I = np.asarray(I, float)
    L2 = np.asarray(L2, float)
    F = np.asarray(F, float)
    Fbar, L2bar = F.mean(), L2.mean()
    # a L^2 + b F = (a + b Fbar / L2bar) L^2 + b (F - Fbar L^2 / L2bar)
    X = np.column_stack([L2, F - Fbar * L2 / L2bar])
    a_shift, b = np.linalg.solve(X.T @ X, X.T @ I)
    a = a_shift - b * Fbar / L2bar
    fit = a * L2 + b * F
    residual = float(np.max(np.abs(I - fit)) / np.max(np.abs(I)))
    return float(a), float(b), residual


def uniqueness_experiment(f: AngleWeightFunction, ms: Sequence[int] = (2, 3, 4, 5),
                          t: float = 0.03, cfg: ExteriorConfig | None = None) -> UniquenessFit:
    """Fit ``int f(w) dP = a L^2 + b F`` over the family ``p = 1 + t cos(m phi)``."""
    bodies = [perturbed(m, t) for m in ms]
    I = [exterior_integral(body, f, cfg).value for body in bodies]
    mets = [metrics(body) for body in bodies]
    L2 = [m.L ** 2 for m in mets]
    F = [m.F for m in mets]
    a, b, residual = fit_linear_model(I, L2, F)
    return UniquenessFit(a=a, b=b, residual=residual, ms=tuple(ms), t=t,
                         integrals=tuple(I), L=mets[0].L, F=tuple(F))
