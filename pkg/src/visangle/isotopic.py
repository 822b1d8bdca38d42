"""Isotopic curves: the loci from which a body is seen under a fixed angle.

For a fixed angle ``alpha`` the point seen under alpha whose first support
line has normal phi is

    X = -(p sin(phi - alpha) + p1 sin phi) / sin alpha
    Y =  (p cos(phi - alpha) + p1 cos phi) / sin alpha,   p1 = p(phi + pi - alpha)

which traces the whole isotopic curve as phi runs over a period.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import (AlphaOutOfRange, NegativeRadicand, NoIsotopicCircle, PeriodicityViolation,
                     RationalityViolation)
from .support import (TWO_PI, FourierSupport, check_convexity, from_samples, is_constant_width,
                      metrics, quarter_radicand, width)

log = logging.getLogger(__name__)

CIRCLE_TOL = 1e-6


def _check_alpha(alpha: float):
    if not 0.0 < alpha < math.pi:
        raise AlphaOutOfRange(f"alpha = {alpha} not in (0, pi)")


# -- curves -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IsotopicCurve:
    alpha: float
    phi: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    length: float
    area: float
    radicand: np.ndarray

    @property
    def isoperimetric_ratio(self) -> float:
        return self.length ** 2 / (4.0 * math.pi * self.area)

    def polygon_length(self) -> float:
        return float(np.sum(np.hypot(np.diff(self.X, append=self.X[0]),
                                     np.diff(self.Y, append=self.Y[0]))))

    def polygon_area(self) -> float:
        """Shoelace area of the sampled polygon."""
        return 0.5 * float(np.sum(self.X * np.roll(self.Y, -1) - np.roll(self.X, -1) * self.Y))


def _curve_arrays(body: FourierSupport, alpha: float, phi):
    sa, ca = math.sin(alpha), math.cos(alpha)
    p, dp, d2p = body.derivs(phi)
    p1, dp1, d2p1 = body.derivs(phi + math.pi - alpha)
    s, c = np.sin(phi), np.cos(phi)
    sm, cm = np.sin(phi - alpha), np.cos(phi - alpha)
    X = -(p * sm + p1 * s) / sa
    Y = (p * cm + p1 * c) / sa
    dX = -(dp * sm + p * cm + dp1 * s + p1 * c) / sa
    dY = (dp * cm - p * sm + dp1 * c - p1 * s) / sa
    radicand = (p * p + p1 * p1 + dp * dp + dp1 * dp1
                + 2.0 * (p * p1 + dp * dp1) * ca + 2.0 * (p * dp1 - dp * p1) * sa)
    return X, Y, dX, dY, radicand


def curve(body: FourierSupport, alpha: float, N: int = 2048) -> IsotopicCurve:
    """Sample the isotopic curve and integrate its length and area.

    Length is ``(1/sin alpha) int sqrt(Delta) dphi``; area is
    ``1/2 int (X Y' - Y X') dphi`` with exact derivatives.  Both use the
    periodic trapezoidal rule, which is spectrally accurate here.
    """
    _check_alpha(alpha)
    if N < 512:
        raise ValueError("N must be at least 512")
    for attempt in range(2):
        phi = np.arange(N) * (TWO_PI / N)
        X, Y, dX, dY, radicand = _curve_arrays(body, alpha, phi)
        if np.min(radicand) >= 0:
            break
        if attempt == 0:
            log.info("negative radicand at alpha=%g, doubling N", alpha)
            N *= 2
    else:
        raise NegativeRadicand(f"min Delta = {np.min(radicand):.3e} at alpha = {alpha}")
    h = TWO_PI / N
    length = h * float(np.sum(np.sqrt(radicand))) / math.sin(alpha)
    area = 0.5 * h * float(np.sum(X * dY - Y * dX))
    return IsotopicCurve(alpha=alpha, phi=phi, X=X, Y=Y, length=length, area=area,
                         radicand=radicand)


# -- limits as alpha -> 0 ------------------------------------------------------

@dataclass(frozen=True)
class IsotopicLimits:
    length_sin: float      # lim L(alpha) sin(alpha)
    area_sin2: float       # lim F(alpha) sin(alpha)^2
    ratio: float           # lim L(alpha)^2 / (4 pi F(alpha))
    width_energy: float    # 2 pi int a^2
    empirical_length_sin: float | None = None
    empirical_area_sin2: float | None = None
    empirical_ratio: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _extrapolate_to_zero(xs, ys):
    """Value at 0 of the interpolating polynomial through (xs, ys)."""
    coef = np.polyfit(np.asarray(xs), np.asarray(ys), len(xs) - 1)
    return float(coef[-1])


def limits(body: FourierSupport, N: int = 4096, empirical_alphas=(0.2, 0.1, 0.05)) -> IsotopicLimits:
    """Closed-form alpha -> 0 limits, with an extrapolated empirical cross-check."""
    met = metrics(body)
    phi = np.arange(N) * (TWO_PI / N)
    h = TWO_PI / N
    a = width(body, phi)
    da = width(body, phi, 1)
    length_sin = h * float(np.sum(np.sqrt(a * a + da * da)))
    even = body.c2[1::2]
    area_sin2 = met.L ** 2 / math.pi + TWO_PI * float(np.sum(even))
    width_energy = TWO_PI * h * float(np.sum(a * a))
    ratio = length_sin ** 2 / width_energy
    emp_l = emp_f = emp_r = None
    if empirical_alphas:
        curves = [curve(body, al, N) for al in empirical_alphas]
        emp_l = _extrapolate_to_zero(empirical_alphas, [c.length * math.sin(c.alpha) for c in curves])
        emp_f = _extrapolate_to_zero(empirical_alphas, [c.area * math.sin(c.alpha) ** 2 for c in curves])
        emp_r = emp_l ** 2 / (4.0 * math.pi * emp_f)
    return IsotopicLimits(length_sin, area_sin2, ratio, width_energy, emp_l, emp_f, emp_r)


# -- isotopic circles ------------------------------------------------------------

@dataclass(frozen=True)
class CircleFit:
    alpha: float
    center: tuple[float, float]
    radius: float
    deviation: float

    @property
    def is_circle(self) -> bool:
        return self.deviation <= CIRCLE_TOL

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "center": list(self.center), "radius": self.radius,
                "deviation": self.deviation, "is_circle": self.is_circle}


class _OriginFit:
    """Squared distance of C_alpha(phi) to the origin is
    ``(p^2 + p1^2 + 2 p p1 cos alpha) / sin^2 alpha``.

    Translating the body by (u, v) only adds ``u cos + v sin`` to p, so the
    samples are computed once and shifted cheaply during the centre search.
    """

    def __init__(self, body: FourierSupport, alpha: float, N: int):
        phi = np.arange(N) * (TWO_PI / N)
        psi = phi + math.pi - alpha
        self.p, self.p1 = body(phi), body(psi)
        self.c, self.s = np.cos(phi), np.sin(phi)
        self.c1, self.s1 = np.cos(psi), np.sin(psi)
        self.cos_a, self.sin_a = math.cos(alpha), math.sin(alpha)

    def __call__(self, u: float = 0.0, v: float = 0.0) -> tuple[float, float]:
        p = self.p + u * self.c + v * self.s
        p1 = self.p1 + u * self.c1 + v * self.s1
        r = np.sqrt(p * p + p1 * p1 + 2.0 * p * p1 * self.cos_a) / self.sin_a
        R = math.sqrt(float(np.mean(r * r)))
        return R, float(np.max(np.abs(r - R)) / R)


def detect_circle(body: FourierSupport, alpha: float, search: bool = False,
                  N: int = 2048) -> CircleFit:
    """Is the isotopic curve at ``alpha`` a round circle?

    Without ``search`` the circle is centred at the origin.  With it, the
    body is translated by (u, v) within ``+-a0/2`` to minimise the deviation;
    the reported centre is in the original frame.
    """
    _check_alpha(alpha)
    fit = _OriginFit(body, alpha, N)
    R, dev = fit()
    if not search or dev == 0.0:
        return CircleFit(alpha, (0.0, 0.0), R, dev)

    box = 0.5 * body.a0

    def objective(uv):
        return fit(uv[0], uv[1])[1]

    # algebraic (Kasa) circle fit of the samples gives the starting centre
    c = curve(body, alpha, N)
    A = np.column_stack([2 * c.X, 2 * c.Y, np.ones_like(c.X)])
    cx, cy, _ = np.linalg.lstsq(A, c.X ** 2 + c.Y ** 2, rcond=None)[0]
    start = np.clip([-cx, -cy], -box, box)
    best = min([np.zeros(2), start], key=objective)
    res = minimize(objective, best, method="Nelder-Mead",
                   bounds=[(-box, box), (-box, box)],
                   options={"xatol": 1e-9, "fatol": 1e-15, "maxiter": 2000})
    uv = res.x if res.fun < objective(best) else best
    R, dev = fit(uv[0], uv[1])
    return CircleFit(alpha, (-float(uv[0]), -float(uv[1])), R, dev)


def construct_quarter(c2: float = 2.5, c6: float = 1.0, c0: float = 21.5,
                      K_max: int = 16, N: int | None = None) -> tuple[FourierSupport, CircleFit]:
    """Body with ``p^2 = c0 + c2 cos 2phi + c6 cos 6phi``.

    Only harmonics congruent to 2 mod 4 appear in p^2, so
    ``p(phi)^2 + p(phi + pi/2)^2 = 2 c0`` and the body is seen under a right
    angle from the circle of radius sqrt(2 c0).
    """
    from .errors import PositivityViolation

    if not c0 > abs(c2) + abs(c6):
        raise PositivityViolation(f"c0 = {c0} must exceed |c2| + |c6| = {abs(c2) + abs(c6)}")
    radicand = quarter_radicand(c0, c2, c6)
    body, err = from_samples(lambda phi: np.sqrt(radicand(phi)), K_max=K_max, N=N)
    fit = detect_circle(body, 0.5 * math.pi)
    expected = math.sqrt(2.0 * c0)
    if abs(fit.radius - expected) > 1e-6 * expected or not fit.is_circle:
        log.warning("constructed body: radius %.9g (expected %.9g), deviation %.2e, "
                    "projection error %.2e", fit.radius, expected, fit.deviation, err)
    return body, fit


# -- Hurwitz coefficients and series identities ---------------------------------

def hurwitz_g(k: int, alpha: float) -> float:
    """g_k(alpha) = 1 + ((-1)^k / 2) ((k+1) cos((k-1) alpha) - (k-1) cos((k+1) alpha))."""
    if k < 2:
        raise ValueError("k must be >= 2")
    sign = -1.0 if k % 2 else 1.0
    return 1.0 + 0.5 * sign * ((k + 1) * math.cos((k - 1) * alpha)
                               - (k - 1) * math.cos((k + 1) * alpha))


def rational_alpha(m: int, n: int) -> float:
    """alpha = pi - (m/n) pi for coprime m, n with m odd and 0 < m < n."""
    if n < 2 or not 0 < m < n or math.gcd(m, n) != 1 or m % 2 == 0:
        raise RationalityViolation(
            f"(m, n) = ({m}, {n}) must be coprime with m odd and 0 < m < n")
    return math.pi - (m / n) * math.pi


def _check_periodicity(body: FourierSupport, n: int, tol: float = 1e-12):
    bad = [k for k in body.k if k % n and body.c2_at(int(k)) > (tol * body.a0) ** 2]
    if bad:
        raise PeriodicityViolation(f"harmonics {bad} are not multiples of n = {n}")


@dataclass(frozen=True)
class AreaSeries:
    alpha: float
    F: float
    plus: float          # coefficient 2(k^2 + 1) cos^2(alpha/2) + g_k
    minus: float         # coefficient 2(k^2 - 1) cos^2(alpha/2) + g_k
    oracle: float        # F(alpha) sin^2(alpha/2) from the sampled curve
    selected: str
    rel_error_plus: float
    rel_error_minus: float

    @property
    def prediction(self) -> float:
        return self.plus if self.selected == "plus" else self.minus

    def to_dict(self) -> dict:
        return dict(self.__dict__, prediction=self.prediction)


def area_series_terms(body: FourierSupport, alpha: float, sign: int) -> float:
    """``F + pi/(4 cos^2(alpha/2)) sum_{k>=2} (2(k^2 + sign) cos^2(alpha/2) + g_k) c_k^2``."""
    F = metrics(body).F
    cos2 = math.cos(0.5 * alpha) ** 2
    total = 0.0
    for k in range(2, body.n_coeffs + 1):
        c2 = body.c2_at(k)
        if c2:
            total += (2.0 * (k * k + sign) * cos2 + hurwitz_g(k, alpha)) * c2
    return F + math.pi / (4.0 * cos2) * total


def area_series(body: FourierSupport, m: int, n: int, N: int = 4096) -> AreaSeries:
    """Predicted ``F(alpha) sin^2(alpha/2)`` for ``alpha = pi - (m/n) pi``.

    The coefficient of c_k^2 is evaluated with both ``k^2 + 1`` and
    ``k^2 - 1``; the sampled isotopic curve decides which one holds.
    """
    alpha = rational_alpha(m, n)
    _check_periodicity(body, n)
    plus = area_series_terms(body, alpha, +1)
    minus = area_series_terms(body, alpha, -1)
    oracle = curve(body, alpha, N).area * math.sin(0.5 * alpha) ** 2
    ep = abs(plus - oracle) / abs(oracle)
    em = abs(minus - oracle) / abs(oracle)
    selected = "plus" if ep < em else "minus"
    if min(ep, em) > 1e-4 or (body.c2[1:].sum() > 0 and max(ep, em) <= 1e-4):
        log.warning("area series: ambiguous selection (plus %.2e, minus %.2e)", ep, em)
    log.info("area series at alpha=%g: coefficient k^2%s1 matches the sampled area "
             "(rel. errors: plus %.2e, minus %.2e)", alpha, "+" if selected == "plus" else "-", ep, em)
    return AreaSeries(alpha, metrics(body).F, plus, minus, oracle, selected, ep, em)


def pp1_integral(body: FourierSupport, alpha: float) -> float:
    """``int p(phi) p(phi + pi - alpha) dphi = L^2/2pi - pi sum (-1)^(k+1) c_k^2 cos(k alpha)``."""
    k = body.k
    L = TWO_PI * body.a0
    sign = np.where(k % 2 == 1, 1.0, -1.0)
    return L * L / TWO_PI - math.pi * float(np.sum(sign * body.c2 * np.cos(k * alpha)))


def pp1_quadrature(body: FourierSupport, alpha: float, N: int = 4096) -> float:
    phi = np.arange(N) * (TWO_PI / N)
    return TWO_PI / N * float(np.sum(body(phi) * body(phi + math.pi - alpha)))


@dataclass(frozen=True)
class PerimeterIdentity:
    alpha: float
    R: float
    lhs: float
    rhs: float
    residual: float
    L: float
    L_bound: float
    F: float
    F_bound: float

    @property
    def perimeter_inequality(self) -> bool:
        return self.L <= self.L_bound

    @property
    def area_inequality(self) -> bool:
        return self.F <= self.F_bound

    def to_dict(self) -> dict:
        return dict(self.__dict__, perimeter_inequality=self.perimeter_inequality,
                    area_inequality=self.area_inequality)


def perimeter_identity(body: FourierSupport, m: int, n: int, R: float | None = None,
                       deviation: float | None = None) -> PerimeterIdentity:
    """Check ``L^2 + 2pi^2 sum_{mu even} c_{n mu}^2 + 2pi^2 tan^2(alpha/2) sum_{mu odd} c_{n mu}^2
    = (2 pi R)^2 sin^2(alpha/2)`` on a body with an isotopic circle of radius R."""
    alpha = rational_alpha(m, n)
    if R is None or deviation is None:
        fit = detect_circle(body, alpha)
        R, deviation = fit.radius, fit.deviation
    if deviation > CIRCLE_TOL:
        raise NoIsotopicCircle(f"deviation {deviation:.3e} at alpha = {alpha:.6g}")
    _check_periodicity(body, n)
    met = metrics(body)
    even = odd = 0.0
    for k in range(n, body.n_coeffs + 1, n):
        if (k // n) % 2 == 0:
            even += body.c2_at(k)
        else:
            odd += body.c2_at(k)
    s2 = math.sin(0.5 * alpha) ** 2
    lhs = met.L ** 2 + 2 * math.pi ** 2 * even + 2 * math.pi ** 2 * math.tan(0.5 * alpha) ** 2 * odd
    rhs = (TWO_PI * R) ** 2 * s2
    return PerimeterIdentity(
        alpha=alpha, R=R, lhs=lhs, rhs=rhs, residual=abs(lhs - rhs) / rhs,
        L=met.L, L_bound=TWO_PI * R * math.sqrt(s2),
        F=met.F, F_bound=math.pi * R * R * s2)


# -- constant width falsification harness -----------------------------------------

@dataclass(frozen=True)
class ConstantWidthReport:
    alphas: np.ndarray
    deviations: np.ndarray
    threshold: float
    noise_floor: float
    is_disc: bool
    counterexample: bool

    @property
    def min_deviation(self) -> float:
        return float(np.min(self.deviations))

    def to_dict(self) -> dict:
        return {"min_deviation": self.min_deviation, "threshold": self.threshold,
                "noise_floor": self.noise_floor, "is_disc": self.is_disc,
                "counterexample": self.counterexample,
                "alpha_at_min": float(self.alphas[int(np.argmin(self.deviations))])}


def default_alpha_grid(n: int = 64) -> np.ndarray:
    return (np.arange(n) + 0.5) * (math.pi / n)


def disc_noise_floor(alphas, search: bool = True) -> float:
    """Largest circle deviation measured on the unit disc over ``alphas``."""
    from .support import disc

    unit = disc()
    devs = [detect_circle(unit, a, search=search).deviation for a in alphas]
    return max(max(devs), float(np.finfo(float).eps))


def constant_width_disc_test(body: FourierSupport, alphas=None, search: bool = True,
                             noise_floor: float | None = None) -> ConstantWidthReport:
    """Sweep circle detection over alpha on a constant-width body.

    A non-disc body scoring below ``10 x`` the disc noise floor would be a
    counterexample to "constant width plus an isotopic circle means disc".
    """
    ok, _ = is_constant_width(body)
    if not ok:
        raise ValueError("body is not of constant width")
    alphas = default_alpha_grid() if alphas is None else np.asarray(alphas, float)
    floor = disc_noise_floor(alphas, search) if noise_floor is None else noise_floor
    threshold = 10.0 * floor
    devs = np.array([detect_circle(body, a, search=search).deviation for a in alphas])
    is_disc = body.is_disc(tol=1e-14 * body.a0)
    counterexample = (not is_disc) and bool(np.any(devs <= threshold))
    return ConstantWidthReport(alphas, devs, threshold, floor, is_disc, counterexample)


def random_constant_width(rng: np.random.Generator, a0: float = 1.0,
                          odd=(3, 5, 7), budget: float = 0.8) -> FourierSupport:
    """Random odd-harmonic body with ``sum (k^2 - 1) c_k <= budget a0`` (hence convex)."""
    amps = rng.uniform(0.1, 1.0, len(odd))
    weights = np.array([k * k - 1 for k in odd], float)
    amps *= budget * a0 / float(np.sum(weights * amps)) * rng.uniform(0.3, 1.0)
    phases = rng.uniform(0, TWO_PI, len(odd))
    harmonics = {k: (c * math.cos(ph), c * math.sin(ph)) for k, c, ph in zip(odd, amps, phases)}
    body = FourierSupport.from_harmonics(a0, harmonics)
    check_convexity(body)
    return body
