"""Convex bodies as truncated Fourier support functions.

A body is stored as ``p(phi) = a0 + sum_k a_k cos(k phi) + b_k sin(k phi)``
with dense coefficient arrays for k = 1..K.  Everything else in the package
(visual angles, isotopic curves, exterior integrals) reads p, p' and p''
from here.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import ConvexityViolation, PositivityViolation, ProjectionError

TWO_PI = 2.0 * math.pi
CONVEXITY_MARGIN = 1e-9


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FourierSupport:
    """Support function of a planar convex body.

    ``a[k-1]`` and ``b[k-1]`` hold the cosine and sine coefficients of
    harmonic k.  Instances are immutable; use :func:`translate`,
    :func:`rotate` or the generators to derive new bodies.
    """

    a0: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _frozen(self.a)
        b = _frozen(self.b)
        if a.shape != b.shape:
            raise ValueError("cosine and sine coefficient arrays differ in length")
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_harmonics(
        cls, a0: float, harmonics: Mapping[int, tuple[float, float]] | Iterable = (),
        *, check: bool = True,
    ) -> "FourierSupport":
        """Build from ``{k: (a_k, b_k)}`` or an iterable of ``(k, a_k, b_k)``."""
        if isinstance(harmonics, Mapping):
            items = [(int(k), float(ab[0]), float(ab[1])) for k, ab in harmonics.items()]
        else:
            items = [(int(k), float(ak), float(bk)) for k, ak, bk in harmonics]
        kmax = max((k for k, _, _ in items), default=0)
        a = np.zeros(kmax)
        b = np.zeros(kmax)
        for k, ak, bk in items:
            if k < 1:
                raise ValueError(f"harmonic index must be >= 1, got {k}")
            a[k - 1] += ak
            b[k - 1] += bk
        body = cls(a0, a, b)
        if check:
            check_convexity(body)
        return body

    @property
    def n_coeffs(self) -> int:
        return self.a.size

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, self.a.size + 1)

    @property
    def K_max(self) -> int:
        nz = np.flatnonzero((self.a != 0) | (self.b != 0))
        return int(nz[-1] + 1) if nz.size else 0

    @property
    def c2(self) -> np.ndarray:
        """Squared amplitudes c_k^2 = a_k^2 + b_k^2 for k = 1..K."""
        return self.a ** 2 + self.b ** 2

    def c2_at(self, k: int) -> float:
        return float(self.c2[k - 1]) if 1 <= k <= self.a.size else 0.0

    def __call__(self, phi, order: int = 0):
        return evaluate(self, phi, order)

    def derivs(self, phi):
        """Return ``(p, p', p'')`` at ``phi`` in one pass."""
        return _harmonic_sums(self, phi, 2)

    def max_p(self, n: int | None = None) -> float:
        phi = _check_grid(self, n)
        return float(np.max(evaluate(self, phi)))

    def is_disc(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.a[1:]) <= tol) and np.all(np.abs(self.b[1:]) <= tol))

    def __repr__(self) -> str:
        terms = [f"a0={self.a0:g}"]
        for k, ak, bk in zip(self.k, self.a, self.b):
            if ak or bk:
                terms.append(f"{k}:({ak:g},{bk:g})")
        return f"FourierSupport({', '.join(terms)})"

    def to_dict(self) -> dict:
        return {
            "a0": self.a0,
            "harmonics": [
                {"k": int(k), "a": float(ak), "b": float(bk)}
                for k, ak, bk in zip(self.k, self.a, self.b)
                if ak != 0.0 or bk != 0.0
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping, *, check: bool = True) -> "FourierSupport":
        harmonics = [(h["k"], h.get("a", 0.0), h.get("b", 0.0)) for h in data.get("harmonics", [])]
        return cls.from_harmonics(data["a0"], harmonics, check=check)


@dataclass(frozen=True)
class BodyMetrics:
    L: float
    F: float
    width: Callable[[np.ndarray], np.ndarray]

    @property
    def isoperimetric_deficit(self) -> float:
        return self.L ** 2 - 4.0 * math.pi * self.F


@dataclass(frozen=True, eq=False)
class RotatedSupport:
    """Coefficients of ``p1(phi) = p(phi + pi - delta)``."""

    delta: float
    a0: float
    A: np.ndarray
    B: np.ndarray

    def as_body(self) -> FourierSupport:
        return FourierSupport(self.a0, self.A, self.B)


def _harmonic_sums(body: FourierSupport, phi, max_order: int):
    phi = np.asarray(phi, dtype=float)
    p = np.full(phi.shape, body.a0)
    dp = np.zeros(phi.shape) if max_order >= 1 else None
    d2p = np.zeros(phi.shape) if max_order >= 2 else None
    if body.a.size == 0:
        return p, dp, d2p
    c1, s1 = np.cos(phi), np.sin(phi)
    ck, sk = c1, s1
    for idx in range(body.a.size):
        k = idx + 1
        ak, bk = body.a[idx], body.b[idx]
        if ak != 0.0 or bk != 0.0:
            term = ak * ck + bk * sk
            p = p + term
            if dp is not None:
                dp = dp + k * (bk * ck - ak * sk)
            if d2p is not None:
                d2p = d2p - (k * k) * term
        if idx + 1 < body.a.size:
            # angle-addition recurrence; resynchronise periodically to bound drift
            if k % 8 == 0:
                ck, sk = np.cos((k + 1) * phi), np.sin((k + 1) * phi)
            else:
                ck, sk = ck * c1 - sk * s1, sk * c1 + ck * s1
    return p, dp, d2p


def evaluate(body: FourierSupport, phi, order: int = 0):
    """p, p' or p'' at ``phi`` (scalar or array), by term-by-term differentiation."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    out = _harmonic_sums(body, phi, order)[order]
    return float(out) if np.ndim(out) == 0 else out


def _check_grid(body: FourierSupport, n: int | None = None) -> np.ndarray:
    n = n or max(1024, 16 * body.n_coeffs)
    return np.arange(n) * (TWO_PI / n)


def check_convexity(body: FourierSupport, n: int | None = None) -> None:
    """Raise unless p > 0 and p + p'' > 0 on the check grid (with a small margin)."""
    phi = _check_grid(body, n)
    p, _, d2p = _harmonic_sums(body, phi, 2)
    margin = CONVEXITY_MARGIN * abs(body.a0)
    if body.a0 <= 0 or np.min(p) <= margin:
        raise PositivityViolation(
            f"support function not positive: min p = {np.min(p):.3e}")
    curv = p + d2p
    if np.min(curv) <= margin:
        i = int(np.argmin(curv))
        raise ConvexityViolation(
            f"p + p'' = {curv[i]:.3e} <= 0 at phi = {phi[i]:.6f}")


def is_convex(body: FourierSupport) -> bool:
    try:
        check_convexity(body)
    except ConvexityViolation:
        return False
    return True


def width(body: FourierSupport, phi, order: int = 0):
    """a(phi) = p(phi) + p(phi + pi), or its derivatives."""
    phi = np.asarray(phi, dtype=float)
    return evaluate(body, phi, order) + evaluate(body, phi + math.pi, order)


def metrics(body: FourierSupport) -> BodyMetrics:
    check_convexity(body)
    k2 = body.k.astype(float) ** 2
    L = TWO_PI * body.a0
    F = math.pi * body.a0 ** 2 + 0.5 * math.pi * float(np.sum((1.0 - k2) * body.c2))
    return BodyMetrics(L=L, F=F, width=lambda phi, _b=body: width(_b, phi))


def is_constant_width(body: FourierSupport, tol: float = 1e-12) -> tuple[bool, float]:
    """Constant width iff every even harmonic (k >= 2) vanishes."""
    even = body.c2[1::2]
    amp = float(np.sqrt(np.max(even))) if even.size else 0.0
    return amp <= tol * abs(body.a0), amp


def from_samples(
    g: Callable[[np.ndarray], np.ndarray],
    K_max: int = 16,
    N: int | None = None,
    tol: float | None = None,
) -> tuple[FourierSupport, float]:
    """Discrete Fourier projection of a positive periodic function.

    Returns the truncated body and the max grid deviation ``|g - p|``.
    """
    N = N or max(1024, 8 * K_max)
    if N < 4 * K_max:
        raise ValueError(f"grid size {N} < 4*K_max = {4 * K_max}")
    phi = np.arange(N) * (TWO_PI / N)
    vals = np.asarray(g(phi), dtype=float) * np.ones(N)
    spectrum = np.fft.rfft(vals) / N
    a0 = spectrum[0].real
    a = 2.0 * spectrum[1:K_max + 1].real
    b = -2.0 * spectrum[1:K_max + 1].imag
    # numerical dust from exact inputs would otherwise show up as "harmonics"
    dust = 1e-14 * max(abs(a0), 1.0)
    a[np.abs(a) < dust] = 0.0
    b[np.abs(b) < dust] = 0.0
    body = FourierSupport(a0, a, b)
    err = float(np.max(np.abs(vals - evaluate(body, phi))))
    if tol is not None and err > tol:
        raise ProjectionError(f"projection error {err:.3e} exceeds tolerance {tol:.3e}")
    check_convexity(body)
    return body, err


def rotate(body: FourierSupport, delta: float) -> RotatedSupport:
    """Fourier coefficients of ``p(phi + pi - delta)``."""
    k = body.k
    sign = np.where(k % 2 == 0, -1.0, 1.0)  # (-1)^(k+1)
    ck, sk = np.cos(k * delta), np.sin(k * delta)
    A = sign * (-body.a * ck + body.b * sk)
    B = sign * (-body.a * sk - body.b * ck)
    return RotatedSupport(float(delta), body.a0, _frozen(A), _frozen(B))


def translate(body: FourierSupport, u: float, v: float) -> FourierSupport:
    """Support function of the body shifted by (u, v); only harmonic 1 moves."""
    a = np.array(body.a) if body.n_coeffs else np.zeros(1)
    b = np.array(body.b) if body.n_coeffs else np.zeros(1)
    a[0] += u
    b[0] += v
    return FourierSupport(body.a0, a, b)


def boundary_point(body: FourierSupport, phi):
    """Boundary point with outer normal phi: ``p n(phi) + p' n(phi)^perp``."""
    p, dp, _ = body.derivs(phi)
    c, s = np.cos(phi), np.sin(phi)
    return p * c - dp * s, p * s + dp * c


def radial_function(body: FourierSupport, theta, tol: float = 1e-13):
    """Boundary radius rho(theta) and the normal angle of that boundary point.

    The boundary point with normal phi sits at polar angle
    ``phi + atan2(p', p)``, strictly increasing in phi for a strictly convex
    body around the origin; the normal lies within pi/2 of theta.
    """
    from ._roots import solve_bracketed

    theta = np.asarray(theta, dtype=float)
    shape = theta.shape
    th = theta.reshape(-1)

    def resid(phi, s):
        p, dp, d2p = body.derivs(phi)
        return phi + np.arctan2(dp, p) - th[s], p * (p + d2p) / (p * p + dp * dp)

    phi = solve_bracketed(resid, th - 0.5 * math.pi, th + 0.5 * math.pi, fprime=True, xtol=tol)
    p, dp, _ = body.derivs(phi)
    return np.hypot(p, dp).reshape(shape), phi.reshape(shape)


# -- generators ---------------------------------------------------------------

def disc(r: float = 1.0) -> FourierSupport:
    return FourierSupport.from_harmonics(r, {})


def perturbed(m: int, t: float) -> FourierSupport:
    """p = 1 + t cos(m phi); convex for 0 < t < 1/(m^2 - 1)."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    if m > 1 and not 0 < t < 1.0 / (m * m - 1):
        raise ConvexityViolation(f"t = {t} outside (0, 1/(m^2-1)) = (0, {1.0 / (m * m - 1):.6g})")
    return FourierSupport.from_harmonics(1.0, {m: (t, 0.0)})


def constant_width(a0: float, harmonics: Mapping[int, tuple[float, float]]) -> FourierSupport:
    bad = [k for k in harmonics if k % 2 == 0]
    if bad:
        raise ValueError(f"constant-width bodies carry odd harmonics only; got k={bad}")
    return FourierSupport.from_harmonics(a0, harmonics)


def quarter_radicand(c0: float = 21.5, c2: float = 2.5, c6: float = 1.0) -> Callable:
    """p^2 = c0 + c2 cos 2phi + c6 cos 6phi (harmonics congruent to 2 mod 4 only)."""
    return lambda phi: c0 + c2 * np.cos(2 * phi) + c6 * np.cos(6 * phi)


def quarter_symmetric(c0: float = 21.5, c2: float = 2.5, c6: float = 1.0,
                      K_max: int = 16, N: int | None = None) -> tuple[FourierSupport, float]:
    radicand = quarter_radicand(c0, c2, c6)
    phi = np.arange(4096) * (TWO_PI / 4096)
    if np.min(radicand(phi)) <= 0:
        raise PositivityViolation("c0 + c2 cos 2phi + c6 cos 6phi must stay positive")
    return from_samples(lambda x: np.sqrt(radicand(x)), K_max=K_max, N=N)


def generate(kind: str, **params) -> FourierSupport:
    """Named generators: ``disc``, ``perturbed``, ``constant_width``, ``quarter_symmetric``."""
    if kind == "disc":
        return disc(params.get("r", 1.0))
    if kind == "perturbed":
        return perturbed(int(params["m"]), float(params["t"]))
    if kind == "constant_width":
        return constant_width(params.get("a0", 1.0), params["harmonics"])
    if kind == "quarter_symmetric":
        return quarter_symmetric(**params)[0]
    raise ValueError(f"unknown body kind {kind!r}")


def load_body(path: str | Path) -> FourierSupport:
    with open(path) as fh:
        return FourierSupport.from_dict(json.load(fh))


def dump_body(body: FourierSupport, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(body.to_dict(), fh, indent=2)
        fh.write("\n")
