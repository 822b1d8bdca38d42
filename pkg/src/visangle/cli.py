"""Command-line entry point.

Every command prints one JSON report (schema 1) on stdout.  Exit status is
0 when every check in the report passes, 1 when a check fails or the
computation raises, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import angle, crofton, isotopic, support
from .errors import VisangleError

SCHEMA = 1


@dataclass
class RunReport:
    command: str
    body: dict | None = None
    results: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    error: dict | None = None
    elapsed: float | None = None

    def check(self, name: str, value: float, tol: float, passed: bool | None = None, **extra):
        """Record ``value <= tol`` under ``name``; other relations pass an
        explicit verdict and name the relation in ``op``."""
        ok = bool(value <= tol) if passed is None else bool(passed)
        self.checks[name] = {"value": _num(value), "tol": _num(tol), "pass": ok, **extra}
        return ok

    @property
    def ok(self) -> bool:
        return self.error is None and all(c["pass"] for c in self.checks.values())

    def to_dict(self) -> dict:
        out = {"schema": SCHEMA, "command": self.command, "body": self.body,
               "results": _jsonable(self.results), "checks": self.checks, "ok": self.ok}
        if self.error is not None:
            out["error"] = self.error
        if self.elapsed is not None:
            out["elapsed_s"] = round(self.elapsed, 3)
        return out


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (float, int, np.floating, np.integer, np.bool_, bool)):
        return _num(obj)
    return obj


def _write_csv(path: str, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([repr(float(v)) for v in row])


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


# -- commands ------------------------------------------------------------------

def cmd_body(args, rep: RunReport):
    if args.kind == "disc":
        body = support.disc(args.r)
    elif args.kind == "perturbed":
        body = support.perturbed(args.m, args.t)
    elif args.kind == "quarter":
        body = support.quarter_symmetric(K_max=args.kmax)[0]
    else:
        body = support.load_body(args.body)
    met = support.metrics(body)
    cw, amp = support.is_constant_width(body)
    rep.body = body.to_dict()
    rep.results = {"L": met.L, "F": met.F, "deficit": met.isoperimetric_deficit,
                   "constant_width": cw, "max_even_amplitude": amp}
    rep.check("isoperimetric", -met.isoperimetric_deficit, 0.0)
    if args.out:
        support.dump_body(body, args.out)


def cmd_angle(args, rep: RunReport):
    body = support.load_body(args.body)
    rep.body = body.to_dict()
    if args.point is not None:
        x, y = _floats(args.point)
        s = angle.visual_angle_point(body, (x, y))
        w_circ = angle.visual_angle_on_circle(body, s.R, s.phi).w if s.R > body.max_p() else None
        rep.results = {"x": x, "y": y, "R": s.R, "theta": s.theta, "phi": s.phi, "w": s.w,
                       "w_fundamental": w_circ}
        if w_circ is not None:
            rep.check("solver_agreement", abs(s.w - w_circ), 1e-9)
        return
    R, N = args.circle, args.grid
    phi, theta, w, w_phi = angle.circle_samples(body, R, N)
    means = angle.circle_mean_estimates(body, R, max(N, 512))
    met = support.metrics(body)
    rep.results = {"R": R, "N": N, "w_min": float(w.min()), "w_max": float(w.max()),
                   "R_int_w_dphi": means.Rw_phi, "R_int_w_dtheta": means.Rw_theta,
                   "energy_phi": means.energy_phi, "energy_theta": means.energy_theta,
                   "two_L": 2 * met.L, "eight_F": 8 * met.F}
    rep.check("perimeter_limit", abs(means.Rw_phi - 2 * met.L) / (2 * met.L), args.tol)
    if args.emit:
        _write_csv(args.emit, ["phi", "theta", "w", "w_phi"], [phi, theta, w, w_phi])


def _cfg(args) -> crofton.ExteriorConfig:
    kw = {}
    if getattr(args, "n_theta", None):
        kw["n_theta"] = args.n_theta
    if getattr(args, "r_max_factor", None):
        kw["r_max_factor"] = args.r_max_factor
    return crofton.ExteriorConfig(**kw)


def cmd_crofton(args, rep: RunReport):
    cfg = _cfg(args)
    rep.results["config"] = {"n_theta": cfg.n_theta, "n_gauss": cfg.n_gauss,
                             "r_max_factor": cfg.r_max_factor, "tail_fraction": cfg.tail_fraction}
    if args.action == "uniqueness":
        f = crofton.weight_function(args.f)
        fit = crofton.uniqueness_experiment(f, _ints(args.ms), args.t, cfg)
        rep.results.update(fit.to_dict())
        rep.check("universal_fit_residual", fit.residual, args.tol)
        return
    body = support.load_body(args.body)
    rep.body = body.to_dict()
    if args.action == "check":
        res = crofton.exterior_integral(body, crofton.CROFTON, cfg)
        rhs = crofton.crofton_rhs(body)
        rep.results.update(res.to_dict(), rhs=rhs)
        rep.check("crofton_identity", abs(res.value - rhs) / abs(rhs), args.tol)
    else:
        f = crofton.weight_function(args.f)
        res = crofton.exterior_integral(body, f, cfg)
        series = crofton.cgr_rhs(body, f)
        rep.results.update(res.to_dict(), f=f.name, series=series)
        rep.check("series_agreement", abs(res.value - series) / max(abs(series), 1e-300), args.tol)


def cmd_isotopic(args, rep: RunReport):
    act = args.action
    if act == "construct":
        body, fit = isotopic.construct_quarter(args.c2, args.c6, args.c0, K_max=args.kmax)
        rep.body = body.to_dict()
        rep.results = {"circle": fit.to_dict(), "expected_radius": math.sqrt(2 * args.c0)}
        rep.check("circle_deviation", fit.deviation, isotopic.CIRCLE_TOL)
        if args.out:
            support.dump_body(body, args.out)
        return
    body = support.load_body(args.body)
    rep.body = body.to_dict()
    if act == "curve":
        c = isotopic.curve(body, args.alpha, args.n)
        rep.results = {"alpha": c.alpha, "length": c.length, "area": c.area,
                       "polygon_length": c.polygon_length(), "polygon_area": c.polygon_area(),
                       "isoperimetric_ratio": c.isoperimetric_ratio}
        rep.check("isoperimetric", 1.0 - c.isoperimetric_ratio, 1e-12)
        if args.emit:
            _write_csv(args.emit, ["phi", "X", "Y"], [c.phi, c.X, c.Y])
    elif act == "limits":
        lim = isotopic.limits(body)
        rep.results = lim.to_dict()
        rep.check("empirical_ratio", abs(lim.empirical_ratio - lim.ratio), 1e-2)
    elif act == "detect":
        fit = isotopic.detect_circle(body, args.alpha, search=args.search_center)
        rep.results = fit.to_dict()
        rep.check("circle_deviation", fit.deviation, isotopic.CIRCLE_TOL)
    elif act == "identities":
        _identities(body, args.m, args.n, rep)


def _identities(body, m, n, rep: RunReport):
    alpha = isotopic.rational_alpha(m, n)
    series = isotopic.area_series(body, m, n)
    fit = isotopic.detect_circle(body, alpha)
    q = isotopic.pp1_quadrature(body, alpha)
    closed = isotopic.pp1_integral(body, alpha)
    rep.results = {"alpha": alpha, "area_series": series.to_dict(), "circle": fit.to_dict(),
                   "pp1_closed": closed, "pp1_quadrature": q}
    rep.check("area_series", min(series.rel_error_plus, series.rel_error_minus), 1e-4,
              selected=series.selected)
    rep.check("pp1_integral", abs(closed - q) / abs(q), 1e-10)
    if fit.is_circle:
        ident = isotopic.perimeter_identity(body, m, n, fit.radius, fit.deviation)
        rep.results["perimeter_identity"] = ident.to_dict()
        rep.check("perimeter_identity", ident.residual, 1e-4)
        rep.check("perimeter_inequality", ident.L - ident.L_bound, 0.0)
        rep.check("area_inequality", ident.F - ident.F_bound, 0.0)


# -- presets -------------------------------------------------------------------

def preset_thm21(rep: RunReport):
    c = crofton.uniqueness_experiment(crofton.CROFTON)
    s = crofton.uniqueness_experiment(crofton.SIN3)
    rep.results = {"crofton": c.to_dict(), "sin3": s.to_dict()}
    rep.check("crofton_a", abs(c.a - 0.5), 1e-3)
    rep.check("crofton_b", abs(c.b + math.pi), 1e-3 * math.pi)
    rep.check("crofton_residual", c.residual, 1e-3)
    rep.check("sin3_not_universal", s.residual, 10 * c.residual,
              passed=s.residual >= 10 * c.residual, op=">=")


def preset_thm31(rep: RunReport):
    body = support.FourierSupport.from_harmonics(1.0, {2: (0.1, 0.0)})
    met = support.metrics(body)
    pmax = body.max_p()
    m100 = angle.circle_mean_estimates(body, 100 * pmax)
    m200 = angle.circle_mean_estimates(body, 200 * pmax)
    e100 = abs(m100.Rw_phi - 2 * met.L) / (2 * met.L)
    e200 = abs(m200.Rw_phi - 2 * met.L) / (2 * met.L)
    e8f = abs(m200.energy_phi - 8 * met.F) / (8 * met.F)
    rep.body = body.to_dict()
    rep.results = {"R100": m100.__dict__, "R200": m200.__dict__, "two_L": 2 * met.L, "eight_F": 8 * met.F}
    rep.check("perimeter_limit_R100", e100, 1e-2)
    rep.check("perimeter_limit_decreasing", e200, e100)
    rep.check("area_limit_R200", e8f, 1e-2)
    rep.check("theta_phi_agreement", abs(m200.Rw_theta - m200.Rw_phi) / (2 * met.L), 1e-2)


def preset_thm41(rep: RunReport):
    cw = support.FourierSupport.from_harmonics(1.0, {3: (0.05, 0.0)})
    ncw = support.FourierSupport.from_harmonics(1.0, {2: (0.1, 0.0)})
    ratios = [isotopic.curve(cw, a).isoperimetric_ratio - 1 for a in (0.2, 0.1, 0.05)]
    lim_cw = isotopic.limits(cw)
    lim_ncw = isotopic.limits(ncw)
    rep.results = {"constant_width_ratio_minus_one": ratios, "limits_constant_width": lim_cw.to_dict(),
                   "limits_non_constant_width": lim_ncw.to_dict()}
    rep.check("ratio_decreasing", ratios[2], ratios[1],
              passed=ratios[0] > ratios[1] > ratios[2] >= 0, op="strictly decreasing")
    rep.check("constant_width_limit", abs(lim_cw.ratio - 1), 1e-10)
    rep.check("non_constant_width_limit_above_one", lim_ncw.ratio, 1.0, passed=lim_ncw.ratio > 1, op=">")
    rep.check("empirical_matches_closed_form", abs(lim_ncw.empirical_ratio - lim_ncw.ratio), 1e-2)


def preset_thm51(rep: RunReport):
    rng = np.random.default_rng(20260101)
    alphas = isotopic.default_alpha_grid()
    floor = isotopic.disc_noise_floor(alphas)
    mins = []
    for _ in range(10):
        body = isotopic.random_constant_width(rng)
        r = isotopic.constant_width_disc_test(body, alphas, noise_floor=floor)
        mins.append(r.min_deviation)
    rep.results = {"noise_floor": floor, "min_deviations": mins}
    rep.check("no_counterexample", min(mins), 10 * floor, passed=min(mins) > 10 * floor, op=">")


def _quarter_identities(rep: RunReport):
    body, fit = isotopic.construct_quarter()
    rep.body = body.to_dict()
    ident = isotopic.perimeter_identity(body, 1, 2, fit.radius, fit.deviation)
    return body, fit, ident


def preset_thm52(rep: RunReport):
    body, fit, ident = _quarter_identities(rep)
    series = isotopic.area_series(body, 1, 2)
    rep.results = {"circle": fit.to_dict(), "F": ident.F, "F_bound": ident.F_bound,
                   "area_series": series.to_dict()}
    rep.check("circle_deviation", fit.deviation, isotopic.CIRCLE_TOL)
    rep.check("area_inequality", ident.F - ident.F_bound, 0.0)
    rep.check("area_series", min(series.rel_error_plus, series.rel_error_minus), 1e-4,
              selected=series.selected)


def preset_thm53(rep: RunReport):
    body, fit, ident = _quarter_identities(rep)
    alpha = 0.5 * math.pi
    closed, quad = isotopic.pp1_integral(body, alpha), isotopic.pp1_quadrature(body, alpha)
    rep.results = {"circle": fit.to_dict(), "identity": ident.to_dict(),
                   "pp1_closed": closed, "pp1_quadrature": quad}
    rep.check("perimeter_identity", ident.residual, 1e-4)
    rep.check("perimeter_inequality", ident.L - ident.L_bound, 0.0)
    rep.check("pp1_integral", abs(closed - quad) / abs(quad), 1e-10)


PRESETS: dict[str, Callable[[RunReport], None]] = {
    "thm21": preset_thm21, "thm31": preset_thm31, "thm41": preset_thm41,
    "thm51": preset_thm51, "thm52": preset_thm52, "thm53": preset_thm53,
}


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="visangle", description=__doc__.splitlines()[0])
    ap.add_argument("--preset", choices=sorted(PRESETS), help="run a built-in demonstration")
    ap.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    sub = ap.add_subparsers(dest="command")

    b = sub.add_parser("body", help="generate or inspect a body")
    b.add_argument("--kind", choices=["disc", "perturbed", "quarter", "file"], default="file")
    b.add_argument("--body")
    b.add_argument("--r", type=float, default=1.0)
    b.add_argument("--m", type=int, default=2)
    b.add_argument("--t", type=float, default=0.1)
    b.add_argument("--kmax", type=int, default=16)
    b.add_argument("--out")

    a = sub.add_parser("angle", help="visual angle at a point or on a circle")
    a.add_argument("--body", required=True)
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--point", help="x,y")
    g.add_argument("--circle", type=float, metavar="R")
    a.add_argument("--grid", type=int, default=1024)
    a.add_argument("--emit", metavar="PATH", help="CSV with columns phi,theta,w,w_phi")
    a.add_argument("--tol", type=float, default=1e-2)

    c = sub.add_parser("crofton", help="exterior integrals of functions of the visual angle")
    csub = c.add_subparsers(dest="action", required=True)
    for name in ("check", "integral", "uniqueness"):
        p = csub.add_parser(name)
        if name != "uniqueness":
            p.add_argument("--body", required=True)
        if name != "check":
            p.add_argument("--f", default="crofton",
                           help="crofton|sin3|disc_area|cubic or a sympy expression in w")
        if name == "uniqueness":
            p.add_argument("--ms", default="2,3,4,5")
            p.add_argument("--t", type=float, default=0.03)
        p.add_argument("--tol", type=float, default=1e-3)
        p.add_argument("--n-theta", type=int)
        p.add_argument("--r-max-factor", type=float)

    i = sub.add_parser("isotopic", help="isotopic curves and circles")
    isub = i.add_subparsers(dest="action", required=True)
    p = isub.add_parser("curve")
    p.add_argument("--body", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, default=2048)
    p.add_argument("--emit", metavar="PATH", help="CSV with columns phi,X,Y")
    p = isub.add_parser("limits")
    p.add_argument("--body", required=True)
    p = isub.add_parser("detect")
    p.add_argument("--body", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--search-center", action="store_true")
    p = isub.add_parser("construct")
    p.add_argument("--c0", type=float, default=21.5)
    p.add_argument("--c2", type=float, default=2.5)
    p.add_argument("--c6", type=float, default=1.0)
    p.add_argument("--kmax", type=int, default=16)
    p.add_argument("--out")
    p = isub.add_parser("identities")
    p.add_argument("--body", required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n", type=int, default=2)
    return ap


COMMANDS = {"body": cmd_body, "angle": cmd_angle, "crofton": cmd_crofton, "isotopic": cmd_isotopic}


def run(argv: list[str] | None = None) -> tuple[RunReport, int]:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.preset:
        name = f"preset {args.preset}"
        handler = lambda rep: PRESETS[args.preset](rep)  # noqa: E731
    elif args.command:
        name = " ".join(x for x in (args.command, getattr(args, "action", None)) if x)
        handler = lambda rep: COMMANDS[args.command](args, rep)  # noqa: E731
    else:
        ap.error("a subcommand or --preset is required")
    rep = RunReport(command=name)
    start = time.perf_counter()
    try:
        handler(rep)
    except (VisangleError, OSError, ValueError, KeyError) as exc:
        rep.error = {"type": type(exc).__name__, "message": str(exc)}
    if args.timing:
        rep.elapsed = time.perf_counter() - start
    return rep, 0 if rep.ok else 1


def main(argv: list[str] | None = None) -> int:
    rep, code = run(argv)
    json.dump(rep.to_dict(), sys.stdout, indent=2, sort_keys=False)
    sys.stdout.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
