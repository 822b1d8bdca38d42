import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from visangle import angle, support
from visangle.errors import CircleTooSmall, DegenerateTangency, PointInsideBody

from conftest import random_body

TWO_PI = 2 * math.pi


# -- arbitrary points ------------------------------------------------------------

@pytest.mark.parametrize("P, expected", [
    ((2.0, 0.0), math.pi / 3),
    ((0.0, -2.0), math.pi / 3),
    ((100.0, 0.0), 2 * math.asin(0.01)),
    ((3.0, 4.0), 2 * math.asin(0.2)),
])
def test_disc_point_closed_form(unit_disc, P, expected):
    s = angle.visual_angle_point(unit_disc, P)
    assert s.w == pytest.approx(expected, abs=1e-13)


def test_far_point_sees_width(unit_disc):
    s = angle.visual_angle_point(unit_disc, (100.0, 0.0))
    # 2 asin(1/R) = 2/R + 1/(3 R^3) + ...
    assert s.w == pytest.approx(0.02 + 1 / 3e6, abs=1e-10)
    assert s.R * s.w == pytest.approx(2.0, abs=1e-4)


def test_point_and_circle_solvers_agree_example(ellipse_like):
    s = angle.visual_angle_point(ellipse_like, (10.0, 0.0))
    c = angle.visual_angle_on_circle(ellipse_like, 10.0, s.phi)
    assert c.theta % TWO_PI == pytest.approx(0.0, abs=1e-10) or c.theta % TWO_PI == pytest.approx(TWO_PI, abs=1e-10)
    assert abs(s.w - c.w) <= 1e-9


def test_point_errors(unit_disc, ellipse_like):
    with pytest.raises(PointInsideBody):
        angle.visual_angle_point(unit_disc, (0.2, 0.1))
    x, y = support.boundary_point(ellipse_like, 0.4)
    with pytest.raises((DegenerateTangency, PointInsideBody)):
        angle.visual_angle_point(ellipse_like, (float(x), float(y)))


def test_visual_angle_points_vectorised(ellipse_like):
    x = np.array([3.0, -4.0, 0.5])
    y = np.array([0.0, 1.0, 5.0])
    w, phi1, phi2 = angle.visual_angle_points(ellipse_like, x, y)
    for i in range(3):
        assert w[i] == pytest.approx(angle.visual_angle_point(ellipse_like, (x[i], y[i])).w, abs=1e-13)
    # both normals are genuine tangencies: P . n = p
    for phi in (phi1, phi2):
        np.testing.assert_allclose(x * np.cos(phi) + y * np.sin(phi), ellipse_like(phi), atol=1e-11)


@given(seed=st.integers(0, 2**32 - 1), u=st.floats(0, 1), phi=st.floats(0, TWO_PI))
@settings(max_examples=100, deadline=None)
def test_solver_agreement(seed, u, phi):
    body = random_body(np.random.default_rng(seed))
    pmax = body.max_p()
    R = pmax * (2 + 98 * u)
    c = angle.visual_angle_on_circle(body, R, phi)
    s = angle.visual_angle_point(body, (R * math.cos(c.theta), R * math.sin(c.theta)))
    assert abs(s.w - c.w) <= 1e-9
    assert np.angle(np.exp(1j * (s.phi - phi))) == pytest.approx(0.0, abs=1e-8)


# -- fundamental relation ------------------------------------------------------

@pytest.mark.parametrize("r, R", [(1.0, 2.0), (1.0, 1.01), (2.0, 7.0), (0.5, 100.0)])
def test_disc_circle_closed_form(r, R):
    body = support.disc(r)
    phi = np.linspace(0, TWO_PI, 7)
    w = angle.solve_w(body, R, phi)
    np.testing.assert_allclose(w, 2 * math.asin(r / R), atol=1e-13)
    np.testing.assert_allclose(w, math.acos(1 - 2 * r * r / (R * R)), atol=1e-12)


def test_fundamental_residual_vanishes(rng):
    body = random_body(rng)
    R = 3 * body.max_p()
    phi = rng.uniform(0, TWO_PI, 200)
    w = angle.solve_w(body, R, phi)
    assert np.max(np.abs(angle.fundamental_residual(body, R, phi, w))) < 1e-11 * R * R
    assert np.all((w > 0) & (w < math.pi))


def test_quarter_body_sees_right_angle_on_its_circle(quarter):
    R = math.sqrt(43)
    w = angle.visual_angle_on_circle(quarter, R, 0.0).w
    # K_max = 16 truncation leaves a few 1e-7 in w
    assert w == pytest.approx(math.pi / 2, abs=1e-6)
    body32, err = support.quarter_symmetric(K_max=32)
    assert err < 1e-9
    assert abs(angle.fundamental_residual(body32, R, 0.0, math.pi / 2)) <= 1e-8
    assert angle.visual_angle_on_circle(body32, R, 0.0).w == pytest.approx(math.pi / 2, abs=1e-9)


def test_circle_too_small(ellipse_like):
    with pytest.raises(CircleTooSmall):
        angle.solve_w(ellipse_like, 1.05, 0.0)
    with pytest.raises(CircleTooSmall):
        angle.circle_mean_estimates(ellipse_like, 1.1, 512)


# -- derivative --------------------------------------------------------------

def test_disc_w_phi_is_zero(unit_disc):
    phi = np.linspace(0, TWO_PI, 9)
    np.testing.assert_allclose(angle.w_phi_on_circle(unit_disc, 3.0, phi), 0.0, atol=1e-15)


def test_w_phi_scaled_tends_to_width_derivative(ellipse_like):
    # a(phi) = 2 + 0.2 cos 2phi, a'(pi/4) = -0.4
    vals = [R * angle.w_phi_on_circle(ellipse_like, R, math.pi / 4) for R in (50.0, 500.0, 5000.0)]
    errs = [abs(v + 0.4) for v in vals]
    assert errs[0] > errs[1] > errs[2]
    # first-order convergence in 1/R
    assert errs[1] < 1e-3 and errs[2] < 1e-4
    assert errs[1] / errs[2] == pytest.approx(10, rel=0.1)


@given(seed=st.integers(0, 2**32 - 1), u=st.floats(0, 1))
@settings(max_examples=30, deadline=None)
def test_implicit_derivative_matches_finite_differences(seed, u):
    rng = np.random.default_rng(seed)
    body = random_body(rng)
    R = body.max_p() * (1.5 + 30 * u)
    phi = rng.uniform(0, TWO_PI, 8)
    d = angle.w_phi_diagnostics(body, R, phi)
    fd = d["fd"]
    mask = np.abs(fd) > 1e-6  # away from symmetry zeros
    np.testing.assert_allclose(d["derived"][mask], fd[mask], rtol=1e-4, atol=1e-8)


def test_printed_denominator_is_off(ellipse_like):
    phi = np.array([0.3, 0.7, 1.1])
    d = angle.w_phi_diagnostics(ellipse_like, 3.0, phi)
    assert d["derived_agrees"]
    assert not d["printed_agrees"]
    assert d["printed_max_rel_dev"] > 1e-2


def test_derivative_disagreement_is_logged(ellipse_like, caplog, monkeypatch):
    monkeypatch.setattr(angle, "_printed_reported", False)
    with caplog.at_level(logging.WARNING, logger="visangle.angle"):
        angle.w_phi_on_circle(ellipse_like, 3.0, 0.3)
    assert any("printed" in r.message for r in caplog.records)
    assert not any(r.levelno >= logging.ERROR for r in caplog.records)


# -- coordinates -------------------------------------------------------------

def test_polar_to_body_param_disc(unit_disc):
    theta = np.array([math.pi / 3, 1.0, -2.0])
    np.testing.assert_allclose(angle.polar_to_body_param(unit_disc, 2.0, theta), theta - math.pi / 3, atol=1e-12)


def test_polar_to_body_param_residual():
    body = support.FourierSupport.from_harmonics(1.0, {1: (0.1, 0.0)})
    phi = angle.polar_to_body_param(body, 10.0, 1.0)
    assert abs(phi + math.acos(body(phi) / 10.0) - 1.0) <= 1e-12


def test_polar_param_far_away(ellipse_like):
    phi = angle.polar_to_body_param(ellipse_like, 1e6, 1.0)
    assert phi == pytest.approx(1.0 - math.pi / 2, abs=2e-6)


@given(seed=st.integers(0, 2**32 - 1), theta=st.floats(0, TWO_PI))
@settings(max_examples=40, deadline=None)
def test_w_decreases_along_rays(seed, theta):
    body = random_body(np.random.default_rng(seed))
    pm = body.max_p()
    Rs = pm * np.array([1.5, 2.0, 4.0, 10.0, 50.0])
    w = [float(angle.visual_angle_polar(body, R, theta)) for R in Rs]
    assert all(a > b for a, b in zip(w, w[1:]))


# -- circle means and limits ---------------------------------------------------

def test_disc_circle_mean_closed_form(unit_disc):
    R = 100.0
    m = angle.circle_mean_estimates(unit_disc, R)
    exact = TWO_PI * R * 2 * math.asin(1 / R)
    assert m.Rw_phi == pytest.approx(exact, rel=1e-13)
    assert m.Rw_phi == pytest.approx(12.5665, abs=1e-4)
    assert m.Rw_theta == pytest.approx(exact, rel=1e-13)


def test_symmetric_body_energy_limit(ellipse_like):
    R = 200 * ellipse_like.max_p()
    m = angle.circle_mean_estimates(ellipse_like, R)
    F = support.metrics(ellipse_like).F
    assert abs(m.energy_phi - 8 * F) / (8 * F) <= 1e-2
    assert abs(m.energy_theta - 8 * F) / (8 * F) <= 1e-2


@pytest.mark.parametrize("mult", [20, 100, 400])
def test_phi_and_theta_means_approach_twice_perimeter(mult):
    body = support.FourierSupport.from_harmonics(1.0, {1: (0.2, 0.1), 2: (0.05, 0.0), 3: (0.0, 0.02)})
    L = support.metrics(body).L
    m = angle.circle_mean_estimates(body, mult * body.max_p())
    tol = 5.0 / mult**2
    assert abs(m.Rw_phi - 2 * L) / (2 * L) < tol
    assert abs(m.Rw_theta - 2 * L) / (2 * L) < tol


def test_disc_width_limit_rate(unit_disc):
    e10 = float(angle.width_limit_error(unit_disc, 10.0, 0.0))
    e100 = float(angle.width_limit_error(unit_disc, 100.0, 0.0))
    assert e10 == pytest.approx(1 / (3 * 100), rel=1e-2)
    assert e10 / e100 == pytest.approx(100, rel=1e-2)


def test_width_limit_uniform(ellipse_like):
    phi = np.linspace(0, TWO_PI, 64, endpoint=False)
    errs = [np.max(np.abs(angle.width_limit_error(ellipse_like, R, phi))) for R in (10, 100, 1000)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3
    assert errs[1] / errs[2] == pytest.approx(10, rel=0.05)


def test_circle_samples_columns(ellipse_like):
    phi, theta, w, w_phi = angle.circle_samples(ellipse_like, 5.0, 64)
    assert phi.shape == theta.shape == w.shape == w_phi.shape == (64,)
    assert np.all(np.diff(theta) > 0)
