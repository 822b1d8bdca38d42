import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from visangle import support
from visangle.errors import ConvexityViolation, PositivityViolation, ProjectionError
from visangle.support import FourierSupport

from conftest import random_body

TWO_PI = 2 * math.pi


def trapz_periodic(vals):
    return float(np.mean(vals)) * TWO_PI


@pytest.mark.parametrize(
    "body, phi, order, expected",
    [
        (support.disc(1.0), 0.7, 0, 1.0),
        (FourierSupport.from_harmonics(1.0, {3: (0.1, 0.0)}), 0.0, 2, -0.9),
        (support.perturbed(2, 0.2), math.pi / 2, 0, 0.8),
        (FourierSupport.from_harmonics(1.0, {1: (0.0, 0.3)}), math.pi / 2, 1, 0.0),
        (FourierSupport.from_harmonics(1.0, {1: (0.0, 0.3)}), 0.0, 1, 0.3),
    ],
)
def test_evaluate_examples(body, phi, order, expected):
    assert support.evaluate(body, phi, order) == pytest.approx(expected, abs=1e-15)


def test_derivatives_match_finite_differences(rng):
    body = random_body(rng, K=8)
    phi = rng.uniform(0, TWO_PI, 50)
    h = 1e-5
    p0, p1, p2 = body.derivs(phi)
    fd1 = (body(phi + h) - body(phi - h)) / (2 * h)
    fd2 = (body(phi + h) - 2 * p0 + body(phi - h)) / h**2
    np.testing.assert_allclose(p1, fd1, atol=1e-9)
    np.testing.assert_allclose(p2, fd2, atol=1e-5)


def test_high_order_harmonics_evaluate_exactly():
    # the angle-addition recurrence must not drift at large k
    body = FourierSupport.from_harmonics(1.0, {40: (1e-4, 2e-4)}, check=False)
    phi = np.linspace(0, TWO_PI, 97)
    direct = 1.0 + 1e-4 * np.cos(40 * phi) + 2e-4 * np.sin(40 * phi)
    np.testing.assert_allclose(body(phi), direct, atol=1e-15)
    np.testing.assert_allclose(body(phi, 2), -1600 * (direct - 1.0), atol=1e-12)


@pytest.mark.parametrize(
    "body, L, F",
    [
        (support.disc(1.0), TWO_PI, math.pi),
        (support.disc(2.5), 5 * math.pi, math.pi * 6.25),
        (support.perturbed(2, 0.2), TWO_PI, math.pi - (math.pi / 2) * 3 * 0.04),
        (support.perturbed(3, 0.1), TWO_PI, math.pi - (math.pi / 2) * 8 * 0.01),
        (support.perturbed(5, 0.03), TWO_PI, math.pi - (math.pi / 2) * 24 * 0.0009),
        (FourierSupport.from_harmonics(1.0, {3: (0.05, 0.0)}), TWO_PI, math.pi - (math.pi / 2) * 8 * 0.0025),
    ],
)
def test_metrics_examples(body, L, F):
    m = support.metrics(body)
    assert m.L == pytest.approx(L, rel=1e-14)
    assert m.F == pytest.approx(F, rel=1e-14)


def test_constant_width_perimeter_is_pi_times_width(triangle_like):
    m = support.metrics(triangle_like)
    phi = np.linspace(0, TWO_PI, 33)
    a = support.width(triangle_like, phi)
    np.testing.assert_allclose(a, 2.0, atol=1e-15)
    assert m.L == pytest.approx(math.pi * 2.0, rel=1e-15)


@pytest.mark.parametrize(
    "body, flag, amp",
    [
        (FourierSupport.from_harmonics(1.0, {3: (0.05, 0.0)}), True, 0.0),
        (FourierSupport.from_harmonics(1.0, {2: (0.1, 0.0)}), False, 0.1),
        (support.disc(), True, 0.0),
    ],
)
def test_is_constant_width(body, flag, amp):
    got, got_amp = support.is_constant_width(body)
    assert got is flag
    assert got_amp == pytest.approx(amp, abs=1e-16)


def test_convexity_violations():
    with pytest.raises(ConvexityViolation):
        support.perturbed(2, 0.5)
    with pytest.raises(ConvexityViolation):
        FourierSupport.from_harmonics(1.0, {4: (0.1, 0.0)})  # 15 * 0.1 > 1
    # p changes sign: origin outside
    with pytest.raises(PositivityViolation):
        FourierSupport.from_harmonics(1.0, {1: (1.5, 0.0)})
    assert issubclass(PositivityViolation, ConvexityViolation)


def test_perturbed_example():
    body = support.perturbed(3, 0.1)
    assert body.a0 == 1.0 and body.a[2] == 0.1 and body.K_max == 3


def test_body_is_immutable():
    body = support.perturbed(2, 0.1)
    with pytest.raises(ValueError):
        body.a[0] = 1.0
    with pytest.raises(AttributeError):
        body.a0 = 3.0


def test_from_samples_examples():
    body, err = support.from_samples(lambda phi: 2.0 + 0 * phi)
    assert body.a0 == pytest.approx(2.0) and err < 1e-15
    assert not np.any(body.c2)

    body, err = support.from_samples(lambda phi: 1 + 0.3 * np.cos(phi))
    assert body.a0 == pytest.approx(1.0, abs=1e-15)
    assert body.a[0] == pytest.approx(0.3, abs=1e-15)
    assert err < 1e-14


def test_from_samples_tolerance_is_enforced():
    g = lambda phi: np.sqrt(15 + 9 * np.cos(phi) ** 2 + 4 * np.sin(phi) ** 2 + np.cos(6 * phi))
    with pytest.raises(ProjectionError):
        support.from_samples(g, K_max=4, tol=1e-8)


def test_quarter_symmetric_matches_square_root_example():
    g = lambda phi: np.sqrt(15 + 9 * np.cos(phi) ** 2 + 4 * np.sin(phi) ** 2 + np.cos(6 * phi))
    body, err = support.from_samples(g, K_max=16)
    q, qerr = support.quarter_symmetric()
    np.testing.assert_allclose(q.a, body.a, atol=1e-14)
    assert err == pytest.approx(qerr, abs=1e-14)
    assert err < 1e-5
    # p^2 carries harmonics only at 0, 2, 6 up to the projection error
    phi = np.arange(2048) * TWO_PI / 2048
    spectrum = np.abs(np.fft.rfft(body(phi) ** 2)) / 2048
    others = np.delete(spectrum[:40], [0, 2, 6])
    assert others.max() < 1e-4
    # p itself is pi-periodic: only even harmonics survive
    assert set(body.k[body.c2 > 0] % 2) == {0}


def test_quarter_symmetric_positivity():
    with pytest.raises((PositivityViolation, ConvexityViolation)):
        support.quarter_symmetric(1.0, 0.9, 0.5)


def test_rotate_examples():
    body = FourierSupport.from_harmonics(2.0, {1: (1.0, 0.0)})
    rot = support.rotate(body, 0.0)
    # p(phi + pi) = 2 - cos(phi)
    assert rot.A[0] == pytest.approx(-1.0) and rot.B[0] == pytest.approx(0.0)
    assert not np.any(support.rotate(support.disc(), 0.3).A)


@given(delta=st.floats(-10, 10), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_rotate_preserves_amplitudes_and_values(delta, seed):
    body = random_body(np.random.default_rng(seed))
    rot = support.rotate(body, delta)
    np.testing.assert_allclose(rot.A**2 + rot.B**2, body.c2, rtol=1e-12, atol=1e-15)
    phi = np.linspace(0, TWO_PI, 41)
    p1 = FourierSupport(rot.a0, rot.A, rot.B)(phi)
    np.testing.assert_allclose(p1, body(phi + math.pi - delta), atol=1e-13)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_parseval_area_and_deficit(seed):
    body = random_body(np.random.default_rng(seed), K=12)
    m = support.metrics(body)
    phi = np.arange(2048) * TWO_PI / 2048
    p, dp, _ = body.derivs(phi)
    assert m.F == pytest.approx(0.5 * trapz_periodic(p * p - dp * dp), rel=1e-10)
    k = body.k
    deficit = 2 * math.pi**2 * np.sum((k * k - 1) * body.c2)
    assert m.isoperimetric_deficit == pytest.approx(deficit, rel=1e-10, abs=1e-13)
    assert m.isoperimetric_deficit >= -1e-13
    assert m.L > 0 and m.F > 0


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_width_identities(seed):
    body = random_body(np.random.default_rng(seed), K=7)
    phi = np.arange(512) * TWO_PI / 512
    a = support.width(body, phi)
    even = np.zeros_like(phi)
    for k in range(2, body.K_max + 1, 2):
        even += body.a[k - 1] * np.cos(k * phi) + body.b[k - 1] * np.sin(k * phi)
    np.testing.assert_allclose(a, 2 * body.a0 + 2 * even, atol=1e-13)
    assert trapz_periodic(a) == pytest.approx(2 * support.metrics(body).L, rel=1e-13)


def test_translate_moves_first_harmonic_only(ellipse_like):
    moved = support.translate(ellipse_like, 0.1, -0.2)
    phi = np.linspace(0, TWO_PI, 17)
    np.testing.assert_allclose(moved(phi), ellipse_like(phi) + 0.1 * np.cos(phi) - 0.2 * np.sin(phi), atol=1e-15)
    assert support.metrics(moved).F == pytest.approx(support.metrics(ellipse_like).F, rel=1e-14)


def test_radial_function_round_trip(rng):
    body = random_body(rng)
    theta = np.linspace(0, TWO_PI, 64, endpoint=False)
    rho, phi_b = support.radial_function(body, theta)
    x, y = support.boundary_point(body, phi_b)
    np.testing.assert_allclose(np.hypot(x, y), rho, rtol=1e-12)
    np.testing.assert_allclose(np.angle(np.exp(1j * (np.arctan2(y, x) - theta))), 0, atol=1e-11)


def test_json_round_trip(tmp_path):
    body = FourierSupport.from_harmonics(1.5, {2: (0.05, -0.01), 5: (0.0, 0.002)})
    path = tmp_path / "b.json"
    support.dump_body(body, path)
    data = json.loads(path.read_text())
    assert data["a0"] == 1.5 and {h["k"] for h in data["harmonics"]} == {2, 5}
    back = support.load_body(path)
    np.testing.assert_array_equal(back.a, body.a)
    np.testing.assert_array_equal(back.b, body.b)


@pytest.mark.parametrize("kind, params", [
    ("disc", {"r": 2.0}),
    ("perturbed", {"m": 3, "t": 0.1}),
    ("constant_width", {"harmonics": {3: (0.05, 0.0)}}),
])
def test_generate(kind, params):
    assert support.is_convex(support.generate(kind, **params))


def test_constant_width_rejects_even_harmonics():
    with pytest.raises(ValueError):
        support.constant_width(1.0, {2: (0.01, 0.0)})
