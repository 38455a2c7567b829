import numpy as np
import pytest
from numpy.polynomial import Polynomial

from fourthorder.coeffs import (
    CoefficientPair,
    fourier_hat,
    from_descriptor,
    make_bump,
    make_step,
    make_table,
    moments,
    scale,
    signed_sqrt,
    signed_sqrt_values,
    square_pair,
    to_descriptor,
    zero_coefficient,
)


def test_step_is_indicator():
    f = make_step(1.0, 1.0)
    assert f(0.5) == 1.0
    assert f(1.5) == 0.0
    assert f(-0.1) == 0.0


def test_step_endpoint_product():
    f = make_step(2.0, 1.0)
    assert f.left_value * f.right_value == 4.0


@pytest.mark.parametrize("gamma", [0.0, -1.0])
def test_step_rejects_nonpositive_support(gamma):
    with pytest.raises(ValueError):
        make_step(1.0, gamma)


def test_zero_step_has_zero_moment():
    pair = CoefficientPair(make_step(0.0, 1.0), zero_coefficient())
    assert moments(pair) == (0.0, 0.0)
    assert pair.p.is_zero()


def test_bump_midpoint_and_endpoint_vanishing():
    f = make_bump(1.0, 1.0, 4)
    assert f(0.5) == pytest.approx(0.5**8, rel=1e-14)
    for order in range(4):
        assert abs(f.derivative(order, 0.0)) < 1e-12
        assert abs(f.derivative(order, 1.0)) < 1e-12
    assert abs(f.derivative(4, 0.5)) > 1.0


def test_bump_order_one_moment():
    f = make_bump(1.0, 1.0, 1)
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(f(x), x * (1 - x), atol=1e-15)
    p0, _ = moments(CoefficientPair(f, zero_coefficient()))
    assert p0 == pytest.approx(1 / 6, rel=1e-13)


def test_zero_amplitude_bump_is_zero():
    f = make_bump(0.0, 1.0, 4)
    assert f.is_zero()
    assert np.all(f(np.linspace(0, 1, 17)) == 0)


def test_bump_rejects_bad_order():
    with pytest.raises(ValueError):
        make_bump(1.0, 1.0, 5)


def test_unit_step_moment():
    p0, q0 = moments(CoefficientPair(make_step(1.0, 1.0), make_step(3.0, 0.5)))
    assert p0 == pytest.approx(1.0, rel=1e-14)
    assert q0 == pytest.approx(1.5, rel=1e-14)


def test_fourier_hat_of_step():
    f = make_step(1.0, 1.0)
    assert fourier_hat(f, 0.0) == pytest.approx(1 / np.sqrt(2 * np.pi), rel=1e-13)
    assert abs(fourier_hat(f, 2 * np.pi)) < 1e-13
    kappa = 1.3 - 0.4j
    closed = (1 - np.exp(-1j * kappa)) / (1j * kappa) / np.sqrt(2 * np.pi)
    assert fourier_hat(f, kappa) == pytest.approx(closed, rel=1e-12)


def test_fourier_hat_of_zero():
    for kappa in (0.0, 2.0, 1j):
        assert fourier_hat(zero_coefficient(), kappa) == 0


def test_signed_sqrt():
    assert signed_sqrt_values(4.0) == 2.0
    assert signed_sqrt_values(-4.0) == -2.0
    assert signed_sqrt_values(0.0) == 0.0
    assert signed_sqrt(make_step(-4.0, 1.0), 0.5) == -2.0


def test_square_pair_of_zero():
    pair = square_pair(make_bump(0.0, 1.0, 2))
    assert np.all(pair.q(np.linspace(0, 1, 9)) == 0)


def test_square_pair_midpoint_value():
    p = make_bump(1.0, 1.0, 2)
    pair = square_pair(p)
    poly = Polynomial([0, 0, 1, -2, 1])  # x^2 (1 - x)^2
    expected = poly.deriv(2)(0.5) + poly(0.5) ** 2
    assert p(0.5) == pytest.approx(1 / 16)
    assert pair.q(0.5) == pytest.approx(expected, rel=1e-14)


def test_square_pair_needs_derivatives():
    with pytest.raises(ValueError):
        square_pair(make_step(1.0, 1.0))


def test_square_pair_operator_identity():
    """d^4 u + 2 (p u')' + q u equals (-d^2 - p)^2 u for a polynomial test function."""
    p_poly = 3.0 * Polynomial([0, 1]) ** 3 * Polynomial([1, -1]) ** 3
    p = make_bump(3.0, 1.0, 3)
    pair = square_pair(p)
    u = Polynomial([0.3, -1.0, 2.0, 0.5, -0.7, 0.2])
    x = np.linspace(0.01, 0.99, 97)
    fourth = u.deriv(4)(x) + 2 * (p.derivative(1, x) * u.deriv(1)(x) + p(x) * u.deriv(2)(x)) + pair.q(x) * u(x)
    hu = -u.deriv(2) - p_poly * u
    hhu = -hu.deriv(2) - p_poly * hu
    assert np.max(np.abs(fourth - hhu(x))) <= 1e-8


def test_table_matches_spline_derivatives():
    f = make_table([[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]])
    assert f.support_end == 1.0
    assert f(0.5) == pytest.approx(1.0)
    assert f(1.2) == 0.0
    with pytest.raises(ValueError):
        make_table([[0.1, 0.0], [1.0, 1.0]])


def test_descriptor_round_trip():
    for desc in ({"kind": "step", "height": 2.0, "gamma": 1.5},
                 {"kind": "bump", "amplitude": 3.0, "gamma": 1.0, "order": 2}):
        f = from_descriptor(desc)
        g = from_descriptor(to_descriptor(f))
        x = np.linspace(0, 2, 41)
        np.testing.assert_allclose(f(x), g(x))
    with pytest.raises(ValueError):
        from_descriptor({"kind": "nope"})


def test_scale_multiplies_values_and_derivatives():
    f = make_bump(2.0, 1.0, 3)
    g = scale(f, -0.5)
    x = np.linspace(0.1, 0.9, 5)
    np.testing.assert_allclose(g(x), -0.5 * f(x))
    np.testing.assert_allclose(g.derivative(2, x), -0.5 * f.derivative(2, x))


def test_constructors_vanish_outside_support(rng):
    outside = np.concatenate([rng.uniform(-5, -1e-9, 50), rng.uniform(1.0 + 1e-9, 6, 50)])
    for f in (make_step(2.0, 1.0), make_bump(3.0, 1.0, 2), make_table([[0, 1], [0.5, 2], [1, 0.5]])):
        assert np.all(f(outside) == 0)


def test_signed_root_squares_back(rng):
    f = make_table([[0, -1.0], [0.3, 2.0], [0.7, -0.5], [1.0, 1.0]])
    x = rng.uniform(0, 1, 200)
    root = signed_sqrt(f, x)
    np.testing.assert_allclose(root**2, np.abs(f(x)), rtol=1e-14)
    assert np.all(np.sign(root) == np.sign(f(x)))


def test_zero_frequency_transform_is_the_moment():
    for p in (make_step(1.7, 0.6), make_bump(5.0, 1.3, 3)):
        p0, _ = moments(CoefficientPair(p, zero_coefficient()))
        assert abs(fourier_hat(p, 0.0) * np.sqrt(2 * np.pi) - p0) <= 1e-10
