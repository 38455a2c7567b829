import numpy as np
import pytest

from fourthorder.coeffs import make_bump, make_step, moments
from fourthorder.euler_bernoulli import (
    EBCoefficients,
    FitInstabilityError,
    Jet,
    PositivityError,
    borg_indicator,
    central_weights,
    fd_derivative,
    fit_inverse_k_coefficient,
    inverse_liouville,
    jet_fields,
    kappa_integral,
    kappa_lower_bound_margin,
    liouville_variable,
    symbolic_fields,
    transform_to_normal_form,
    unitary_equivalence_residual,
)


@pytest.fixture(scope="module")
def stiff_beam():
    return EBCoefficients(make_bump(40.0, 1.0, 4), make_step(0.0, 1.0))


@pytest.fixture(scope="module")
def mixed_beam():
    return EBCoefficients(make_bump(40.0, 1.0, 4), make_bump(-20.0, 1.0, 4))


def test_uniform_beam_has_identity_map():
    eb = EBCoefficients.uniform()
    x = np.linspace(-0.5, 1.5, 21)
    np.testing.assert_allclose(liouville_variable(eb, x), x, atol=1e-15)
    assert eb.gamma_eb == pytest.approx(1.0, abs=1e-15)


def test_constant_stiffness_halves_the_slope():
    eb = EBCoefficients(make_step(15.0, 1.0), make_step(0.0, 1.0))
    assert eb.slowness(0.5) == pytest.approx(0.5, rel=1e-15)
    x = np.array([0.2, 0.6])
    t = liouville_variable(eb, x)
    assert (t[1] - t[0]) / 0.4 == pytest.approx(0.5, rel=1e-12)


def test_liouville_round_trip(mixed_beam):
    x = np.linspace(0.0, 1.0, 100)
    t = liouville_variable(mixed_beam, x)
    assert np.all(np.diff(t) > 0)
    np.testing.assert_allclose(inverse_liouville(mixed_beam, t), x, atol=1e-10)


def test_positivity_is_enforced():
    with pytest.raises(PositivityError):
        EBCoefficients(make_step(-1.5, 1.0), make_step(0.0, 1.0))


def test_finite_difference_weights():
    np.testing.assert_allclose(central_weights(2, 1), [1.0, -2.0, 1.0])
    x = np.linspace(0.1, 0.9, 5)
    assert np.max(np.abs(fd_derivative(np.sin, x, 4, 5e-2) - np.sin(x))) < 1e-7


def test_jet_arithmetic():
    x = Jet.from_derivatives(np.array([[2.0], [1.0], [0.0], [0.0], [0.0]]))  # the identity near 2
    f = (x * x + 1.0) / x
    # f = x + 1/x; f' = 1 - 1/x^2; f'' = 2/x^3
    d1 = f.derivative()
    assert f.value[0] == pytest.approx(2.5)
    assert d1.value[0] == pytest.approx(0.75)
    assert d1.derivative().value[0] == pytest.approx(0.25)
    root = x.power(0.5)
    assert root.derivative().value[0] == pytest.approx(0.5 / np.sqrt(2.0))


def test_uniform_beam_gives_zero_normal_form():
    eb = EBCoefficients.uniform()
    pair = transform_to_normal_form(eb)
    t = np.linspace(0, 1, 33)
    assert not np.any(pair.p(t)) and not np.any(pair.q(t))
    assert pair.gamma == pytest.approx(1.0)


@pytest.mark.parametrize("beam", ["stiff_beam", "mixed_beam"])
def test_symbolic_and_jet_routes_agree(beam, request):
    eb = request.getfixturevalue(beam)
    x = np.linspace(0.0, 1.0, 50)
    sym = symbolic_fields(eb, x)
    jet = jet_fields(eb, x)
    for name in ("p", "q", "kappa"):
        scale = max(1.0, np.max(np.abs(sym[name])))
        assert np.max(np.abs(sym[name] - jet[name])) <= 1e-8 * scale


def test_stiffness_only_p_formula(stiff_beam):
    """With b = 1, p(t) = -(eps0' + kappa)/2 where eps0 = 3 a_t / (4 a) and kappa = 5 (a_t / a)^2 / 32."""
    x = np.linspace(0.05, 0.95, 50)
    a0, a1, a2 = (stiff_beam.rigidity(x, j) for j in range(3))
    speed = a0**0.25  # dx/dt
    alpha = speed * a1 / a0
    d_alpha = speed * (a2 * a0**-0.75 - 0.75 * a1**2 * a0**-1.75)
    expected = -(0.75 * d_alpha + 5 * alpha**2 / 32) / 2
    assert np.max(np.abs(symbolic_fields(stiff_beam, x)["p"] - expected)) <= 1e-8 * np.max(np.abs(expected))


def test_kappa_lower_bound(mixed_beam, stiff_beam):
    x = np.linspace(0.0, 1.0, 401)
    for eb in (mixed_beam, stiff_beam):
        assert kappa_lower_bound_margin(symbolic_fields(eb, x)) >= -1e-12


def test_p_moment_is_minus_half_kappa_integral(mixed_beam):
    pair = transform_to_normal_form(mixed_beam)
    p0, _ = moments(pair)
    total = kappa_integral(mixed_beam)
    assert total > 0
    assert p0 == pytest.approx(-0.5 * total, rel=1e-6)


def test_unitary_equivalence(mixed_beam):
    pair = transform_to_normal_form(mixed_beam)

    def u(x):
        return np.exp(-4 * (x - 0.5) ** 2) * np.cos(3 * x)

    x = np.linspace(0.1, 0.9, 9)
    assert unitary_equivalence_residual(mixed_beam, pair, u, x) <= 1e-6


def test_inverse_k_fit_recovers_coefficients():
    ks = np.exp(0.25j * np.pi) * np.geomspace(20, 80, 12)
    values = (0.3 - 0.1j) / ks + 2.0 / ks**2 - 1.0 / ks**3
    assert fit_inverse_k_coefficient(ks, values) == pytest.approx(0.3 - 0.1j, rel=1e-10)


def test_trivial_beam_verdict():
    report = borg_indicator(EBCoefficients.uniform())
    assert report.verdict == "trivial beam"
    assert report.fitted == 0


def test_fit_instability_for_narrow_probes(stiff_beam):
    with pytest.raises(FitInstabilityError):
        borg_indicator(stiff_beam, np.exp(0.25j * np.pi) * np.linspace(20.0, 30.0, 6))


def test_borg_fit_for_mixed_beam(mixed_beam):
    report = borg_indicator(mixed_beam)
    assert report.verdict == "non-trivial beam"
    assert report.relative_error <= 0.05


def test_transformed_support_length(mixed_beam):
    pair = transform_to_normal_form(mixed_beam)
    assert pair.p.support_end == pytest.approx(mixed_beam.gamma_eb, rel=1e-12)
    assert pair.q.support_end == pytest.approx(mixed_beam.gamma_eb, rel=1e-12)
    assert liouville_variable(mixed_beam, 1.0) == pytest.approx(mixed_beam.gamma_eb, rel=1e-12)


def test_beam_resonances_respect_forbidden_domain(mixed_beam):
    from fourthorder.fredholm import DeterminantEvaluator
    from fourthorder.resonances import find_zeros, forbidden_domain_check, punctured_square, symmetry_mismatch

    pair = transform_to_normal_form(mixed_beam)
    ev = DeterminantEvaluator.build(pair, 4, 16, richardson=1)
    found = find_zeros(ev, punctured_square(14.0, 0.05))
    assert found.complete and not found.uncovered
    assert symmetry_mismatch(found.zeros) <= 1e-6
    report = forbidden_domain_check(found.zeros, mixed_beam.gamma_eb, "K2")
    assert report.count >= 3
    assert report.violation < 2
