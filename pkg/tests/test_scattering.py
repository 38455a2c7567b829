import numpy as np
import pytest

from fourthorder.coeffs import CoefficientPair, make_bump, make_step, moments
from fourthorder.fredholm import DeterminantEvaluator, Rectangle
from fourthorder.resonances import find_zeros
from fourthorder.scattering import (
    PoleError,
    amplitude,
    b_blocks_closed,
    born_A0_closed,
    born_A0_quadrature,
    check_sheet_identities,
    omega0_quadrature,
    omega_matrix,
    phase_phi_sc,
    s_matrix,
)


@pytest.fixture(scope="module")
def mixed_ev(mixed_pair):
    return DeterminantEvaluator.build(mixed_pair, 8, 20)


@pytest.fixture(scope="module")
def bound_state_pair():
    """Attractive pair with one eigenvalue; its zero sits on the diagonal of the first quadrant."""
    return CoefficientPair(make_step(-6.0, 1.0), make_bump(-40.0, 1.0, 2))


def test_zero_pair_scattering_is_trivial(zero_pair):
    ev = DeterminantEvaluator.build(zero_pair)
    k = 1.7
    assert np.all(born_A0_quadrature(ev, k) == 0)
    assert np.all(amplitude(ev, k) == 0)
    np.testing.assert_array_equal(s_matrix(ev, k).s, np.eye(2))
    np.testing.assert_array_equal(omega_matrix(ev, k).omega, np.eye(4))
    assert check_sheet_identities(ev, 1 + 1j) == (0.0, 0.0)
    np.testing.assert_array_equal(phase_phi_sc(ev, [1.0, 2.0, 3.0]).phi, 0.0)


def test_born_term_at_zero(mixed_pair):
    _, q0 = moments(mixed_pair)
    np.testing.assert_allclose(born_A0_closed(mixed_pair, 0.0), q0 / (2 * np.pi) * np.ones((2, 2)), rtol=1e-14)


def test_born_term_quadrature_matches_closed_form(mixed_pair, mixed_ev, rng):
    for _ in range(20):
        k = complex(*rng.uniform(-3, 3, 2))
        closed = born_A0_closed(mixed_pair, k)
        quad = born_A0_quadrature(mixed_ev, k)
        assert np.abs(quad - closed).max() <= 1e-8 * np.abs(closed).max()


def test_amplitude_first_order_in_coupling(mixed_pair):
    k = 2.0 + 0.5j
    born = born_A0_closed(mixed_pair, k)
    errors = []
    for eps in (1e-3, 1e-4):
        ev = DeterminantEvaluator.build(mixed_pair.scaled(eps), 8, 20)
        errors.append(np.abs(amplitude(ev, k) - eps * born).max())
    slope = np.log(errors[0] / errors[1]) / np.log(10.0)
    assert slope == pytest.approx(2.0, abs=0.05)


def test_amplitude_has_simple_pole_at_bound_state(bound_state_pair):
    ev = DeterminantEvaluator.build(bound_state_pair, 4, 16)
    found = find_zeros(ev, Rectangle(0.05, 5.0, 0.05, 5.0))
    assert found.complete and len(found.zeros) == 1
    k0 = found.zeros[0].position
    scaled = [np.linalg.norm(amplitude(ev, k0 + r * np.exp(0.3j))) * r for r in (1e-2, 1e-3, 1e-4)]
    assert max(scaled) / min(scaled) < 1.1
    with pytest.raises(PoleError):
        amplitude(ev, k0)


def test_s_matrix_unitary_on_real_axis(mixed_ev):
    for k in np.linspace(1.0, 10.0, 20):
        s = s_matrix(mixed_ev, k)
        assert abs(abs(s.det) - 1) <= 1e-6
        np.testing.assert_allclose(s.s.conj().T @ s.s, np.eye(2), atol=1e-10)


def test_s_matrix_determinant_tends_to_one(step_pair):
    ev = DeterminantEvaluator.build(step_pair, 8, 20)
    ks = np.array([20.0, 40.0, 80.0])
    gaps = np.array([abs(s_matrix(ev, k).det - 1) for k in ks])
    assert np.all(gaps * ks < 2 * gaps[0] * ks[0])
    assert gaps[-1] < gaps[0]


def test_omega_lower_right_block_is_s(mixed_ev):
    for k in (1.3, 2.0 + 0.5j, -0.7 + 1.1j):
        np.testing.assert_allclose(omega_matrix(mixed_ev, k).block(1, 1), s_matrix(mixed_ev, k).s, atol=1e-10)


def test_omega_off_diagonal_blocks_match_closed_form(mixed_pair, mixed_ev, rng):
    for _ in range(10):
        k = complex(*rng.uniform(-2, 2, 2))
        omega0 = omega0_quadrature(mixed_ev, k)
        b1, b2 = b_blocks_closed(mixed_pair, k)
        upper, lower = omega0[0:2, 2:4], omega0[2:4, 0:2]
        assert np.abs(upper - b1).max() <= 1e-8 * np.abs(b1).max()
        assert np.abs(lower - b2).max() <= 1e-8 * np.abs(b2).max()


def test_sheet_identities_for_step(step_pair):
    k = 3 * np.exp(1j * np.pi / 4)
    for panels in (8, 16):
        res_s, res_o = check_sheet_identities(DeterminantEvaluator.build(step_pair, panels, 20), k)
        assert res_s <= 1e-6
        assert res_o <= 1e-6


def test_phase_decays_like_inverse_k(step_pair):
    ev = DeterminantEvaluator.build(step_pair, 8, 20)
    ks = np.linspace(20.0, 80.0, 25)
    phase = phase_phi_sc(ev, ks)
    products = np.abs(phase.phi * ks)
    assert products.max() < 2 * products[-5:].mean()


def test_phase_is_continuous(step_pair):
    ev = DeterminantEvaluator.build(step_pair, 4, 16)
    phase = phase_phi_sc(ev, np.linspace(1.0, 40.0, 400))
    assert np.max(np.abs(np.diff(phase.phi))) < 0.5
    assert not phase.flagged.any()


def test_phase_rejects_unsorted_samples(step_pair):
    ev = DeterminantEvaluator.build(step_pair, 2, 10)
    with pytest.raises(ValueError):
        phase_phi_sc(ev, [2.0, 1.0])


def test_rank_two_kernel_difference(mixed_ev):
    from fourthorder.fredholm import assemble_Y0
    from fourthorder.scattering import p1_matrix

    k = 1.3 + 0.7j
    p1 = p1_matrix(mixed_ev, k)
    jump = assemble_Y0(mixed_ev, 1j * k).entries - assemble_Y0(mixed_ev, k).entries
    assert np.abs(p1 - jump).max() <= 1e-8 * np.abs(jump).max()
    p2 = p1_matrix(mixed_ev, 1j * k) + p1
    flip = assemble_Y0(mixed_ev, -k).entries - assemble_Y0(mixed_ev, k).entries
    assert np.abs(p2 - flip).max() <= 1e-8 * np.abs(flip).max()
