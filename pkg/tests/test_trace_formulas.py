import numpy as np
import pytest

from conftest import STEP_RADIUS
from fourthorder.fredholm import DeterminantEvaluator
from fourthorder.resonances import LaurentData, certified_radius
from fourthorder.trace_formulas import (
    NearZeroError,
    discrete_trace_R0VR,
    hadamard_beta,
    hadamard_ratio,
    phase_derivative,
    resolvent_trace_diff,
    tail_estimate,
    trace_formula_rhs,
)

TRIVIAL_LAURENT = LaurentData(0, 1.0 + 0j, 0j)


def test_trivial_pair_gives_zero(zero_pair):
    ev = DeterminantEvaluator.build(zero_pair)
    k = 1.5 + 0.5j
    assert abs(resolvent_trace_diff(ev, k)) < 1e-14
    assert discrete_trace_R0VR(ev, k) == 0
    report = trace_formula_rhs(TRIVIAL_LAURENT, [], k, [5.0], lhs=0j)
    assert report.rhs_partial == [0j]
    assert phase_derivative(TRIVIAL_LAURENT, [], 2.0).value == 0


def test_log_derivative_matches_jacobi_trace(step_fast):
    plain = step_fast.with_richardson(0)
    k = 2 * np.exp(1j * np.pi / 8)
    via_det = resolvent_trace_diff(plain, k)
    via_solve = discrete_trace_R0VR(plain, k)
    assert abs(via_det - via_solve) <= 1e-6 * abs(via_solve)


def test_trace_difference_symmetry(step_fast):
    """D(k) = conj D(i conj k) makes Tr(R0 - R) invariant under the same map."""
    for k in (2 * np.exp(1j * np.pi / 8), 1.3 - 0.4j, -2.0 + 0.7j):
        here = resolvent_trace_diff(step_fast, k)
        there = resolvent_trace_diff(step_fast, 1j * np.conj(k))
        assert abs(here - np.conj(there)) <= 1e-8 * abs(here)


def test_log_derivative_refuses_zero(step_fast, step_search):
    z = step_search.zeros[0].position
    with pytest.raises(NearZeroError):
        resolvent_trace_diff(step_fast, z)


def test_series_is_real_on_diagonal_ray(step_search, step_laurent):
    r_max = certified_radius(STEP_RADIUS, step_search.uncovered)
    k = 2 * np.exp(1j * np.pi / 4)
    report = trace_formula_rhs(step_laurent, step_search.zeros, k, np.linspace(8.0, r_max, 4))
    for value in report.rhs_partial:
        directional = value * 4 * k**3 * np.exp(1j * np.pi / 4)
        assert abs(directional.imag) <= 1e-8 * abs(directional)


def test_phase_derivative_series_is_real(step_search, step_laurent):
    r_max = certified_radius(STEP_RADIUS, step_search.uncovered)
    for k in (1.0, 3.0, 6.0):
        assert phase_derivative(step_laurent, step_search.zeros, k, cutoff=r_max).imaginary_residue <= 1e-6


def test_hadamard_consistency(step_fast, step_search, step_laurent):
    r_max = certified_radius(STEP_RADIUS, step_search.uncovered)
    k = 2 * np.exp(1j * np.pi / 4)
    beta = hadamard_beta(step_fast, step_laurent, step_search.zeros, k, r_max)
    assert abs(beta - step_laurent.beta) <= 0.01 * abs(step_laurent.beta)
    assert abs(hadamard_ratio(step_fast, step_laurent, step_search.zeros, k, r_max)) < 0.01


def test_tail_estimate_shrinks_with_cutoff():
    k = 1.7 * np.exp(1j * np.pi / 8)
    values = [tail_estimate(k, r, 1.0) for r in (10.0, 20.0, 40.0)]
    assert values[0] > values[1] > values[2] > 0
    assert tail_estimate(k, 1.0, 1.0) == float("inf")


def test_phase_derivative_rejects_nonpositive_k():
    with pytest.raises(ValueError):
        phase_derivative(TRIVIAL_LAURENT, [], 0.0)


def test_hadamard_product_converges_with_cutoff(step_fast, step_search, step_laurent):
    r_max = certified_radius(STEP_RADIUS, step_search.uncovered)
    probes = [1.5 * np.exp(1j * a) for a in (0.3, 0.8, 1.3, 2.2, 4.0)]
    for k in probes:
        gaps = [abs(hadamard_ratio(step_fast, step_laurent, step_search.zeros, k, r)) for r in (10.0, 18.0, r_max)]
        assert gaps[0] > gaps[1] > gaps[2]
