"""Trace formula for Tr(R0 - R) and the scattering phase derivative in terms of zeros of D."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .fredholm import DeterminantEvaluator
from .kernels import kernel_k_derivatives
from .resonances import LaurentData, Zero, cauchy_derivative


class NearZeroError(ArithmeticError):
    """k is too close to a zero of D for a meaningful log-derivative."""


def log_derivative(f, k: complex, h: float | None = None) -> complex:
    """D'(k) / D(k) with D' from a Cauchy integral."""
    val, deriv, scale = cauchy_derivative(f, complex(k), h)
    if abs(val) < 1e-10 * scale:
        raise NearZeroError(f"|D(k)| is {abs(val):.3g} relative to {scale:.3g} near k = {k}")
    return deriv / val


def resolvent_trace_diff(ev: DeterminantEvaluator, k: complex) -> complex:
    """Tr(R0(k) - R(k)) = D'(k) / (4 k^3 D(k))."""
    k = complex(k)
    if k == 0:
        raise ValueError("k = 0 is excluded")
    return log_derivative(ev, k) / (4 * k**3)


def discrete_trace_R0VR(ev: DeterminantEvaluator, k: complex) -> complex:
    """Tr(R0 V R) on the base quadrature: Tr((I + Y0)^(-1) dY0/dk) / (4 k^3).

    dY0/dk is assembled from the exact k-derivatives of the kernels, since
    V2 R0^2 V1 = V2 (dR0/dk) V1 / (4 k^3).
    """
    k = complex(k)
    level = ev.base
    if not level.active:
        return 0j
    d00, d10, d11 = (np.take(d, level.index) for d in kernel_k_derivatives(level.table, k))
    blocks = {(0, 0): d11, (0, 1): d10, (1, 0): d10, (1, 1): d00}
    deriv = np.concatenate(
        [
            np.concatenate([level.u[a][:, None] * blocks[a, b] * level.v[b][None, :] for b in level.active], axis=1)
            for a in level.active
        ],
        axis=0,
    )
    lu = ev.factorization(k)
    return complex(np.trace(scipy.linalg.lu_solve(lu, deriv))) / (4 * k**3)


@dataclass(frozen=True)
class TraceReport:
    k: complex
    lhs: complex
    rhs_partial: list[complex]
    radii: list[float]
    beta: complex
    m: int
    tail_estimate: list[float] = field(default_factory=list)

    @property
    def residuals(self) -> list[float]:
        return [abs(self.lhs - r) for r in self.rhs_partial]

    def to_json(self) -> dict:
        return {
            "k": [self.k.real, self.k.imag],
            "lhs": [self.lhs.real, self.lhs.imag],
            "beta": [self.beta.real, self.beta.imag],
            "m": self.m,
            "partial_sums": [
                {"r": r, "re": v.real, "im": v.imag, "residual": abs(self.lhs - v), "tail_estimate": t}
                for r, v, t in zip(self.radii, self.rhs_partial, self.tail_estimate)
            ],
        }


def _zero_arrays(zeros: Sequence[Zero]):
    if not zeros:
        return np.zeros(0, dtype=complex), np.zeros(0)
    return np.array([z.position for z in zeros]), np.array([z.multiplicity for z in zeros], dtype=float)


def tail_estimate(k: complex, r: float, gamma: float) -> float:
    """Rough size of the omitted terms for |zeta| > r, using the density 4 gamma / pi."""
    ak = abs(k)
    if r <= ak:
        return float("inf")
    return (4 * gamma / np.pi) * np.log(r / (r - ak)) / (4 * ak**3)


def trace_formula_rhs(laurent: LaurentData, zeros: Sequence[Zero], k: complex,
                      cutoff_radii: Sequence[float], lhs: complex = np.nan,
                      gamma: float | None = None) -> TraceReport:
    """(beta - m/k + k sum_{|zeta|<r} 1/(zeta (k - zeta))) / (4 k^3) for each cutoff r.

    Both members of each pair (zeta, i conj zeta) share the modulus, so a
    modulus cutoff always keeps the symmetric pairs together.
    """
    k = complex(k)
    pos, mult = _zero_arrays(zeros)
    terms = mult / (pos * (k - pos)) if pos.size else np.zeros(0, dtype=complex)
    partial, tails = [], []
    for r in cutoff_radii:
        s = np.sum(terms[np.abs(pos) < r]) if pos.size else 0j
        partial.append(complex((laurent.beta - laurent.m / k + k * s) / (4 * k**3)))
        tails.append(tail_estimate(k, r, gamma) if gamma else float("nan"))
    return TraceReport(k, complex(lhs), partial, [float(r) for r in cutoff_radii], laurent.beta, laurent.m, tails)


def trace_report(ev: DeterminantEvaluator, laurent: LaurentData, zeros: Sequence[Zero],
                 k: complex, cutoff_radii: Sequence[float]) -> TraceReport:
    lhs = resolvent_trace_diff(ev, k)
    return trace_formula_rhs(laurent, zeros, k, cutoff_radii, lhs, ev.gamma)


@dataclass(frozen=True)
class PhaseDerivative:
    value: float
    imaginary_residue: float


def phase_derivative(laurent: LaurentData, zeros: Sequence[Zero], k: float,
                     cutoff: float | None = None) -> PhaseDerivative:
    """phi_sc'(k) = ((1 - i) beta + sum (k/zeta)(1/(ik - zeta) + 1/(k - zeta))) / (2 pi i)."""
    k = float(k)
    if k <= 0:
        raise ValueError("k must be positive")
    pos, mult = _zero_arrays(zeros)
    if cutoff is not None and pos.size:
        keep = np.abs(pos) < cutoff
        pos, mult = pos[keep], mult[keep]
    s = np.sum(mult * (k / pos) * (1 / (1j * k - pos) + 1 / (k - pos))) if pos.size else 0j
    val = ((1 - 1j) * laurent.beta + s) / (2j * np.pi)
    return PhaseDerivative(float(val.real), float(abs(val.imag)))


def hadamard_ratio(ev: DeterminantEvaluator, laurent: LaurentData, zeros: Sequence[Zero],
                   k: complex, cutoff: float) -> complex:
    """D_Hadamard(k) / D(k) - 1 with the product truncated at |zeta| < cutoff."""
    k = complex(k)
    pos, mult = _zero_arrays(zeros)
    keep = np.abs(pos) < cutoff
    pos, mult = pos[keep], mult[keep]
    log_prod = np.sum(mult * (np.log(1 - k / pos) + k / pos)) if pos.size else 0j
    had = laurent.alpha * k ** (-laurent.m) * np.exp(laurent.beta * k + log_prod)
    return complex(had / ev.determinant(k) - 1)


def hadamard_beta(ev: DeterminantEvaluator, laurent: LaurentData, zeros: Sequence[Zero],
                  k: complex, cutoff: float) -> complex:
    """beta recovered from D'/D + m/k - k sum 1/(zeta (k - zeta)) at a probe point."""
    k = complex(k)
    pos, mult = _zero_arrays(zeros)
    keep = np.abs(pos) < cutoff
    pos, mult = pos[keep], mult[keep]
    s = np.sum(mult / (pos * (k - pos))) if pos.size else 0j
    return complex(log_derivative(ev, k) + laurent.m / k - k * s)
