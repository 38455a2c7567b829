"""Scattering matrix S(k), the 4 x 4 matrix Omega(k) and the sheet identities.

The amplitude is contracted on the same quadrature as the Nystrom matrix, so

    D(ik) = D(k) det S(k),    D(-k) = D(k) det Omega(k)

hold for the discrete determinants up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .coeffs import CoefficientPair, fourier_hat, moments, signed_sqrt_values, _integrate_coefficient
from .fredholm import DeterminantEvaluator, _Level

SQRT_2PI = np.sqrt(2.0 * np.pi)
# Pivot ratio below which I + Y0 is treated as singular.  A Newton-refined
# zero of D leaves a ratio near 1e-11; one step of 1e-8 away gives ~1e-3.
POLE_PIVOT_RATIO = 1e-10


class PoleError(ZeroDivisionError):
    """I + Y0(k) is singular: k is a zero of D and the amplitude has a pole."""


def scattering_constant(k: complex) -> complex:
    """c_k = pi / (2 i k^3)."""
    return np.pi / (2j * complex(k) ** 3)


@dataclass(frozen=True)
class PsiKernels:
    """psi1(x, k) and psi2(x, k) as 2 x 2 matrices (last two axes)."""

    pair: CoefficientPair

    def psi1(self, x, k: complex) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = np.sqrt(np.abs(2 * self.pair.p(x)))
        b = np.sqrt(np.abs(self.pair.q(x)))
        em, ep = np.exp(-1j * k * x), np.exp(1j * k * x)
        out = np.empty(x.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = 1j * k * a * em
        out[..., 0, 1] = b * em
        out[..., 1, 0] = -1j * k * a * ep
        out[..., 1, 1] = b * ep
        return out / SQRT_2PI

    def psi2(self, x, k: complex) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = signed_sqrt_values(2 * self.pair.p(x))
        b = signed_sqrt_values(self.pair.q(x))
        em, ep = np.exp(-1j * k * x), np.exp(1j * k * x)
        out = np.empty(x.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = 1j * k * a * ep
        out[..., 0, 1] = -1j * k * a * em
        out[..., 1, 0] = b * ep
        out[..., 1, 1] = b * em
        return out / SQRT_2PI


def psi_rows(level: _Level, k: complex) -> np.ndarray:
    """psi1(k) sampled against the quadrature: shape (2, active size)."""
    x = level.x
    em, ep = np.exp(-1j * k * x), np.exp(1j * k * x)
    parts = []
    for c in level.active:
        v = level.v[c]
        if c == 0:
            parts.append(np.array([1j * k * v * em, -1j * k * v * ep]))
        else:
            parts.append(np.array([v * em, v * ep]))
    return np.concatenate(parts, axis=1) / SQRT_2PI


def psi_columns(level: _Level, k: complex) -> np.ndarray:
    """psi2(k) sampled against the quadrature: shape (active size, 2)."""
    x = level.x
    em, ep = np.exp(-1j * k * x), np.exp(1j * k * x)
    parts = []
    for c in level.active:
        u = level.u[c]
        if c == 0:
            parts.append(np.stack([1j * k * u * ep, -1j * k * u * em], axis=1))
        else:
            parts.append(np.stack([u * ep, u * em], axis=1))
    return np.concatenate(parts, axis=0) / SQRT_2PI


def born_A0_closed(pair: CoefficientPair, k: complex) -> np.ndarray:
    """Born term from moments and Fourier transforms of p and q."""
    k = complex(k)
    p0, q0 = moments(pair)
    alpha1 = q0 - 2 * k**2 * p0

    def alpha2(kk):
        return SQRT_2PI * (2 * kk**2 * fourier_hat(pair.p, 2 * kk) + fourier_hat(pair.q, 2 * kk))

    return np.array([[alpha1, alpha2(k)], [alpha2(-k), alpha1]]) / (2 * np.pi)


def born_A0_quadrature(ev: DeterminantEvaluator, k: complex) -> np.ndarray:
    level = ev.base
    if not level.active:
        return np.zeros((2, 2), dtype=complex)
    return psi_rows(level, k) @ psi_columns(level, k)


def _solve(ev: DeterminantEvaluator, k: complex, rhs: np.ndarray) -> np.ndarray:
    lu, piv = ev.factorization(k)
    diag = np.abs(np.diag(lu))
    if diag.size and diag.min() <= POLE_PIVOT_RATIO * diag.max():
        raise PoleError(f"I + Y0 is singular at k = {k}")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def amplitude(ev: DeterminantEvaluator, k: complex) -> np.ndarray:
    """A0 - psi1 Y psi2 with Y = I - (I + Y0)^(-1), i.e. psi1 (I + Y0)^(-1) psi2."""
    k = complex(k)
    if k == 0:
        raise ValueError("amplitude is not defined at k = 0")
    level = ev.base
    if not level.active:
        return np.zeros((2, 2), dtype=complex)
    return psi_rows(level, k) @ _solve(ev, k, psi_columns(level, k))


@dataclass(frozen=True)
class SMatrix:
    s: np.ndarray
    c_k: complex

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.s))


def s_matrix(ev: DeterminantEvaluator, k: complex) -> SMatrix:
    c = scattering_constant(k)
    return SMatrix(np.eye(2) + c * amplitude(ev, k), c)


@dataclass(frozen=True)
class OmegaMatrix:
    omega: np.ndarray

    def block(self, i: int, j: int) -> np.ndarray:
        return self.omega[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.omega))


def _omega_factors(level: _Level, k: complex):
    rows = np.concatenate([psi_rows(level, 1j * k), psi_rows(level, k)], axis=0)
    cols = np.concatenate([1j * psi_columns(level, 1j * k), psi_columns(level, k)], axis=1)
    return rows, cols


def omega_matrix(ev: DeterminantEvaluator, k: complex) -> OmegaMatrix:
    """I4 + c_k (Omega0 - Omega1) = I4 + c_k Psi1 (I + Y0)^(-1) Psi2."""
    k = complex(k)
    if k == 0:
        raise ValueError("Omega is not defined at k = 0")
    level = ev.base
    if not level.active:
        return OmegaMatrix(np.eye(4, dtype=complex))
    rows, cols = _omega_factors(level, k)
    return OmegaMatrix(np.eye(4) + scattering_constant(k) * rows @ _solve(ev, k, cols))


def omega0_quadrature(ev: DeterminantEvaluator, k: complex) -> np.ndarray:
    level = ev.base
    if not level.active:
        return np.zeros((4, 4), dtype=complex)
    rows, cols = _omega_factors(level, complex(k))
    return rows @ cols


def b_blocks_closed(pair: CoefficientPair, k: complex) -> tuple[np.ndarray, np.ndarray]:
    """Off-diagonal blocks of Omega0 from the integrals beta1, beta2."""
    k = complex(k)

    def beta1(kk):
        def w(x):
            return np.exp((1 + 1j) * kk * x)
        return _integrate_coefficient(pair.q, w) - 2j * kk**2 * _integrate_coefficient(pair.p, w)

    def beta2(kk):
        def w(x):
            return np.exp((1 - 1j) * kk * x)
        return _integrate_coefficient(pair.q, w) + 2j * kk**2 * _integrate_coefficient(pair.p, w)

    b1 = np.array([[beta1(k), beta2(k)], [beta2(-k), beta1(-k)]]) / (2 * np.pi)
    b2 = 1j * np.array([[beta1(-k), beta2(k)], [beta2(-k), beta1(k)]]) / (2 * np.pi)
    return b1, b2


def p1_matrix(ev: DeterminantEvaluator, k: complex) -> np.ndarray:
    """c_k psi2(k) psi1(k) on the quadrature (active components)."""
    level = ev.base
    return scattering_constant(k) * psi_columns(level, k) @ psi_rows(level, k)


def check_sheet_identities(ev: DeterminantEvaluator, k: complex) -> tuple[float, float]:
    """Relative residuals of D(ik) = D(k) det S(k) and D(-k) = D(k) det Omega(k).

    All determinants use the base quadrature so both sides share one
    discretisation.
    """
    plain = ev if ev.richardson == 0 else ev.with_richardson(0)
    k = complex(k)
    d_k = plain.determinant(k)
    d_ik = plain.determinant(1j * k)
    d_mk = plain.determinant(-k)
    res_s = abs(d_ik - d_k * s_matrix(plain, k).det) / abs(d_ik)
    res_o = abs(d_mk - d_k * omega_matrix(plain, k).det) / abs(d_mk)
    return float(res_s), float(res_o)


@dataclass(frozen=True)
class PhaseResult:
    k: np.ndarray
    phi: np.ndarray
    det_s: np.ndarray
    flagged: np.ndarray


def phase_phi_sc(ev: DeterminantEvaluator, k_samples) -> PhaseResult:
    """Unwrapped phi_sc with det S = exp(-2 pi i phi_sc), anchored near 0 at the largest k.

    Adjacent samples whose principal phase increment exceeds pi/2 are flagged
    as possibly under-resolved.
    """
    ks = np.asarray(k_samples, dtype=float)
    if np.any(np.diff(ks) <= 0) or np.any(ks <= 0):
        raise ValueError("k_samples must be positive and strictly increasing")
    dets = np.array([s_matrix(ev, k).det for k in ks])
    angle = np.angle(dets)
    steps = np.angle(np.exp(1j * np.diff(angle)))
    flagged = np.abs(steps) > np.pi / 2
    unwrapped = np.concatenate([[angle[0]], angle[0] + np.cumsum(steps)])
    phi = -unwrapped / (2 * np.pi)
    phi = phi - np.round(phi[-1])
    return PhaseResult(ks, phi, dets, flagged)
