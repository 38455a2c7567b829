"""Free resolvent kernels of -d^2 and d^4 on the line.

All functions are vectorised over ``y``.  With ``a = |y|``:

* ``r0(y, k) = i exp(ik a) / (2k)``
* ``R0(y, k) = (i exp(ik a) - exp(-k a)) / (4 k^3) = (r0(y, k) - r0(y, ik)) / (2 k^2)``
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

# Terms kept in the small-|k y| series of the regular part.
_SERIES_TERMS = 40
# Switch from the closed form to the series when |k y| is below this.
_SERIES_SWITCH = 1.0


def _check_k(k):
    if np.any(np.asarray(k) == 0):
        raise ValueError("kernels are singular at k = 0")


def r0_kernel(y, k: complex):
    """Second-order free resolvent kernel ``i exp(ik|y|) / (2k)``."""
    _check_k(k)
    return 1j * np.exp(1j * k * np.abs(y)) / (2 * k)


@dataclass(frozen=True)
class KernelBlock:
    """Kernels of R0, its first derivatives and of d R0 d at separation y = x - x'."""

    r00: complex
    r10: complex
    r01: complex
    r11: complex


def kernel_arrays(y, k: complex):
    """Return (r00, r10, r11) for an array of separations ``y``."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    osc = np.exp(1j * k * a)
    dec = np.exp(-k * a)
    r00 = (1j * osc - dec) / (4 * k**3)
    r10 = np.sign(y) * (dec - osc) / (4 * k**2)
    r11 = -(1j * osc + dec) / (4 * k)
    return r00, r10, r11


def R0_kernels(y, k: complex) -> KernelBlock:
    _check_k(k)
    r00, r10, r11 = kernel_arrays(y, complex(k))
    return KernelBlock(r00=r00, r10=r10, r01=-r10, r11=r11)


def singular_coefficients(k: complex) -> tuple[complex, complex]:
    """(c0, c2) with R0(y, k) = c0 + c2 * y^2 + O(1) as k -> 0."""
    return (1j - 1) / (4 * k**3), -(1 + 1j) / (8 * k)


def _series_coefficients(k: complex, terms: int = _SERIES_TERMS):
    # R0 = sum_n c_n k^(n-3) |y|^n / (4 n!),  c_n = i^(n+1) - (-1)^n
    n = np.arange(3, terms + 3)
    c = (1j ** (n + 1)) - (-1.0) ** n
    fact = np.array([float(factorial(int(j))) for j in n])
    return n, c * complex(k) ** (n - 3) / (4 * fact)


def regular_arrays(y, k: complex):
    """Regular parts (R0 - singular part) and their first two y-derivatives.

    The singular part is ``c0 + c2 y^2`` (see :func:`singular_coefficients`);
    what remains is entire in k and tends to ``|y|^3 / 12`` as k -> 0.
    """
    y = np.asarray(y, dtype=float)
    k = complex(k)
    a = np.abs(y)
    s = np.sign(y)
    reg = np.empty(y.shape, dtype=complex)
    reg1 = np.empty(y.shape, dtype=complex)
    reg2 = np.empty(y.shape, dtype=complex)
    small = np.abs(k) * a < _SERIES_SWITCH
    if np.any(small):
        n, coef = _series_coefficients(k)
        a_s = a[small][..., None]
        reg[small] = np.sum(coef * a_s**n, axis=-1)
        reg1[small] = s[small] * np.sum(coef * n * a_s ** (n - 1), axis=-1)
        reg2[small] = np.sum(coef * n * (n - 1) * a_s ** (n - 2), axis=-1)
    big = ~small
    if np.any(big):
        c0, c2 = singular_coefficients(k)
        r00, r10, r11 = kernel_arrays(y[big], k)
        yb = y[big]
        reg[big] = r00 - c0 - c2 * yb**2
        reg1[big] = r10 - 2 * c2 * yb
        reg2[big] = r11 - 2 * c2
    return reg, reg1, reg2


def R0_regular_part(y, k: complex):
    """``R0(y, k) - (i-1)/(4k^3) + (1+i) y^2/(8k)``; finite at k = 0."""
    y_arr = np.asarray(y, dtype=float)
    if complex(k) == 0:
        out = np.abs(y_arr) ** 3 / 12.0
    else:
        out = regular_arrays(np.atleast_1d(y_arr), k)[0].reshape(y_arr.shape)
    return out[()] if out.ndim == 0 else out


def kernel_k_derivatives(y, k: complex):
    """k-derivatives of (r00, r10, r11), used for the exact Jacobi trace."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    osc = np.exp(1j * k * a)
    dec = np.exp(-k * a)
    r00 = (1j * osc - dec) / (4 * k**3)
    r10 = np.sign(y) * (dec - osc) / (4 * k**2)
    r11 = -(1j * osc + dec) / (4 * k)
    d00 = a * (dec - osc) / (4 * k**3) - 3 * r00 / k
    d10 = -np.sign(y) * a * (dec + 1j * osc) / (4 * k**2) - 2 * r10 / k
    d11 = a * (osc + dec) / (4 * k) - r11 / k
    return d00, d10, d11
