"""Nystrom discretisation of Y0(k) = V2 R0(k) V1 and the determinant D(k).

The perturbation 2 d p d + q is split as V1 V2 with

    V1 = (d |2p|^(1/2), |q|^(1/2)),    V2 = ((2p)^(1/2) d ; q^(1/2))

(signed roots on the V2 side), so Y0 acts on L2 + L2 with block kernels

    [[ d R0 d , d R0 ], [ R0 d , R0 ]]  ->  [[ r11, r10 ], [ r10, r00 ]]

evaluated at x - x'.  Note that ``R0 d`` has kernel ``+r10(x - x')`` after
integrating by parts, the same as ``d R0``.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.linalg

from .coeffs import CoefficientPair, moments, signed_sqrt_values
from .kernels import kernel_arrays, regular_arrays, singular_coefficients

DEFAULT_PANELS = 8
DEFAULT_ORDER = 20
DEFAULT_MAX_ENTRY = 1e12
SMALL_K = 1e-2
_BATCH = 16
# Cap on matrix entries held per batch (memory guard for fine rules).
_BATCH_ENTRIES = 2_000_000


class StabilityError(ArithmeticError):
    """Raised when k lies outside the stability envelope of the direct path."""


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray
    panel_count: int
    order: int
    gamma: float

    @property
    def size(self) -> int:
        return self.nodes.size

    def refined(self, factor: int = 2) -> "Quadrature":
        return gauss_legendre(self.gamma, self.panel_count * factor, self.order)


def gauss_legendre(gamma: float, panels: int, order: int) -> Quadrature:
    """Composite Gauss-Legendre rule with ``panels`` equal panels on [0, gamma]."""
    if panels < 1 or order < 2:
        raise ValueError("need panels >= 1 and order >= 2")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    t, w = np.polynomial.legendre.leggauss(order)
    h = gamma / panels
    nodes = (h * np.arange(panels)[:, None] + 0.5 * h * (t + 1.0)[None, :]).ravel()
    weights = np.tile(0.5 * h * w, panels)
    return Quadrature(nodes, weights, int(panels), int(order), float(gamma))


@dataclass(frozen=True)
class Rectangle:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def corners(self):
        return (
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        )

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def size(self) -> float:
        return max(self.re_max - self.re_min, self.im_max - self.im_min)

    def contains(self, z) -> bool:
        z = complex(z)
        return self.re_min <= z.real <= self.re_max and self.im_min <= z.imag <= self.im_max


class _Level:
    """Node data of one quadrature, with a translation table for kernels.

    On equal panels x_I - x_J = (P_I - P_J) h + (xi_i - xi_j), so every
    kernel only has to be evaluated on (2P - 1) n^2 distinct separations.
    """

    def __init__(self, quad: Quadrature, pair: CoefficientPair):
        self.quad = quad
        x, w = quad.nodes, quad.weights
        sw = np.sqrt(w)
        p, q = pair.p(x), pair.q(x)
        self.u = np.array([signed_sqrt_values(2 * p), signed_sqrt_values(q)]) * sw
        self.v = np.array([np.sqrt(np.abs(2 * p)), np.sqrt(np.abs(q))]) * sw
        self.active = [c for c in (0, 1) if np.any(self.v[c] != 0)]
        self.x = x
        P, n = quad.panel_count, quad.order
        h = quad.gamma / P
        xi = x[:n]
        m = np.arange(-(P - 1), P)
        self.table = (m[:, None, None] * h + xi[None, :, None] - xi[None, None, :]).ravel()
        panel = np.repeat(np.arange(P), n)
        local = np.tile(np.arange(n), P)
        self.index = (
            ((panel[:, None] - panel[None, :] + P - 1) * n + local[:, None]) * n + local[None, :]
        )
        self.diff = x[:, None] - x[None, :]

    @property
    def size(self) -> int:
        return self.quad.size

    def kernels(self, ks: np.ndarray):
        """(r00, r10, r11) on the node grid for each k; shape (len(ks), N, N)."""
        ks = np.asarray(ks, dtype=complex)[:, None]
        r00, r10, r11 = kernel_arrays(self.table[None, :], ks)
        return tuple(np.take(r, self.index, axis=1) for r in (r00, r10, r11))

    def assemble(self, ks: np.ndarray, kernels=None) -> np.ndarray:
        """Stack of Nystrom matrices restricted to the active components."""
        r00, r10, r11 = self.kernels(ks) if kernels is None else kernels
        blocks = {(0, 0): r11, (0, 1): r10, (1, 0): r10, (1, 1): r00}
        rows = []
        for a in self.active:
            row = [
                self.u[a][None, :, None] * blocks[a, b] * self.v[b][None, None, :]
                for b in self.active
            ]
            rows.append(np.concatenate(row, axis=2))
        return np.concatenate(rows, axis=1)

    def full_matrix(self, k: complex) -> np.ndarray:
        """2N x 2N matrix including inactive (zero) components."""
        N = self.size
        out = np.zeros((2 * N, 2 * N), dtype=complex)
        if not self.active:
            return out
        small = self.assemble(np.array([k]))[0]
        idx = np.concatenate([np.arange(c * N, (c + 1) * N) for c in self.active])
        out[np.ix_(idx, idx)] = small
        return out

    def embed_columns(self, mat: np.ndarray) -> np.ndarray:
        """Restrict a (2N, ...) array to the rows of the active components."""
        N = self.size
        idx = np.concatenate([np.arange(c * N, (c + 1) * N) for c in self.active])
        return mat[idx]

    def determinants(self, ks: np.ndarray) -> np.ndarray:
        if not self.active:
            return np.ones(len(ks), dtype=complex)
        mats = self.assemble(ks)
        n = mats.shape[-1]
        mats[:, np.arange(n), np.arange(n)] += 1.0
        sign, logabs = np.linalg.slogdet(mats)
        return sign * np.exp(logabs)

    def determinant_small(self, k: complex) -> complex:
        """det(I + Y0) for small |k|: regular kernel plus an exact rank-3 update.

        R0(y) = c0 + c2 y^2 + reg(y); the polynomial part is m(x)^T S m(x')
        with m = (1, x, x^2), handled by a 3 x 3 determinant.
        """
        if not self.active:
            return 1.0 + 0j
        c0, c2 = singular_coefficients(k)
        reg, reg1, reg2 = (np.take(r, self.index) for r in regular_arrays(self.table, k))
        blocks = {(0, 0): reg2, (0, 1): reg1, (1, 0): reg1, (1, 1): reg}
        x = self.x
        mono = np.stack([np.ones_like(x), x, x**2], axis=1)
        dmono = np.stack([np.zeros_like(x), np.ones_like(x), 2 * x], axis=1)
        left = {0: dmono, 1: mono}
        right = {0: -dmono, 1: mono}
        rows, U, V = [], [], []
        for a in self.active:
            rows.append(
                np.concatenate(
                    [self.u[a][:, None] * blocks[a, b] * self.v[b][None, :] for b in self.active],
                    axis=1,
                )
            )
            U.append(self.u[a][:, None] * left[a])
            V.append(self.v[a][:, None] * right[a])
        A = np.concatenate(rows, axis=0)
        A[np.diag_indices_from(A)] += 1.0
        U = np.concatenate(U, axis=0)
        V = np.concatenate(V, axis=0)
        S = np.array([[c0, 0, c2], [0, -2 * c2, 0], [c2, 0, 0]], dtype=complex)
        lu = scipy.linalg.lu_factor(A)
        det_a = np.prod(np.diag(lu[0])) * (-1) ** np.count_nonzero(lu[1] != np.arange(A.shape[0]))
        small = np.eye(3) + S @ (V.T @ scipy.linalg.lu_solve(lu, U))
        return complex(det_a * np.linalg.det(small))


def _richardson(values: list[np.ndarray]) -> np.ndarray:
    """Eliminate h^2, h^4, ... from values on successively halved panels."""
    table = list(values)
    power = 4.0
    while len(table) > 1:
        table = [(power * fine - coarse) / (power - 1) for coarse, fine in zip(table[:-1], table[1:])]
        power *= 4.0
    return table[0]


@dataclass(frozen=True, eq=False)
class DeterminantEvaluator:
    """Immutable bundle of coefficients and quadrature evaluating D(k).

    Parameters
    ----------
    pair : CoefficientPair
    quad : Quadrature
        Base rule.  ``assemble_Y0`` and the scattering contractions always
        use this rule.
    richardson : int
        Number of panel-halving extrapolation levels applied to D.  The
        kernel has a kink on the diagonal, so plain Nystrom converges like
        h^2; each level removes one more even power of h.
    max_entry : float
        Refuse k whose predicted matrix entry size exceeds this.
    small_k : float
        Below this |k| the regularised rank-3 path is used.
    """

    pair: CoefficientPair
    quad: Quadrature
    richardson: int = 0
    max_entry: float = DEFAULT_MAX_ENTRY
    small_k: float = SMALL_K
    _levels: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.richardson < 0:
            raise ValueError("richardson must be non-negative")
        levels = []
        quad = self.quad
        for _ in range(self.richardson + 1):
            levels.append(_Level(quad, self.pair))
            quad = quad.refined(2)
        object.__setattr__(self, "_levels", tuple(levels))

    @classmethod
    def build(
        cls,
        pair: CoefficientPair,
        panels: int = DEFAULT_PANELS,
        order: int = DEFAULT_ORDER,
        **kwargs,
    ) -> "DeterminantEvaluator":
        return cls(pair, gauss_legendre(pair.gamma, panels, order), **kwargs)

    @property
    def gamma(self) -> float:
        return self.pair.gamma

    @property
    def base(self) -> _Level:
        return self._levels[0]

    def with_quadrature(self, quad: Quadrature) -> "DeterminantEvaluator":
        return replace(self, quad=quad)

    def with_richardson(self, levels: int) -> "DeterminantEvaluator":
        return replace(self, richardson=levels)

    # -- stability envelope -------------------------------------------------

    def entry_scale(self, k) -> np.ndarray:
        """Predicted largest kernel factor exp(gamma * max((Re k)-, (Im k)-))."""
        k = np.asarray(k, dtype=complex)
        neg = np.maximum(0.0, np.maximum(-k.real, -k.imag))
        return np.exp(self.gamma * neg)

    def envelope_bound(self) -> float:
        """Largest value of max((Re k)-, (Im k)-) accepted by the envelope."""
        return float(np.log(self.max_entry) / self.gamma)

    def envelope_limits(self) -> tuple[float, float]:
        """Lower bounds on (Re k, Im k) inside the envelope."""
        x = self.envelope_bound()
        return -x, -x

    def in_envelope(self, k) -> np.ndarray:
        return self.entry_scale(k) <= self.max_entry

    # -- evaluation ---------------------------------------------------------

    def _level_values(self, level: _Level, ks: np.ndarray) -> np.ndarray:
        out = np.empty(ks.size, dtype=complex)
        small = np.abs(ks) < self.small_k
        for i in np.flatnonzero(small):
            out[i] = level.determinant_small(ks[i])
        big = np.flatnonzero(~small)
        batch = max(1, min(_BATCH, _BATCH_ENTRIES // level.size**2))
        for start in range(0, big.size, batch):
            sel = big[start : start + batch]
            out[sel] = level.determinants(ks[sel])
        return out

    def determinant_many(self, ks) -> np.ndarray:
        """D at every k; NaN where k = 0 or k lies outside the envelope."""
        ks = np.asarray(ks, dtype=complex)
        flat = ks.ravel()
        out = np.full(flat.size, np.nan + 0j)
        ok = (flat != 0) & self.in_envelope(flat)
        if np.any(ok):
            vals = [self._level_values(level, flat[ok]) for level in self._levels]
            out[ok] = _richardson(vals)
        return out.reshape(ks.shape)

    def __call__(self, ks) -> np.ndarray:
        return self.determinant_many(ks)

    def determinant(self, k: complex) -> complex:
        k = complex(k)
        if k == 0:
            raise ValueError("D is not defined at k = 0")
        if not self.in_envelope(k):
            raise StabilityError(
                f"k = {k} outside the stability envelope (entry scale {self.entry_scale(k):.3g})"
            )
        return complex(self.determinant_many(np.array([k]))[0])

    def matrix(self, k: complex) -> np.ndarray:
        """Base-level Nystrom matrix restricted to active components."""
        k = complex(k)
        if k == 0:
            raise ValueError("Y0 is not defined at k = 0")
        if not self.base.active:
            return np.zeros((0, 0), dtype=complex)
        return self.base.assemble(np.array([k]))[0]

    def factorization(self, k: complex):
        """Cached LU factors of I + Y0(k) at base level (active components)."""
        return _lu_cached(self, complex(k))


@lru_cache(maxsize=64)
def _lu_cached(ev: DeterminantEvaluator, k: complex):
    mat = ev.matrix(k)
    mat[np.diag_indices_from(mat)] += 1.0
    return scipy.linalg.lu_factor(mat, check_finite=False)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense 2N x 2N Nystrom matrix with 2 x 2 blocks of size N."""

    entries: np.ndarray
    block_size: int

    def block(self, a: int, b: int) -> np.ndarray:
        N = self.block_size
        return self.entries[a * N : (a + 1) * N, b * N : (b + 1) * N]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))


def assemble_Y0(ev: DeterminantEvaluator, k: complex) -> OperatorMatrix:
    k = complex(k)
    if k == 0:
        raise ValueError("Y0 is not defined at k = 0")
    return OperatorMatrix(ev.base.full_matrix(k), ev.base.size)


def trace_closed_form(pair: CoefficientPair, k: complex) -> complex:
    """Tr Y0(k) = -(1 + i) p0 / (2 k) - (1 - i) q0 / (4 k^3)."""
    k = complex(k)
    if k == 0:
        raise ValueError("k = 0 is excluded")
    p0, q0 = moments(pair)
    return -(1 + 1j) * p0 / (2 * k) - (1 - 1j) * q0 / (4 * k**3)


def determinant_D(ev: DeterminantEvaluator, k: complex) -> complex:
    return ev.determinant(k)


def lu_determinant(mat: np.ndarray) -> complex:
    """det(I + mat) from an LU factorisation with partial pivoting."""
    a = np.array(mat, dtype=complex)
    a[np.diag_indices_from(a)] += 1.0
    lu, piv = scipy.linalg.lu_factor(a)
    swaps = np.count_nonzero(piv != np.arange(a.shape[0]))
    return complex(np.prod(np.diag(lu)) * (-1) ** swaps)


@dataclass(frozen=True)
class DeterminantGrid:
    ks: np.ndarray
    values: np.ndarray
    status: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["re_k", "im_k", "re_D", "im_D", "abs_D", "status"])
            for k, d, s in zip(self.ks.ravel(), self.values.ravel(), self.status.ravel()):
                k, d = complex(k), complex(d)
                if s == "ok":
                    writer.writerow([repr(k.real), repr(k.imag), repr(d.real), repr(d.imag), repr(abs(d)), s])
                else:
                    writer.writerow([repr(k.real), repr(k.imag), "", "", "", s])


ORIGIN_MASK = 1e-10


def determinant_grid(
    ev: DeterminantEvaluator, region: Rectangle, resolution: tuple[int, int], workers: int = 1
) -> DeterminantGrid:
    """D on a uniform ``resolution = (n_re, n_im)`` grid over ``region``.

    Cells at the origin or outside the stability envelope are masked with
    status ``refused``.
    """
    n_re, n_im = resolution
    re = np.linspace(region.re_min, region.re_max, n_re)
    im = np.linspace(region.im_min, region.im_max, n_im)
    ks = re[None, :] + 1j * im[:, None]
    flat = ks.ravel()
    ok = (np.abs(flat) > ORIGIN_MASK) & ev.in_envelope(flat)
    values = np.full(flat.size, np.nan + 0j)
    targets = flat[ok]
    if workers > 1 and targets.size > _BATCH:
        chunks = np.array_split(targets, workers * 4)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(ev.determinant_many, chunks))
        values[ok] = np.concatenate(parts)
    else:
        values[ok] = ev.determinant_many(targets)
    status = np.where(ok & np.isfinite(values), "ok", "refused")
    return DeterminantGrid(ks, values.reshape(ks.shape), status.reshape(ks.shape))
