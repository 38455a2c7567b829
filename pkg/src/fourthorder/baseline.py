"""Second-order reference: h = -d^2 - p with d(k) = det(I - r0(k) p).

The determinant is assembled like the fourth-order one (signed root on the
left, |p|^(1/2) on the right, symmetric weights) and the zero finder is the
same, so comparisons between the two share numerics.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg

from .coeffs import Coefficient, CoefficientPair, signed_sqrt_values, square_pair
from .fredholm import (
    DEFAULT_MAX_ENTRY,
    DEFAULT_ORDER,
    DEFAULT_PANELS,
    DeterminantEvaluator,
    Quadrature,
    Rectangle,
    _richardson,
    gauss_legendre,
)
from .resonances import (
    SearchResult,
    SearchSettings,
    Zero,
    counting_functions,
    find_zeros,
    fit_slope,
    match_zero_sets,
    punctured_square,
)

SQRT_2PI = np.sqrt(2.0 * np.pi)


class _BaseLevel:
    def __init__(self, quad: Quadrature, p: Coefficient):
        x, w = quad.nodes, quad.weights
        sw = np.sqrt(w)
        vals = p(x)
        self.x = x
        self.u = -signed_sqrt_values(vals) * sw
        self.v = np.sqrt(np.abs(vals)) * sw
        self.active = bool(np.any(self.v != 0))
        self.dist = np.abs(x[:, None] - x[None, :])
        self.size = x.size

    def matrices(self, ks: np.ndarray) -> np.ndarray:
        ks = np.asarray(ks, dtype=complex)[:, None, None]
        r0 = 1j * np.exp(1j * ks * self.dist[None]) / (2 * ks)
        return self.u[None, :, None] * r0 * self.v[None, None, :]

    def determinants(self, ks: np.ndarray) -> np.ndarray:
        if not self.active:
            return np.ones(len(ks), dtype=complex)
        mats = self.matrices(ks)
        n = mats.shape[-1]
        mats[:, np.arange(n), np.arange(n)] += 1.0
        sign, logabs = np.linalg.slogdet(mats)
        return sign * np.exp(logabs)


@dataclass(frozen=True, eq=False)
class BaselineEvaluator:
    """d(k) for h = -d^2 - p; same conventions as :class:`DeterminantEvaluator`."""

    p: Coefficient
    quad: Quadrature
    richardson: int = 0
    max_entry: float = DEFAULT_MAX_ENTRY
    _levels: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        levels, quad = [], self.quad
        for _ in range(self.richardson + 1):
            levels.append(_BaseLevel(quad, self.p))
            quad = quad.refined(2)
        object.__setattr__(self, "_levels", tuple(levels))

    @classmethod
    def build(cls, p: Coefficient, panels: int = DEFAULT_PANELS, order: int = DEFAULT_ORDER, **kwargs):
        return cls(p, gauss_legendre(p.support_end, panels, order), **kwargs)

    @property
    def gamma(self) -> float:
        return self.p.support_end

    @property
    def base(self) -> _BaseLevel:
        return self._levels[0]

    def with_richardson(self, levels: int) -> "BaselineEvaluator":
        return replace(self, richardson=levels)

    def entry_scale(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=complex)
        return np.exp(self.gamma * np.maximum(0.0, -k.imag))

    def envelope_limits(self) -> tuple[float, float]:
        """Only Im k is limited for the second-order kernel."""
        return -np.inf, -float(np.log(self.max_entry) / self.gamma)

    def in_envelope(self, k) -> np.ndarray:
        return self.entry_scale(k) <= self.max_entry

    def determinant_many(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=complex)
        flat = ks.ravel()
        out = np.full(flat.size, np.nan + 0j)
        ok = (flat != 0) & self.in_envelope(flat)
        if np.any(ok):
            vals = [level.determinants(flat[ok]) for level in self._levels]
            out[ok] = _richardson(vals)
        return out.reshape(ks.shape)

    def __call__(self, ks) -> np.ndarray:
        return self.determinant_many(ks)

    def matrix(self, k: complex) -> np.ndarray:
        return self.base.matrices(np.array([complex(k)]))[0]

    def factorization(self, k: complex):
        return _lu_cached(self, complex(k))


@lru_cache(maxsize=64)
def _lu_cached(base: BaselineEvaluator, k: complex):
    mat = base.matrix(k)
    mat[np.diag_indices_from(mat)] += 1.0
    return scipy.linalg.lu_factor(mat, check_finite=False)


def determinant_d(base: BaselineEvaluator, k: complex) -> complex:
    k = complex(k)
    if k == 0:
        raise ValueError("d is not defined at k = 0")
    return complex(base(np.array([k]))[0])


def baseline_s_matrix(base: BaselineEvaluator, k: complex) -> np.ndarray:
    """I2 - (i pi / k) phi1 (I + y0)^(-1) phi2 on the base quadrature.

    The amplitude is taken against V = -p, so the Born term is -int p.
    """
    k = complex(k)
    level = base.base
    if not level.active:
        return np.eye(2, dtype=complex)
    x = level.x
    em, ep = np.exp(-1j * k * x), np.exp(1j * k * x)
    rows = np.array([em * level.v, ep * level.v]) / SQRT_2PI
    cols = np.stack([level.u * ep, level.u * em], axis=1) / SQRT_2PI
    sol = scipy.linalg.lu_solve(base.factorization(k), cols)
    return np.eye(2) - (1j * np.pi / k) * rows @ sol


def birman_krein_check(base: BaselineEvaluator, k: float) -> float:
    """|det s(k) - d(-k)/d(k)| with both sides on the base quadrature."""
    k = float(k)
    if k <= 0:
        raise ValueError("k must be positive")
    plain = base if base.richardson == 0 else base.with_richardson(0)
    lhs = np.linalg.det(baseline_s_matrix(plain, k))
    rhs = determinant_d(plain, -k) / determinant_d(plain, k)
    return float(abs(lhs - rhs))


@dataclass(frozen=True)
class ZworskiReport:
    radius: float
    count: int
    slope: float
    radii: list[float]
    counts: list[int]
    off_axis_fraction: list[float]


def baseline_zeros(base: BaselineEvaluator, radius: float, inner: float = 0.05,
                   settings: SearchSettings | None = None) -> SearchResult:
    return find_zeros(base, punctured_square(radius, inner), settings)


def zworski_count(base: BaselineEvaluator, r: float, zeros: Sequence[Zero] | None = None,
                  fit_from: float = 0.25, samples: int = 24, delta: float = 0.3) -> ZworskiReport:
    """n(r) and the slope of n(s) for s in [fit_from * r, r].

    ``off_axis_fraction`` gives, at each sampled radius, the share of zeros
    with |Im k| > delta |k|.
    """
    if zeros is None:
        result = baseline_zeros(base, r)
        if not result.complete or result.uncovered:
            raise RuntimeError("zero search incomplete; counts are not certified")
        zeros = result.zeros
    radii = list(np.linspace(fit_from * r, r, samples))
    rows = counting_functions(zeros, radii)
    counts = [row.total for row in rows]
    frac = []
    for s in radii:
        inside = [z for z in zeros if abs(z.position) < s]
        off = [z for z in inside if abs(z.position.imag) > delta * abs(z.position)]
        frac.append(len(off) / len(inside) if inside else 0.0)
    return ZworskiReport(float(r), counts[-1], fit_slope(radii, counts), radii, counts, frac)


@dataclass
class SquareOracleReport:
    fourth_order: list[Zero]
    expected: list[tuple[complex, int]]
    pairs: list
    unmatched_fourth: list[Zero]
    unmatched_expected: list[tuple[complex, int]]
    ratio_samples: list[tuple[complex, complex]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.unmatched_fourth and not self.unmatched_expected

    @property
    def max_distance(self) -> float:
        return max((d for _, _, d in self.pairs), default=0.0)


def square_zero_oracle(p: Coefficient, region: float | Rectangle | Sequence[Rectangle], tol: float = 1e-4,
                       panels: int = 4, order: int = 16, richardson: int = 1,
                       inner: float = 0.05, settings: SearchSettings | None = None) -> SquareOracleReport:
    """Match zeros of D for (p, p'' + p^2) against {d(z) = 0} and {d(i z) = 0}.

    ``region`` is either a radius (punctured square) or explicit rectangles.
    The baseline search covers the same region and its rotation by -i.
    """
    pair: CoefficientPair = square_pair(p)
    ev = DeterminantEvaluator.build(pair, panels, order, richardson=richardson)
    base = BaselineEvaluator.build(p, panels, order, richardson=richardson)
    if isinstance(region, (int, float)):
        boxes = punctured_square(float(region), inner)
        rotated = boxes
    else:
        boxes = [region] if isinstance(region, Rectangle) else list(region)
        # d(i z) = 0 with z in a box  <=>  d(w) = 0 with w = i z in the rotated box
        rotated = [Rectangle(-b.im_max, -b.im_min, b.re_min, b.re_max) for b in boxes]
    four = find_zeros(ev, boxes, settings)
    plain = find_zeros(base, boxes, settings)
    turned = plain if rotated is boxes else find_zeros(base, rotated, settings)

    def inside(z):
        return any(b.contains(z) for b in boxes)

    expected = [(z.position, z.multiplicity) for z in plain.zeros if inside(z.position)]
    expected += [(-1j * z.position, z.multiplicity) for z in turned.zeros if inside(-1j * z.position)]
    pairs, lost, missing = match_zero_sets(four.zeros, expected, tol)
    probes = [b.center for b in boxes]
    ratios = []
    for k in probes:
        d4 = ev.determinant_many(np.array([k]))[0]
        d2 = base(np.array([k, 1j * k]))
        ratios.append((complex(k), complex(d4 / (d2[0] * d2[1]))))
    return SquareOracleReport(four.zeros, expected, pairs, lost, missing, ratios)
