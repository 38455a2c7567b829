"""Reduction of the beam operator (1/b)(a u'')'' to the normal form d^4 + 2 d p d + q.

The change of variable t(x) = int_0^x (b/a)^(1/4) and the conjugation
u -> a^(1/8) b^(3/8) u(x(t)) turn the beam operator into the normal form with

    p = -(eps0' + kappa) / 2,
    q = W' + W eps1,   W = (eps2' + eps2^2) eps1 - eps1'',

where ' is d/dt, alpha = a'/a, beta = b'/b (t-derivatives),
eps0 = (3 alpha + 5 beta)/4, eps1 = (alpha + 3 beta)/8,
eps2 = (3 alpha + beta)/8 and kappa = (5 alpha^2 + 5 beta^2 + 6 alpha beta)/32.

Two independent code paths produce (p, q) as functions of x: a symbolic
chain-rule expansion in the derivatives of a and b (compiled once with
sympy), and a numerical route that carries truncated Taylor jets through the
eps formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .coeffs import Coefficient, CoefficientPair, _on_support, from_descriptor, make_step
from .fredholm import DeterminantEvaluator

DERIVATIVES_NEEDED = 4
FD_STEP = 1e-3
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


class PositivityError(ValueError):
    """a or b is not strictly positive."""


class FitInstabilityError(ValueError):
    """Probe moduli span too narrow a range for a stable 1/k fit."""


# ---------------------------------------------------------------------------
# finite differences (fallback for inputs without analytic derivatives)


@lru_cache(maxsize=None)
def central_weights(order: int, half_width: int) -> np.ndarray:
    """Weights of the central stencil -half_width..half_width for the given derivative order."""
    offsets = np.arange(-half_width, half_width + 1, dtype=float)
    n = offsets.size
    vander = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(vander, rhs)


def fd_derivative(fn, x, order: int, step: float = FD_STEP, accuracy: int = 8) -> np.ndarray:
    """Central finite-difference derivative of ``fn`` with error O(step**accuracy)."""
    half = (order + 1) // 2 + accuracy // 2 - 1
    w = central_weights(order, half)
    x = np.asarray(x, dtype=float)
    offsets = np.arange(-half, half + 1) * step
    vals = fn(x[..., None] + offsets)
    return vals @ w / step**order


# ---------------------------------------------------------------------------
# coefficients


@dataclass(frozen=True)
class EBCoefficients:
    """Rigidity a = 1 + rigidity_excess and density b = 1 + density_excess.

    Both excesses are compactly supported starting at x = 0. Derivatives up to
    order 4 come from the coefficients' analytic samplers when available,
    otherwise from 8th-order central differences with step ``fd_step``
    (noticeably less accurate, especially for the fourth derivative).
    """

    rigidity_excess: Coefficient
    density_excess: Coefficient
    fd_step: float = FD_STEP

    def __post_init__(self):
        xs = np.linspace(0.0, self.length, 2001)
        if min(self.rigidity(xs).min(), self.density(xs).min()) <= 0:
            raise PositivityError("a and b must be strictly positive")

    @classmethod
    def uniform(cls, length: float = 1.0) -> "EBCoefficients":
        return cls(make_step(0.0, length), make_step(0.0, length))

    @classmethod
    def from_descriptor(cls, desc: dict) -> "EBCoefficients":
        """``{"a": excess descriptor, "b": excess descriptor}``; a missing key means 1."""
        a = from_descriptor(desc["a"]) if "a" in desc else None
        b = from_descriptor(desc["b"]) if "b" in desc else None
        length = max(c.support_end for c in (a, b) if c is not None) if (a or b) else 1.0
        return cls(a or make_step(0.0, length), b or make_step(0.0, length))

    @property
    def length(self) -> float:
        return max(self.rigidity_excess.support_end, self.density_excess.support_end)

    @property
    def analytic(self) -> bool:
        return min(self.rigidity_excess.derivative_order, self.density_excess.derivative_order) >= DERIVATIVES_NEEDED

    @staticmethod
    def _derivative(excess: Coefficient, order: int, x, step: float):
        x = np.asarray(x, dtype=float)
        if order == 0:
            return 1.0 + excess(x)
        if excess.derivative_order >= order:
            return excess.derivative(order, x)
        return fd_derivative(excess, x, order, step)

    def rigidity(self, x, order: int = 0):
        return self._derivative(self.rigidity_excess, order, x, self.fd_step)

    def density(self, x, order: int = 0):
        return self._derivative(self.density_excess, order, x, self.fd_step)

    def jets(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Arrays of shape (5, len(x)) holding a^(j)(x) and b^(j)(x), j = 0..4."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a = np.array([self.rigidity(x, j) for j in range(DERIVATIVES_NEEDED + 1)])
        b = np.array([self.density(x, j) for j in range(DERIVATIVES_NEEDED + 1)])
        return a, b

    def slowness(self, x):
        """dt/dx = (b/a)^(1/4)."""
        return (self.density(x) / self.rigidity(x)) ** 0.25

    @cached_property
    def gamma_eb(self) -> float:
        return float(liouville_variable(self, self.length))

    def is_uniform(self) -> bool:
        return self.rigidity_excess.is_zero() and self.density_excess.is_zero()


# ---------------------------------------------------------------------------
# Liouville variable


def _integral_from_zero(eb: EBCoefficients, x: np.ndarray, panels: int = 4) -> np.ndarray:
    """int_0^x (b/a)^(1/4) for 0 <= x <= length, composite Gauss-Legendre."""
    out = np.zeros_like(x)
    for j in range(panels):
        lo, hi = x * j / panels, x * (j + 1) / panels
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes = mid[..., None] + half[..., None] * _GL_NODES
        out += half * (eb.slowness(nodes) @ _GL_WEIGHTS)
    return out


def liouville_variable(eb: EBCoefficients, x):
    """t(x) = int_0^x (b/a)^(1/4) ds; the integrand is 1 outside the support."""
    arr = np.asarray(x, dtype=float)
    flat = np.atleast_1d(arr).astype(float)
    length = eb.length
    inside = np.clip(flat, 0.0, length)
    t = _integral_from_zero(eb, inside)
    t = t + np.minimum(flat, 0.0) + np.maximum(flat - length, 0.0)
    return float(t[0]) if arr.ndim == 0 else t.reshape(arr.shape)


def inverse_liouville(eb: EBCoefficients, t, tol: float = 1e-12, max_iter: int = 100):
    """x(t) by safeguarded Newton inside the bracket [0, length]."""
    arr = np.asarray(t, dtype=float)
    flat = np.atleast_1d(arr).astype(float)
    length, gamma = eb.length, eb.gamma_eb
    x = np.empty_like(flat)
    below, above = flat <= 0, flat >= gamma
    x[below] = flat[below]
    x[above] = length + flat[above] - gamma
    mid = ~(below | above)
    target = flat[mid]
    lo = np.zeros_like(target)
    hi = np.full_like(target, length)
    guess = target * length / gamma
    for _ in range(max_iter):
        resid = liouville_variable(eb, guess) - target
        lo = np.where(resid < 0, guess, lo)
        hi = np.where(resid > 0, guess, hi)
        step = resid / eb.slowness(guess)
        new = guess - step
        outside = (new <= lo) | (new >= hi)
        new = np.where(outside, 0.5 * (lo + hi), new)
        done = np.abs(new - guess) <= tol * max(1.0, length)
        guess = new
        if np.all(done):
            break
    x[mid] = guess
    return float(x[0]) if arr.ndim == 0 else x.reshape(arr.shape)


# ---------------------------------------------------------------------------
# route A: symbolic chain rule, compiled once


@lru_cache(maxsize=1)
def _symbolic_route():
    import sympy as sp

    a = sp.symbols("a0:6")
    b = sp.symbols("b0:6")

    def dx(expr):
        return sum(sp.diff(expr, a[j]) * a[j + 1] + sp.diff(expr, b[j]) * b[j + 1] for j in range(5))

    speed = (a[0] / b[0]) ** sp.Rational(1, 4)  # dx/dt

    def dt(expr):
        return speed * dx(expr)

    alpha = dt(a[0]) / a[0]
    beta = dt(b[0]) / b[0]
    eps0 = (3 * alpha + 5 * beta) / 4
    eps1 = (alpha + 3 * beta) / 8
    eps2 = (3 * alpha + beta) / 8
    kappa = (5 * alpha**2 + 5 * beta**2 + 6 * alpha * beta) / 32
    p = -(dt(eps0) + kappa) / 2
    w = (dt(eps2) + eps2**2) * eps1 - dt(dt(eps1))
    q = dt(w) + w * eps1
    args = list(a[:5]) + list(b[:5])
    fns = {name: sp.lambdify(args, expr, modules="numpy", cse=True)
           for name, expr in (("p", p), ("q", q), ("kappa", kappa), ("alpha", alpha), ("beta", beta))}
    return fns


def symbolic_fields(eb: EBCoefficients, x) -> dict[str, np.ndarray]:
    """p, q, kappa, alpha, beta at the points x (symbolic chain-rule route)."""
    a, b = eb.jets(x)
    fns = _symbolic_route()
    shape = np.shape(np.atleast_1d(x))
    return {k: np.broadcast_to(f(*a, *b), shape).astype(float) for k, f in fns.items()}


# ---------------------------------------------------------------------------
# route B: Taylor jets through the eps formulas


class Jet:
    """Truncated Taylor coefficients c[j] of f(x + h) = sum c[j] h^j, vectorised over samples."""

    def __init__(self, coeffs: np.ndarray):
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def from_derivatives(cls, derivs: np.ndarray) -> "Jet":
        fact = np.array([float(np.prod(np.arange(1, j + 1))) for j in range(len(derivs))])
        return cls(derivs / fact.reshape((-1,) + (1,) * (derivs.ndim - 1)))

    @property
    def degree(self) -> int:
        return self.c.shape[0] - 1

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return Jet(np.concatenate([np.broadcast_to(other, self.c[:1].shape), np.zeros_like(self.c[1:])]))

    def _trim(self, other: "Jet"):
        n = min(self.degree, other.degree) + 1
        return self.c[:n], other.c[:n]

    def __add__(self, other):
        x, y = self._trim(self._coerce(other))
        return Jet(x + y)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        x, y = self._trim(other)
        out = np.zeros_like(x)
        for i in range(x.shape[0]):
            out[i:] += x[i] * y[: x.shape[0] - i]
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other)
        return self * other.power(-1.0)

    def power(self, exponent: float) -> "Jet":
        """self**exponent via the binomial series around the constant term."""
        head = self.c[0]
        g = Jet(np.concatenate([np.zeros_like(self.c[:1]), self.c[1:] / head]))
        out = Jet(np.concatenate([np.ones_like(self.c[:1]), np.zeros_like(self.c[1:])]))
        term = out
        for j in range(1, self.degree + 1):
            term = term * g
            out = out + _binomial(exponent, j) * term
        return out * head**exponent

    def derivative(self) -> "Jet":
        j = np.arange(1, self.degree + 1).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[1:] * j)


def _binomial(r: float, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= (r - i) / (i + 1)
    return out


def jet_fields(eb: EBCoefficients, x) -> dict[str, np.ndarray]:
    """p, q, kappa, alpha, beta at x from Taylor jets carried through the eps formulas."""
    a_d, b_d = eb.jets(x)
    a, b = Jet.from_derivatives(a_d), Jet.from_derivatives(b_d)
    speed = (a / b).power(0.25)

    def dt(f: Jet) -> Jet:
        return speed * f.derivative()

    alpha = dt(a) / a
    beta = dt(b) / b
    eps0 = (3 * alpha + 5 * beta) * 0.25
    eps1 = (alpha + 3 * beta) * 0.125
    eps2 = (3 * alpha + beta) * 0.125
    kappa = (5 * alpha * alpha + 5 * beta * beta + 6 * alpha * beta) * (1 / 32)
    p = -(dt(eps0) + kappa) * 0.5
    w = (dt(eps2) + eps2 * eps2) * eps1 - dt(dt(eps1))
    q = dt(w) + w * eps1
    return {"p": p.value, "q": q.value, "kappa": kappa.value, "alpha": alpha.value, "beta": beta.value}


# ---------------------------------------------------------------------------
# transformation


def _t_sampler(eb: EBCoefficients, field_name: str, route):
    def sampler(t):
        x = inverse_liouville(eb, t)
        return route(eb, x)[field_name]

    return sampler


def kappa_lower_bound_margin(fields: dict[str, np.ndarray]) -> float:
    """min of kappa - (alpha^2 + beta^2)/16 over the samples (nonnegative in exact arithmetic)."""
    bound = (fields["alpha"] ** 2 + fields["beta"] ** 2) / 16
    return float(np.min(fields["kappa"] - bound))


def kappa_integral(eb: EBCoefficients, panels: int = 16, route=None) -> float:
    """int kappa dt, computed as int kappa(x) (b/a)^(1/4) dx."""
    route = route or symbolic_fields
    t, w = np.polynomial.legendre.leggauss(20)
    h = eb.length / panels
    x = (h * np.arange(panels)[:, None] + 0.5 * h * (t + 1)[None, :]).ravel()
    wt = np.tile(0.5 * h * w, panels)
    return float(np.sum(wt * route(eb, x)["kappa"] * eb.slowness(x)))


def transform_to_normal_form(eb: EBCoefficients, route: str = "symbolic", samples: int = 401) -> CoefficientPair:
    """(p, q) in the t variable, supported in [0, gamma_eb].

    ``route`` selects "symbolic" or "jet"; both give the same values up to
    rounding. kappa >= (alpha^2 + beta^2)/16 is asserted on ``samples``
    points of the support.
    """
    fields_fn = {"symbolic": symbolic_fields, "jet": jet_fields}[route]
    gamma = eb.gamma_eb
    xs = np.linspace(0.0, eb.length, samples)
    fields = fields_fn(eb, xs)
    margin = kappa_lower_bound_margin(fields)
    scale = max(1.0, float(np.max(np.abs(fields["kappa"]))))
    if margin < -1e-12 * scale:
        raise ArithmeticError(f"kappa lower bound violated by {-margin:.3g}")
    ends = fields_fn(eb, np.array([0.0, eb.length]))
    p = Coefficient(
        support_end=gamma,
        sampler=_on_support(_t_sampler(eb, "p", fields_fn), gamma),
        left_value=float(ends["p"][0]),
        right_value=float(ends["p"][1]),
    )
    q = Coefficient(
        support_end=gamma,
        sampler=_on_support(_t_sampler(eb, "q", fields_fn), gamma),
        left_value=float(ends["q"][0]),
        right_value=float(ends["q"][1]),
    )
    return CoefficientPair(p, q)


# ---------------------------------------------------------------------------
# unitary-equivalence spot check


def beam_apply(eb: EBCoefficients, u, x, step: float = 1e-2) -> np.ndarray:
    """(1/b)(a u'')'' at x, all derivatives by finite differences."""

    def flux(s):
        return eb.rigidity(s) * fd_derivative(u, s, 2, step)

    return fd_derivative(flux, x, 2, step) / eb.density(x)


def conjugated_apply(eb: EBCoefficients, pair: CoefficientPair, u, x, step: float = 1e-2) -> np.ndarray:
    """(U^-1 H U u)(x) with (U u)(t) = a^(1/8) b^(3/8) u(x(t)), derivatives by finite differences."""

    def weight(s):
        return eb.rigidity(s) ** 0.125 * eb.density(s) ** 0.375

    def y(t):
        s = inverse_liouville(eb, t)
        return weight(s) * u(s)

    def p_flux(t):
        return pair.p(t) * fd_derivative(y, t, 1, step)

    t = liouville_variable(eb, x)
    h_y = fd_derivative(y, t, 4, step) + 2 * fd_derivative(p_flux, t, 1, step) + pair.q(t) * y(t)
    return h_y / weight(x)


def unitary_equivalence_residual(eb: EBCoefficients, pair: CoefficientPair, u, x, step: float = 1e-2) -> float:
    """max |E u - U^-1 H U u| over x relative to max |E u|."""
    lhs = beam_apply(eb, u, x, step)
    rhs = conjugated_apply(eb, pair, u, x, step)
    return float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(lhs)), 1e-300))


# ---------------------------------------------------------------------------
# Borg-type indicator


@dataclass(frozen=True)
class BorgReport:
    probes: list[complex]
    fitted: complex
    predicted: complex
    kappa_integral: float
    verdict: str

    @property
    def relative_error(self) -> float:
        if self.predicted == 0:
            return abs(self.fitted)
        return abs(self.fitted - self.predicted) / abs(self.predicted)

    def to_json(self) -> dict:
        return {
            "probes": [[k.real, k.imag] for k in self.probes],
            "fitted": [self.fitted.real, self.fitted.imag],
            "predicted": [self.predicted.real, self.predicted.imag],
            "relative_error": self.relative_error,
            "kappa_integral": self.kappa_integral,
            "verdict": self.verdict,
        }


def fit_inverse_k_coefficient(ks: np.ndarray, values: np.ndarray, terms: int = 3) -> complex:
    """Least-squares c1 in values = c1/k + c2/k^2 + ... ."""
    ks = np.asarray(ks, dtype=complex)
    design = np.stack([ks ** (-j) for j in range(1, terms + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(design, np.asarray(values, dtype=complex), rcond=None)
    return complex(coef[0])


def borg_indicator(eb: EBCoefficients, k_probe=None, panels: int = 16, order: int = 20,
                   richardson: int = 1, min_span: float = 2.0) -> BorgReport:
    """Fit the 1/k coefficient of D - 1 on the ray arg k = pi/4 and compare with (1+i)/4 int kappa.

    A uniform beam gives D = 1 exactly and the verdict "trivial beam"; a
    positive int kappa certifies that eigenvalues or resonances exist.
    """
    if k_probe is None:
        k_probe = np.exp(0.25j * np.pi) * np.geomspace(20.0, 80.0, 12)
    ks = np.asarray(k_probe, dtype=complex)
    mods = np.abs(ks)
    if mods.max() / mods.min() < min_span:
        raise FitInstabilityError(f"probe moduli span a factor {mods.max() / mods.min():.3g} < {min_span}")
    if eb.is_uniform():
        return BorgReport(list(ks), 0j, 0j, 0.0, "trivial beam")
    pair = transform_to_normal_form(eb)
    ev = DeterminantEvaluator.build(pair, panels, order, richardson=richardson)
    values = np.asarray(ev(ks)) - 1.0
    fitted = fit_inverse_k_coefficient(ks, values)
    total = kappa_integral(eb)
    predicted = (1 + 1j) / 4 * total
    verdict = "non-trivial beam" if total > 0 else "trivial beam"
    return BorgReport(list(ks), fitted, predicted, total, verdict)
