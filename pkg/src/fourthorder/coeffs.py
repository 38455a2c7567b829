"""Compactly supported coefficients p, q on [0, gamma].

Coefficients are stored as vectorised closures rather than grids so that any
quadrature can resample them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline

Sampler = Callable[[np.ndarray], np.ndarray]

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def _on_support(fn: Sampler, gamma: float) -> Sampler:
    """Wrap ``fn`` so it returns 0 outside the closed interval [0, gamma]."""

    def sampler(x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= gamma)
        out = np.zeros_like(x)
        if np.any(inside):
            out[inside] = fn(x[inside])
        return out

    return sampler


@dataclass(frozen=True)
class Coefficient:
    """A real function supported in [0, support_end].

    ``derivative_samplers[j]`` evaluates the (j+1)-th derivative on the open
    support and returns 0 outside; it is empty when derivatives are unknown.
    """

    support_end: float
    sampler: Sampler
    left_value: float
    right_value: float
    derivative_samplers: tuple[Sampler, ...] = ()
    descriptor: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.support_end > 0:
            raise ValueError(f"support_end must be positive, got {self.support_end}")

    def __call__(self, x):
        return self.sampler(np.asarray(x, dtype=float))

    @property
    def derivative_order(self) -> int:
        return len(self.derivative_samplers)

    def derivative(self, order: int, x):
        """Return the ``order``-th derivative at ``x`` (order 0 is the value)."""
        if order == 0:
            return self(x)
        if order > self.derivative_order:
            raise ValueError(
                f"derivative of order {order} requested, only {self.derivative_order} available"
            )
        return self.derivative_samplers[order - 1](np.asarray(x, dtype=float))

    def is_zero(self) -> bool:
        if self.descriptor is not None:
            kind = self.descriptor.get("kind")
            if kind == "step" and self.descriptor.get("height") == 0:
                return True
            if kind == "bump" and self.descriptor.get("amplitude") == 0:
                return True
        xs = np.linspace(0.0, self.support_end, 257)
        return bool(np.all(self(xs) == 0.0))


@dataclass(frozen=True)
class CoefficientPair:
    p: Coefficient
    q: Coefficient

    @property
    def gamma(self) -> float:
        return max(self.p.support_end, self.q.support_end)

    def scaled(self, factor: float) -> "CoefficientPair":
        return CoefficientPair(scale(self.p, factor), scale(self.q, factor))


def make_step(height: float, gamma: float) -> Coefficient:
    """Indicator of [0, gamma] times ``height``."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    h = float(height)
    return Coefficient(
        support_end=float(gamma),
        sampler=_on_support(lambda x: np.full_like(x, h), gamma),
        left_value=h,
        right_value=h,
        descriptor={"kind": "step", "height": h, "gamma": float(gamma)},
    )


def zero_coefficient(gamma: float = 1.0) -> Coefficient:
    return make_step(0.0, gamma)


def _from_polynomial(poly: Polynomial, gamma: float, max_order: int, descriptor: dict) -> Coefficient:
    derivs = tuple(_on_support(poly.deriv(j), gamma) for j in range(1, max_order + 1))
    return Coefficient(
        support_end=float(gamma),
        sampler=_on_support(poly, gamma),
        left_value=float(poly(0.0)),
        right_value=float(poly(gamma)),
        derivative_samplers=derivs,
        descriptor=descriptor,
    )


def make_bump(amplitude: float, gamma: float, smoothness_order: int) -> Coefficient:
    """Polynomial bump ``amplitude * x**m * (gamma - x)**m`` on [0, gamma].

    Analytic derivative samplers are attached up to order 4, which covers both
    the square-operator construction and the beam reduction.
    """
    m = int(smoothness_order)
    if m < 0 or m > 4:
        raise ValueError(f"smoothness_order must lie in 0..4, got {smoothness_order}")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    poly = float(amplitude) * Polynomial([0.0, 1.0]) ** m * Polynomial([gamma, -1.0]) ** m
    desc = {"kind": "bump", "amplitude": float(amplitude), "gamma": float(gamma), "order": m}
    return _from_polynomial(poly, gamma, 4, desc)


def make_table(points: Sequence[Sequence[float]]) -> Coefficient:
    """Cubic-spline interpolant of ``(x, value)`` pairs; support is [0, x_last]."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValueError("table needs at least two (x, value) pairs")
    xs, vs = arr[:, 0], arr[:, 1]
    if xs[0] != 0.0:
        raise ValueError("table support must start at x = 0")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("table abscissae must be strictly increasing")
    gamma = float(xs[-1])
    if xs.size == 2:
        slope = (vs[1] - vs[0]) / gamma
        poly = Polynomial([vs[0], slope])
        desc = {"kind": "table", "points": arr.tolist()}
        return _from_polynomial(poly, gamma, 3, desc)
    spline = CubicSpline(xs, vs)
    derivs = tuple(_on_support(spline.derivative(j), gamma) for j in (1, 2, 3))
    return Coefficient(
        support_end=gamma,
        sampler=_on_support(spline, gamma),
        left_value=float(vs[0]),
        right_value=float(vs[-1]),
        derivative_samplers=derivs,
        descriptor={"kind": "table", "points": arr.tolist()},
    )


def scale(f: Coefficient, factor: float) -> Coefficient:
    c = float(factor)
    desc = None
    if f.descriptor is not None:
        desc = dict(f.descriptor)
        for key in ("height", "amplitude"):
            if key in desc:
                desc[key] = desc[key] * c
        if desc.get("kind") not in ("step", "bump"):
            desc = None
    return Coefficient(
        support_end=f.support_end,
        sampler=lambda x, s=f.sampler: c * s(x),
        left_value=c * f.left_value,
        right_value=c * f.right_value,
        derivative_samplers=tuple(lambda x, d=d: c * d(x) for d in f.derivative_samplers),
        descriptor=desc,
    )


def from_descriptor(desc: dict) -> Coefficient:
    """Build a coefficient from its JSON descriptor."""
    kind = desc.get("kind")
    if kind == "step":
        return make_step(desc.get("height", 0.0), desc.get("gamma", 1.0))
    if kind == "bump":
        return make_bump(desc.get("amplitude", 0.0), desc.get("gamma", 1.0), desc.get("order", 4))
    if kind == "table":
        return make_table(desc["points"])
    raise ValueError(f"unknown coefficient kind {kind!r}")


def to_descriptor(f: Coefficient, samples: int = 201) -> dict:
    """JSON descriptor; coefficients without one are exported as a sampled table."""
    if f.descriptor is not None:
        return dict(f.descriptor)
    xs = np.linspace(0.0, f.support_end, samples)
    return {"kind": "table", "points": np.column_stack([xs, f(xs)]).tolist()}


def _panel_rule(gamma: float, panels: int, order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    h = gamma / panels
    starts = h * np.arange(panels)
    x = (starts[:, None] + 0.5 * h * (t + 1.0)[None, :]).ravel()
    wt = np.tile(0.5 * h * w, panels)
    return x, wt


def integrate(fn: Callable[[np.ndarray], np.ndarray], gamma: float, panels: int = 16, order: int = 20):
    x, w = _panel_rule(gamma, panels, order)
    return np.sum(w * fn(x))


def _breakpoints(f: Coefficient) -> np.ndarray:
    if f.descriptor is not None and f.descriptor.get("kind") == "table":
        return np.asarray(f.descriptor["points"], dtype=float)[:, 0]
    return np.array([0.0, f.support_end])


def _integrate_coefficient(f: Coefficient, weight=None, panels_per_piece: int = 8, order: int = 20):
    """Integrate f (times an optional weight) piecewise between its breakpoints."""
    brk = _breakpoints(f)
    total = 0.0
    for a, b in zip(brk[:-1], brk[1:]):
        x, w = _panel_rule(b - a, panels_per_piece, order)
        x = x + a
        vals = f(x)
        if weight is not None:
            vals = vals * weight(x)
        total = total + np.sum(w * vals)
    return total


def moments(pair: CoefficientPair) -> tuple[float, float]:
    """Return (integral of p, integral of q)."""
    return float(_integrate_coefficient(pair.p)), float(_integrate_coefficient(pair.q))


def fourier_hat(f: Coefficient, kappa: complex) -> complex:
    """(2 pi)^(-1/2) times the integral of f(x) exp(-i kappa x) over the support."""
    kappa = complex(kappa)
    panels = max(8, int(np.ceil(abs(kappa) * f.support_end / 2.0)))
    val = _integrate_coefficient(f, weight=lambda x: np.exp(-1j * kappa * x), panels_per_piece=panels)
    return complex(val) / _SQRT_2PI


def signed_sqrt_values(values):
    """|v|^(1/2) sign(v), elementwise."""
    v = np.asarray(values, dtype=float)
    return np.sign(v) * np.sqrt(np.abs(v))


def signed_sqrt(f: Coefficient, x):
    out = signed_sqrt_values(f(x))
    return float(out) if np.ndim(out) == 0 else out


def square_pair(p: Coefficient) -> CoefficientPair:
    """Pair (p, p'' + p^2), whose fourth-order operator is (-d^2 - p)^2."""
    if p.derivative_order < 2:
        raise ValueError("square_pair needs derivative samplers of p up to order 2")
    gamma = p.support_end
    d = [p.sampler] + list(p.derivative_samplers)

    def q_fn(x):
        return d[2](x) + d[0](x) ** 2

    derivs: list[Sampler] = []
    if len(d) > 3:
        derivs.append(lambda x: d[3](x) + 2.0 * d[0](x) * d[1](x))
    if len(d) > 4:
        derivs.append(lambda x: d[4](x) + 2.0 * d[1](x) ** 2 + 2.0 * d[0](x) * d[2](x))
    q = Coefficient(
        support_end=gamma,
        sampler=_on_support(q_fn, gamma),
        left_value=float(q_fn(np.array([0.0]))[0]),
        right_value=float(q_fn(np.array([gamma]))[0]),
        derivative_samplers=tuple(_on_support(g, gamma) for g in derivs),
    )
    return CoefficientPair(p, q)
