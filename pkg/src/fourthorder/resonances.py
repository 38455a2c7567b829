"""Zeros of D in the k-plane: argument-principle search, Laurent data at 0,
model resonances of the step fixture and counting functions.

The search routines accept any vectorised analytic function ``f(ks)`` that
returns NaN where it refuses to evaluate (a :class:`DeterminantEvaluator`
qualifies), so the second-order baseline reuses them unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .fredholm import Rectangle

SECTORS = ("K1", "K2", "K3", "K4")

AnalyticFunction = Callable[[np.ndarray], np.ndarray]


class ContourError(RuntimeError):
    """A zero lies on (or extremely close to) the contour."""


class RefusedRegion(RuntimeError):
    """The function refused to evaluate somewhere on the contour."""


def sector_of(z: complex) -> str:
    """K_j for arg z in [(j-1) pi/2, j pi/2), arguments taken in [0, 2 pi)."""
    a = np.angle(complex(z)) % (2 * np.pi)
    return SECTORS[min(int(a // (np.pi / 2)), 3)]


def in_closed_first_quadrant(z: complex, tol: float = 1e-9) -> bool:
    a = np.angle(complex(z))
    return -tol <= a <= np.pi / 2 + tol


@dataclass(frozen=True)
class Zero:
    position: complex
    multiplicity: int
    sector: str
    residual: float = 0.0

    @property
    def eigenvalue_candidate(self) -> bool:
        return in_closed_first_quadrant(self.position)

    @property
    def spectral_parameter(self) -> complex:
        return self.position**4

    def to_json(self) -> dict:
        return {
            "re": self.position.real,
            "im": self.position.imag,
            "multiplicity": self.multiplicity,
            "sector": self.sector,
            "residual": self.residual,
        }


def make_zero(z: complex, multiplicity: int = 1, residual: float = 0.0) -> Zero:
    z = complex(z)
    return Zero(z, int(multiplicity), sector_of(z), float(residual))


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float


# -- contour sampling --------------------------------------------------------


class CachedFunction:
    """Memoising wrapper so adjacent boxes share edge evaluations."""

    def __init__(self, f: AnalyticFunction):
        self.f = f
        self.cache: dict[tuple[float, float], complex] = {}
        self.evaluations = 0

    @staticmethod
    def _key(z: complex) -> tuple[float, float]:
        return (round(z.real, 11), round(z.imag, 11))

    def __call__(self, zs) -> np.ndarray:
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        keys = [self._key(z) for z in zs]
        missing = [i for i, key in enumerate(keys) if key not in self.cache]
        if missing:
            uniq = {}
            for i in missing:
                uniq.setdefault(keys[i], zs[i])
            pts = np.array(list(uniq.values()))
            vals = np.asarray(self.f(pts), dtype=complex)
            self.evaluations += pts.size
            for key, val in zip(uniq, vals):
                self.cache[key] = complex(val)
        return np.array([self.cache[key] for key in keys])


@dataclass(frozen=True)
class ContourSettings:
    """Sampling controls for phase tracking along a contour.

    ``max_step`` bounds the distance between samples, ``max_phase_step`` the
    phase increment accepted between neighbours (bisection otherwise), and
    segments shorter than ``min_segment * max(1, |z|)`` that still need
    bisection signal a zero on the contour.
    """

    max_step: float = 0.25
    max_phase_step: float = np.pi / 4
    min_segment: float = 1e-7
    winding_residual: float = 0.2


def _sample_segment(f, z0: complex, z1: complex, settings: ContourSettings):
    """Adaptive samples of f on [z0, z1]; returns (points, values) incl. endpoints."""
    length = abs(z1 - z0)
    n = max(2, int(np.ceil(length / settings.max_step)))
    t = np.linspace(0.0, 1.0, n + 1)
    pts = z0 + (z1 - z0) * t
    vals = f(pts)
    while True:
        if not np.all(np.isfinite(vals)):
            raise RefusedRegion(f"evaluation refused on segment {z0} -> {z1}")
        steps = np.abs(np.angle(vals[1:] / vals[:-1]))
        small = np.abs(vals) == 0
        bad = np.flatnonzero((steps > settings.max_phase_step) | small[1:] | small[:-1])
        if bad.size == 0:
            return pts, vals
        seg = np.abs(pts[bad + 1] - pts[bad])
        scale = np.maximum(1.0, np.abs(pts[bad]))
        if np.any(seg < settings.min_segment * scale) or np.any(small):
            raise ContourError(f"zero on or near the contour between {z0} and {z1}")
        mids = 0.5 * (pts[bad] + pts[bad + 1])
        mvals = f(mids)
        pts = np.insert(pts, bad + 1, mids)
        vals = np.insert(vals, bad + 1, mvals)


def _polyline(vertices: Sequence[complex]) -> list[tuple[complex, complex]]:
    return [(vertices[i], vertices[(i + 1) % len(vertices)]) for i in range(len(vertices))]


def _contour_samples(f, contour, settings: ContourSettings, samples: int | None = None):
    if isinstance(contour, Rectangle):
        pts, vals = [], []
        for z0, z1 in _polyline(contour.corners):
            p, v = _sample_segment(f, z0, z1, settings)
            pts.append(p[:-1])
            vals.append(v[:-1])
        pts, vals = np.concatenate(pts), np.concatenate(vals)
    elif isinstance(contour, Circle):
        n = samples or max(64, int(np.ceil(2 * np.pi * contour.radius / settings.max_step)))
        verts = contour.center + contour.radius * np.exp(2j * np.pi * np.arange(n) / n)
        pts, vals = [], []
        for z0, z1 in _polyline(list(verts)):
            p, v = _sample_segment(f, z0, z1, settings)
            pts.append(p[:-1])
            vals.append(v[:-1])
        pts, vals = np.concatenate(pts), np.concatenate(vals)
    else:
        raise TypeError(f"unsupported contour {contour!r}")
    return pts, vals


def _winding_from_samples(vals: np.ndarray, settings: ContourSettings) -> int:
    closed = np.append(vals, vals[0])
    total = np.sum(np.angle(closed[1:] / closed[:-1])) / (2 * np.pi)
    w = int(np.round(total))
    if abs(total - w) > settings.winding_residual:
        raise ContourError(f"non-integer winding {total:.3f}")
    return w


def winding_number(f: AnalyticFunction, contour, samples: int | None = None,
                   settings: ContourSettings | None = None) -> int:
    """Winding of arg f along a rectangle (counter-clockwise) or circle."""
    settings = settings or ContourSettings()
    if not isinstance(f, CachedFunction):
        f = CachedFunction(f)
    _, vals = _contour_samples(f, contour, settings, samples)
    return _winding_from_samples(vals, settings)


def _location_estimate(pts: np.ndarray, vals: np.ndarray, winding: int) -> complex:
    """(1/2 pi i) times the contour integral of z f'/f dz, divided by the winding."""
    closed_p = np.append(pts, pts[0])
    closed_v = np.append(vals, vals[0])
    dlog = np.log(np.abs(closed_v[1:] / closed_v[:-1])) + 1j * np.angle(closed_v[1:] / closed_v[:-1])
    mid = 0.5 * (closed_p[1:] + closed_p[:-1])
    return complex(np.sum(mid * dlog) / (2j * np.pi) / winding)


# -- Newton refinement -------------------------------------------------------


def cauchy_derivative(f: AnalyticFunction, z: complex, h: float | None = None, points: int = 8):
    """(f(z), f'(z), mean |f| on the circle) with f' from a circle of radius h."""
    z = complex(z)
    h = 1e-3 * max(1.0, abs(z)) if h is None else h
    w = np.exp(2j * np.pi * np.arange(points) / points)
    vals = np.asarray(f(np.concatenate([[z], z + h * w])), dtype=complex)
    deriv = np.mean(vals[1:] / w) / h
    return vals[0], deriv, float(np.mean(np.abs(vals[1:])))


@dataclass(frozen=True)
class NewtonResult:
    z: complex
    converged: bool
    residual: float
    iterations: int


def newton_refine(f: AnalyticFunction, z0: complex, box: Rectangle | None = None,
                  tol: float = 1e-10, max_iter: int = 40) -> NewtonResult:
    """Newton iteration with a Cauchy-integral derivative.

    ``residual`` is |f(z)| divided by the mean of |f| on the derivative
    circle, a scale-free measure that works in sectors where D is huge.
    """
    z = complex(z0)
    residual = np.inf
    for it in range(1, max_iter + 1):
        val, deriv, scale = cauchy_derivative(f, z)
        if not (np.isfinite(val) and np.isfinite(deriv)) or deriv == 0:
            return NewtonResult(z, False, residual, it)
        residual = abs(val) / scale if scale > 0 else np.inf
        step = val / deriv
        z = z - step
        if box is not None:
            pad = 0.05 * box.size
            if not (box.re_min - pad <= z.real <= box.re_max + pad
                    and box.im_min - pad <= z.imag <= box.im_max + pad):
                return NewtonResult(z, False, residual, it)
        if abs(step) < tol * max(1.0, abs(z)):
            val, _, scale = cauchy_derivative(f, z)
            residual = abs(val) / scale if scale > 0 else np.inf
            return NewtonResult(z, True, residual, it)
    return NewtonResult(z, False, residual, max_iter)


# -- recursive search --------------------------------------------------------


@dataclass(frozen=True)
class SearchSettings:
    """Controls of :func:`find_zeros`; defaults match the CLI defaults."""

    newton_tol: float = 1e-10
    residual_tol: float = 1e-6
    min_box: float = 1e-6
    max_depth: int = 40
    contour: ContourSettings = field(default_factory=ContourSettings)


@dataclass
class SearchResult:
    zeros: list[Zero]
    uncovered: list[Rectangle]
    total_winding: int
    evaluations: int
    unresolved: list[tuple[Rectangle, int]] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return sum(z.multiplicity for z in self.zeros) == self.total_winding and not self.unresolved


# Irrational offsets keep subdivision lines away from symmetry axes.
_SPLIT = (0.5 + 0.0123456789, 0.5 - 0.0098765432)


def _split(box: Rectangle, attempt: int = 0) -> list[Rectangle]:
    fx = _SPLIT[0] + 0.037 * attempt
    fy = _SPLIT[1] - 0.029 * attempt
    xm = box.re_min + fx * (box.re_max - box.re_min)
    ym = box.im_min + fy * (box.im_max - box.im_min)
    return [
        Rectangle(box.re_min, xm, box.im_min, ym),
        Rectangle(xm, box.re_max, box.im_min, ym),
        Rectangle(xm, box.re_max, ym, box.im_max),
        Rectangle(box.re_min, xm, ym, box.im_max),
    ]


def _split_long(box: Rectangle) -> list[Rectangle]:
    """Split an elongated box along its long side only."""
    w, h = box.re_max - box.re_min, box.im_max - box.im_min
    if w >= h:
        xm = box.re_min + _SPLIT[0] * w
        return [Rectangle(box.re_min, xm, box.im_min, box.im_max), Rectangle(xm, box.re_max, box.im_min, box.im_max)]
    ym = box.im_min + _SPLIT[1] * h
    return [Rectangle(box.re_min, box.re_max, box.im_min, ym), Rectangle(box.re_min, box.re_max, ym, box.im_max)]


def envelope_clip(f, region: Rectangle) -> tuple[Rectangle | None, list[Rectangle]]:
    """Intersect ``region`` with the evaluator's envelope {Re k >= a, Im k >= b}."""
    limits = getattr(f, "envelope_limits", None)
    if limits is None:
        return region, []
    a, b = limits()
    if region.re_min >= a and region.im_min >= b:
        return region, []
    uncovered = []
    re_lo, im_lo = max(region.re_min, a), max(region.im_min, b)
    if region.re_min < a:
        uncovered.append(Rectangle(region.re_min, min(a, region.re_max), region.im_min, region.im_max))
    if region.im_min < b and re_lo < region.re_max:
        uncovered.append(Rectangle(re_lo, region.re_max, region.im_min, min(b, region.im_max)))
    if re_lo >= region.re_max or im_lo >= region.im_max:
        return None, uncovered
    return Rectangle(re_lo, region.re_max, im_lo, region.im_max), uncovered


def find_zeros(f, region: Rectangle | Iterable[Rectangle], settings: SearchSettings | None = None) -> SearchResult:
    """All zeros of ``f`` inside ``region`` by recursive argument-principle bisection.

    ``region`` may be a single rectangle or a list of non-overlapping ones.
    Parts outside the evaluator's stability envelope, and boxes on whose
    boundary evaluation is refused, are returned in ``uncovered``.
    """
    settings = settings or SearchSettings()
    cf = f if isinstance(f, CachedFunction) else CachedFunction(f)
    boxes = [region] if isinstance(region, Rectangle) else list(region)
    zeros: list[Zero] = []
    uncovered: list[Rectangle] = []
    unresolved: list[tuple[Rectangle, int]] = []
    total = 0

    work: list[tuple[Rectangle, int, int | None, tuple | None]] = []
    for box in boxes:
        clipped, lost = envelope_clip(f, box)
        uncovered.extend(lost)
        if clipped is not None:
            work.append((clipped, 0, None, None))

    def measure(box):
        pts, vals = _contour_samples(cf, box, settings.contour)
        return _winding_from_samples(vals, settings.contour), (pts, vals)

    while work:
        box, depth, w, samples = work.pop()
        if w is None:
            try:
                w, samples = measure(box)
            except RefusedRegion:
                if box.size > 1.0 and depth < settings.max_depth:
                    work.extend((child, depth + 1, None, None) for child in _split(box))
                else:
                    uncovered.append(box)
                continue
            total += w
        if w == 0:
            continue
        if w == 1:
            start = _location_estimate(*samples, 1)
            if not box.contains(start):
                start = box.center
            res = newton_refine(cf.f, start, box, tol=settings.newton_tol)
            if res.converged and box.contains(res.z) and res.residual < settings.residual_tol:
                zeros.append(make_zero(res.z, 1, res.residual))
                continue
        if box.size < settings.min_box or depth >= settings.max_depth:
            res = newton_refine(cf.f, box.center, box, tol=settings.newton_tol)
            z = res.z if (res.converged and box.contains(res.z)) else box.center
            if res.converged and res.residual < settings.residual_tol:
                zeros.append(make_zero(z, w, res.residual))
            else:
                unresolved.append((box, w))
            continue
        children = None
        for attempt in range(4):
            cand = _split(box, attempt) if attempt < 3 else _split_long(box)
            try:
                measured = [measure(c) for c in cand]
            except ContourError:
                continue
            except RefusedRegion:
                measured = None
                cand_boxes = cand
                break
            if sum(m[0] for m in measured) == w:
                children = [(c, depth + 1, m[0], m[1]) for c, m in zip(cand, measured)]
                break
        else:
            unresolved.append((box, w))
            continue
        if children is None:
            work.extend((c, depth + 1, None, None) for c in cand_boxes)
            continue
        work.extend(children)

    zeros.sort(key=lambda z: (abs(z.position), np.angle(z.position) % (2 * np.pi)))
    return SearchResult(zeros, uncovered, total, cf.evaluations, unresolved)


def punctured_square(radius: float, inner: float) -> list[Rectangle]:
    """Four rectangles tiling [-R, R]^2 minus [-inner, inner]^2 (pinwheel)."""
    R, d = float(radius), float(inner)
    return [
        Rectangle(-d, R, d, R),
        Rectangle(-R, -d, -d, R),
        Rectangle(-R, d, -R, -d),
        Rectangle(d, R, -R, d),
    ]


def certified_radius(radius: float, uncovered: Sequence[Rectangle]) -> float:
    """Largest r <= radius such that the disc |k| < r avoids every uncovered box."""
    r = float(radius)
    for box in uncovered:
        dx = max(box.re_min, 0.0, -box.re_max)
        dy = max(box.im_min, 0.0, -box.im_max)
        r = min(r, float(np.hypot(dx, dy)))
    return r


# -- Laurent data at the origin ----------------------------------------------


@dataclass(frozen=True)
class LaurentData:
    m: int
    alpha: complex
    beta: complex
    coefficients: dict = field(default_factory=dict, compare=False)
    radius: float = 0.0
    ill_conditioned: bool = False


def laurent_coefficients(f: AnalyticFunction, radius: float, points: int = 64,
                         orders: range = range(-8, 5)) -> dict[int, complex]:
    """Trapezoidal contour integrals c_j = (1/2 pi i) \\oint f(k) k^(-j-1) dk."""
    w = np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
    ks = radius * w
    vals = np.asarray(f(ks), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise RefusedRegion("Laurent circle hits a refused evaluation")
    return {j: complex(np.mean(vals * ks ** (-j))) for j in orders}


def laurent_at_origin(f: AnalyticFunction, radius: float = 0.25, points: int = 64,
                      threshold: float = 1e-9) -> LaurentData:
    """m, alpha, beta of D(k) = alpha k^(-m) (1 + beta k + O(k^2)).

    A coefficient counts as nonvanishing when |c_j| radius^j exceeds
    ``threshold`` times the largest such term; values within two decades of
    the threshold mark the extraction as ill-conditioned.
    """
    coef = laurent_coefficients(f, radius, points)
    size = {j: abs(c) * radius**j for j, c in coef.items()}
    top = max(size.values())
    if top == 0:
        return LaurentData(0, 0j, 0j, coef, radius, True)
    significant = [j for j in coef if size[j] > threshold * top]
    lowest = min(significant)
    if lowest < -4:
        raise ValueError(f"pole of order {-lowest} at k = 0 exceeds 4")
    m = -lowest
    alpha = coef[-m]
    beta = coef[-m + 1] / alpha
    ill = any(threshold * top / 100 < size[j] < threshold * top * 100 for j in coef if j <= -m + 1)
    return LaurentData(m, alpha, beta, coef, radius, ill)


# -- model asymptotics and counting ------------------------------------------


def model_resonance(gamma: float, p_plus: float, p_minus: float, n: int) -> complex:
    if p_plus * p_minus == 0:
        raise ValueError("model resonances need p_plus * p_minus != 0")
    if n == 0:
        raise ValueError("index n must be nonzero")
    m = abs(n)
    j = m if p_plus * p_minus > 0 else m + 0.5
    base = (1j * np.pi * j - 2 * np.log(4 * np.pi * m / (gamma * abs(p_plus * p_minus) ** 0.25))) / gamma
    return base if n > 0 else 1j * base


def model_resonances(gamma: float, p_plus: float, p_minus: float, n_range: Iterable[int]) -> list[complex]:
    return [model_resonance(gamma, p_plus, p_minus, n) for n in n_range]


@dataclass(frozen=True)
class CountingRow:
    r: float
    total: int
    k2: int
    k3: int
    k4: int
    k1: int = 0


def counting_functions(zeros: Sequence[Zero], radii: Sequence[float]) -> list[CountingRow]:
    rows = []
    for r in radii:
        inside = [z for z in zeros if abs(z.position) < r]
        by = {s: sum(z.multiplicity for z in inside if z.sector == s) for s in SECTORS}
        rows.append(CountingRow(float(r), sum(by.values()), by["K2"], by["K3"], by["K4"], by["K1"]))
    return rows


def fit_slope(radii: Sequence[float], counts: Sequence[float]) -> float:
    """Least-squares slope of counts against radius."""
    r = np.asarray(radii, dtype=float)
    c = np.asarray(counts, dtype=float)
    return float(np.polyfit(r, c, 1)[0])


def symmetry_mismatch(zeros: Sequence[Zero], transform=lambda z: 1j * np.conj(z)) -> float:
    """Max distance from each transformed zero to the nearest zero of equal multiplicity."""
    if not zeros:
        return 0.0
    pos = np.array([z.position for z in zeros])
    mult = np.array([z.multiplicity for z in zeros])
    worst = 0.0
    for z in zeros:
        image = transform(z.position)
        cand = np.abs(pos - image)
        cand[mult != z.multiplicity] = np.inf
        worst = max(worst, float(cand.min()))
    return worst


@dataclass(frozen=True)
class ForbiddenDomainReport:
    constant: float
    running: list[float]
    violation: float
    count: int


def forbidden_domain_check(zeros: Sequence[Zero], gamma: float, sector: str = "K2") -> ForbiddenDomainReport:
    """C = max |k| exp(2 gamma Re k) over K2 zeros (Im k for the K4 mirror).

    ``running`` lists the constant over the first n zeros by modulus;
    ``violation`` is the largest ratio |k| / (C_half exp(-2 gamma Re k)) over
    all zeros where C_half is fitted on the first half.
    """
    if sector not in ("K2", "K4"):
        raise ValueError("forbidden domain applies to K2 (or mirrored K4)")
    sel = sorted((z.position for z in zeros if z.sector == sector), key=abs)
    if not sel:
        return ForbiddenDomainReport(0.0, [], 0.0, 0)
    part = np.array([z.real if sector == "K2" else z.imag for z in sel])
    vals = np.abs(sel) * np.exp(2 * gamma * part)
    running = list(np.maximum.accumulate(vals))
    half = running[max(0, (len(vals) + 1) // 2 - 1)]
    return ForbiddenDomainReport(float(running[-1]), [float(v) for v in running], float(np.max(vals) / half), len(sel))


def match_zero_sets(found: Sequence[Zero], expected: Sequence[tuple[complex, int]], tol: float):
    """Greedy one-to-one matching by distance; returns (pairs, unmatched_found, unmatched_expected).

    Expected entries carry multiplicities; coincident expected points within
    ``tol`` are merged before matching so multiplicities are summed.
    """
    merged: list[list] = []
    for z, mult in expected:
        for item in merged:
            if abs(item[0] - z) < tol:
                item[1] += mult
                break
        else:
            merged.append([complex(z), int(mult)])
    remaining = list(range(len(merged)))
    pairs, lost = [], []
    for zf in found:
        if not remaining:
            lost.append(zf)
            continue
        dist = [abs(merged[i][0] - zf.position) for i in remaining]
        best = int(np.argmin(dist))
        idx = remaining[best]
        if dist[best] < tol and merged[idx][1] == zf.multiplicity:
            pairs.append((zf, merged[idx][0], dist[best]))
            remaining.pop(best)
        else:
            lost.append(zf)
    missing = [(merged[i][0], merged[i][1]) for i in remaining]
    return pairs, lost, missing


def refined_model_resonance(gamma: float, p_plus: float, p_minus: float, n: int, iterations: int = 50) -> complex:
    """Fixed point of z = (i pi j_n - 2 log(-i z) + log(|p+ p-|/16) / 2) / gamma.

    This solves the large-|k| equation k^4 = (p+ p- / 16) exp(-2 i k gamma)
    with z = i k, keeping the log(-i z) term that the closed-form model
    replaces by log(pi n / gamma).
    """
    start = model_resonance(gamma, p_plus, p_minus, abs(n))
    m = abs(n)
    j = m if p_plus * p_minus > 0 else m + 0.5
    shift = 0.5 * np.log(abs(p_plus * p_minus) / 16.0)
    z = start
    for _ in range(iterations):
        z = (1j * np.pi * j - 2 * np.log(-1j * z) + shift) / gamma
    return z if n > 0 else 1j * z


@dataclass(frozen=True)
class ModelMatchRow:
    n: int
    model: complex
    nearest: complex | None
    distance: float
    count_in_disc: int
    resolvable: bool


def model_matching(zeros: Sequence[Zero], gamma: float, p_plus: float, p_minus: float,
                   n_values: Iterable[int], eps: float, covered: Callable[[complex, float], bool]):
    """Compare computed zeros with the model numbers, disc by disc.

    ``covered(center, radius)`` tells whether a disc lies inside the
    certified search region; only such discs are marked resolvable.
    """
    pos = np.array([z.position for z in zeros]) if zeros else np.zeros(0, dtype=complex)
    mult = np.array([z.multiplicity for z in zeros]) if zeros else np.zeros(0, dtype=int)
    rows = []
    for n in n_values:
        k0 = model_resonance(gamma, p_plus, p_minus, n)
        if pos.size:
            d = np.abs(pos - k0)
            i = int(np.argmin(d))
            nearest, dist = complex(pos[i]), float(d[i])
            count = int(mult[d < eps].sum())
        else:
            nearest, dist, count = None, np.inf, 0
        rows.append(ModelMatchRow(n, k0, nearest, dist, count, bool(covered(k0, eps))))
    return rows


def model_tail_zeros(gamma: float, p_plus: float, p_minus: float, beyond: float, count: int = 4000) -> list[Zero]:
    """Refined model zeros with modulus >= ``beyond`` on all four branches.

    Branches are z, i conj z, i z and conj z for the K2 sequence z_n.  Used
    only as a labelled tail estimate for truncated zero sums.
    """
    out = []
    for n in range(1, count + 1):
        z = refined_model_resonance(gamma, p_plus, p_minus, n, iterations=30)
        for w in (z, 1j * np.conj(z), 1j * z, np.conj(z)):
            if abs(w) >= beyond:
                out.append(make_zero(w))
    return out
