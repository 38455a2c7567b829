"""Command-line entry point: ``fourthorder <command> --config run.json --out DIR``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for an
invalid configuration or I/O problem, 3 when a zero search left part of the
requested region uncovered.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import baseline as base_mod
from . import euler_bernoulli as eb_mod
from .coeffs import CoefficientPair, from_descriptor, make_step, moments, square_pair, to_descriptor
from .fredholm import DeterminantEvaluator, Rectangle, assemble_Y0, determinant_grid, trace_closed_form
from .resonances import (
    SearchSettings,
    ContourSettings,
    certified_radius,
    counting_functions,
    find_zeros,
    fit_slope,
    forbidden_domain_check,
    laurent_at_origin,
    model_resonance,
    punctured_square,
    symmetry_mismatch,
)
from .scattering import born_A0_closed, born_A0_quadrature, check_sheet_identities, phase_phi_sc, s_matrix
from .trace_formulas import phase_derivative, trace_report

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2, 3

DEFAULTS = {
    "panels": 8,
    "order": 20,
    "richardson": 0,
    "newton": 1e-10,
    "winding_residual": 0.2,
    "identity": 1e-6,
    "max_entry": 1e12,
}

_COEFF = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["step", "bump", "table"]},
        "height": {"type": "number"},
        "amplitude": {"type": "number"},
        "gamma": {"type": "number", "exclusiveMinimum": 0},
        "order": {"type": "integer", "minimum": 0, "maximum": 4},
        "points": {
            "type": "array",
            "minItems": 2,
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
    },
    "additionalProperties": False,
}

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "properties": {
        "coefficients": {
            "type": "object",
            "properties": {"p": _COEFF, "q": _COEFF, "square_of": _COEFF},
            "additionalProperties": False,
        },
        "beam": {
            "type": "object",
            "properties": {"a": _COEFF, "b": _COEFF},
            "additionalProperties": False,
        },
        "quadrature": {
            "type": "object",
            "properties": {
                "panels": {"type": "integer", "minimum": 1},
                "order": {"type": "integer", "minimum": 2},
                "richardson": {"type": "integer", "minimum": 0, "maximum": 3},
            },
            "additionalProperties": False,
        },
        "region": {
            "type": "object",
            "properties": {
                "re_min": {"type": "number"},
                "re_max": {"type": "number"},
                "im_min": {"type": "number"},
                "im_max": {"type": "number"},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "inner": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "resolution": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 2, "maxItems": 2},
        "tolerances": {
            "type": "object",
            "properties": {
                "newton": {"type": "number", "exclusiveMinimum": 0},
                "winding_residual": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
                "identity": {"type": "number", "exclusiveMinimum": 0},
                "max_entry": {"type": "number", "exclusiveMinimum": 1},
                "trace": {"type": "number", "exclusiveMinimum": 0},
                "phase": {"type": "number", "exclusiveMinimum": 0},
                "borg": {"type": "number", "exclusiveMinimum": 0},
                "zworski": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "k": _POINT,
        "points": {"type": "array", "items": _POINT},
        "real_k": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "cutoff_radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "model_n": {"type": "integer", "minimum": 1},
        "random_points": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    pass


def _format_path(error: jsonschema.ValidationError) -> str:
    parts = [str(p) if not isinstance(p, int) else f"[{p}]" for p in error.absolute_path]
    path = ".".join(parts).replace(".[", "[")
    return path or "<root>"


def load_config(path: str | Path) -> dict:
    """Read and validate a JSON config; errors name the offending field path."""
    try:
        with open(path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    validate_config(config)
    return config


def validate_config(config: dict) -> None:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{_format_path(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))
    region = config.get("region", {})
    box_keys = {"re_min", "re_max", "im_min", "im_max"}
    if region and not (box_keys <= region.keys() or "radius" in region):
        raise ConfigError("region: give either re_min/re_max/im_min/im_max or radius")


# -- config helpers ------------------------------------------------------------


def _tol(config: dict, name: str, default: float | None = None) -> float:
    fallback = DEFAULTS.get(name, default)
    return float(config.get("tolerances", {}).get(name, fallback))


def _coeff(desc: dict, where: str):
    try:
        return from_descriptor(desc)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _pair(config: dict) -> CoefficientPair:
    spec = config.get("coefficients", {})
    if "square_of" in spec:
        if "p" in spec or "q" in spec:
            raise ConfigError("coefficients: square_of excludes p and q")
        p = _coeff(spec["square_of"], "coefficients.square_of")
        if p.derivative_order < 2:
            raise ConfigError("coefficients.square_of: needs a coefficient with two derivatives (bump)")
        return square_pair(p)
    p = _coeff(spec["p"], "coefficients.p") if "p" in spec else None
    q = _coeff(spec["q"], "coefficients.q") if "q" in spec else None
    gamma = max([c.support_end for c in (p, q) if c is not None], default=1.0)
    return CoefficientPair(p or make_step(0.0, gamma), q or make_step(0.0, gamma))


def _quadrature(config: dict) -> tuple[int, int, int]:
    quad = config.get("quadrature", {})
    return (int(quad.get("panels", DEFAULTS["panels"])), int(quad.get("order", DEFAULTS["order"])),
            int(quad.get("richardson", DEFAULTS["richardson"])))


def _evaluator(config: dict) -> DeterminantEvaluator:
    panels, order, richardson = _quadrature(config)
    return DeterminantEvaluator.build(_pair(config), panels, order, richardson=richardson,
                                      max_entry=_tol(config, "max_entry"))


def _settings(config: dict) -> SearchSettings:
    return SearchSettings(newton_tol=_tol(config, "newton"),
                          contour=ContourSettings(winding_residual=_tol(config, "winding_residual")))


def _boxes(config: dict, default_radius: float = 10.0) -> tuple[list[Rectangle], float | None]:
    region = config.get("region", {"radius": default_radius})
    if "radius" in region:
        r = float(region["radius"])
        return punctured_square(r, float(region.get("inner", 0.05))), r
    return [Rectangle(region["re_min"], region["re_max"], region["im_min"], region["im_max"])], None


def _c(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _check(name: str, value: float, limit: float, passed: bool | None = None) -> dict:
    ok = bool(value <= limit) if passed is None else bool(passed)
    return {"name": name, "value": float(value), "limit": float(limit), "passed": ok}


def _exit_for(checks: list[dict], partial: bool = False) -> int:
    if partial:
        return EXIT_PARTIAL
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_FAILED


# -- commands ------------------------------------------------------------------


def cmd_det_grid(config: dict, out: Path, threads: int = 1, seed: int | None = None) -> int:
    ev = _evaluator(config)
    region = config.get("region", {"re_min": -5.0, "re_max": 5.0, "im_min": -5.0, "im_max": 5.0})
    if "radius" in region:
        r = float(region["radius"])
        rect = Rectangle(-r, r, -r, r)
    else:
        rect = Rectangle(region["re_min"], region["re_max"], region["im_min"], region["im_max"])
    n_re, n_im = config.get("resolution", [41, 41])
    grid = determinant_grid(ev, rect, (int(n_re), int(n_im)), workers=threads)
    grid.to_csv(out / "det_grid.csv")
    return EXIT_OK


def _zeros_csv(path: Path, zeros, order: int = 4) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re_k", "im_k", "multiplicity", "sector", "residual", "order"])
        for z in zeros:
            pos = complex(z.position)
            writer.writerow([repr(pos.real), repr(pos.imag), z.multiplicity, z.sector,
                             repr(float(z.residual)), order])


def _counting_csv(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "N", "N1", "N2", "N3", "N4"])
        for row in rows:
            writer.writerow([repr(float(row.r)), row.total, row.k1, row.k2, row.k3, row.k4])


def cmd_resonances(config: dict, out: Path, threads: int = 1, seed: int | None = None) -> int:
    ev = _evaluator(config)
    pair = ev.pair
    boxes, radius = _boxes(config)
    result = find_zeros(ev, boxes, _settings(config))
    zeros = result.zeros
    top = max((abs(z.position) for z in zeros), default=1.0)
    r_max = radius if radius is not None else top
    if radius is not None:
        r_max = certified_radius(radius, result.uncovered)
    radii = list(np.linspace(r_max / 20, r_max, 20)) if r_max > 0 else []
    rows = counting_functions(zeros, radii)
    _counting_csv(out / "counting.csv", rows)
    _zeros_csv(out / "zeros.csv", zeros)
    checks = [_check("symmetry", symmetry_mismatch(zeros), 1e-6)]
    report = {
        "zeros": [z.to_json() for z in zeros],
        "sector_counts": {s: int(sum(z.multiplicity for z in zeros if z.sector == s)) for s in ("K1", "K2", "K3", "K4")},
        "total_winding": result.total_winding,
        "evaluations": result.evaluations,
        "uncovered": [[b.re_min, b.re_max, b.im_min, b.im_max] for b in result.uncovered],
        "unresolved": [[b.re_min, b.re_max, b.im_min, b.im_max] for b in result.unresolved],
        "certified_radius": r_max,
    }
    if len(rows) >= 3:
        half = [row for row in rows if row.r >= r_max / 2]
        rs = [row.r for row in half]
        report["slopes"] = {
            "N": fit_slope(rs, [row.total for row in half]),
            "N2": fit_slope(rs, [row.k2 for row in half]),
            "N4": fit_slope(rs, [row.k4 for row in half]),
            "N3": fit_slope(rs, [row.k3 for row in half]),
            "expected_N": 4 * pair.gamma / np.pi,
            "expected_N2": pair.gamma / np.pi,
        }
    fd = {}
    for sector in ("K2", "K4"):
        rep = forbidden_domain_check(zeros, pair.gamma, sector)
        fd[sector] = {"constant": rep.constant, "running": rep.running, "drift": rep.violation, "count": rep.count}
    report["forbidden_domain"] = fd
    pp, pm = pair.p.left_value, pair.p.right_value
    if pp * pm != 0:
        table = []
        for n in range(1, int(config.get("model_n", 12)) + 1):
            k0 = model_resonance(pair.gamma, pp, pm, n)
            dists = [abs(z.position - k0) for z in zeros]
            i = int(np.argmin(dists)) if dists else -1
            table.append({
                "n": n, "model": _c(k0),
                "nearest": _c(zeros[i].position) if i >= 0 else None,
                "distance": float(dists[i]) if i >= 0 else None,
                "covered": bool(abs(k0) < r_max),
            })
        report["model_comparison"] = table
    spec = config.get("coefficients", {})
    if "square_of" in spec:
        p = _coeff(spec["square_of"], "coefficients.square_of")
        region = boxes if radius is None else float(radius)
        panels, order, richardson = _quadrature(config)
        oracle = base_mod.square_zero_oracle(p, region, panels=panels, order=order, richardson=richardson,
                                            settings=_settings(config))
        report["square_oracle"] = {
            "matched": [[_c(z.position), _c(e), d] for z, e, d in oracle.pairs],
            "unmatched_fourth_order": [_c(z.position) for z in oracle.unmatched_fourth],
            "unmatched_baseline": [_c(z) for z, _ in oracle.unmatched_expected],
        }
        checks.append(_check("square_oracle_unmatched",
                             len(oracle.unmatched_fourth) + len(oracle.unmatched_expected), 0))
    report["checks"] = checks
    _write_json(out / "resonances.json", report)
    return _exit_for(checks, partial=bool(result.uncovered or result.unresolved))


def cmd_trace(config: dict, out: Path, threads: int = 1, seed: int | None = None) -> int:
    ev = _evaluator(config)
    boxes, radius = _boxes(config, default_radius=20.0)
    result = find_zeros(ev, boxes, _settings(config))
    r_cert = certified_radius(radius, result.uncovered) if radius is not None else max(
        (abs(z.position) for z in result.zeros), default=1.0)
    laurent = laurent_at_origin(ev)
    k = complex(*config.get("k", [1.7 * np.cos(np.pi / 8), 1.7 * np.sin(np.pi / 8)]))
    radii = config.get("cutoff_radii") or list(np.linspace(max(abs(k) + 1, r_cert / 4), r_cert, 6))
    report = trace_report(ev, laurent, result.zeros, k, radii)
    checks = [_check("trace_residual", report.residuals[-1], _tol(config, "trace", 1e-3))]
    payload = report.to_json()
    payload["laurent"] = {"m": laurent.m, "alpha": _c(laurent.alpha), "beta": _c(laurent.beta),
                          "ill_conditioned": laurent.ill_conditioned}
    real_k = config.get("real_k", [3.0])
    phase_rows = []
    for kr in real_k:
        h = 1e-3
        phase = phase_phi_sc(ev.with_richardson(0), [kr - h, kr + h])
        fd = float((phase.phi[1] - phase.phi[0]) / (2 * h))
        series = phase_derivative(laurent, result.zeros, kr, cutoff=r_cert)
        phase_rows.append({"k": kr, "series": series.value, "finite_difference": fd,
                           "imaginary_residue": series.imaginary_residue})
        checks.append(_check(f"phase_derivative_k={kr}", abs(series.value - fd), _tol(config, "phase", 1e-3)))
    payload["phase_derivative"] = phase_rows
    payload["checks"] = checks
    _write_json(out / "trace.json", payload)
    return _exit_for(checks, partial=bool(result.uncovered or result.unresolved))


def cmd_eb(config: dict, out: Path, threads: int = 1, seed: int | None = None) -> int:
    if "beam" not in config:
        raise ConfigError("beam: required for the eb command")
    try:
        eb = eb_mod.EBCoefficients.from_descriptor(config["beam"])
    except ValueError as exc:
        raise ConfigError(f"beam: {exc}") from exc
    pair = eb_mod.transform_to_normal_form(eb)
    xs = np.linspace(0.0, eb.length, 201)
    sym, jet = eb_mod.symbolic_fields(eb, xs), eb_mod.jet_fields(eb, xs)
    route_gap = max(float(np.max(np.abs(sym[key] - jet[key])) / max(1.0, float(np.max(np.abs(sym[key])))))
                    for key in ("p", "q"))
    checks = [
        _check("route_agreement", route_gap, 1e-8),
        _check("kappa_lower_bound", -eb_mod.kappa_lower_bound_margin(sym), 1e-12),
    ]
    borg = eb_mod.borg_indicator(eb)
    if borg.verdict == "non-trivial beam":
        checks.append(_check("borg_fit", borg.relative_error, _tol(config, "borg", 0.05)))
    _write_json(out / "normal_form.json", {
        "gamma_eb": eb.gamma_eb,
        "p": to_descriptor(pair.p),
        "q": to_descriptor(pair.q),
        "p0": moments(pair)[0],
    })
    payload = borg.to_json()
    payload["checks"] = checks
    _write_json(out / "borg.json", payload)
    return _exit_for(checks)


def cmd_baseline(config: dict, out: Path, threads: int = 1, seed: int | None = None) -> int:
    spec = config.get("coefficients", {})
    if "p" not in spec:
        raise ConfigError("coefficients.p: required for the baseline command")
    p = _coeff(spec["p"], "coefficients.p")
    panels, order, richardson = _quadrature(config)
    plain = base_mod.BaselineEvaluator.build(p, panels, order, max_entry=_tol(config, "max_entry"))
    ev = plain.with_richardson(richardson)
    checks = []
    bk = []
    for k in config.get("real_k", [1.0, 2.0, 5.0]):
        res = base_mod.birman_krein_check(plain, k)
        bk.append({"k": k, "residual": res})
        checks.append(_check(f"birman_krein_k={k}", res, _tol(config, "identity")))
    boxes, radius = _boxes(config, default_radius=27.0)
    result = find_zeros(ev, boxes, _settings(config))
    r_cert = certified_radius(radius, result.uncovered) if radius is not None else None
    payload = {"order": 2, "birman_krein": bk, "zeros": [z.to_json() for z in result.zeros],
               "uncovered": [[b.re_min, b.re_max, b.im_min, b.im_max] for b in result.uncovered]}
    if r_cert and result.zeros:
        zw = base_mod.zworski_count(ev, r_cert, result.zeros)
        expected = 2 * p.support_end / np.pi
        payload["zworski"] = {"radius": zw.radius, "count": zw.count, "slope": zw.slope, "expected": expected,
                              "off_axis_fraction": zw.off_axis_fraction}
        checks.append(_check("zworski_slope", abs(zw.slope - expected) / expected, _tol(config, "zworski", 0.15)))
    checks.append(_check("symmetry", symmetry_mismatch(result.zeros, lambda z: -np.conj(z)), 1e-6))
    payload["checks"] = checks
    _zeros_csv(out / "baseline_zeros.csv", result.zeros, order=2)
    _write_json(out / "baseline.json", payload)
    # zeros beyond the certified radius are not used, so partial coverage only matters inside it
    return _exit_for(checks, partial=bool(result.unresolved))


def cmd_identities(config: dict, out: Path, threads: int = 1, seed: int | None = None) -> int:
    ev = _evaluator(config).with_richardson(0)
    pair = ev.pair
    rng = np.random.default_rng(seed)
    points = [complex(*pt) for pt in config.get("points", [])]
    n_random = int(config.get("random_points", 0 if points else 10))
    for _ in range(n_random):
        points.append(rng.uniform(1.0, 5.0) * np.exp(1j * rng.uniform(0.05, np.pi / 2 - 0.05)))
    tol = _tol(config, "identity")
    rows, checks = [], []
    for k in points:
        rs, ro = check_sheet_identities(ev, k)
        tr = assemble_Y0(ev, k).trace()
        closed = trace_closed_form(pair, k)
        tr_err = abs(tr - closed) / max(abs(closed), 1e-300) if closed != 0 else abs(tr)
        born = born_A0_quadrature(ev, k)
        born_closed = born_A0_closed(pair, k)
        born_err = float(np.max(np.abs(born - born_closed)) / max(np.max(np.abs(born_closed)), 1e-300)) \
            if np.any(born_closed) else float(np.max(np.abs(born)))
        sym = abs(ev.determinant(k) - np.conj(ev.determinant(1j * np.conj(k)))) / abs(ev.determinant(k))
        rows.append({"k": _c(k), "sheet_S": rs, "sheet_Omega": ro, "trace": tr_err, "born": born_err,
                     "symmetry": sym})
        for name, val in (("sheet_S", rs), ("sheet_Omega", ro), ("trace", tr_err), ("born", born_err),
                          ("symmetry", sym)):
            checks.append(_check(f"{name}@{k:.4g}", val, tol))
    unit = []
    for kr in config.get("real_k", list(np.linspace(1.0, 10.0, 20))):
        dev = abs(abs(s_matrix(ev, kr).det) - 1)
        unit.append({"k": kr, "abs_det_S_minus_1": dev})
        checks.append(_check(f"unitarity@{kr:.4g}", dev, tol))
    _write_json(out / "identities.json", {"points": rows, "unitarity": unit, "checks": checks})
    return _exit_for(checks)


COMMANDS = {
    "det-grid": cmd_det_grid,
    "resonances": cmd_resonances,
    "trace": cmd_trace,
    "eb": cmd_eb,
    "baseline": cmd_baseline,
    "identities": cmd_identities,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fourthorder", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for grid evaluation")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomly drawn probe points")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        code = COMMANDS[args.command](config, out, threads=max(1, args.threads), seed=args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    elapsed = time.perf_counter() - start
    print(f"{args.command}: exit {code} ({elapsed:.1f} s)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
