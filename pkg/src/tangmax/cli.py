"""Batch experiment driver.

Every subcommand reads a flat key=value config file (see README for the
grammar), validates it fully before any computation, and writes CSV/JSON
outputs whose bodies are byte-identical across reruns; volatile metadata
(timestamps) is confined to a single '#'-prefixed header line.

Exit codes: 0 success, 2 validation error, 3 resource budget exceeded,
4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .cubes import (
    ball_density,
    density_bound_sweep,
    overlap_report,
    shift_invariance_checks,
    witness_cubes,
)
from .curves import ModelCurve, RescaledCurve
from .errors import BudgetError, TangmaxError, ValidationError
from .fields import FIELD_KINDS, FieldSpec, evaluate_grid, generate, norm_l2, spec_hash
from .runtime import set_workers
from .scan import DEFAULT_ROW_BUDGET, scan
from .stability import stability_sweep
from .sweeps import SweepRecord, critical_exponent, fit_power_law, run_sweep

OUTDIR_ENV = "TANGMAX_OUTDIR"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_IO = 4


# ----------------------------- config handling -----------------------------

_SCHEMAS = {
    "evolve": {
        "required": {"n", "P", "field", "grid_points", "times", "out"},
        "optional": {"seed", "focus_x", "focus_t", "alpha"},
    },
    "maxscan": {
        "required": {"n", "alpha", "R", "field", "tol", "regime", "out"},
        "optional": {"seed", "focus_x", "focus_t", "P", "budget"},
    },
    "sweep": {
        "required": {"n", "alpha", "R_list", "field", "regime", "out", "fit_out"},
        "optional": {"seed", "focus_x", "focus_t", "tol", "budget", "synthetic_slope"},
    },
    "audit": {
        "required": {"n", "alpha", "R", "field", "tol", "out"},
        "optional": {"seed", "focus_x", "focus_t", "budget", "cubes_out"},
    },
    "stability": {
        "required": {"fields", "n", "P", "L_list", "out", "summary_out"},
        "optional": {"seed", "p_list", "instances"},
    },
}


def parse_config_text(text: str) -> dict:
    """key = value lines; '#' starts a comment; later keys override is an error."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if not key or not val:
            raise ValidationError(f"config line {lineno}: empty key or value")
        if key in out:
            raise ValidationError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def _validated(cfg: dict, command: str) -> dict:
    schema = _SCHEMAS[command]
    keys = set(cfg)
    unknown = keys - schema["required"] - schema["optional"]
    if unknown:
        raise ValidationError(f"unknown config keys for {command}: {sorted(unknown)}")
    missing = schema["required"] - keys
    if missing:
        raise ValidationError(f"missing config keys for {command}: {sorted(missing)}")
    return cfg


def _as_int(cfg, key):
    try:
        return int(cfg[key])
    except ValueError as exc:
        raise ValidationError(f"{key} must be an integer, got {cfg[key]!r}") from exc


def _as_float(cfg, key):
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ValidationError(f"{key} must be a number, got {cfg[key]!r}") from exc


def _as_floats(cfg, key):
    try:
        vals = [float(v) for v in cfg[key].split(";") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"{key} must be a ';'-joined number list") from exc
    if not vals:
        raise ValidationError(f"{key} must be a nonempty ';'-joined number list")
    return vals


def _field_spec(cfg, n) -> FieldSpec:
    kind = cfg["field"] if "field" in cfg else cfg["fields"]
    if kind not in FIELD_KINDS:
        raise ValidationError(f"unknown field kind {kind!r}; choose from {FIELD_KINDS}")
    seed = _as_int(cfg, "seed") if "seed" in cfg else 0
    fx = tuple(_as_floats(cfg, "focus_x")) if "focus_x" in cfg else ()
    ft = _as_float(cfg, "focus_t") if "focus_t" in cfg else 0.0
    if fx and len(fx) != n:
        raise ValidationError("focus_x length must equal n")
    return FieldSpec(kind, seed, fx, ft)


def _curve_exponents(cfg, n):
    alphas = _as_floats(cfg, "alpha")
    if len(alphas) != n:
        raise ValidationError(f"alpha must list {n} exponents (';'-joined)")
    if any(a <= 0 for a in alphas):
        raise ValidationError("curve exponents must be positive")
    if min(alphas) >= 0.5:
        raise ValidationError(
            f"alpha = {min(alphas)} is not tangential: the minimum exponent must be < 1/2"
        )
    return tuple(alphas)


def _config_hash(cfg: dict) -> str:
    canon = "\n".join(f"{k}={cfg[k]}" for k in sorted(cfg))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _resolve_out(path: str) -> str:
    base = os.environ.get(OUTDIR_ENV, "")
    return os.path.join(base, path) if base and not os.path.isabs(path) else path


# ----------------------------- output writers ------------------------------


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: str, columns, rows, meta: dict) -> None:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    parts = [f"tangmax={__version__}", f"created={stamp}"]
    parts += [f"{k}={v}" for k, v in meta.items()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(parts) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ------------------------------- subcommands -------------------------------


def cmd_evolve(cfg: dict) -> int:
    cfg = _validated(cfg, "evolve")
    n = _as_int(cfg, "n")
    period = _as_float(cfg, "P")
    if "alpha" in cfg:
        _curve_exponents(cfg, n)  # reject non-tangential exponents early
    spec = _field_spec(cfg, n)
    grid_points = _as_int(cfg, "grid_points")
    if grid_points < 1:
        raise ValidationError("grid_points must be >= 1")
    times = _as_floats(cfg, "times")
    field = generate(spec, n, period)
    rows = []
    coords = [np.arange(grid_points) * (period / grid_points) for _ in range(n)]
    mesh = np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1).reshape(-1, n)
    for t in times:
        grid = evaluate_grid(field, grid_points, t).reshape(-1)
        for pt, val in zip(mesh, grid):
            rows.append(tuple(pt) + (t, val.real, val.imag, abs(val)))
    columns = [f"x{d}" for d in range(n)] + ["t", "re", "im", "abs"]
    write_csv(
        _resolve_out(cfg["out"]),
        columns,
        rows,
        {"seed": spec.seed, "config": _config_hash(cfg), "field": spec_hash(spec, n, period)},
    )
    return EXIT_OK


def _profile_rows(profile):
    for j, value, t_arg in zip(profile.lattice, profile.values, profile.arg_times):
        yield tuple(int(v) for v in j) + (value, t_arg, profile.error_bound)


def cmd_maxscan(cfg: dict) -> int:
    cfg = _validated(cfg, "maxscan")
    n = _as_int(cfg, "n")
    exponents = _curve_exponents(cfg, n)
    R = _as_float(cfg, "R")
    if R < 1:
        raise ValidationError("R must be >= 1")
    regime = cfg["regime"]
    if regime not in ("early", "late"):
        raise ValidationError("regime must be early or late")
    period = _as_float(cfg, "P") if "P" in cfg else 2.0 * R
    tol = _as_float(cfg, "tol")
    budget = _as_int(cfg, "budget") if "budget" in cfg else DEFAULT_ROW_BUDGET
    spec = _field_spec(cfg, n)
    field = generate(spec, n, period)
    curve = RescaledCurve(ModelCurve(exponents), R)
    profile = scan(field, curve, regime, tol, budget=budget)
    columns = [f"j{d}" for d in range(n)] + ["M", "t_argmax", "err"]
    write_csv(
        _resolve_out(cfg["out"]),
        columns,
        _profile_rows(profile),
        {"seed": spec.seed, "config": _config_hash(cfg), "regime": regime, "R": _fmt(R)},
    )
    return EXIT_OK


def _sweep_rows(records):
    for rec in records:
        yield (
            rec.n,
            ";".join(_fmt(a) for a in rec.exponents),
            rec.R,
            rec.regime,
            rec.ratio,
            rec.tol,
            rec.seed,
            rec.wall_ms,
        )


SWEEP_COLUMNS = ["n", "alpha", "R", "regime", "N", "tol", "seed", "wall_ms"]


def cmd_sweep(cfg: dict) -> int:
    cfg = _validated(cfg, "sweep")
    n = _as_int(cfg, "n")
    exponents = _curve_exponents(cfg, n)
    R_values = _as_floats(cfg, "R_list")
    regime = cfg["regime"]
    if regime not in ("early", "late", "total"):
        raise ValidationError("regime must be early, late or total")
    spec = _field_spec(cfg, n)
    tol = cfg.get("tol", "auto")
    if tol != "auto":
        tol = _as_float(cfg, "tol")
    budget = _as_int(cfg, "budget") if "budget" in cfg else DEFAULT_ROW_BUDGET
    if "synthetic_slope" in cfg:
        # planted power law, used to self-test the fit pipeline end to end
        slope = _as_float(cfg, "synthetic_slope")
        records = [
            SweepRecord(n, exponents, R, regime, 3.0 * R**slope, 0.0, spec.seed, "synthetic", 0.0)
            for R in R_values
        ]
    else:
        records = run_sweep(spec, exponents, R_values, tol, regime, budget=budget)
    reference = critical_exponent(n, min(exponents))
    fit = fit_power_law(records, reference=reference)
    write_csv(
        _resolve_out(cfg["out"]),
        SWEEP_COLUMNS,
        _sweep_rows(records),
        {"seed": spec.seed, "config": _config_hash(cfg), "regime": regime},
    )
    write_json(
        _resolve_out(cfg["fit_out"]),
        {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "residual": fit.residual,
            "s0_ref": fit.reference,
            "points": fit.points,
            "R_range": list(fit.R_range),
        },
    )
    return EXIT_OK


def cmd_audit(cfg: dict) -> int:
    cfg = _validated(cfg, "audit")
    n = _as_int(cfg, "n")
    exponents = _curve_exponents(cfg, n)
    alpha = min(exponents)
    R = _as_float(cfg, "R")
    if R < 1:
        raise ValidationError("R must be >= 1")
    tol = _as_float(cfg, "tol")
    budget = _as_int(cfg, "budget") if "budget" in cfg else DEFAULT_ROW_BUDGET
    spec = _field_spec(cfg, n)
    field = generate(spec, n, 2.0 * R)
    curve = RescaledCurve(ModelCurve(exponents), R)
    profile = scan(field, curve, "late", tol, budget=budget)
    cubes = witness_cubes(profile, curve, R)
    over = overlap_report(cubes, alpha, R)
    bound_rows = density_bound_sweep(cubes, alpha, R)
    worst_bound = max(bound_rows, key=lambda rec: rec.ratio, default=None)
    shift = shift_invariance_checks(cubes, [1] + [0] * (n - 1), R) if cubes.size else None
    modes_agree = None
    if R <= 64 and cubes.size:
        b = ball_density(cubes, float(n), R, "brute")
        f = ball_density(cubes, float(n), R, "fast")
        modes_agree = bool(b.phi == f.phi and b.per_radius == f.per_radius)
    payload = {
        "R": R,
        "alpha": alpha,
        "cube_count": cubes.size,
        "total_multiplicity": cubes.total_multiplicity,
        "overlap_audit": {
            "max_statistic": over.max_statistic,
            "worst_time_scale": over.worst_time_scale,
            "worst_overlap": over.worst_overlap,
            "nonempty_classes": len(over.nonempty),
        },
        "density_audit": {
            "max_ratio": worst_bound.ratio if worst_bound else 0.0,
            "worst_time_scale": worst_bound.time_scale if worst_bound else 0.0,
            "worst_overlap": worst_bound.overlap if worst_bound else 0.0,
            "classes": [
                {
                    "time_scale": rec.time_scale,
                    "overlap": rec.overlap,
                    "cubes": rec.cube_count,
                    "phi": rec.phi,
                    "ratio": rec.ratio,
                    "mode": rec.mode,
                }
                for rec in bound_rows
            ],
        },
        "shift_checks": None
        if shift is None
        else {
            "translation_ok": shift.translation_ok,
            "radius_cap_ok": shift.radius_cap_ok,
            "translated_phi": shift.translated_phi,
            "doubled_cap_phi": shift.doubled_cap_phi,
        },
        "brute_fast_equal": modes_agree,
    }
    write_json(_resolve_out(cfg["out"]), payload)
    if "cubes_out" in cfg:
        columns = [f"c{d}" for d in range(n)] + ["ct", "multiplicity"]
        rows = (tuple(int(v) for v in corner) + (int(cnt),) for corner, cnt in zip(cubes.corners, cubes.counts))
        write_csv(
            _resolve_out(cfg["cubes_out"]),
            columns,
            rows,
            {"seed": spec.seed, "config": _config_hash(cfg), "R": _fmt(R)},
        )
    return EXIT_OK


def cmd_stability(cfg: dict) -> int:
    cfg = _validated(cfg, "stability")
    n = _as_int(cfg, "n")
    period = _as_float(cfg, "P")
    kinds = [k.strip() for k in cfg["fields"].split(";") if k.strip()]
    for kind in kinds:
        if kind not in FIELD_KINDS:
            raise ValidationError(f"unknown field kind {kind!r}")
    seed = _as_int(cfg, "seed") if "seed" in cfg else 0
    p_grid = _as_floats(cfg, "p_list") if "p_list" in cfg else [1.0]
    L_grid = [int(v) for v in _as_floats(cfg, "L_list")]
    instances = _as_int(cfg, "instances") if "instances" in cfg else 100
    specs = [(FieldSpec(kind, seed), n, period) for kind in kinds]
    report = stability_sweep(specs, p_grid, L_grid, seed, instances_per_spec=instances)
    columns = ["kind", "seed", "x", "y", "t", "s", "p", "L", "ratio", "tail_bound", "flagged"]
    rows = (
        (
            row.kind,
            row.seed,
            ";".join(_fmt(v) for v in row.x),
            ";".join(_fmt(v) for v in row.y),
            row.t,
            row.s,
            row.p,
            row.truncation,
            row.ratio,
            row.tail_bound,
            int(row.flagged_above_one),
        )
        for row in report.rows
    )
    write_csv(_resolve_out(cfg["out"]), columns, rows, {"seed": seed, "config": _config_hash(cfg)})
    write_json(
        _resolve_out(cfg["summary_out"]),
        {
            "max_ratio": {f"p={p},L={L}": v for (p, L), v in sorted(report.max_ratio.items())},
            "relative_change": {
                f"p={p},L={a}->{b}": v for (p, a, b), v in sorted(report.relative_change.items())
            },
            "monotone_in_truncation": report.monotone_in_truncation,
            "degenerate_instances": report.degenerate_count,
        },
    )
    return EXIT_OK


def cmd_selftest(_cfg: dict) -> int:
    """Fast internal consistency checks; prints one line per check."""
    checks = []

    def check(name, fn):
        try:
            fn()
            checks.append((name, True, ""))
        except Exception as exc:  # noqa: BLE001 - report, do not crash
            checks.append((name, False, str(exc)))

    def _conservation():
        from .fields import grid_norm_l2

        spec = FieldSpec("random_phase", seed=11)
        field = generate(spec, 1, 32.0)
        for t in (0.0, 0.7, 3.3):
            assert abs(grid_norm_l2(field, t) - norm_l2(field)) <= 1e-8 * norm_l2(field)

    def _fit_exact():
        records = [SweepRecord(1, (0.1,), R, "early", 2.0 * R**0.4, 0.0, 0, "x", 0.0) for R in (8, 16, 32, 64)]
        fit = fit_power_law(records)
        assert abs(fit.slope - 0.4) < 1e-12

    def _envelope():
        from .sweeps import slice_bound_max

        for alpha in (0.05, 0.2, 0.35, 0.45):
            for R in (16.0, 256.0, 65536.0):
                assert slice_bound_max(1, alpha, R) <= 2.0 * R ** critical_exponent(1, alpha)

    def _density_modes():
        rng = np.random.default_rng(2)
        from .cubes import CubeSet

        corners = np.unique(np.column_stack([rng.integers(-6, 6, 40), rng.integers(1, 8, 40)]), axis=0)
        cs = CubeSet(8.0, corners, np.ones(corners.shape[0], dtype=np.int64))
        b = ball_density(cs, 1.0, 8.0, "brute")
        f = ball_density(cs, 1.0, 8.0, "fast")
        assert b.phi == f.phi and b.per_radius == f.per_radius

    def _stability_closed_form():
        from .stability import StabilityInstance, stability_ratio

        field = generate(FieldSpec("constant"), 1, 16.0)
        inst = StabilityInstance(field, (0.0,), (1.0,), 0.0, 1.0, truncation=2)
        assert abs(stability_ratio(inst) - 36.0 / 62.0) < 1e-12

    check("conservation", _conservation)
    check("power_law_fit", _fit_exact)
    check("slice_envelope", _envelope)
    check("density_modes", _density_modes)
    check("stability_closed_form", _stability_closed_form)
    failed = 0
    for name, ok, msg in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}{': ' + msg if msg else ''}")
        failed += 0 if ok else 1
    return EXIT_OK if failed == 0 else 1


_COMMANDS = {
    "evolve": cmd_evolve,
    "maxscan": cmd_maxscan,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
    "stability": cmd_stability,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tangmax", description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="flat key=value config file (required except for selftest)")
    parser.add_argument("--threads", type=int, default=None, help="cap worker threads")
    args = parser.parse_args(argv)
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise ValidationError("--threads must be >= 1")
            set_workers(args.threads)
        cfg: dict = {}
        if args.command != "selftest":
            if not args.config:
                raise ValidationError(f"{args.command} requires --config")
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                print(f"tangmax: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            cfg = parse_config_text(text)
        return _COMMANDS[args.command](cfg)
    except BudgetError as exc:
        print(f"tangmax: budget exceeded: {exc} (required={exc.required})", file=sys.stderr)
        return EXIT_BUDGET
    except (TangmaxError, ValueError) as exc:
        print(f"tangmax: invalid request: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"tangmax: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
