"""Command-line front end: ``twowell analyze|construct|sweep|fit|oracle``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .compatibility import EquicompatibleError, optimal_directions, quantifiers
from .construction import choose_N
from .operators import KINDS
from .reduction import PureRegimeError, build_field, exponent_kind
from .relaxation import DegenerateDataError, ProblemData, relax
from .scaling import (
    eps_grid,
    fit_records,
    predicted_exponent,
    read_csv,
    records_to_csv,
    run_oracles,
    sweep,
)

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_ORACLE = 0, 2, 3, 4

DEFAULTS = {"d": 2, "tau": 0.4, "eps_start": 1e-7, "eps_end": 1e-3, "points": 17, "seed": 42, "grid_n": 256}
KEYS = {"op", "d", "F", "a0", "a1", "tau", "eps_start", "eps_end", "points", "seed", "grid_n", "N", "path"}


class ConfigError(ValueError):
    pass


def load_config(path: str | None, need_data: bool = True) -> dict:
    cfg = dict(DEFAULTS)
    if path is None:
        if need_data:
            raise ConfigError("--config is required")
        return cfg
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg.update(raw)
    if need_data or "op" in raw:
        for key in ("op", "F", "a0", "a1"):
            if key not in cfg:
                raise ConfigError(f"missing config key {key!r}")
        if cfg["op"] not in KINDS:
            raise ConfigError(f"op must be one of {KINDS}")
    return cfg


def problem_from(cfg: dict) -> ProblemData:
    d = cfg["d"]
    if not isinstance(d, int) or d < 2:
        raise ConfigError("d must be an integer >= 2")
    try:
        mats = [np.array(cfg[k], dtype=float) for k in ("F", "a0", "a1")]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrices must be nested lists of numbers: {exc}") from exc
    for m in mats:
        if m.shape != (d, d) or not np.all(np.isfinite(m)):
            raise ConfigError(f"matrices must be finite {d}x{d} arrays")
    try:
        return ProblemData.make(cfg["op"], *mats, d=d)
    except DegenerateDataError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _apply_flags(cfg: dict, args) -> dict:
    for key in ("seed", "grid_n", "tau"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    tau = cfg["tau"]
    if not isinstance(tau, (int, float)) or not 0.25 < tau < 0.5:
        raise ConfigError("tau must lie in (1/4, 1/2)")
    n = cfg["grid_n"]
    if not isinstance(n, int) or n < 2:
        raise ConfigError("grid_n must be an integer >= 2")
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_to_builtin) + "\n"


def _to_builtin(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not serializable: {type(x)}")


# ---------------------------------------------------------------- commands

def cmd_analyze(args) -> int:
    cfg = _apply_flags(load_config(args.config), args)
    data = problem_from(cfg)
    q = quantifiers(data.op, data.a)
    dirs = optimal_directions(data.op, data.a)
    report = {
        "op": data.op.kind,
        "d": data.op.d,
        "compatibility": {
            "h": q.h,
            "g": q.g,
            "equicompatible": q.equicompatible,
            "vanishing_order": q.vanishing_order,
            "definiteness": q.definiteness,
            "optimal_set": dirs.kind,
            "witnesses": [w for w in dirs.witnesses],
        },
        "predicted_exponent": predicted_exponent(data),
    }
    if not q.equicompatible:
        r = relax(data)
        report["relaxation"] = {
            "theta_tilde": r.theta_tilde,
            "E0_density": r.E0_density,
            "regime": r.regime,
            "slab_margin": r.R,
            "theta_star": r.theta_star,
            "tilde_wells": [r.tilde_wells.a0, r.tilde_wells.a1],
        }
    _emit(_json(report), args.out)
    return EXIT_OK


def cmd_construct(args) -> int:
    cfg = _apply_flags(load_config(args.config), args)
    data = problem_from(cfg)
    n = cfg["grid_n"]
    r = relax(data)
    if r.regime != "mixing":
        return _construct_constant(data, r, n, args)
    N = cfg.get("N") or choose_N(cfg["eps_start"], exponent_kind(data, cfg.get("path")))
    fld = build_field(data, int(N), cfg["tau"], path=cfg.get("path"))
    red = fld.reduction
    x = np.arange(n + 1) / n
    Y1, Y2 = np.meshgrid(x, x, indexing="ij")
    v = red.displacement_to_original(fld.v(Y1, Y2))
    ph = fld.phase(Y1, Y2)
    X = red.point_to_original(np.stack([Y1, Y2], axis=-1))
    rows = ["x1,x2,v1,v2,phase"]
    for p, w, k in zip(X.reshape(-1, 2), v.reshape(-1, 2), ph.reshape(-1)):
        rows.append("%.17g,%.17g,%.17g,%.17g,%d" % (p[0], p[1], w[0], w[1], k))
    _emit("\n".join(rows) + "\n", args.out)
    led = fld.ledger.as_dict()
    led.update({"N": fld.N, "tau": fld.tau, "j0": fld.j0, "theta_tilde": fld.theta,
                "E0_density": red.E0_density, "path": red.path})
    if args.ledger:
        _emit(_json(led), args.ledger)
    elif args.out:
        sys.stdout.write(_json(led))
    return EXIT_OK


def _construct_constant(data, r, n, args) -> int:
    """Pure regime: v = 0 and a single phase everywhere."""
    k = 0 if r.regime == "pure0" else 1
    x = np.arange(n + 1) / n
    rows = ["x1,x2,v1,v2,phase"]
    for x1 in x:
        for x2 in x:
            rows.append("%.17g,%.17g,0,0,%d" % (x1, x2, k))
    _emit("\n".join(rows) + "\n", args.out)
    led = {"excess": r.E0_density, "elastic_compat": 0.0, "cross": 0.0, "elastic": r.E0_density,
           "interface_length": 0.0, "surface": 0.0, "phase1_area": float(k), "layers": [],
           "theta_tilde": r.theta_tilde, "E0_density": r.E0_density, "path": r.regime}
    if args.ledger:
        _emit(_json(led), args.ledger)
    elif args.out:
        sys.stdout.write(_json(led))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _apply_flags(load_config(args.config), args)
    data = problem_from(cfg)
    try:
        eps = eps_grid(float(cfg["eps_start"]), float(cfg["eps_end"]), int(cfg["points"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    records = sweep(data, eps, cfg["tau"], cfg.get("path"))
    _emit(records_to_csv(records), args.out)
    summary = {"predicted_exponent": predicted_exponent(data), "fit": None}
    if any(r.flags == "pure" for r in records):
        summary["note"] = "pure regime: corrected energy vanishes, no fit"
    else:
        try:
            f = fit_records(records)
            summary["fit"] = {"slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared,
                              "stderr": f.stderr, "window": list(f.window), "count": f.count}
        except ValueError as exc:
            summary["note"] = str(exc)
    (sys.stderr if not args.out else sys.stdout).write(_json(summary))
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        records = read_csv(args.csv)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read sweep CSV: {exc}") from exc
    window = tuple(args.window) if args.window else None
    try:
        f = fit_records(records, window)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sys.stdout.write(f"slope = {f.slope:.6f} +- {f.stderr:.2e}  (r^2 = {f.r_squared:.6f}, "
                     f"{f.count} points, eps in [{f.window[0]:.3g}, {f.window[1]:.3g}])\n")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _apply_flags(load_config(args.config, need_data=False), args)
    data = problem_from(cfg) if "op" in cfg else None
    report = run_oracles(seed=int(cfg["seed"]), cases=args.cases, data=data,
                         h_offset=args.inject_h_offset, grid_n=args.grid_n)
    text = "\n".join(report.lines()) + "\n"
    if args.out:
        _emit(_json(report.as_dict()), args.out)
    sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_ORACLE


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twowell", description="Two-well relaxation and branching microstructures.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON problem description")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--grid-n", dest="grid_n", type=int)
        sp.add_argument("--tau", type=float)

    sp = sub.add_parser("analyze", help="compatibility quantifiers, relaxation and predicted exponent")
    common(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("construct", help="sample a branching field as CSV; ledger as JSON")
    common(sp)
    sp.add_argument("--ledger", help="write the energy ledger JSON here (default: stdout when --out is set)")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("sweep", help="epsilon sweep of the analytic ledger, with exponent fit")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("fit", help="log-log fit of a sweep CSV")
    sp.add_argument("csv")
    sp.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("oracle", help="compare closed forms with brute-force oracles")
    common(sp, config_required=False)
    sp.add_argument("--cases", type=int, default=200, help="random instances per operator")
    sp.add_argument("--inject-h-offset", type=float, default=0.0, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateDataError, EquicompatibleError, PureRegimeError) as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
