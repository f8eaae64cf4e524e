"""Command-line entry point: ``plateau-spectra <command> ...``.

Exit codes: 0 success, 2 invalid configuration, 1 numerical failure (or a
failed verification suite).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from .entropy import lsi_constant
from .exceptions import ConfigError, MixedExponentError, NumericalError, PLDivergenceError
from .langevin import (OBSERVABLES, SimConfig, gap_estimate, max_curvature, simulate,
                       write_autocorrelation_csv)
from .mesh import GridSpec
from .potential import PiecewisePotential, named_potential, validate_assumptions
from .quadrature import partition_function
from .spectral import poincare_constant
from .sweep import (COLUMNS, QUANTITIES, SweepRow, SweepTable, default_jobs, fill_asymptotes, parse_t_grid,
                    power_fit, read_csv, refutation_report, run_sweep)

COMMANDS = ("analyze", "sweep", "fit", "verify", "simulate", "report")
GRID_FLAGS = {"truncation": float, "n_plateau": int, "layer_cells_per_scale": int,
              "refinement_ratio": float}
# command option -> (type, default)
OPTIONS = {
    "restarts": (int, 2),
    "lsi": (bool, True),
    "quantities": (str, ",".join(QUANTITIES)),
    "fit": (str, None),
    "quantity": (str, "poincare"),
    "c0": (float, None),
    "input": (str, None),
    "suite": (str, "paper"),
    "criteria": (str, None),
    "skip_slow": (bool, False),
    "dt": (float, None),
    "n_steps": (int, 100_000),
    "n_chains": (int, 32),
    "burn_in": (int, 0),
    "record_every": (int, 10),
    "observable": (str, "gap-eigenfunction"),
    "max_lag": (int, None),
}


def _load_structured(path: str) -> dict:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        if p.suffix.lower() == ".toml":
            import tomli
            data = tomli.loads(raw.decode())
        else:
            data = json.loads(raw)
    except Exception as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must contain a table/object at top level")
    return data


def load_potential(spec) -> PiecewisePotential:
    """A path to a JSON/TOML potential config, a built-in name, or a dict."""
    if isinstance(spec, dict):
        return PiecewisePotential.from_dict(spec)
    if os.path.exists(spec):
        data = _load_structured(spec)
        return PiecewisePotential.from_dict(data.get("potential", data))
    return named_potential(spec)


def _common_flags() -> argparse.ArgumentParser:
    s = argparse.ArgumentParser(add_help=False)
    s.add_argument("--config", help="run config written by --dump-config (JSON or TOML)")
    s.add_argument("--potential", help="JSON/TOML potential file or built-in name, "
                   "e.g. counterexample, gaussian, asymmetric(1,4), quartic")
    s.add_argument("--truncation", type=float)
    s.add_argument("--n-plateau", dest="n_plateau", type=int)
    s.add_argument("--layer-cells", dest="layer_cells_per_scale", type=int)
    s.add_argument("--refinement-ratio", dest="refinement_ratio", type=float)
    s.add_argument("--output", "-o")
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int, help="worker processes (default: $SPECTRA_JOBS or 1)")
    s.add_argument("--dump-config", dest="dump_config", metavar="PATH", nargs="?", const="-",
                   help="write the resolved run config as JSON (stdout by default) and exit")
    return s


def _add_lsi(s):
    s.add_argument("--restarts", type=int, help="random restarts of the entropy optimiser")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plateau-spectra",
                                description="Poincare and log-Sobolev constants of plateau Gibbs measures.")
    sub = p.add_subparsers(dest="command", required=True)
    common = _common_flags()
    mk = {name: sub.add_parser(name, parents=[common]) for name in COMMANDS}

    s = mk["analyze"]
    s.add_argument("--t", type=float)
    s.add_argument("--no-lsi", dest="lsi", action="store_const", const=False)
    _add_lsi(s)

    s = mk["sweep"]
    s.add_argument("--t-grid", dest="t_grid", help="A:B:Nlog")
    s.add_argument("--quantities", help="comma-separated subset of z,poincare,lsi")
    s.add_argument("--fit", choices=("poincare", "lsi", "partition"))
    s.add_argument("--c0", type=float)
    _add_lsi(s)

    s = mk["fit"]
    s.add_argument("--input", help="sweep CSV")
    s.add_argument("--quantity", choices=("poincare", "lsi", "partition"))
    s.add_argument("--c0", type=float)

    s = mk["verify"]
    s.add_argument("--suite", choices=("paper",))
    s.add_argument("--criteria", help="comma-separated criterion numbers")
    s.add_argument("--skip-slow", dest="skip_slow", action="store_const", const=True)

    s = mk["simulate"]
    s.add_argument("--t", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--n-steps", dest="n_steps", type=int)
    s.add_argument("--n-chains", dest="n_chains", type=int)
    s.add_argument("--burn-in", dest="burn_in", type=int)
    s.add_argument("--record-every", dest="record_every", type=int)
    s.add_argument("--observable", choices=OBSERVABLES)
    s.add_argument("--max-lag", dest="max_lag", type=int)

    s = mk["report"]
    s.add_argument("--t-grid", dest="t_grid", help="A:B:Nlog")
    s.add_argument("--input", help="sweep CSV; computed from --t-grid when absent")
    _add_lsi(s)
    return p


def resolve(args: argparse.Namespace) -> dict:
    """Merge the config file (if any) with explicit flags; flags win."""
    cfg = _load_structured(args.config) if args.config else {}
    if cfg.get("command", args.command) != args.command:
        raise ConfigError(f"config is for command {cfg['command']!r}, not {args.command!r}")
    run = {"command": args.command}
    pot_spec = args.potential if args.potential is not None else cfg.get("potential")
    run["potential"] = None if pot_spec is None else load_potential(pot_spec).to_dict()
    grid = dict(cfg.get("grid") or {})
    for k in GRID_FLAGS:
        if getattr(args, k) is not None:
            grid[k] = getattr(args, k)
    run["grid"] = GridSpec.from_dict(grid).to_dict()
    run["t"] = getattr(args, "t", None) if getattr(args, "t", None) is not None else cfg.get("t")
    tg = getattr(args, "t_grid", None)
    tg = tg if tg is not None else cfg.get("t_grid")
    run["t_grid"] = None if tg is None else [float(x) for x in (parse_t_grid(tg) if isinstance(tg, str) else tg)]
    run["seed"] = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    run["format"] = args.format or cfg.get("format") or ("csv" if args.command == "sweep" else "json")
    run["jobs"] = args.jobs if args.jobs is not None else cfg.get("jobs")
    opts = dict(cfg.get("options") or {})
    unknown = set(opts) - set(OPTIONS)
    if unknown:
        raise ConfigError(f"unknown option field(s) {sorted(unknown)}")
    for k, (typ, default) in OPTIONS.items():
        v = getattr(args, k, None)
        if v is not None:
            opts[k] = v
        elif k not in opts:
            opts[k] = default
        if opts[k] is not None:
            try:
                opts[k] = typ(opts[k])
            except (TypeError, ValueError):
                raise ConfigError(f"option {k!r} has invalid value {opts[k]!r}") from None
    run["options"] = opts
    return run


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _require_potential(run) -> PiecewisePotential:
    if run["potential"] is None:
        raise ConfigError("missing field 'potential' (use --potential)")
    return PiecewisePotential.from_dict(run["potential"])


def _require_t(run) -> float:
    t = run["t"]
    if t is None:
        raise ConfigError("missing field 't' (use --t)")
    if not (math.isfinite(t) and t >= 0):
        raise ConfigError(f"field 't' must be >= 0, got {t}")
    return float(t)


def _require_grid(run) -> list[float]:
    if not run["t_grid"]:
        raise ConfigError("missing field 't_grid' (use --t-grid A:B:Nlog)")
    return run["t_grid"]


def _table_csv(table: SweepTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in table.rows:
        w.writerow([format(float(v), ".17g") for v in r.values()])
    return buf.getvalue()


def cmd_analyze(run, out):
    pot = _require_potential(run)
    t = _require_t(run)
    grid = GridSpec.from_dict(run["grid"])
    opts = run["options"]
    spec = poincare_constant(pot, t, grid)
    row = SweepRow(t=t, c_p=spec.c_p, z_t=partition_function(pot, t, grid))
    if opts["lsi"]:
        res = lsi_constant(pot, t, grid, mesh=spec.mesh, restarts=opts["restarts"], seed=run["seed"])
        row.c_ls, row.c_ls_lower, row.c_ls_upper = res.c_ls, res.lower_bound, res.upper_bound
    fill_asymptotes(pot, t, row)
    result = {k: getattr(row, k) for k in COLUMNS}
    result["residual"] = spec.residual
    result["mesh_size"] = spec.mesh_size
    result["assumptions"] = {k: bool(v) for k, v in validate_assumptions(pot).items()}
    if run["format"] == "csv":
        _emit(_table_csv(SweepTable([row])), out)
    else:
        _emit(_json(result), out)
    return 0


def _jobs(run):
    return default_jobs() if run["jobs"] is None else int(run["jobs"])


def cmd_sweep(run, out):
    pot = _require_potential(run)
    ts = _require_grid(run)
    opts = run["options"]
    quantities = tuple(q.strip() for q in opts["quantities"].split(",") if q.strip())
    if opts["fit"] == "lsi" and "lsi" not in quantities:
        quantities += ("lsi",)
    table = run_sweep(pot, ts, quantities, GridSpec.from_dict(run["grid"]), jobs=_jobs(run),
                      lsi_opts={"restarts": opts["restarts"], "seed": run["seed"]})
    for r in table.rows:
        for key, why in r.missing.items():
            print(f"warning: t={r.t:g}: {key} missing: {why}", file=sys.stderr)
    if run["format"] == "csv":
        _emit(_table_csv(table), out)
    else:
        _emit(_json({"columns": list(COLUMNS), "rows": [r.values() for r in table.rows]}), out)
    if opts["fit"]:
        c0 = opts["c0"] if opts["c0"] is not None else _default_c0(pot, opts["fit"])
        fit = power_fit(table, opts["fit"], c0)
        text = _json({"quantity": opts["fit"], "c0": c0, **fit.to_dict()})
        if out:
            Path(str(out) + ".fit.json").write_text(text)
        else:
            sys.stderr.write(text)
    return 0


def _default_c0(pot: PiecewisePotential | None, quantity: str) -> float:
    if pot is None:
        raise ConfigError("fit needs --c0 or --potential to supply the t = 0 value")
    return pot.width if quantity == "partition" else asy.segment_constant(pot)


def cmd_fit(run, out):
    opts = run["options"]
    if not opts["input"]:
        raise ConfigError("missing field 'input' (sweep CSV, use --input)")
    table = read_csv(opts["input"])
    pot = None if run["potential"] is None else PiecewisePotential.from_dict(run["potential"])
    c0 = opts["c0"] if opts["c0"] is not None else _default_c0(pot, opts["quantity"])
    fit = power_fit(table, opts["quantity"], c0)
    _emit(_json({"quantity": opts["quantity"], "c0": c0, **fit.to_dict()}), out)
    return 0


def cmd_verify(run, out):
    from .verify import run_suite
    opts = run["options"]
    numbers = None
    if opts["criteria"]:
        try:
            numbers = {int(x) for x in opts["criteria"].split(",")}
        except ValueError:
            raise ConfigError("criteria must be comma-separated integers") from None
    lines = []

    def echo(line):
        lines.append(line)
        print(line, flush=True)
    results = run_suite(numbers, include_slow=not opts["skip_slow"], echo=echo)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    if out:
        Path(out).write_text("\n".join(lines) + "\n")
    return 0 if n_pass == len(results) else 1


def cmd_simulate(run, out):
    pot = _require_potential(run)
    t = _require_t(run)
    opts = run["options"]
    grid = GridSpec.from_dict(run["grid"])
    dt = opts["dt"]
    if dt is None:
        dt = 0.05 * t / max_curvature(pot, t, grid)
    cfg = SimConfig(t=t, dt=dt, n_steps=opts["n_steps"], n_chains=opts["n_chains"],
                    burn_in=opts["burn_in"], seed=run["seed"], observable=opts["observable"],
                    record_every=opts["record_every"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        summary = simulate(pot, cfg, grid)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    n = summary.observable.shape[1]
    max_lag = opts["max_lag"] or min(n // 4, 2000)
    if run["format"] == "csv":
        write_autocorrelation_csv(out or sys.stdout, summary, max_lag)
        return 0
    c_hat, se = gap_estimate(summary, max_lag)
    _emit(_json({"t": t, "dt": cfg.dt, "c_p_hat": c_hat, "stderr": se,
                 "c_p_spectral": summary.c_p_reference, "mean": summary.mean,
                 "variance": summary.variance, "stderr_mean": summary.stderr_mean,
                 "plateau_fraction": summary.plateau_fraction,
                 "config": summary.config.to_dict()}), out)
    return 0


def cmd_report(run, out):
    pot = _require_potential(run)
    opts = run["options"]
    if opts["input"]:
        table = read_csv(opts["input"])
    else:
        table = run_sweep(pot, _require_grid(run), ("poincare", "lsi"),
                          GridSpec.from_dict(run["grid"]), jobs=_jobs(run),
                          lsi_opts={"restarts": opts["restarts"], "seed": run["seed"]})
    _emit(_json(refutation_report(pot, table)), out)
    return 0


HANDLERS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "fit": cmd_fit, "verify": cmd_verify,
            "simulate": cmd_simulate, "report": cmd_report}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        run = resolve(args)
        if args.dump_config:
            text = _json(run)
            if args.dump_config == "-":
                sys.stdout.write(text)
            else:
                Path(args.dump_config).write_text(text)
            return 0
        return HANDLERS[args.command](run, args.output)
    except (ConfigError, MixedExponentError, PLDivergenceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
