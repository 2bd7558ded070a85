"""
app.py — Command-line front end for uipt-lab.

Every subcommand writes one result envelope to stdout (JSON, or CSV for
tabular results) and diagnostics to stderr.

    python app.py law hull-gf --r 3 --s 0.9
    python app.py law perimeter --r 2 --q-max 50 --format csv
    python app.py sample hull --r 2 --trials 1000 --seed 42 --s 0.9
    python app.py asympt convergence --functional hull --lambda 1 --x 1 --format csv
    python app.py verify all --trials 100000

Exit codes: 0 success, 2 usage error, 1 computation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

ROOT = Path(__file__).parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from execution.asymptotics import (
    FUNCTIONALS,
    convergence_table,
    hull_cond_limit,
    hull_limit,
    hulldiff_finite_check,
    hulldiff_limit,
    slice_limit,
    xi_laplace,
)
from execution.config import FORMATS, PRECISIONS, RunConfig, load_env
from execution.enumeration import COUNTS
from execution.errors import UiptLabError, UsageError, require
from execution.laws import (
    hull_volume_gf_closed,
    hull_volume_gf_iterate,
    hull_volume_pmf,
    layer_volume_gf,
    perimeter_pmf,
    slice_gf,
    slice_root_weights,
)
from execution.reporting import fail, ok
from execution.sampler import run_trials
from execution.series import QSqrt3, format_fraction
from execution.skeleton import CriticalPair, OffspringLaw, phi_coeffs, phi_t_coeffs
from execution.verify import estimate_gf, run_acceptance

SCHEMA = "uipt-lab/1"
CONFIG_FLAGS = ("trials", "seed", "workers", "precision", "tail_eps", "format", "group", "action", "handler")


# ─── Output ───────────────────────────────────────────────────────────────────
def _jsonable(value):
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, QSqrt3):
        return str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


class Result:
    """A payload for the JSON envelope, plus an optional CSV table."""

    def __init__(self, payload: dict, columns: list[str] | None = None, rows: list[list] | None = None,
                 passed: bool = True):
        self.payload = payload
        self.columns = columns
        self.rows = rows
        self.passed = passed


def emit(cfg: RunConfig, result: Result, out=None) -> None:
    out = out or sys.stdout
    if cfg.output_format == "csv":
        writer = csv.writer(out, lineterminator="\n")
        if result.rows is not None:
            writer.writerow(result.columns)
            for row in result.rows:
                writer.writerow([_csv_cell(v) for v in row])
        else:
            writer.writerow(["key", "value"])
            for key, value in result.payload.items():
                writer.writerow([key, _csv_cell(value)])
        return
    envelope = {"schema": SCHEMA, "op": cfg.command, "params": cfg.params, "config": cfg.to_dict(),
                **result.payload}
    out.write(json.dumps(envelope, default=_jsonable) + "\n")


def _csv_cell(value):
    if isinstance(value, (Fraction, QSqrt3)):
        return _jsonable(value)
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value, default=_jsonable)
    return value


# ─── Argument helpers ─────────────────────────────────────────────────────────
def _floats(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str | None) -> list[int] | None:
    values = _floats(text)
    if values is None:
        return None
    require(all(v == int(v) for v in values), f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in values]


def _need(args, *names: str) -> None:
    missing = [f"--{n.rstrip('_').replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    require(not missing, f"{args.group} {args.action} requires {', '.join(missing)}")


def _one(values: list[float] | None, flag: str) -> float:
    require(values is not None and len(values) == 1, f"{flag} takes a single value here")
    return values[0]


# ─── gf ───────────────────────────────────────────────────────────────────────
def cmd_gf_theta(args, cfg: RunConfig) -> Result:
    _need(args, "order")
    s = _one(_floats(args.s), "--s") if args.s else 1.0
    if cfg.precision == "exact":
        require(s == 1.0, "exact θ_t needs the critical law (--s 1)")
        coeffs = phi_coeffs(args.order).tolist()
    else:
        coeffs = phi_t_coeffs(CriticalPair.from_s(s), args.order).tolist()
    tail = OffspringLaw(CriticalPair.from_s(s), warm=1).tail(args.order)
    rows = [[k, c] for k, c in enumerate(coeffs)]
    return Result({"theta": coeffs, "tail": tail}, ["k", "theta"], rows)


def cmd_gf_counts(args, cfg: RunConfig) -> Result:
    _need(args, "n_max", "p_max")
    require(args.n_max >= 0 and args.p_max >= 1, "need --n-max >= 0 and --p-max >= 1")
    rows = [[n, p, str(c)] for n, p, c in COUNTS.table(args.n_max, args.p_max)]
    return Result({"counts": [{"n": n, "p": p, "count": c} for n, p, c in rows]}, ["n", "p", "count"], rows)


# ─── law ──────────────────────────────────────────────────────────────────────
def cmd_law_perimeter(args, cfg: RunConfig) -> Result:
    _need(args, "r")
    pmf = perimeter_pmf(args.r, args.q_max, exact=cfg.precision == "exact", tail_eps=cfg.tail_eps)
    values = list(pmf.exact) if pmf.exact is not None else pmf.probs.tolist()
    rows = [[q, v] for q, v in enumerate(values, start=1)]
    return Result({"pmf": values, "tail": pmf.tail}, ["k", "probability"], rows)


def cmd_law_hull_gf(args, cfg: RunConfig) -> Result:
    _need(args, "r", "s")
    s = _one(_floats(args.s), "--s")
    value = hull_volume_gf_closed(s, args.r)
    payload = {"value": value}
    if s > 0:
        payload["iterate"] = hull_volume_gf_iterate(s, args.r)
    return Result(payload)


def cmd_law_hull_pmf(args, cfg: RunConfig) -> Result:
    _need(args, "r", "n_max")
    pmf = hull_volume_pmf(args.r, args.n_max, precision=cfg.precision)
    values = list(pmf.exact) if pmf.exact is not None else pmf.probs.tolist()
    rows = [[n, v] for n, v in enumerate(values)]
    return Result({"pmf": values, "tail": pmf.tail}, ["k", "probability"], rows)


def cmd_law_layer_gf(args, cfg: RunConfig) -> Result:
    _need(args, "r", "p", "q", "s")
    return Result({"value": layer_volume_gf(_one(_floats(args.s), "--s"), args.r, args.p, args.q)})


def cmd_law_slice_gf(args, cfg: RunConfig) -> Result:
    _need(args, "r", "q", "arcs", "s")
    arcs, values = _ints(args.arcs), _floats(args.s)
    weights = slice_root_weights(args.r, args.q, arcs, values)
    return Result({"value": slice_gf(args.r, args.q, arcs, values), "root_weights": weights.tolist()})


# ─── sample ───────────────────────────────────────────────────────────────────
def cmd_sample_hull(args, cfg: RunConfig) -> Result:
    _need(args, "r")
    task, params = ("hull", {"r": args.r}) if args.q is None else ("hull_conditioned", {"r": args.r, "q": args.q})
    rows = run_trials(task, params, cfg.trials, cfg.seed, cfg.workers)
    volumes = np.array([row["V"] for row in rows])
    summary = {"trials": cfg.trials, "seed": cfg.seed, "mean_volume": float(volumes.mean())}
    if args.s:
        summary["estimates"] = [estimate_gf(volumes, s, cfg.seed).to_dict() for s in _floats(args.s)]
    table = [[row["trial"], row["r"], row["P_r"], row["V"]] for row in rows]
    return Result({"summary": summary, "rows": rows}, ["trial", "r", "P_r", "V"], table)


def cmd_sample_slices(args, cfg: RunConfig) -> Result:
    _need(args, "r", "q", "arcs")
    arcs = _ints(args.arcs)
    rows = run_trials("slices", {"r": args.r, "q": args.q, "arcs": arcs}, cfg.trials, cfg.seed, cfg.workers)
    slices = np.array([row["slices"] for row in rows])
    summary = {"trials": cfg.trials, "seed": cfg.seed, "mean_slices": slices.mean(axis=0).tolist()}
    if args.s:
        summary["estimate"] = estimate_gf(slices, _floats(args.s), cfg.seed).to_dict()
    columns = ["trial", "r", "P_r", "V"] + [f"slice_{j}" for j in range(1, len(arcs) + 1)]
    table = [[row["trial"], row["r"], row["P_r"], row["V"], *row["slices"]] for row in rows]
    return Result({"summary": summary, "rows": rows}, columns, table)


# ─── asympt ───────────────────────────────────────────────────────────────────
def cmd_asympt_hull_limit(args, cfg: RunConfig) -> Result:
    _need(args, "lambda_", "x")
    lambdas = _floats(args.lambda_)
    if args.arcs is not None:
        arcs = _floats(args.arcs)
        ell = args.ell if args.ell is not None else math.fsum(arcs)
        return Result({"value": slice_limit(args.x, ell, arcs, lambdas)})
    lam = _one(lambdas, "--lambda")
    if args.ell is not None:
        return Result({"value": hull_cond_limit(lam, args.x, args.ell)})
    return Result({"value": hull_limit(lam, args.x)})


def cmd_asympt_hulldiff(args, cfg: RunConfig) -> Result:
    _need(args, "lambda_", "delta")
    lam = _one(_floats(args.lambda_), "--lambda")
    payload = {"value": hulldiff_limit(lam, args.delta)}
    if args.n is not None:
        _need(args, "ell")
        check = hulldiff_finite_check(args.ell, args.delta, lam, args.n)
        payload.update(finite=check.finite, limit=check.limit, rel_gap=check.rel_gap)
    return Result(payload)


def cmd_asympt_xi(args, cfg: RunConfig) -> Result:
    _need(args, "lambda_")
    return Result(xi_laplace(_one(_floats(args.lambda_), "--lambda")).to_dict())


def cmd_asympt_convergence(args, cfg: RunConfig) -> Result:
    _need(args, "functional")
    lambdas = _floats(args.lambda_)
    if args.functional == "slice":
        _need(args, "x", "arcs", "lambda_")
        params = {"x": args.x, "arcs": _floats(args.arcs), "lambdas": lambdas}
    elif args.functional == "hulldiff":
        _need(args, "ell", "delta", "lambda_")
        params = {"ell": args.ell, "delta": args.delta, "lambda": _one(lambdas, "--lambda")}
    else:
        _need(args, "x", "lambda_")
        params = {"x": args.x, "lambda": _one(lambdas, "--lambda")}
        if args.functional == "hull_cond":
            _need(args, "ell")
            params["ell"] = args.ell
    table = convergence_table(args.functional, params, _ints(args.ladder))
    rows = [[row.R, row.finite, row.limit, row.rel_gap] for row in table.rows]
    return Result({"rows": table.to_rows(), "monotone": table.monotone},
                  ["R", "finite", "limit", "rel_gap"], rows)


# ─── verify ───────────────────────────────────────────────────────────────────
def cmd_verify_all(args, cfg: RunConfig) -> Result:
    verdicts = run_acceptance(cfg.trials, cfg.seed, cfg.workers, _ints(args.only))
    passed = all(v["pass"] for v in verdicts)
    rows = [[v["test"], v["statistic"], v["p"], v["pass"], v["seed"]] for v in verdicts]
    return Result({"verdicts": verdicts, "pass": passed}, ["test", "statistic", "p", "pass", "seed"], rows, passed)


# ─── Parser ───────────────────────────────────────────────────────────────────
COMMANDS = {
    "gf": {"theta": cmd_gf_theta, "counts": cmd_gf_counts},
    "law": {"perimeter": cmd_law_perimeter, "hull-gf": cmd_law_hull_gf, "hull-pmf": cmd_law_hull_pmf,
            "layer-gf": cmd_law_layer_gf, "slice-gf": cmd_law_slice_gf},
    "sample": {"hull": cmd_sample_hull, "slices": cmd_sample_slices},
    "asympt": {"hull-limit": cmd_asympt_hull_limit, "hulldiff": cmd_asympt_hulldiff, "xi": cmd_asympt_xi,
               "convergence": cmd_asympt_convergence},
    "verify": {"all": cmd_verify_all},
}


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--r", type=int)
    common.add_argument("--s", help="volume weight(s), comma-separated")
    common.add_argument("--q", type=int)
    common.add_argument("--p", type=int)
    common.add_argument("--arcs", help="arc lengths, comma-separated")
    common.add_argument("--lambda", dest="lambda_", help="λ value(s), comma-separated")
    common.add_argument("--x", type=float)
    common.add_argument("--ell", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--q-max", dest="q_max", type=int)
    common.add_argument("--n-max", dest="n_max", type=int)
    common.add_argument("--p-max", dest="p_max", type=int)
    common.add_argument("--order", type=int)
    common.add_argument("--functional", choices=FUNCTIONALS)
    common.add_argument("--ladder", help="sizes R, comma-separated")
    common.add_argument("--only", help="acceptance criteria to run, comma-separated")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--precision", choices=PRECISIONS)
    common.add_argument("--tail-eps", dest="tail_eps", type=float)
    common.add_argument("--format", choices=FORMATS)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uipt-lab", description="Hull, layer and slice laws of the UIPT.")
    groups = parser.add_subparsers(dest="group", required=True)
    common = _common()
    for group, actions in COMMANDS.items():
        sub = groups.add_parser(group).add_subparsers(dest="action", required=True)
        for action, handler in actions.items():
            sub.add_parser(action, parents=[common]).set_defaults(handler=handler)
    return parser


def dispatch(argv: list[str], out=None) -> int:
    """Run one command; returns the process exit code."""
    load_env()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    params = {k.rstrip("_"): v for k, v in vars(args).items() if k not in CONFIG_FLAGS and v is not None}
    try:
        cfg = RunConfig.resolve(
            f"{args.group} {args.action}", params,
            precision=args.precision, seed=args.seed, trials=args.trials, workers=args.workers,
            output_format=args.format, tail_eps=args.tail_eps,
        )
        result = args.handler(args, cfg)
        emit(cfg, result, out)
    except UsageError as e:
        fail(str(e))
        return 2
    except UiptLabError as e:
        fail(str(e))
        return 1
    except (ArithmeticError, ValueError) as e:
        fail(f"{type(e).__name__}: {e}")
        return 1
    if not result.passed:
        fail(f"{cfg.command}: at least one check failed")
        return 1
    ok(cfg.command)
    return 0


if __name__ == "__main__":
    sys.exit(dispatch(sys.argv[1:]))
