"""Command-line front end.

Subcommands:
  hafnian      value and sign of Haf(A) or Haf(B_I)
  solve-t      tuned scaling for a covariance matrix
  variances    mu, V_gbs, V_mc for an instance file
  sample-size  guaranteed sample sizes at a given accuracy
  simulate     empirical MSE of one estimator vs theory
  advantage    problem-space percentage for one (N, K, mode) cell
  sweep        multi-cell advantage table
  hybrid-plan  per-degree method allocation

Exit codes: 0 ok, 1 internal inconsistency, 2 config error, 3 budget refusal.
All outputs are deterministic given argv (and seed).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings

import numpy as np

from .advantage import (AdvantageConfig, MODE_GBSI, MODE_GBSP, NORM_RAW_CN,
                        NORM_SELF, efficiency_ratio_summary,
                        estimate_percentage, sweep)
from .errors import BudgetExceededError, ConfigError, GbspeError, IllPosedError
from .estimators import (DEFAULT_PAIR_BUDGET, AccuracySpec, SliceSpec,
                         empirical_mse, hybrid_plan, variance_gbsi,
                         variance_gbsp, variance_report)
from .gbs import mean_photon_number, normalization, solve_scaling, tune_program
from .hafnian import HafnianCache, hafnian_multiindex, hafnian_sign, hafnian_dense
from .linalg import ProblemInstance, ProblemShape, eigendecompose
from .multiindex import enumerate_degree, parse_index
from .rng import NS_REPLICA, derive_rng

FLOAT_FMT = "%.17g"


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


# ---------------------------------------------------------------------------
# input files


def load_matrix(path: str) -> np.ndarray:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"matrix file {path}: {exc}") from exc
    if isinstance(data, dict):
        if "entries" not in data:
            raise ConfigError(f"matrix file {path}: missing 'entries'")
        data = data["entries"]
    matrix = np.asarray(data, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ConfigError(f"matrix file {path}: 'entries' must be square")
    if not np.allclose(matrix, matrix.T, atol=1e-12, rtol=0.0):
        raise ConfigError(f"matrix file {path}: 'entries' must be symmetric")
    return matrix


def load_instance(path: str) -> ProblemInstance:
    """JSON schema: {N, K, eigenvalues[], basis[][] (optional, identity),
    coefficients {"i1,i2,...": value}}."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"instance file {path}: {exc}") from exc
    for field in ("N", "K", "eigenvalues", "coefficients"):
        if field not in data:
            raise ConfigError(f"instance file {path}: missing field '{field}'")
    shape = ProblemShape(int(data["N"]), int(data["K"]))
    eigenvalues = np.asarray(data["eigenvalues"], dtype=float)
    if len(eigenvalues) != shape.n_vars:
        raise ConfigError(f"instance file {path}: 'eigenvalues' must have length N")
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    if "basis" in data and data["basis"] is not None:
        basis = np.asarray(data["basis"], dtype=float)
        if basis.shape != (shape.n_vars, shape.n_vars):
            raise ConfigError(f"instance file {path}: 'basis' must be NxN")
        if np.max(np.abs(basis.T @ basis - np.eye(shape.n_vars))) > 1e-10:
            raise ConfigError(f"instance file {path}: 'basis' is not orthogonal")
        basis = basis[:, order]
    else:
        basis = np.eye(shape.n_vars)[:, order]
    patterns = enumerate_degree(shape.n_vars, 2 * shape.half_degree)
    coeffs = np.zeros(len(patterns))
    for key, value in data["coefficients"].items():
        index = parse_index(key)
        if index not in patterns:
            raise ConfigError(
                f"instance file {path}: coefficient index {key} is not a "
                f"degree-{2 * shape.half_degree} pattern over {shape.n_vars} variables"
            )
        coeffs[patterns.index(index)] = float(value)
    norm = float(np.linalg.norm(coeffs))
    if norm == 0.0:
        raise ConfigError(f"instance file {path}: 'coefficients' are all zero")
    if abs(norm - 1.0) > 1e-9:
        warnings.warn(f"coefficients renormalized to the unit sphere (|a| was {norm})")
    coeffs = coeffs / norm
    try:
        return ProblemInstance(shape, coeffs, eigenvalues, basis)
    except ValueError as exc:
        raise ConfigError(f"instance file {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_hafnian(args) -> int:
    matrix = load_matrix(args.matrix)
    cache = HafnianCache.load(args.cache) if args.cache else None
    if args.index:
        index = parse_index(args.index)
        value = hafnian_multiindex(matrix, index, cache)
        sign = hafnian_sign(matrix, index, cache)
    else:
        if matrix.shape[0] % 2 != 0:
            raise ConfigError("matrix size is odd; pass --index or an even matrix")
        value = hafnian_dense(matrix)
        sign = 0 if abs(value) <= 1e-14 else (1 if value > 0 else -1)
    if cache is not None and args.cache:
        cache.save(args.cache)
    print(f"hafnian {_fmt(value)}")
    print(f"sign {sign:d}")
    return 0


def cmd_solve_t(args) -> int:
    matrix = load_matrix(args.matrix)
    decomp = eigendecompose(matrix)
    target = 2.0 * args.K
    t = solve_scaling(decomp.eigenvalues, target)
    print(f"t {_fmt(t)}")
    print(f"d_t {_fmt(normalization(decomp.eigenvalues, t))}")
    print(f"mean_residual {_fmt(mean_photon_number(decomp.eigenvalues, t) - target)}")
    return 0


def cmd_variances(args) -> int:
    instance = load_instance(args.instance)
    spec = AccuracySpec(0.1, 0.1)  # sizes not reported here; any valid spec
    report = variance_report(instance, args.mode, spec, budget=args.budget)
    print(f"mu {_fmt(report.mu)}")
    print(f"V_gbs {_fmt(report.v_gbs)}")
    print(f"V_mc {_fmt(report.v_mc)}")
    print(f"t {_fmt(report.scaling)}")
    return 0


def cmd_sample_size(args) -> int:
    instance = load_instance(args.instance)
    spec = AccuracySpec(args.eps, args.delta)
    report = variance_report(instance, args.mode, spec, budget=args.budget)
    print(f"n_gbs {report.n_gbs}")
    print(f"n_mc {report.n_mc}")
    print(f"asymptotic {'true' if report.asymptotic else 'false'}")
    return 0


def cmd_simulate(args) -> int:
    instance = load_instance(args.instance)
    cache = HafnianCache()
    rng = derive_rng(args.seed, NS_REPLICA)
    mse = empirical_mse(instance, args.estimator, args.n, args.replicas, rng, cache)
    program = tune_program(instance.eigenvalues, instance.shape.half_degree)
    if args.estimator == "gbsp":
        theory = variance_gbsp(instance, program, cache)
        scaled = 4.0 * args.n * mse
        label = "4n*MSE"
    elif args.estimator == "gbsi":
        theory = variance_gbsi(instance, program, cache)
        scaled = args.n * mse
        label = "n*MSE"
    else:
        report = variance_report(
            instance, "haf" if args.estimator == "mc_haf" else "hafsq",
            AccuracySpec(0.1, 0.1), cache, budget=args.budget)
        theory = report.v_mc
        scaled = args.n * mse
        label = "n*MSE"
    print(f"mse {_fmt(mse)}")
    print(f"{label} {_fmt(scaled)}")
    print(f"theory_V {_fmt(4.0 * theory if args.estimator == 'gbsp' else theory)}")
    ratio = scaled / (4.0 * theory if args.estimator == "gbsp" else theory)
    print(f"ratio {_fmt(ratio)}")
    return 0


RECORD_COLUMNS = ("l", "m", "vandermonde", "V_mc", "V_gbs", "H", "ratio", "skipped")


def _write_records_csv(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([
                r.outer, r.inner, _fmt(r.vandermonde), _fmt(r.v_mc), _fmt(r.v_gbs),
                r.beats_mc, _fmt(r.ratio) if np.isfinite(r.ratio) else "inf",
                int(r.skipped),
            ])


def _advantage_config(args) -> AdvantageConfig:
    mode = {"gbsp": MODE_GBSP, "gbsi": MODE_GBSI}[args.mode]
    return AdvantageConfig(
        shape=ProblemShape(args.N, args.K),
        mode=mode,
        n1=args.n1,
        n2=args.n2,
        seed=args.seed,
        budget=args.budget,
        normalization=args.normalization,
    )


def cmd_advantage(args) -> int:
    config = _advantage_config(args)
    result = estimate_percentage(config)
    summary = {
        "config": {
            "N": args.N, "K": args.K, "mode": args.mode, "n1": args.n1,
            "n2": args.n2, "seed": args.seed, "budget": args.budget,
            "normalization": args.normalization,
        },
        "percentage": result.percentage,
        "stderr": result.stderr,
        "skipped": result.skipped,
        "trace": list(result.trace),
        "ratio_summary": efficiency_ratio_summary(result.records),
    }
    if args.records:
        _write_records_csv(args.records, result.records)
    text = json.dumps(summary, indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


SWEEP_COLUMNS = ("N", "K", "mode", "n1", "n2", "seed", "status", "percentage",
                 "stderr", "skipped", "runtime_sec", "note")


def cmd_sweep(args) -> int:
    try:
        with open(args.grid) as fh:
            grid = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"grid file {args.grid}: {exc}") from exc
    defaults = grid.get("defaults", {})
    cells = []
    for cell in grid.get("cells", []):
        merged = {**defaults, **cell}
        try:
            cells.append(AdvantageConfig(
                shape=ProblemShape(int(merged["N"]), int(merged["K"])),
                mode={"gbsp": MODE_GBSP, "gbsi": MODE_GBSI}[merged["mode"]],
                n1=int(merged.get("n1", 30)),
                n2=int(merged.get("n2", 100)),
                seed=int(merged.get("seed", 0)),
                budget=float(merged.get("budget", DEFAULT_PAIR_BUDGET)),
                normalization=merged.get("normalization", NORM_SELF),
            ))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"grid cell {cell}: {exc}") from exc
    rows = sweep(cells)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    writer = csv.writer(out)
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([
            row["N"], row["K"], row["mode"], row["n1"], row["n2"], row["seed"],
            row["status"],
            _fmt(row["percentage"]) if row["percentage"] != "" else "",
            _fmt(row["stderr"]) if row["stderr"] != "" else "",
            row["skipped"], _fmt(row["runtime_sec"]), row["note"],
        ])
    if args.output:
        out.close()
    return 0


def cmd_hybrid_plan(args) -> int:
    try:
        with open(args.slices) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"slices file {args.slices}: {exc}") from exc
    try:
        slices = [SliceSpec(int(s["k"]), float(s["mu"]), float(s["V_mc"]),
                            float(s["V_gbs"])) for s in data["slices"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"slices file {args.slices}: {exc}") from exc
    plan = hybrid_plan(slices, AccuracySpec(args.eps, args.delta))
    out = {
        "slices": [
            {"k": p.degree, "eps_k": p.eps_k, "delta_k": p.delta_k,
             "n_mc": p.n_mc, "n_gbs": p.n_gbs, "choice": p.choice,
             "ill_posed": p.ill_posed}
            for p in plan.slices
        ],
        "total_mc": plan.total_mc,
        "total_gbs": plan.total_gbs,
        "total_hybrid": plan.total_hybrid,
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gbspe")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hafnian", help="hafnian value and sign")
    p.add_argument("--matrix", required=True)
    p.add_argument("--index", default=None, help='multi-index "i1,i2,..."')
    p.add_argument("--cache", default=None)
    p.set_defaults(func=cmd_hafnian)

    p = sub.add_parser("solve-t", help="tuned scaling for a covariance")
    p.add_argument("--matrix", required=True)
    p.add_argument("--K", type=int, required=True)
    p.set_defaults(func=cmd_solve_t)

    for name, fn in (("variances", cmd_variances), ("sample-size", cmd_sample_size)):
        p = sub.add_parser(name)
        p.add_argument("--instance", required=True)
        p.add_argument("--mode", choices=("haf", "hafsq"), required=True)
        p.add_argument("--budget", type=float, default=DEFAULT_PAIR_BUDGET)
        if name == "sample-size":
            p.add_argument("--eps", type=float, required=True)
            p.add_argument("--delta", type=float, required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("simulate", help="empirical MSE vs theory")
    p.add_argument("--instance", required=True)
    p.add_argument("--estimator", choices=("gbsp", "gbsi", "mc_haf", "mc_hafsq"),
                   required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--replicas", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=float, default=DEFAULT_PAIR_BUDGET)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("advantage", help="one problem-space percentage cell")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--mode", choices=("gbsp", "gbsi"), required=True)
    p.add_argument("--n1", type=int, default=30)
    p.add_argument("--n2", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=float, default=DEFAULT_PAIR_BUDGET)
    p.add_argument("--normalization", choices=(NORM_SELF, NORM_RAW_CN),
                   default=NORM_SELF)
    p.add_argument("--records", default=None, help="records CSV path")
    p.add_argument("--output", default=None, help="summary JSON path")
    p.set_defaults(func=cmd_advantage)

    p = sub.add_parser("sweep", help="multi-cell advantage table")
    p.add_argument("--grid", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("hybrid-plan", help="per-degree method allocation")
    p.add_argument("--slices", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_hybrid_plan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, ValueError, IllPosedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print(f"budget refused: {exc}", file=sys.stderr)
        return 3
    except GbspeError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
