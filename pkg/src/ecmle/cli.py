"""Command-line interface for the evidence-estimation harness.

Subcommands: estimate (one model, one method), compare (method suite),
sweep-alpha, variance, export-regions.  Options can come from an INI
config file (--config) with command-line flags taking precedence.
Exit codes: 0 success, 2 configuration error, 3 estimator failure in
single-method mode.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

from .errors import EvidenceError
from .harness import (
    DEFAULT_ALPHA_GRID,
    ConfigError,
    RunConfig,
    export_regions,
    load_config_file,
    run_replications,
    run_variance_sweep,
    summarize,
    sweep_alpha,
    write_results_csv,
    write_summary_csv,
    write_timings_csv,
    write_variance_csv,
)

__all__ = ["main", "build_parser"]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file; flags override its values")
    p.add_argument("--model", help="model name (gaussian|mixture|rosenbrock|cube)")
    p.add_argument("--T", type=int, dest="t_per_half", help="draws per half (>= 100)")
    p.add_argument("--alpha", type=float, help="HPD level in (0, 1)")
    p.add_argument("--k", type=float, help="candidate subsample rate in (0, 1)")
    p.add_argument("--reps", type=int, help="number of replications")
    p.add_argument("--seed", type=int, help="base seed (dataset seed)")
    p.add_argument("--n-vol", type=int, dest="n_vol", help="volume MC draws")
    p.add_argument("--alpha-trunc", type=float, dest="alpha_trunc", help="truncation level")
    p.add_argument("--thames-r", type=float, dest="thames_r", help="ball radius override")
    p.add_argument("--workers", type=int, help="parallel replication workers")
    p.add_argument("--out", help="output CSV path (or prefix for export-regions)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecmle", description="Bayesian evidence estimation experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="run one method once and print the result")
    _add_common(p_est)
    p_est.add_argument("--method", help="estimator name, e.g. ecmle or thames")

    p_cmp = sub.add_parser("compare", help="run a suite of methods over replications")
    _add_common(p_cmp)
    p_cmp.add_argument("--methods", help="comma-separated method names")

    p_swp = sub.add_parser("sweep-alpha", help="repeat a comparison across HPD levels")
    _add_common(p_swp)
    p_swp.add_argument("--methods", help="comma-separated method names")
    p_swp.add_argument("--alphas", help="comma-separated levels in (0, 1)")

    p_var = sub.add_parser("variance", help="second-moment proxy across HPD levels")
    _add_common(p_var)
    p_var.add_argument("--alphas", help="comma-separated levels in (0, 1)")
    p_var.add_argument("--n-mc", type=int, dest="n_mc", default=10_000)
    p_var.add_argument(
        "--supports", default="ecmle,thames", help="comma-separated support kinds"
    )

    p_exp = sub.add_parser("export-regions", help="serialize supports and flagged draws")
    _add_common(p_exp)

    return parser


def _assemble_config(args: argparse.Namespace, methods: tuple[str, ...]) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(load_config_file(args.config))
    mapping = {
        "model": args.model,
        "t_per_half": args.t_per_half,
        "alpha": args.alpha,
        "k": args.k,
        "n_replications": args.reps,
        "base_seed": args.seed,
        "n_vol": args.n_vol,
        "alpha_trunc": args.alpha_trunc,
        "thames_r": args.thames_r,
        "workers": args.workers,
        "out": args.out,
    }
    for key, value in mapping.items():
        if value is not None:
            values[key] = value
    if methods:
        values["methods"] = methods
    if "model" not in values:
        raise ConfigError("a model is required (--model or config file)")
    if "methods" not in values or not values["methods"]:
        raise ConfigError("at least one method is required")
    allowed = {f.name for f in fields(RunConfig)}
    unknown = set(values) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**values)


def _parse_methods(text) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(m.strip() for m in str(text).split(",") if m.strip())


def _parse_alphas(text) -> tuple[float, ...]:
    if not text:
        return tuple(DEFAULT_ALPHA_GRID)
    try:
        return tuple(float(a) for a in str(text).split(",") if a.strip())
    except ValueError as exc:
        raise ConfigError(f"bad --alphas value: {text!r}") from exc


def _sibling(path: str, tag: str) -> str:
    if path.endswith(".csv"):
        return path[: -len(".csv")] + f".{tag}.csv"
    return f"{path}.{tag}.csv"


def _write_suite(out: str, rows) -> None:
    write_results_csv(out, rows)
    write_timings_csv(_sibling(out, "timings"), rows)
    write_summary_csv(_sibling(out, "summary"), summarize(rows))
    print(f"wrote {out}, {_sibling(out, 'timings')}, {_sibling(out, 'summary')}")


def _cmd_estimate(args: argparse.Namespace) -> int:
    methods = _parse_methods(args.method)
    if len(methods) > 1:
        raise ConfigError("estimate takes exactly one --method")
    cfg = _assemble_config(args, methods)
    if len(cfg.methods) != 1:
        raise ConfigError("estimate takes exactly one method")
    try:
        rows = run_replications(cfg)
    except EvidenceError as exc:
        print(f"estimator failed: {exc}", file=sys.stderr)
        return 3
    failed = [r for r in rows if r.status != "ok"]
    if failed:
        print(f"estimator failed: {failed[0].status}", file=sys.stderr)
        return 3
    for r in rows:
        exact = "" if r.exact_log_z is None else f" exact={r.exact_log_z:.6f}"
        err = "" if r.abs_error is None else f" abs_error={r.abs_error:.6f}"
        print(
            f"model={r.model} method={r.method} replication={r.replication} "
            f"log_z={r.log_z_hat:.6f}{exact}{err} n_inside={r.n_inside} "
            f"time_s={r.wall_time_s:.3f}"
        )
    if cfg.out:
        _write_suite(cfg.out, rows)
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    cfg = _assemble_config(args, _parse_methods(args.methods))
    rows = run_replications(cfg)
    _write_suite(cfg.out or "results.csv", rows)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _assemble_config(args, _parse_methods(args.methods))
    rows = sweep_alpha(cfg, _parse_alphas(args.alphas))
    _write_suite(cfg.out or "sweep.csv", rows)
    return 0


def _cmd_variance(args: argparse.Namespace) -> int:
    cfg = _assemble_config(args, ("ecmle",))
    supports = tuple(s.strip() for s in args.supports.split(",") if s.strip())
    rows = run_variance_sweep(cfg, _parse_alphas(args.alphas), args.n_mc, supports)
    out = cfg.out or "variance.csv"
    write_variance_csv(out, rows)
    print(f"wrote {out}")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    cfg = _assemble_config(args, ("ecmle",))
    prefix = cfg.out or "regions"
    paths = export_regions(cfg, prefix)
    print(f"wrote {paths['ecmle']}, {paths['thames']}, {paths['draws']}")
    return 0


_COMMANDS = {
    "estimate": _cmd_estimate,
    "compare": _cmd_compare,
    "sweep-alpha": _cmd_sweep,
    "variance": _cmd_variance,
    "export-regions": _cmd_export,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EvidenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
