"""Experiment runner: replication loops, sweeps, summaries, CSV emission.

Outputs are split into a deterministic results CSV (identical bytes for
identical configs) and a separate timings CSV holding wall-clock seconds,
which are inherently non-reproducible.  The summary joins both in memory.
Replication i draws its sampler stream from base_seed + 1000 + i while the
dataset is fixed by base_seed itself, so every method within a replication
sees the same draws and datasets never change across replications.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .covering import CoveringConfig, EllipsoidUnion, build_covering, save_union
from .errors import EvidenceError
from .estimators import (
    EvidenceEstimate,
    Method,
    ThamesRegion,
    ecmle,
    ecmle_symmetrized,
    gd_gaussian,
    gd_truncated_gaussian,
    hme_newton_raftery,
    mix_thames,
    thames,
    variance_proxy,
)
from .geometry import Ellipsoid
from .hpd import DrawSet, partition
from .rng import make_rng
from .targets import TargetModel, make_model

__all__ = [
    "ConfigError",
    "RunConfig",
    "ResultRow",
    "SummaryRow",
    "run_replications",
    "sweep_alpha",
    "summarize",
    "export_regions",
    "run_variance_sweep",
    "write_results_csv",
    "write_timings_csv",
    "write_summary_csv",
    "write_variance_csv",
    "load_config_file",
    "thames_region_as_ellipsoid",
    "DEFAULT_ALPHA_GRID",
]

DEFAULT_ALPHA_GRID = (0.10, 0.25, 0.50, 0.75, 0.80, 0.90, 0.99)

RESULT_COLUMNS = (
    "model,d,n_data,method,replication,seed,T,alpha,log_z_hat,exact_log_z,"
    "abs_error,n_ellipsoids,coverage_fraction,n_inside,support_volume,status"
)
TIMING_COLUMNS = "model,method,alpha,replication,wall_time_s"
SUMMARY_COLUMNS = (
    "model,method,alpha,T,n_ok,n_failed,rmse,mean_wall_time_s,rmse_time,status"
)
VARIANCE_COLUMNS = "model,support,alpha,T,n_mc,proxy,log_proxy,mc_se"


class ConfigError(Exception):
    """Invalid run configuration (unknown model/method, bad values)."""


@dataclass(frozen=True)
class RunConfig:
    """One experiment: a model, a method list, and replication settings.

    ``t_per_half`` is the per-half draw count: each replication samples
    2 x t_per_half posterior draws before splitting.
    """

    model: str
    methods: tuple[str, ...]
    t_per_half: int = 10_000
    alpha: float = 0.75
    k: float = 0.075
    n_replications: int = 1
    base_seed: int = 42
    n_vol: int = 10_000
    alpha_trunc: float = 0.5
    thames_r: Optional[float] = None
    workers: int = 1
    out: Optional[str] = None
    model_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t_per_half < 100:
            raise ConfigError(f"T must be at least 100, got {self.t_per_half}")
        if self.n_replications < 1:
            raise ConfigError(f"reps must be at least 1, got {self.n_replications}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie strictly in (0, 1), got {self.alpha}")
        if not (0.0 < self.k < 1.0):
            raise ConfigError(f"k must lie strictly in (0, 1), got {self.k}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        known = {m.value for m in Method}
        bad = [m for m in self.methods if m not in known]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {sorted(known)}")
        object.__setattr__(self, "methods", tuple(self.methods))

    def sampler_seed(self, replication: int) -> int:
        return self.base_seed + 1000 + replication

    def volume_seed(self, replication: int) -> int:
        return self.sampler_seed(replication) + 500_000

    def covering_seed(self, replication: int) -> int:
        return self.sampler_seed(replication) + 250_000


@dataclass(frozen=True)
class ResultRow:
    model: str
    d: int
    n_data: int
    method: str
    replication: int
    seed: int
    t_per_half: int
    alpha: float
    log_z_hat: Optional[float]
    exact_log_z: Optional[float]
    abs_error: Optional[float]
    wall_time_s: float
    n_ellipsoids: Optional[int]
    coverage_fraction: Optional[float]
    n_inside: Optional[int]
    support_volume: Optional[float]
    status: str


@dataclass(frozen=True)
class SummaryRow:
    model: str
    method: str
    alpha: float
    t_per_half: int
    n_ok: int
    n_failed: int
    rmse: Optional[float]
    mean_wall_time_s: float
    rmse_time: Optional[float]
    status: str


def _build_model(cfg: RunConfig) -> TargetModel:
    try:
        return make_model(cfg.model, data_seed=cfg.base_seed, **cfg.model_params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _covering_config(cfg: RunConfig, replication: int) -> CoveringConfig:
    return CoveringConfig(
        alpha=cfg.alpha,
        rng_seed=cfg.covering_seed(replication),
        subsample_rate=cfg.k,
    )


def _estimate_once(
    cfg: RunConfig, model: TargetModel, sample: DrawSet, method: str, replication: int
) -> EvidenceEstimate:
    part = partition(sample, cfg.alpha)
    if method == Method.ECMLE.value:
        union = build_covering(part, _covering_config(cfg, replication), model.log_unnorm_posterior)
        return ecmle(part, union)
    if method == Method.ECMLE_SYMMETRIZED.value:
        return ecmle_symmetrized(
            sample, cfg.alpha, _covering_config(cfg, replication), model.log_unnorm_posterior
        )
    if method == Method.HME.value:
        return hme_newton_raftery(part.eval_half, model)
    if method == Method.GD_GAUSSIAN.value:
        return gd_gaussian(part.eval_half, part.build_half, model)
    if method == Method.GD_TRUNCGAUSS.value:
        r = cfg.thames_r if cfg.thames_r is not None else math.sqrt(model.d + 1.0)
        return gd_truncated_gaussian(part.eval_half, part.build_half, model, r)
    if method == Method.THAMES.value:
        return thames(part.eval_half, part.build_half, model, r=cfg.thames_r)
    if method == Method.MIX_THAMES.value:
        return mix_thames(
            part.eval_half,
            part.build_half,
            model,
            rng=make_rng(cfg.volume_seed(replication)),
            r=cfg.thames_r,
            alpha_trunc=cfg.alpha_trunc,
            n_vol=cfg.n_vol,
        )
    raise ConfigError(f"unknown method {method!r}")  # pragma: no cover - validated


def _run_one_replication(cfg: RunConfig, replication: int) -> list[ResultRow]:
    model = _build_model(cfg)
    rng = make_rng(cfg.sampler_seed(replication))
    sample = model.sample_posterior(2 * cfg.t_per_half, rng)
    exact = model.exact_log_evidence()
    rows = []
    for method in cfg.methods:
        start = time.perf_counter()
        try:
            est = _estimate_once(cfg, model, sample, method, replication)
            elapsed = time.perf_counter() - start
            diag = est.diagnostics
            n_ell = diag.get("n_ellipsoids")
            abs_error = None if exact is None else abs(est.log_z - exact)
            rows.append(
                ResultRow(
                    model=cfg.model,
                    d=model.d,
                    n_data=model.n_data,
                    method=method,
                    replication=replication,
                    seed=cfg.sampler_seed(replication),
                    t_per_half=cfg.t_per_half,
                    alpha=cfg.alpha,
                    log_z_hat=est.log_z,
                    exact_log_z=exact,
                    abs_error=abs_error,
                    wall_time_s=elapsed,
                    n_ellipsoids=None if n_ell is None else int(n_ell),
                    coverage_fraction=diag.get("coverage_fraction"),
                    n_inside=est.n_inside,
                    support_volume=est.support_volume,
                    status="ok",
                )
            )
        except EvidenceError as exc:
            elapsed = time.perf_counter() - start
            rows.append(
                ResultRow(
                    model=cfg.model,
                    d=model.d,
                    n_data=model.n_data,
                    method=method,
                    replication=replication,
                    seed=cfg.sampler_seed(replication),
                    t_per_half=cfg.t_per_half,
                    alpha=cfg.alpha,
                    log_z_hat=None,
                    exact_log_z=exact,
                    abs_error=None,
                    wall_time_s=elapsed,
                    n_ellipsoids=None,
                    coverage_fraction=None,
                    n_inside=None,
                    support_volume=None,
                    status=f"error:{type(exc).__name__}",
                )
            )
    return rows


def run_replications(cfg: RunConfig) -> list[ResultRow]:
    """All replications of all configured methods, deterministically.

    With ``workers > 1`` replications run in separate processes; rows are
    sorted by (alpha, replication) before returning so parallelism never
    changes the output bytes.
    """
    _build_model(cfg)  # validate the model config before spawning anything
    if cfg.workers == 1 or cfg.n_replications == 1:
        nested = [_run_one_replication(cfg, i) for i in range(cfg.n_replications)]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [
                pool.submit(_run_one_replication, cfg, i)
                for i in range(cfg.n_replications)
            ]
            nested = [f.result() for f in futures]
    rows = [row for sub in nested for row in sub]
    rows.sort(key=lambda r: (r.alpha, r.replication))
    return rows


def sweep_alpha(cfg: RunConfig, alphas: Sequence[float] = DEFAULT_ALPHA_GRID) -> list[ResultRow]:
    """run_replications once per level; draws are paired across levels."""
    for a in alphas:
        if not (0.0 < a < 1.0):
            raise ConfigError(f"sweep alpha must lie strictly in (0, 1), got {a}")
    rows = []
    for a in alphas:
        rows.extend(run_replications(replace(cfg, alpha=a)))
    rows.sort(key=lambda r: (r.alpha, r.replication))
    return rows


def summarize(rows: Sequence[ResultRow]) -> list[SummaryRow]:
    """Per (model, method, alpha, T): RMSE, mean wall time, and their product."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.model, row.method, row.alpha, row.t_per_half), []).append(row)
    out = []
    for (model, method, alpha, t_half), members in sorted(groups.items()):
        ok = [r for r in members if r.status == "ok"]
        failed = len(members) - len(ok)
        mean_time = float(np.mean([r.wall_time_s for r in members]))
        if not ok or any(r.exact_log_z is None for r in ok):
            out.append(
                SummaryRow(
                    model=model,
                    method=method,
                    alpha=alpha,
                    t_per_half=t_half,
                    n_ok=len(ok),
                    n_failed=failed,
                    rmse=None,
                    mean_wall_time_s=mean_time,
                    rmse_time=None,
                    status="warning:no_exact" if ok else "warning:no_ok_rows",
                )
            )
            continue
        rmse = math.sqrt(float(np.mean([r.abs_error**2 for r in ok])))
        out.append(
            SummaryRow(
                model=model,
                method=method,
                alpha=alpha,
                t_per_half=t_half,
                n_ok=len(ok),
                n_failed=failed,
                rmse=rmse,
                mean_wall_time_s=mean_time,
                rmse_time=rmse * mean_time,
                status="ok",
            )
        )
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_results_csv(path, rows: Sequence[ResultRow]) -> None:
    lines = [f"# columns: {RESULT_COLUMNS}", RESULT_COLUMNS]
    for r in rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.model,
                    r.d,
                    r.n_data,
                    r.method,
                    r.replication,
                    r.seed,
                    r.t_per_half,
                    r.alpha,
                    r.log_z_hat,
                    r.exact_log_z,
                    r.abs_error,
                    r.n_ellipsoids,
                    r.coverage_fraction,
                    r.n_inside,
                    r.support_volume,
                    r.status,
                )
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_timings_csv(path, rows: Sequence[ResultRow]) -> None:
    lines = [f"# columns: {TIMING_COLUMNS}", TIMING_COLUMNS]
    for r in rows:
        lines.append(
            ",".join(_fmt(v) for v in (r.model, r.method, r.alpha, r.replication, r.wall_time_s))
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_csv(path, rows: Sequence[SummaryRow]) -> None:
    lines = [f"# columns: {SUMMARY_COLUMNS}", SUMMARY_COLUMNS]
    for r in rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.model,
                    r.method,
                    r.alpha,
                    r.t_per_half,
                    r.n_ok,
                    r.n_failed,
                    r.rmse,
                    r.mean_wall_time_s,
                    r.rmse_time,
                    r.status,
                )
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def thames_region_as_ellipsoid(region: ThamesRegion) -> Ellipsoid:
    """Factor the Mahalanobis ball into explicit axes for serialization."""
    eigenvalues, eigenvectors = np.linalg.eigh(region.covariance)
    if np.any(eigenvalues <= 0.0):
        raise EvidenceError("covariance eigenvalues must be positive")
    return Ellipsoid(
        center=region.center,
        axes=eigenvectors,
        semi_axes=region.radius * np.sqrt(eigenvalues),
    )


def export_regions(cfg: RunConfig, prefix: str) -> dict[str, str]:
    """One replication's covering, comparison ball, and flagged draws.

    Writes ``<prefix>.ecmle.regions``, ``<prefix>.thames.regions``, and
    ``<prefix>.draws.csv`` (columns theta_1..theta_d,
    log_unnorm_posterior, half, is_hpd): everything the plotting
    component needs for a coverage scatter.
    """
    model = _build_model(cfg)
    rng = make_rng(cfg.sampler_seed(0))
    sample = model.sample_posterior(2 * cfg.t_per_half, rng)
    part = partition(sample, cfg.alpha)
    union = build_covering(part, _covering_config(cfg, 0), model.log_unnorm_posterior)
    region = ThamesRegion.from_build(
        part.build_half, cfg.thames_r, log_truncation=None
    )
    ball = thames_region_as_ellipsoid(region)
    thames_union = EllipsoidUnion(
        ellipsoids=(ball,),
        total_volume=ball.volume(),
        log_threshold=math.nan,
        d=model.d,
    )
    paths = {
        "ecmle": f"{prefix}.ecmle.regions",
        "thames": f"{prefix}.thames.regions",
        "draws": f"{prefix}.draws.csv",
    }
    save_union(paths["ecmle"], union)
    save_union(paths["thames"], thames_union)
    header = ",".join(
        [f"theta_{j + 1}" for j in range(model.d)]
        + ["log_unnorm_posterior", "half", "is_hpd"]
    )
    lines = [header]
    for name, half in (("build", part.build_half), ("eval", part.eval_half)):
        for point, ld in zip(half.draws, half.log_densities):
            cells = [f"{x:.17g}" for x in point]
            cells += [f"{ld:.17g}", name, str(int(ld >= part.log_threshold))]
            lines.append(",".join(cells))
    with open(paths["draws"], "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return paths


@dataclass(frozen=True)
class VarianceRow:
    model: str
    support: str
    alpha: float
    t_per_half: int
    n_mc: int
    proxy: float
    log_proxy: float
    mc_se: float


def run_variance_sweep(
    cfg: RunConfig,
    alphas: Sequence[float] = DEFAULT_ALPHA_GRID,
    n_mc: int = 10_000,
    supports: Sequence[str] = ("ecmle", "thames"),
) -> list[VarianceRow]:
    """Second-moment proxy of one replication's supports across levels."""
    model = _build_model(cfg)
    rng = make_rng(cfg.sampler_seed(0))
    sample = model.sample_posterior(2 * cfg.t_per_half, rng)
    rows = []
    for a in alphas:
        if not (0.0 < a < 1.0):
            raise ConfigError(f"variance alpha must lie strictly in (0, 1), got {a}")
        local = replace(cfg, alpha=a)
        part = partition(sample, a)
        for support_name in supports:
            if support_name == "ecmle":
                support = build_covering(
                    part, _covering_config(local, 0), model.log_unnorm_posterior
                )
            elif support_name == "thames":
                support = ThamesRegion.from_build(part.build_half, cfg.thames_r)
            else:
                raise ConfigError(f"unknown support {support_name!r}")
            result = variance_proxy(
                support, model, cfg.t_per_half, n_mc, make_rng(local.volume_seed(0))
            )
            rows.append(
                VarianceRow(
                    model=cfg.model,
                    support=support_name,
                    alpha=a,
                    t_per_half=cfg.t_per_half,
                    n_mc=n_mc,
                    proxy=result.value,
                    log_proxy=result.log_value,
                    mc_se=result.mc_se,
                )
            )
    return rows


def write_variance_csv(path, rows: Sequence[VarianceRow]) -> None:
    lines = [f"# columns: {VARIANCE_COLUMNS}", VARIANCE_COLUMNS]
    for r in rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (r.model, r.support, r.alpha, r.t_per_half, r.n_mc, r.proxy, r.log_proxy, r.mc_se)
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_scalar(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_config_file(path) -> dict:
    """Flat INI config: a [run] section plus [model.<name>] overrides.

    Returns a dict of keyword arguments for :class:`RunConfig`; CLI flags
    override these.
    """
    import configparser

    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    known = {
        "model",
        "methods",
        "t",
        "alpha",
        "k",
        "reps",
        "seed",
        "n_vol",
        "alpha_trunc",
        "workers",
        "thames_r",
        "out",
    }
    out: dict = {}
    if parser.has_section("run"):
        run = parser["run"]
        unknown = set(run) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "model" in run:
            out["model"] = run["model"].strip()
        if "methods" in run:
            out["methods"] = tuple(
                m.strip() for m in run["methods"].split(",") if m.strip()
            )
        for key, target in (
            ("t", "t_per_half"),
            ("alpha", "alpha"),
            ("k", "k"),
            ("reps", "n_replications"),
            ("seed", "base_seed"),
            ("n_vol", "n_vol"),
            ("alpha_trunc", "alpha_trunc"),
            ("workers", "workers"),
        ):
            if key in run:
                out[target] = _parse_scalar(run[key])
        if "thames_r" in run:
            out["thames_r"] = float(run["thames_r"])
        if "out" in run:
            out["out"] = run["out"].strip()
    model_name = out.get("model")
    if model_name and parser.has_section(f"model.{model_name}"):
        out["model_params"] = {
            key: _parse_scalar(value)
            for key, value in parser[f"model.{model_name}"].items()
        }
    return out
