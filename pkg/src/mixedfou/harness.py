"""Seeded Monte Carlo replication of the drift-estimation experiment.

One kernel table is built (or loaded from a cache) per run and shared by
every replication; per-rep seeds are derived from (master_seed, rep index)
so results cannot depend on execution order; the candidate scan runs the
replications of a chunk through the batched filter engine in lockstep.
The summary statistics are recomputable from reps.csv alone.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import ExperimentError, NumericalError
from .innovation import simulate
from .kernel import (
    KernelTable,
    ModelParams,
    load_kernel_table,
    save_kernel_table,
    solve_kernel,
)
from .mle import SearchConfig, fisher_info, _maximize_batch

__all__ = [
    "ExperimentConfig",
    "ReplicationRecord",
    "ExperimentSummary",
    "run_experiment",
    "ks_normal",
    "kolmogorov_pvalue",
    "load_kernel_cached",
    "write_reps_csv",
    "read_reps_csv",
]

REPS_HEADER = "rep,seed,theta_hat,std_error,loglik,millis"

# lockstep chunk size: bounds the (paths x grid x steps) working set
_CHUNK = 256


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one replication study depends on."""

    model: ModelParams = ModelParams(2.0, 2.0, 0.75, 100.0, 4096)
    n_reps: int = 300
    master_seed: int = 7
    search: SearchConfig = field(default_factory=SearchConfig)
    out_dir: str = "."
    cache_dir: str | None = None
    write_files: bool = True

    def __post_init__(self):
        if self.n_reps < 1:
            raise ValueError("n_reps must be at least 1")
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must fit in an unsigned 64-bit word")


@dataclass(frozen=True)
class ReplicationRecord:
    """Outcome of one replication, as written to reps.csv."""

    rep: int
    seed: int
    theta_hat: float
    std_error: float
    loglik: float
    millis: int


@dataclass(frozen=True)
class ExperimentSummary:
    """Aggregate view of a run; serialized as summary.json."""

    n_reps: int
    n_ok: int
    n_fail: int
    mean: float | None
    var: float | None
    sd: float | None
    ks_stat: float | None
    ks_p: float | None
    fisher: float
    inv_fisher: float
    failed: tuple[tuple[int, str], ...]
    params: dict

    def as_dict(self) -> dict:
        out = {
            "n_reps": self.n_reps,
            "n_ok": self.n_ok,
            "n_fail": self.n_fail,
            "mean": self.mean,
            "var": self.var,
            "sd": self.sd,
            "ks_stat": self.ks_stat,
            "ks_p": self.ks_p,
            "fisher": self.fisher,
            "inv_fisher": self.inv_fisher,
            "failed": [list(item) for item in self.failed],
            "params": dict(self.params),
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def rep_seed(master_seed: int, rep: int) -> int:
    """Derived 64-bit seed for one replication.

    Depends only on (master_seed, rep), never on shared RNG state, so any
    subset of replications can be reproduced in any order.
    """
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(rep,))
    return int(ss.generate_state(1, np.uint64)[0])


def kolmogorov_pvalue(lam: float) -> float:
    """Asymptotic tail P(K > lam) of the Kolmogorov distribution.

    The alternating series converges fast for moderate lam; near zero the
    Jacobi-transformed series is used instead because the alternating form
    cancels catastrophically there.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 0.6:
        total = sum(
            math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * lam * lam))
            for k in range(1, 20)
        )
        p = 1.0 - math.sqrt(2.0 * math.pi) / lam * total
    else:
        total = sum(
            (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
            for k in range(1, 101)
        )
        p = 2.0 * total
    return float(min(max(p, 0.0), 1.0))


def ks_normal(sample) -> tuple[float, float]:
    """Sup-distance of the empirical CDF from N(0, 1) and its p-value."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("KS statistic needs at least one observation")
    cdf = ndtr(x)
    step_hi = np.arange(1, n + 1) / n
    step_lo = np.arange(0, n) / n
    stat = float(max((step_hi - cdf).max(), (cdf - step_lo).max()))
    return stat, kolmogorov_pvalue(math.sqrt(n) * stat)


def load_kernel_cached(model: ModelParams, cache_dir: str | None) -> KernelTable:
    """Solve the kernel table, or reuse a cached solve for the same grid."""
    if cache_dir is None:
        return solve_kernel(model)
    try:
        return load_kernel_table(
            cache_dir, model.hurst, model.horizon, model.n_steps
        )
    except FileNotFoundError:
        table = solve_kernel(model)
        save_kernel_table(table, cache_dir)
        return table


def write_reps_csv(records, path) -> None:
    """Write replication rows; float fields use shortest round-trip repr."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(REPS_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.rep},{r.seed},{r.theta_hat!r},{r.std_error!r},"
                f"{r.loglik!r},{r.millis}\n"
            )


def read_reps_csv(path) -> list[ReplicationRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != REPS_HEADER:
            raise ValueError(
                f"unexpected reps.csv header {header!r}; want {REPS_HEADER!r}"
            )
        records = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rep, seed, theta_hat, err, ll, millis = line.split(",")
            records.append(
                ReplicationRecord(
                    rep=int(rep),
                    seed=int(seed),
                    theta_hat=float(theta_hat),
                    std_error=float(err),
                    loglik=float(ll),
                    millis=int(millis),
                )
            )
    return records


def _params_echo(config: ExperimentConfig) -> dict:
    """Run settings echoed into the summary, defaults included."""
    m, s = config.model, config.search
    return {
        "theta": m.theta,
        "mu": m.mu,
        "hurst": m.hurst,
        "horizon": m.horizon,
        "n_steps": m.n_steps,
        "n_reps": config.n_reps,
        "master_seed": config.master_seed,
        "theta_lo": s.theta_lo,
        "theta_hi": s.theta_hi,
        "grid_points": s.grid_points,
        "tol": s.tol,
    }


def summarize(records, failures, config: ExperimentConfig) -> ExperimentSummary:
    """Aggregate statistics of the standardized errors."""
    errors = np.array([r.std_error for r in records])
    info = fisher_info(config.model.theta, config.model.mu)
    mean = var = sd = ks_stat = ks_p = None
    if len(errors) >= 1:
        mean = float(errors.mean())
        ks_stat, ks_p = ks_normal(errors * math.sqrt(info))
    if len(errors) >= 2:
        var = float(errors.var(ddof=1))
        sd = math.sqrt(var)
    return ExperimentSummary(
        n_reps=config.n_reps,
        n_ok=len(records),
        n_fail=len(failures),
        mean=mean,
        var=var,
        sd=sd,
        ks_stat=ks_stat,
        ks_p=ks_p,
        fisher=info,
        inv_fisher=1.0 / info,
        failed=tuple((rep, reason) for rep, reason in failures),
        params=_params_echo(config),
    )


def run_experiment(
    config: ExperimentConfig,
) -> tuple[list[ReplicationRecord], ExperimentSummary]:
    """Replicate simulate-then-estimate n_reps times and aggregate.

    Failed replications (non-finite simulation, bracket-edge or flat
    search) are skipped and reported in the summary; the run aborts when
    more than 10% fail.  When write_files is set, reps.csv and
    summary.json land in out_dir.  The millis column is measured wall
    time (simulation plus an equal share of the chunk's batched search),
    so it is the one field that varies between otherwise identical runs.
    """
    model = config.model
    table = load_kernel_cached(model, config.cache_dir)
    sqrt_t = math.sqrt(model.horizon)
    records: list[ReplicationRecord] = []
    failures: list[tuple[int, str]] = []

    for start in range(0, config.n_reps, _CHUNK):
        chunk = range(start, min(start + _CHUNK, config.n_reps))
        sims = []
        for rep in chunk:
            seed = rep_seed(config.master_seed, rep)
            tick = time.perf_counter()
            try:
                traj = simulate(model, table, seed)
            except NumericalError as exc:
                failures.append((rep, f"simulate: {exc}"))
                continue
            sims.append((rep, seed, traj.dz_obs, time.perf_counter() - tick))
        if not sims:
            continue
        dz = np.stack([row[2] for row in sims])
        tick = time.perf_counter()
        batch = _maximize_batch(dz, table, model.mu, config.search)
        share = (time.perf_counter() - tick) / len(sims)
        for k, (rep, seed, _, sim_secs) in enumerate(sims):
            theta_hat = float(batch["theta_hat"][k])
            loglik = float(batch["loglik"][k])
            err = sqrt_t * (theta_hat - model.theta)
            if bool(batch["boundary"][k]) or bool(batch["flat"][k]):
                failures.append((rep, "search hit the bracket edge or a flat objective"))
                continue
            if not (math.isfinite(err) and math.isfinite(loglik)):
                failures.append((rep, "non-finite estimate"))
                continue
            records.append(
                ReplicationRecord(
                    rep=rep,
                    seed=seed,
                    theta_hat=theta_hat,
                    std_error=err,
                    loglik=loglik,
                    millis=int(round(1000.0 * (sim_secs + share))),
                )
            )

    if len(failures) > 0.10 * config.n_reps:
        raise ExperimentError(
            f"{len(failures)} of {config.n_reps} replications failed; "
            "the summary would not be trustworthy"
        )
    summary = summarize(records, failures, config)
    if config.write_files:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_reps_csv(records, out / "reps.csv")
        with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(summary.to_json())
    return records, summary
