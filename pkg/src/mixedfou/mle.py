"""Drift estimation by prediction-error likelihood and the closed-form
information quantities.

The objective theta -> loglik(theta) is evaluated through the shared filter
engine, so one coarse scan plus a golden-section refinement runs across many
observation paths in lockstep; the single-path entry point is the same code
at batch size one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .filtering import _filter_core, _riccati_batch
from .innovation import Trajectory
from .kernel import KernelTable, ModelParams

__all__ = [
    "SearchConfig",
    "MleResult",
    "mle",
    "fisher_info",
    "fisher_decomposition",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchConfig:
    """Bracket and stopping rule for the drift search."""

    theta_lo: float = 0.05
    theta_hi: float = 20.0
    grid_points: int = 32
    tol: float = 1e-4

    def __post_init__(self):
        if not (0.0 < self.theta_lo < self.theta_hi):
            raise ValueError("search bracket must satisfy 0 < lo < hi")
        if self.grid_points < 4:
            raise ValueError("coarse grid needs at least 4 points")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class MleResult:
    """Maximizer of the drift likelihood on one path."""

    theta_hat: float
    loglik_at_hat: float
    n_evals: int
    bracket: tuple[float, float]
    standardized_error: float
    boundary: bool
    flat: bool


def _maximize_batch(
    dz: np.ndarray, table: KernelTable, mu: float, search: SearchConfig
) -> dict:
    """Two-stage argmax of the likelihood for each row of dz.

    Stage one scans a log-spaced grid with one cross-evaluation; stage two
    runs golden-section refinement on all paths in lockstep, one batched
    likelihood evaluation per iteration.  Returns per-path arrays.
    """
    dz = np.atleast_2d(np.asarray(dz, dtype=float))
    n_paths = dz.shape[0]
    grid = np.geomspace(search.theta_lo, search.theta_hi, search.grid_points)
    gammas = _riccati_batch(grid, table, mu, record=True)
    ll_grid = _filter_core(grid, gammas, dz, table, mu, pairing="cross")

    spread = ll_grid.max(axis=0) - ll_grid.min(axis=0)
    scale = np.maximum(1.0, np.abs(ll_grid).max(axis=0))
    flat = spread <= 1e-12 * scale
    k_best = np.argmax(ll_grid, axis=0)
    boundary = (k_best == 0) | (k_best == len(grid) - 1)

    lo = grid[np.maximum(k_best - 1, 0)]
    hi = grid[np.minimum(k_best + 1, len(grid) - 1)]
    best_theta = grid[k_best]
    best_ll = ll_grid[k_best, np.arange(n_paths)]

    def evaluate(thetas):
        gam = _riccati_batch(thetas, table, mu, record=True)
        return _filter_core(thetas, gam, dz, table, mu, pairing="zip")

    width = hi - lo
    iters = int(np.ceil(np.log(search.tol / max(width.max(), search.tol))
                        / np.log(_INVPHI))) if width.max() > search.tol else 0
    a, b = lo.copy(), hi.copy()
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = evaluate(c)
    fd = evaluate(d)
    for _ in range(iters):
        keep_low = fc > fd
        b = np.where(keep_low, d, b)
        a = np.where(keep_low, a, c)
        d2 = np.where(keep_low, c, d)
        f2 = np.where(keep_low, fc, fd)
        probe = np.where(keep_low, b - _INVPHI * (b - a), a + _INVPHI * (b - a))
        fp = evaluate(probe)
        c = np.where(keep_low, probe, d2)
        fc = np.where(keep_low, fp, f2)
        d = np.where(keep_low, d2, probe)
        fd = np.where(keep_low, f2, fp)
        for t_arr, f_arr in ((c, fc), (d, fd)):
            better = f_arr > best_ll
            best_theta = np.where(better, t_arr, best_theta)
            best_ll = np.where(better, f_arr, best_ll)
    n_evals = search.grid_points + 2 + iters
    return {
        "theta_hat": best_theta,
        "loglik": best_ll,
        "n_evals": np.full(n_paths, n_evals),
        "boundary": boundary,
        "flat": flat,
    }


def mle(
    trajectory: Trajectory,
    table: KernelTable,
    params: ModelParams,
    search: SearchConfig | None = None,
) -> MleResult:
    """Maximize the drift likelihood along one observation path."""
    if trajectory.n_steps != table.n_steps or not np.array_equal(
        trajectory.grid, table.grid
    ):
        raise ValueError("trajectory and kernel table use different grids")
    search = search or SearchConfig()
    out = _maximize_batch(
        trajectory.dz_obs[None, :], table, params.mu, search
    )
    theta_hat = float(out["theta_hat"][0])
    return MleResult(
        theta_hat=theta_hat,
        loglik_at_hat=float(out["loglik"][0]),
        n_evals=int(out["n_evals"][0]),
        bracket=(search.theta_lo, search.theta_hi),
        standardized_error=math.sqrt(table.horizon) * (theta_hat - params.theta),
        boundary=bool(out["boundary"][0]),
        flat=bool(out["flat"][0]),
    )


def fisher_info(theta: float, mu: float) -> float:
    """Asymptotic information for the drift, free of the roughness index.

    I(theta) = 1/(2 theta) - 2 theta / (alpha (alpha + theta))
               + theta^2 / (2 alpha^3),   alpha = sqrt(theta^2 + mu^2).
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    alpha = math.hypot(theta, mu)
    return (
        1.0 / (2.0 * theta)
        - 2.0 * theta / (alpha * (alpha + theta))
        + theta * theta / (2.0 * alpha**3)
    )


def fisher_decomposition(theta: float, mu: float) -> tuple[float, float]:
    """Two-term information split (drift part, observation part).

    Returned for diagnostics only.  The terms sum to a DIFFERENT value than
    fisher_info at generic parameters; the discrepancy is real and must
    stay visible, so callers must never substitute this sum for
    fisher_info.
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    alpha = math.hypot(theta, mu)
    g = 1.0 / (alpha + theta)
    g_prime = -1.0 / (alpha * (alpha + theta))
    drift_part = mu * mu * g * g / (2.0 * theta)
    obs_part = mu**4 * g_prime * g_prime / (2.0 * alpha)
    return drift_part, obs_part
