"""Conditional-mean filter and Riccati covariance for the observed phase.

The filter for the state zeta given the observation Z^O is linear with a
rank-one coefficient family, so the whole recursion collapses to scalar
arithmetic on (l' pi) and the three distinct entries of the symmetric gain
matrix.  The covariance path depends on the candidate drift but not on the
data, which is why it is computed once per theta and shared across paths.

The engine functions at the bottom are vectorized over both candidate
thetas and observation paths; the public wrappers run them at size one.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteStateError
from .innovation import Trajectory
from .kernel import KernelTable

__all__ = [
    "FilterRun",
    "run_filter",
    "riccati_path",
    "rescaled_gamma",
    "stationary_gain",
    "save_filter_run",
]


@dataclass(frozen=True)
class FilterRun:
    """Filter output along one path for one candidate drift."""

    theta_candidate: float
    pi: np.ndarray
    gamma: np.ndarray
    innovations: np.ndarray
    loglik: float

    def __post_init__(self):
        for arr in (self.pi, self.gamma, self.innovations):
            arr.setflags(write=False)


def _psd_clip(g11, g12, g22):
    """Project symmetric 2x2 matrices (entrywise arrays) onto the PSD cone.

    Closed-form eigenvalue clip; the common all-PSD case returns the inputs
    unchanged.
    """
    m = 0.5 * (g11 + g22)
    d = 0.5 * (g11 - g22)
    r = np.hypot(d, g12)
    lo = m - r
    if np.all(lo >= 0.0):
        return g11, g12, g22
    hi = m + r
    # Rank-one reconstruction with the negative eigenvalue set to zero.
    safe_r = np.where(r > 0.0, r, 1.0)
    p11 = hi * (r + d) / (2.0 * safe_r)
    p22 = hi * (r - d) / (2.0 * safe_r)
    p12 = hi * g12 / (2.0 * safe_r)
    neg = lo < 0.0
    dead = neg & (hi <= 0.0)
    g11 = np.where(neg, np.where(dead, 0.0, p11), g11)
    g12 = np.where(neg, np.where(dead, 0.0, p12), g12)
    g22 = np.where(neg, np.where(dead, 0.0, p22), g22)
    return g11, g12, g22


def _riccati_batch(
    thetas: np.ndarray, table: KernelTable, mu: float, record: bool = False
) -> np.ndarray:
    """Covariance path entries for each candidate theta.

    Returns shape (K, 3) with the terminal (g11, g12, g22) or, when
    recording, (K, n_steps + 1, 3) with the whole path.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if np.any(thetas < 0.0) or not np.all(np.isfinite(thetas)):
        raise ValueError("candidate drift values must be finite and non-negative")
    n = table.n_steps
    psi = table.psi
    dbr = table.dbracket
    qmu = 0.25 * mu * mu
    k = len(thetas)
    g11 = np.zeros(k)
    g12 = np.zeros(k)
    g22 = np.zeros(k)
    path = np.zeros((k, n + 1, 3)) if record else None
    for i in range(n):
        p = psi[i]
        h = dbr[i]
        gl1 = g11 * p + g12
        gl2 = g12 * p + g22
        g11 = g11 + (1.0 - thetas * gl1 - qmu * gl1 * gl1) * h
        g12 = g12 + (p - 0.5 * thetas * (gl2 + p * gl1) - qmu * gl1 * gl2) * h
        g22 = g22 + (p * p - thetas * p * gl2 - qmu * gl2 * gl2) * h
        g11, g12, g22 = _psd_clip(g11, g12, g22)
        if not np.all(np.isfinite(g11 + g12 + g22)):
            raise NonFiniteStateError("covariance recursion left the finite range", i)
        if record:
            path[:, i + 1, 0] = g11
            path[:, i + 1, 1] = g12
            path[:, i + 1, 2] = g22
    if record:
        return path
    return np.stack([g11, g12, g22], axis=-1)


def _filter_core(
    thetas: np.ndarray,
    gammas: np.ndarray,
    dz: np.ndarray,
    table: KernelTable,
    mu: float,
    pairing: str = "cross",
    record: bool = False,
):
    """Log-likelihood engine, vectorized over candidates and paths.

    pairing "cross" evaluates every theta on every path: thetas (K,),
    gammas (K, n+1, 3), dz (P, n) -> loglik (K, P).  pairing "zip" pairs
    them elementwise: thetas (P,), gammas (P, n+1, 3), dz (P, n) ->
    loglik (P,).  Recording the state path is only supported for a single
    (theta, path) pair.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    dz = np.atleast_2d(np.asarray(dz, dtype=float))
    n = table.n_steps
    if dz.shape[1] != n:
        raise ValueError("observation increments do not match the table grid")
    if gammas.shape != (len(thetas), n + 1, 3):
        raise ValueError("covariance paths do not match the candidate set")
    if pairing == "cross":
        th = thetas[:, None]
        gam = gammas[:, :, :]
        data = dz[None, :, :]
        shape = (len(thetas), dz.shape[0])
        gexp = (slice(None), None)
    elif pairing == "zip":
        if len(thetas) != dz.shape[0]:
            raise ValueError("zip pairing needs one candidate per path")
        th = thetas
        gam = gammas
        data = dz
        shape = (dz.shape[0],)
        gexp = (slice(None),)
    else:
        raise ValueError(f"unknown pairing {pairing!r}")
    if record and shape != (1, 1) and shape != (1,):
        raise ValueError("recording is only supported for a single pair")

    psi = table.psi
    dbr = table.dbracket
    half_mu = 0.5 * mu
    q_mu = 0.125 * mu * mu
    pi1 = np.zeros(shape)
    pi2 = np.zeros(shape)
    ll = np.zeros(shape)
    pi_path = np.zeros((n + 1, 2)) if record else None
    innov = np.zeros(n) if record else None
    for i in range(n):
        p = psi[i]
        h = dbr[i]
        lpi = p * pi1 + pi2
        step_dz = data[..., i]
        dnu = step_dz - half_mu * lpi * h
        ll = ll + half_mu * lpi * step_dz - q_mu * lpi * lpi * h
        gl1 = gam[(*gexp, i, 0)] * p + gam[(*gexp, i, 1)]
        gl2 = gam[(*gexp, i, 1)] * p + gam[(*gexp, i, 2)]
        drift = 0.5 * th * lpi * h
        pi1 = pi1 - drift + half_mu * gl1 * dnu
        pi2 = pi2 - p * drift + half_mu * gl2 * dnu
        if not np.all(np.isfinite(lpi)):
            raise NonFiniteStateError("filter state left the finite range", i)
        if record:
            pi_path[i + 1, 0] = pi1.ravel()[0]
            pi_path[i + 1, 1] = pi2.ravel()[0]
            innov[i] = dnu.ravel()[0]
    if record:
        return ll, pi_path, innov
    return ll


def riccati_path(theta: float, table: KernelTable, mu: float) -> np.ndarray:
    """Full covariance path (n_steps + 1, 2, 2) for one candidate drift."""
    flat = _riccati_batch(np.array([float(theta)]), table, mu, record=True)[0]
    out = np.empty((table.n_steps + 1, 2, 2))
    out[:, 0, 0] = flat[:, 0]
    out[:, 0, 1] = flat[:, 1]
    out[:, 1, 0] = flat[:, 1]
    out[:, 1, 1] = flat[:, 2]
    return out


def run_filter(
    theta: float, trajectory: Trajectory, table: KernelTable, mu: float
) -> FilterRun:
    """Filter one path under candidate drift theta and observation gain mu."""
    if trajectory.n_steps != table.n_steps or not np.array_equal(
        trajectory.grid, table.grid
    ):
        raise ValueError("trajectory and kernel table use different grids")
    theta = float(theta)
    if not theta > 0.0:
        raise ValueError("candidate drift must be positive")
    gammas = _riccati_batch(np.array([theta]), table, mu, record=True)
    dz = trajectory.dz_obs[None, :]
    ll, pi_path, innov = _filter_core(
        np.array([theta]), gammas, dz, table, mu, pairing="cross", record=True
    )
    gamma = np.empty((table.n_steps + 1, 2, 2))
    gamma[:, 0, 0] = gammas[0, :, 0]
    gamma[:, 0, 1] = gammas[0, :, 1]
    gamma[:, 1, 0] = gammas[0, :, 1]
    gamma[:, 1, 1] = gammas[0, :, 2]
    return FilterRun(theta, pi_path, gamma, innov, float(ll[0, 0]))


def rescaled_gamma(run: FilterRun, table: KernelTable, i: int) -> np.ndarray:
    """Delta(t_i) Gamma_i Delta(t_i), the scale-free form of the gain."""
    if not (0 <= i <= table.n_steps):
        raise ValueError(f"grid index {i} out of range 0..{table.n_steps}")
    p = float(table.psi[i])
    g = run.gamma[i]
    return np.array(
        [
            [p * g[0, 0], g[0, 1]],
            [g[0, 1], g[1, 1] / p],
        ]
    )


def stationary_gain(theta: float, mu: float) -> float:
    """Positive root g of mu^2 g^2 + 2 theta g - 1 = 0.

    Evaluated as 1 / (alpha + theta) with alpha = sqrt(theta^2 + mu^2),
    which equals (alpha - theta) / mu^2 without the cancellation and covers
    the mu = 0 limit 1 / (2 theta).
    """
    if theta == 0.0 and mu == 0.0:
        raise ValueError("stationary gain needs theta or mu nonzero")
    if theta < 0.0:
        raise ValueError("theta must be non-negative")
    return 1.0 / (np.hypot(theta, mu) + theta)


def save_filter_run(run: FilterRun, table: KernelTable, path: str) -> str:
    """Dump a filter run as CSV (i, t, pi1, pi2, g11, g12, g22, innov).

    Row i holds the state at t_i; its innov entry is the innovation over
    (t_{i-1}, t_i], so row zero stores 0.0 there.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    grid = table.grid.tolist()
    pi1 = run.pi[:, 0].tolist()
    pi2 = run.pi[:, 1].tolist()
    g11 = run.gamma[:, 0, 0].tolist()
    g12 = run.gamma[:, 0, 1].tolist()
    g22 = run.gamma[:, 1, 1].tolist()
    innov = np.concatenate([[0.0], run.innovations]).tolist()
    with open(path, "w", newline="\n") as fh:
        fh.write("i,t,pi1,pi2,g11,g12,g22,innov\n")
        for i in range(table.n_steps + 1):
            fh.write(
                f"{i},{grid[i]!r},{pi1[i]!r},{pi2[i]!r},"
                f"{g11[i]!r},{g12[i]!r},{g22[i]!r},{innov[i]!r}\n"
            )
    return path
