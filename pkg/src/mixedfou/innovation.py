"""Innovation-form state and observation dynamics.

The estimation problem is driven entirely through a two-component state
zeta = (zeta1, zeta2) and a scalar observation Z^O, both adapted to the
martingale clock of the kernel table:

    d zeta = -(theta/2) A(t) zeta d<M> + b(t) dM,
    d Z^O  =  (mu/2) l(t)' zeta d<N> + dN,

with M, N independent copies of the fundamental martingale and the rank-one
coefficient family A = b l', b = (1, psi)', l = (psi, 1)'.  Everything an
estimator may consume is a functional of (zeta, Z^O); raw fractional paths
never appear.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteStateError
from .kernel import KernelTable, ModelParams

__all__ = [
    "Coefficients",
    "Trajectory",
    "coefficients_at",
    "simulate",
    "q_process",
    "save_trajectory",
]


@dataclass(frozen=True)
class Coefficients:
    """The coefficient family evaluated at one grid time."""

    psi: float
    a_mat: np.ndarray
    b_vec: np.ndarray
    l_vec: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        for arr in (self.a_mat, self.b_vec, self.l_vec, self.delta):
            arr.setflags(write=False)


@dataclass(frozen=True)
class Trajectory:
    """One simulated path of (zeta, Z^O) with the increments that made it."""

    grid: np.ndarray
    zeta: np.ndarray
    z_obs: np.ndarray
    d_mart: np.ndarray
    d_nois: np.ndarray
    seed: int

    def __post_init__(self):
        for arr in (self.grid, self.zeta, self.z_obs, self.d_mart, self.d_nois):
            arr.setflags(write=False)

    @property
    def n_steps(self) -> int:
        return len(self.grid) - 1

    @property
    def dz_obs(self) -> np.ndarray:
        return np.diff(self.z_obs)


def coefficients_at(table: KernelTable, i: int) -> Coefficients:
    """A(t_i), b(t_i), l(t_i) and the scaling Delta(t_i) from psi(t_i)."""
    if not (0 <= i <= table.n_steps):
        raise ValueError(f"grid index {i} out of range 0..{table.n_steps}")
    psi = float(table.psi[i])
    b = np.array([1.0, psi])
    l = np.array([psi, 1.0])
    a = np.outer(b, l)
    delta = np.diag([np.sqrt(psi), 1.0 / np.sqrt(psi)])
    return Coefficients(psi, a, b, l, delta)


def simulate(params: ModelParams, table: KernelTable, seed: int) -> Trajectory:
    """Euler path of (zeta, Z^O) in bracket time, deterministic given seed.

    Both state components are driven by the same scalar martingale
    increment, so the update is computed once and scaled: this makes the
    identity d(zeta2) = psi * d(zeta1) hold exactly at every step, not just
    to integration accuracy.
    """
    if not table.matches(params):
        raise ValueError(
            "kernel table was built for different (hurst, horizon, n_steps) "
            "than the requested parameters"
        )
    n = table.n_steps
    dbr = table.dbracket
    sd = np.sqrt(dbr)
    rng = np.random.default_rng(seed)
    d_mart = rng.standard_normal(n) * sd
    d_nois = rng.standard_normal(n) * sd

    psi = table.psi
    half_theta = 0.5 * params.theta
    half_mu = 0.5 * params.mu
    zeta = np.zeros((n + 1, 2))
    z_obs = np.zeros(n + 1)
    z1 = 0.0
    z2 = 0.0
    z = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            lz = psi[i] * z1 + z2
            dz1 = -half_theta * lz * dbr[i] + d_mart[i]
            z = z + half_mu * lz * dbr[i] + d_nois[i]
            z1 += dz1
            z2 += psi[i] * dz1
            zeta[i + 1, 0] = z1
            zeta[i + 1, 1] = z2
            z_obs[i + 1] = z
            if not (np.isfinite(z1) and np.isfinite(z2) and np.isfinite(z)):
                raise NonFiniteStateError("simulated state left the finite range", i)
    return Trajectory(table.grid, zeta, z_obs, d_mart, d_nois, int(seed))


def q_process(trajectory: Trajectory, table: KernelTable) -> np.ndarray:
    """Q_i = (zeta2_i + psi_i * zeta1_i) / 2.

    This is the closed form of Q_t = 1/2 int_0^t (psi(s) + psi(t)) d zeta1_s
    for the scheme's state, whose second component is exactly the running
    psi-weighted integral of the first.
    """
    if trajectory.n_steps != table.n_steps or not np.array_equal(
        trajectory.grid, table.grid
    ):
        raise ValueError("trajectory and kernel table use different grids")
    return 0.5 * (trajectory.zeta[:, 1] + table.psi * trajectory.zeta[:, 0])


def save_trajectory(trajectory: Trajectory, path: str) -> str:
    """Dump a path as CSV with columns (i, t, zeta1, zeta2, z_obs)."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    grid = trajectory.grid.tolist()
    z1 = trajectory.zeta[:, 0].tolist()
    z2 = trajectory.zeta[:, 1].tolist()
    zo = trajectory.z_obs.tolist()
    with open(path, "w", newline="\n") as fh:
        fh.write("i,t,zeta1,zeta2,z_obs\n")
        for i in range(trajectory.n_steps + 1):
            fh.write(f"{i},{grid[i]!r},{z1[i]!r},{z2[i]!r},{zo[i]!r}\n")
    return path
