"""Fundamental-martingale kernel tables for mixed fractional noise.

The driving noise is V = B + B^H with B a standard Brownian motion and B^H
an independent fractional Brownian motion, H in [1/2, 1).  There is a
deterministic kernel g(s, t) such that M_t = int_0^t g(s, t) dV_s is a
martingale with bracket <M>_t = int_0^t g(s, t) ds.  For H > 1/2 the kernel
solves, for each fixed t,

    g(s, t) + H(2H - 1) * int_0^t g(r, t) |s - r|^(2H-2) dr = 1,  0 <= s <= t,

and for H = 1/2 it collapses to the constant 1/2 with <M>_t = t/2.

Everything downstream consumes the table produced here: the grid, the
bracket values, and psi(t) = dt/d<M>_t, which measures how the fractional
component starves the martingale clock (psi grows like t^(2H-1)).

Discretization
--------------
Uniform grid t_i = i*dt.  For each row t_i the kernel is represented as a
piecewise constant function on cells centred at the grid points (half cells
at both ends), the weakly singular integral is integrated exactly against
that representation (product integration), and the equation is enforced in
cell-averaged form: the average of the left-hand side over each cell equals
one.  Cell averaging rather than point collocation is what makes the
residual integrate to zero over every cell, which in turn gives the
martingale covariance check first-order convergence instead of order 2H-1.
The resulting matrix is symmetric Toeplitz up to a rank-four boundary
correction, so one incremental Levinson sweep produces every row of the
table in O(n^2) total instead of O(n^4) for dense row-by-row solves.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import KernelSolveError

__all__ = [
    "ModelParams",
    "KernelTable",
    "solve_kernel",
    "psi_exponent",
    "martingale_covariance_check",
    "covariance_profile",
    "save_kernel_table",
    "load_kernel_table",
    "kernel_cache_name",
]


@dataclass(frozen=True)
class ModelParams:
    """Static description of one model instance.

    theta is the mean-reversion rate of the hidden state, mu the observation
    gain, hurst the Hurst index shared by both mixed noises, horizon the time
    span [0, T], and n_steps the number of uniform grid cells.  theta = 0 is
    accepted here so that drift-free reductions can be simulated; operations
    that require theta > 0 (filtering, estimation) enforce it themselves.
    """

    theta: float
    mu: float
    hurst: float
    horizon: float
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.theta) or self.theta < 0:
            raise ValueError(f"theta must be finite and >= 0, got {self.theta}")
        if not np.isfinite(self.mu) or self.mu < 0:
            raise ValueError(f"mu must be finite and >= 0, got {self.mu}")
        if not (0.5 <= self.hurst < 1.0):
            raise ValueError(f"hurst must lie in [0.5, 1), got {self.hurst}")
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError(f"n_steps must be an integer >= 2, got {self.n_steps}")

    @property
    def alpha(self) -> float:
        """sqrt(theta^2 + mu^2), the rate constant of the stationary filter."""
        return float(np.hypot(self.theta, self.mu))

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps


@dataclass(frozen=True)
class KernelTable:
    """Kernel rows, bracket, and psi on a uniform grid. Immutable.

    g[i] holds g(t_j, t_i) for j = 0..i, so the table is lower triangular.
    bracket[i] approximates <M>_{t_i} and psi[i] approximates dt/d<M> at t_i.
    """

    hurst: float
    horizon: float
    grid: np.ndarray
    g: tuple
    bracket: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        for arr in (self.grid, self.bracket, self.psi):
            arr.setflags(write=False)
        for row in self.g:
            row.setflags(write=False)

    @property
    def n_steps(self) -> int:
        return len(self.grid) - 1

    @property
    def dt(self) -> float:
        return self.grid[1] - self.grid[0]

    @cached_property
    def dbracket(self) -> np.ndarray:
        """Per-cell bracket increments d<M>_i = bracket[i+1] - bracket[i]."""
        out = np.diff(self.bracket)
        out.setflags(write=False)
        return out

    def matches(self, params: ModelParams) -> bool:
        return (
            self.hurst == params.hurst
            and self.horizon == params.horizon
            and self.n_steps == params.n_steps
        )


def _cell_weights(hurst: float, dt: float, n: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Exact double cell integrals of the convolution weight.

    The double integral of H(2H-1)|u - v|^(2H-2) over a pair of intervals is
    a four-point combination of P(x) = x^(2H)/2 evaluated at breakpoint
    distances, and every breakpoint sits on the half-step lattice.  Returns
    (col, d0, corner, pw):

    * col[m]: integral over two full cells whose centres are m steps apart
      (the Toeplitz part of the operator),
    * d0[k]: correction when the left cell of the pair is replaced by the
      boundary half cell [0, dt/2], full cell k steps away,
    * corner: correction for the diagonal entry of a boundary half cell,
      including its halved width on the identity part,
    * pw: the P table itself, P[m] = (m*dt/2)^(2H)/2 for m = 0..2n+2.
    """
    hh = 2.0 * hurst
    half = 0.5 * dt
    m = np.arange(2 * n + 3, dtype=float)
    pw = 0.5 * (m * half) ** hh
    k = np.arange(n + 1)
    col = np.empty(n + 1)
    col[0] = 2.0 * pw[2]
    col[1:] = pw[2 * k[1:] + 2] + pw[2 * k[1:] - 2] - 2.0 * pw[2 * k[1:]]
    d0 = pw[2 * k + 1] - pw[np.abs(2 * k - 1)] - pw[2 * k + 2] + pw[2 * k]
    corner = -half + 2.0 * pw[1] - 2.0 * pw[2]
    return col, d0, corner, pw


def solve_kernel(params: ModelParams) -> KernelTable:
    """Build the kernel table for every grid row of [0, horizon].

    For H = 1/2 the analytic solution is used.  For H > 1/2 each row i
    requires the solution of an (i+1) x (i+1) linear system; all rows are
    produced in one incremental Levinson sweep over the shared Toeplitz
    operator, with a rank-two Woodbury update accounting for the half cells
    at the interval ends.  Raises KernelSolveError if the discretized
    operator loses positive definiteness.
    """
    n = int(params.n_steps)
    dt = params.dt
    grid = np.linspace(0.0, params.horizon, n + 1)

    if params.hurst == 0.5:
        g_rows = tuple(np.full(i + 1, 0.5) for i in range(n + 1))
        bracket = 0.5 * grid.copy()
        psi = np.full(n + 1, 2.0)
        return KernelTable(params.hurst, params.horizon, grid, g_rows, bracket, psi)

    half = 0.5 * dt
    col, d0, corner, pw = _cell_weights(params.hurst, dt, n)
    r0 = dt + col[0]
    r = col / r0
    r[0] = 1.0

    g_rows: list[np.ndarray] = [np.array([1.0])]
    bracket = np.zeros(n + 1)

    # Levinson state for the normalized Toeplitz part, grown one size per
    # row: refl is the reflection vector, x1/xd/xe track the right-hand
    # sides 1, d0, and e_0 that every boundary correction is built from.
    refl = np.empty(n + 1)
    x1 = np.empty(n + 1)
    xd = np.empty(n + 1)
    xe = np.empty(n + 1)
    x1[0] = 1.0 / r0
    xd[0] = d0[0] / r0
    xe[0] = 1.0 / r0
    refl[0] = -r[1]
    err = 1.0 - r[1] * r[1]

    eye4 = np.eye(4)
    for s in range(1, n + 1):
        if not np.isfinite(err) or err <= 1e-14:
            raise KernelSolveError(
                f"discretized kernel operator is numerically singular at size {s}"
            )
        rs = r[1 : s + 1]
        mu1 = (1.0 / r0 - np.dot(rs, x1[s - 1 :: -1])) / err
        mud = (d0[s] / r0 - np.dot(rs, xd[s - 1 :: -1])) / err
        mue = (0.0 - np.dot(rs, xe[s - 1 :: -1])) / err
        x1[:s] += mu1 * refl[s - 1 :: -1]
        x1[s] = mu1
        xd[:s] += mud * refl[s - 1 :: -1]
        xd[s] = mud
        xe[:s] += mue * refl[s - 1 :: -1]
        xe[s] = mue
        if s < n:
            alpha = -(r[s + 1] + np.dot(rs, refl[s - 1 :: -1])) / err
            refl[:s] += alpha * refl[s - 1 :: -1]
            refl[s] = alpha
            err *= 1.0 - alpha * alpha

        # Rank-four boundary correction: rows and columns 0 and s of the
        # true matrix differ from the Toeplitz part because the end cells
        # are half width.  Woodbury with a 4x4 capacitance system.
        z1 = xe[: s + 1]
        z2 = z1[::-1]
        z3 = xd[: s + 1] - d0[0] * z1 - d0[s] * z2
        z4 = z3[::-1]
        y = dt * x1[: s + 1] - half * (z1 + z2)

        q0 = d0[: s + 1].copy()
        q0[0] = corner
        q0[s] = 3.0 * pw[2 * s] - 2.0 * pw[2 * s - 1] - pw[2 * s + 2]

        m11 = np.dot(q0, z1)
        m12 = np.dot(q0, z2)
        m13 = np.dot(q0, z3)
        m14 = np.dot(q0, z4)
        cap = eye4 + np.array(
            [
                [m11, m12, m13, m14],
                [m12, m11, m14, m13],
                [z1[0], z2[0], z3[0], z4[0]],
                [z1[s], z2[s], z3[s], z4[s]],
            ]
        )
        rhs4 = np.array([np.dot(q0, y), np.dot(q0, y[::-1]), y[0], y[s]])
        try:
            coef = np.linalg.solve(cap, rhs4)
        except np.linalg.LinAlgError as exc:
            raise KernelSolveError(f"boundary correction is singular for row {s}") from exc
        row = y - coef[0] * z1 - coef[1] * z2 - coef[2] * z3 - coef[3] * z4
        if not np.all(np.isfinite(row)):
            raise KernelSolveError(f"kernel row {s} is not finite")
        g_rows.append(row)
        bracket[s] = dt * (row.sum() - 0.5 * (row[0] + row[s]))

    if np.any(np.diff(bracket) <= 0):
        raise KernelSolveError("bracket is not strictly increasing")

    psi = np.empty(n + 1)
    psi[1:n] = 2.0 * dt / (bracket[2:] - bracket[:-2])
    psi[0] = dt / (bracket[1] - bracket[0])
    psi[n] = dt / (bracket[n] - bracket[n - 1])

    return KernelTable(params.hurst, params.horizon, grid, tuple(g_rows), bracket, psi)


def psi_exponent(table: KernelTable, t_lo: float, t_hi: float) -> float:
    """Least-squares slope of log psi against log t on the window [t_lo, t_hi].

    For H > 1/2 the slope approaches 2H - 1 on late windows; for H = 1/2 it
    is zero.  Requires at least ten grid points strictly inside (0, T].
    """
    if not (0 < t_lo < t_hi <= table.horizon):
        raise ValueError(f"window [{t_lo}, {t_hi}] must satisfy 0 < lo < hi <= horizon")
    mask = (table.grid >= t_lo) & (table.grid <= t_hi) & (table.grid > 0)
    if mask.sum() < 10:
        raise ValueError("window contains fewer than 10 grid points")
    x = np.log(table.grid[mask])
    yv = np.log(table.psi[mask])
    xc = x - x.mean()
    denom = np.dot(xc, xc)
    return float(np.dot(xc, yv - yv.mean()) / denom)


def _half_unit_cells(row: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell endpoints of row `row`'s partition, in units of dt/2 (integers)."""
    j = np.arange(row + 1)
    a = np.where(j == 0, 0, 2 * j - 1)
    b = np.where(j == row, 2 * row, 2 * j + 1)
    return a, b


def _power_table(table: KernelTable, n: int) -> np.ndarray:
    """P[m] = (m*dt/2)^(2H) / 2 for m = 0..2n, the exact double cell integral
    of the scaled fractional kernel expressed through breakpoint distances."""
    m = np.arange(2 * n + 1, dtype=float)
    return 0.5 * (0.5 * table.dt * m) ** (2.0 * table.hurst)


def _overlap_vector(row: int, dt: float) -> np.ndarray:
    ov = np.full(row + 1, dt)
    ov[0] = 0.5 * dt
    ov[row] = 0.5 * dt
    return ov


def martingale_covariance_check(table: KernelTable, s_index: int, t_index: int) -> float:
    """Double-quadrature value of Cov(M_s, M_t) straight from the noise law.

    Integrates g(., s) x g(., t) against the covariance measure of the mixed
    noise (an overlap term for the Brownian part plus exact double cell
    integrals of the fractional part).  If the kernel rows are right this
    equals bracket[min(s_index, t_index)], which is the martingale property;
    the routine makes no use of the kernel equation, so it serves as an
    independent check on the solve.
    """
    n = table.n_steps
    if not (0 <= s_index <= n and 0 <= t_index <= n):
        raise ValueError("indices out of range")
    if s_index > t_index:
        s_index, t_index = t_index, s_index
    if s_index == 0:
        return 0.0
    p = _power_table(table, n)
    a_s, b_s = _half_unit_cells(s_index, n)
    a_t, b_t = _half_unit_cells(t_index, n)
    dmat = (
        p[np.abs(b_s[:, None] - a_t[None, :])]
        + p[np.abs(a_s[:, None] - b_t[None, :])]
        - p[np.abs(b_s[:, None] - b_t[None, :])]
        - p[np.abs(a_s[:, None] - a_t[None, :])]
    )
    gs = table.g[s_index]
    gt = table.g[t_index]
    cov = float(gs @ dmat @ gt)
    ov = _overlap_vector(s_index, table.dt)
    cov += float(np.dot(ov * gs, gt[: s_index + 1]))
    return cov


def covariance_profile(table: KernelTable, block: int = 256) -> np.ndarray:
    """Cov(M_{t_i}, M_T) for every i = 0..n, via the same double quadrature
    as martingale_covariance_check but organized to run in O(n^2).

    Row i of the quadrature shares all cells with the full-horizon partition
    except its own terminal half cell, so the big bilinear form is assembled
    once and each row only pays for a single corrected cell.
    """
    n = table.n_steps
    p = _power_table(table, n)
    a_n, b_n = _half_unit_cells(n, n)
    gn = table.g[n]

    # y[j] = sum_k D_full[j, k] * gn[k], computed in row blocks.
    y = np.empty(n + 1)
    for lo in range(0, n + 1, block):
        hi = min(lo + block, n + 1)
        a_blk = a_n[lo:hi, None]
        b_blk = b_n[lo:hi, None]
        dmat = (
            p[np.abs(b_blk - a_n[None, :])]
            + p[np.abs(a_blk - b_n[None, :])]
            - p[np.abs(b_blk - b_n[None, :])]
            - p[np.abs(a_blk - a_n[None, :])]
        )
        y[lo:hi] = dmat @ gn

    out = np.zeros(n + 1)
    for i in range(1, n + 1):
        gi = table.g[i]
        cov = np.dot(gi[:i], y[:i])
        # Terminal half cell of row i: endpoints (2i-1, 2i) in half units.
        d_half = (
            p[np.abs(2 * i - a_n)]
            + p[np.abs(2 * i - 1 - b_n)]
            - p[np.abs(2 * i - b_n)]
            - p[np.abs(2 * i - 1 - a_n)]
        )
        cov += gi[i] * np.dot(d_half, gn)
        ov = _overlap_vector(i, table.dt)
        cov += np.dot(ov * gi, gn[: i + 1])
        out[i] = cov
    return out


def kernel_cache_name(hurst: float, horizon: float, n_steps: int) -> str:
    return f"kernel_{hurst:g}_{horizon:g}_{n_steps}"


def save_kernel_table(table: KernelTable, directory: str) -> tuple[str, str]:
    """Write the table as two CSV files and return their paths.

    The main file has columns (i, t, bracket, psi); the companion holds the
    triangular kernel rows, one grid row per line as (i, g_0, ..., g_i).
    Floats are written with shortest round-trip precision so a reload is
    bit-exact.
    """
    os.makedirs(directory, exist_ok=True)
    base = kernel_cache_name(table.hurst, table.horizon, table.n_steps)
    main_path = os.path.join(directory, base + ".csv")
    g_path = os.path.join(directory, base + "_g.csv")
    grid = table.grid.tolist()
    bracket = table.bracket.tolist()
    psi = table.psi.tolist()
    with open(main_path, "w", newline="\n") as fh:
        fh.write("i,t,bracket,psi\n")
        for i in range(table.n_steps + 1):
            fh.write(f"{i},{grid[i]!r},{bracket[i]!r},{psi[i]!r}\n")
    with open(g_path, "w", newline="\n") as fh:
        for i, row in enumerate(table.g):
            fh.write(str(i))
            fh.write(",")
            fh.write(",".join(repr(v) for v in row.tolist()))
            fh.write("\n")
    return main_path, g_path


def load_kernel_table(directory: str, hurst: float, horizon: float, n_steps: int) -> KernelTable:
    """Reload a table written by save_kernel_table.

    Raises FileNotFoundError if either file is absent and ValueError if the
    contents disagree with the requested shape.
    """
    base = kernel_cache_name(hurst, horizon, n_steps)
    main_path = os.path.join(directory, base + ".csv")
    g_path = os.path.join(directory, base + "_g.csv")
    if not os.path.exists(main_path) or not os.path.exists(g_path):
        raise FileNotFoundError(f"no cached kernel table {base} in {directory}")
    data = np.loadtxt(main_path, delimiter=",", skiprows=1)
    if data.shape != (n_steps + 1, 4):
        raise ValueError(f"cached table {main_path} has wrong shape {data.shape}")
    grid = data[:, 1].copy()
    bracket = data[:, 2].copy()
    psi = data[:, 3].copy()
    rows = []
    with open(g_path) as fh:
        for i, line in enumerate(fh):
            vals = np.fromstring(line, dtype=float, sep=",")
            if len(vals) != i + 2 or int(vals[0]) != i:
                raise ValueError(f"cached kernel rows in {g_path} are malformed at row {i}")
            rows.append(vals[1:])
    if len(rows) != n_steps + 1:
        raise ValueError(f"cached kernel rows in {g_path} have wrong length {len(rows)}")
    return KernelTable(hurst, horizon, grid, tuple(rows), bracket, psi)
