"""Laplace-transform machinery for the squared distance between two
candidate filters.

The transform is represented through an 8-dimensional linear system
(a 4x4 pair integrated jointly) whose constant-coefficient skeleton is a
4x4 Hamiltonian matrix.  The positive eigenvalues of that matrix carry the
information content of the drift parameter; the integrator and the
eigenvalue expansions cross-check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DeterminantError, SpectrumError
from .filtering import _riccati_batch, stationary_gain
from .kernel import KernelTable, ModelParams

__all__ = [
    "XiMix",
    "LaplaceResult",
    "xi_mix",
    "slope_from_eigen",
    "eigen_expansion_residuals",
    "integrate_xi",
    "kronecker_defect",
    "laplace_a_min",
    "save_laplace_sweep",
]

MODES = ("exact-coefficient", "asymptotic")

_SWAP2 = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class XiMix:
    """Constant 4x4 coefficient matrix for a drift pair (theta1, theta2)."""

    theta1: float
    theta2: float
    a: float
    mu: float
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def h(self) -> float:
        return self.theta2 - self.theta1

    @property
    def alpha1(self) -> float:
        return math.hypot(self.theta1, self.mu)

    @property
    def alpha2(self) -> float:
        return math.hypot(self.theta2, self.mu)

    @property
    def g1(self) -> float:
        return stationary_gain(self.theta1, self.mu)

    @property
    def g2(self) -> float:
        return stationary_gain(self.theta2, self.mu)

    @property
    def delta_g(self) -> float:
        return self.g1 - self.g2


@dataclass(frozen=True)
class LaplaceResult:
    """Transform value and its determinant representation pieces."""

    value: float
    logdet_xi1: float
    trace_integral: float
    slope: float
    mode: str


def xi_mix(theta1: float, theta2: float, a: float, mu: float) -> XiMix:
    """Assemble the constant coefficient matrix.

    The off-diagonal coupling in the upper-right block is the cross term
    of a rank-one square with components (g1, g2 - g1), hence the minus
    sign on g1*(g1 - g2); the matching lower-left entry of that block is
    the same by symmetry.
    """
    if theta1 <= 0.0 or theta2 <= 0.0:
        raise ValueError("drift parameters must be positive")
    h = theta2 - theta1
    alpha2 = math.hypot(theta2, mu)
    g1 = stationary_gain(theta1, mu)
    dg = g1 - stationary_gain(theta2, mu)
    mu2 = mu * mu
    matrix = np.array(
        [
            [theta1, 0.0, 2.0 * mu2 * g1 * g1, -2.0 * mu2 * g1 * dg],
            [h, alpha2, -2.0 * mu2 * g1 * dg, 2.0 * mu2 * dg * dg],
            [0.0, 0.0, -theta1, -h],
            [0.0, 0.5 * a * mu2, 0.0, -alpha2],
        ]
    )
    return XiMix(theta1=theta1, theta2=theta2, a=a, mu=mu, matrix=matrix)


def _positive_pair(xi: XiMix) -> tuple[float, float]:
    """The two positive-real eigenvalues, ordered as (near theta1, near alpha2)."""
    eigs = np.linalg.eigvals(xi.matrix)
    pos = eigs[eigs.real > 1e-12]
    if len(pos) != 2:
        raise SpectrumError(
            f"expected 2 eigenvalues with positive real part, got {len(pos)} "
            f"in spectrum {np.sort_complex(eigs)}"
        )
    gap = abs(pos[0].real - pos[1].real)
    if gap <= 1e-9 * max(1.0, abs(pos[0].real)):
        raise SpectrumError(
            f"positive eigenvalues coalesce (gap {gap:.3e}); pairing to "
            f"(theta1, alpha2) is ambiguous in spectrum {np.sort_complex(eigs)}"
        )
    # pairing by total distance to the unperturbed pair
    straight = abs(pos[0] - xi.theta1) + abs(pos[1] - xi.alpha2)
    crossed = abs(pos[1] - xi.theta1) + abs(pos[0] - xi.alpha2)
    x1, x3 = (pos[0], pos[1]) if straight <= crossed else (pos[1], pos[0])
    return float(x1.real), float(x3.real)


def slope_from_eigen(xi: XiMix) -> float:
    """Long-horizon growth rate of log L_T per unit time, from the spectrum."""
    x1, x3 = _positive_pair(xi)
    return 0.5 * ((xi.theta1 + xi.alpha2) - (x1 + x3))


def eigen_expansion_residuals(
    theta: float, mu: float, a: float, h_list
) -> np.ndarray:
    """Second-order expansion residuals of the two positive eigenvalues.

    Row per h: (h, [x1(h) - theta - c1 h^2]/h^2, [x3(h) - alpha2 - c3 h^2]/h^2)
    with c1 = a mu^2 g^2 / (2 theta), c3 = a mu^4 g'^2 / (2 alpha2), and
    alpha2 = alpha(theta + h): each eigenvalue is centered on the branch
    point it perturbs.  The rows record how far the claimed h^2
    coefficients are from the exact spectrum; they are a measurement, not
    a pass/fail check.
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    alpha = math.hypot(theta, mu)
    g = stationary_gain(theta, mu)
    g_prime = -1.0 / (alpha * (alpha + theta))
    c1 = a * mu * mu * g * g / (2.0 * theta)
    rows = []
    for h in h_list:
        if abs(h) > 0.1 * theta:
            raise ValueError(f"|h| = {abs(h)} exceeds 0.1*theta = {0.1 * theta}")
        if h == 0.0:
            rows.append((0.0, 0.0, 0.0))
            continue
        alpha2 = math.hypot(theta + h, mu)
        c3 = a * mu**4 * g_prime * g_prime / (2.0 * alpha2)
        x1, x3 = _positive_pair(xi_mix(theta, theta + h, a, mu))
        h2 = h * h
        rows.append((h, (x1 - theta - c1 * h2) / h2, (x3 - alpha2 - c3 * h2) / h2))
    return np.array(rows)


def _step_blocks(
    table: KernelTable,
    theta1: float,
    theta2: float,
    mu: float,
    mode: str,
    gam2: np.ndarray | None,
    dgam: np.ndarray | None,
):
    """Per-step generator blocks, left-point frozen.

    Returns arrays indexed by step i: drift (n,4,4), noise-square (n,4,4),
    coupling base M (n,4,4), and the per-step trace of the drift.
    """
    n = table.n_steps
    psi = table.psi[:-1]
    b = np.stack([np.ones(n), psi], axis=1)
    ell = np.stack([psi, np.ones(n)], axis=1)
    a_mat = b[:, :, None] * ell[:, None, :]
    h = theta2 - theta1

    drift = np.zeros((n, 4, 4))
    drift[:, :2, :2] = -(theta1 / 2.0) * a_mat
    drift[:, 2:, :2] = -(h / 2.0) * a_mat

    if mode == "asymptotic":
        alpha2 = math.hypot(theta2, mu)
        drift[:, 2:, 2:] = -(alpha2 / 2.0) * a_mat
        g1 = stationary_gain(theta1, mu)
        g2 = stationary_gain(theta2, mu)
        bvec = np.concatenate([g1 * b, (g2 - g1) * b], axis=1) * mu
    else:
        llt = ell[:, :, None] * ell[:, None, :]
        gam2_full = np.empty((n, 2, 2))
        gam2_full[:, 0, 0] = gam2[:n, 0]
        gam2_full[:, 0, 1] = gam2_full[:, 1, 0] = gam2[:n, 1]
        gam2_full[:, 1, 1] = gam2[:n, 2]
        drift[:, 2:, 2:] = -(theta2 / 2.0) * a_mat - (mu * mu / 4.0) * (
            gam2_full @ llt
        )
        dgam_full = np.empty((n, 2, 2))
        dgam_full[:, 0, 0] = dgam[:n, 0]
        dgam_full[:, 0, 1] = dgam_full[:, 1, 0] = dgam[:n, 1]
        dgam_full[:, 1, 1] = dgam[:n, 2]
        gam1_full = gam2_full - dgam_full
        top = np.einsum("nij,nj->ni", gam1_full, ell)
        bot = np.einsum("nij,nj->ni", dgam_full, ell)
        bvec = np.concatenate([top, bot], axis=1) * (mu / 2.0)

    noise_sq = bvec[:, :, None] * bvec[:, None, :]
    coupling = np.zeros((n, 4, 4))
    coupling[:, 2:, 2:] = ell[:, :, None] * ell[:, None, :]
    trace = np.einsum("nii->n", drift)
    return drift, noise_sq, coupling, trace


def _run_xi(
    table: KernelTable,
    theta1: float,
    theta2: float,
    a: float,
    mu: float,
    mode: str,
    sample_every: int = 0,
):
    """Integrate the (Xi1, Xi2) pair by per-step matrix exponentials.

    The pair is advanced as one 4x8 row block.  Entry growth spreads over
    many orders of magnitude, so after every step the block is
    re-orthonormalized (LQ): the triangular factor's log-determinant is
    accumulated and the orthonormal frame carries on.  The determinant of
    Xi1 is then the accumulated factor times the determinant of the
    frame's left 4x4 subblock, which stays well conditioned.

    Returns (frame_left, frame_right, logdet_xi1, trace_integral,
    samples); samples rows are (step, frame_left, frame_right,
    logdet_so_far).  The frame pair equals (Xi1, Xi2) up to one shared
    invertible left factor, which cancels in Xi1^{-1} Xi2.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if theta1 <= 0.0 or theta2 <= 0.0:
        raise ValueError("drift parameters must be positive")
    gam2 = dgam = None
    if mode == "exact-coefficient":
        pair = _riccati_batch(np.array([theta1, theta2]), table, mu, record=True)
        gam2 = pair[1]
        dgam = pair[1] - pair[0]
    drift, noise_sq, coupling, trace = _step_blocks(
        table, theta1, theta2, mu, mode, gam2, dgam
    )
    dbr = table.dbracket
    couple = 0.25 * a * mu * mu

    p = np.zeros((4, 8))
    p[:, :4] = np.eye(4)
    log_tri = 0.0
    sign_tri = 1.0
    gen = np.empty((8, 8))
    samples = []

    def logdet_now():
        det_sub = np.linalg.det(p[:, :4])
        if not np.isfinite(det_sub) or sign_tri * det_sub <= 0.0:
            return None
        return log_tri + math.log(abs(det_sub))

    for i in range(table.n_steps):
        gen[:4, :4] = -drift[i]
        gen[:4, 4:] = noise_sq[i]
        gen[4:, :4] = couple * coupling[i]
        gen[4:, 4:] = drift[i].T
        p = p @ expm(gen * dbr[i])
        q_fac, r_fac = np.linalg.qr(p.T)
        diag = np.diagonal(r_fac)
        if not np.all(np.isfinite(diag)) or np.any(diag == 0.0):
            raise DeterminantError(
                f"state degenerated at step {i}; a={a} too negative"
            )
        log_tri += float(np.log(np.abs(diag)).sum())
        sign_tri *= float(np.prod(np.sign(diag)))
        p = q_fac.T
        checkpoint = (i + 1) % 64 == 0 or i == table.n_steps - 1
        if checkpoint and logdet_now() is None:
            raise DeterminantError(
                f"det Xi1 lost positivity by step {i}; a={a} is below the "
                "admissible range"
            )
        if sample_every and ((i + 1) % sample_every == 0 or i == table.n_steps - 1):
            samples.append((i + 1, p[:, :4].copy(), p[:, 4:].copy(), logdet_now()))
    logdet = logdet_now()
    if logdet is None:
        raise DeterminantError(f"det Xi1 non-positive at horizon; a={a}")
    trace_integral = float(trace @ dbr)
    return p[:, :4], p[:, 4:], logdet, trace_integral, samples


def integrate_xi(
    params: ModelParams,
    table: KernelTable,
    theta1: float,
    theta2: float,
    a: float,
    mode: str = "asymptotic",
) -> LaplaceResult:
    """Transform value for the drift pair, via the determinant representation."""
    if not table.matches(params):
        raise ValueError("kernel table does not match the model parameters")
    _, _, logdet, trace_integral, _ = _run_xi(
        table, theta1, theta2, a, params.mu, mode
    )
    log_value = -0.5 * trace_integral - 0.5 * logdet
    return LaplaceResult(
        value=float(np.exp(log_value)),
        logdet_xi1=logdet,
        trace_integral=trace_integral,
        slope=log_value / table.horizon,
        mode=mode,
    )


def kronecker_defect(
    theta1: float, theta2: float, a: float, mu: float, table: KernelTable, i: int
) -> float:
    """Mismatch between the step generator and its Kronecker factorization.

    In asymptotic mode the 8x8 generator, conjugated by the block swap that
    re-orders the second member of the pair, must equal kron(coefficient
    matrix, A(t)/2) exactly.  Returns the max-abs entry difference at step i.
    """
    if not (0 <= i < table.n_steps):
        raise ValueError(f"step index {i} out of range 0..{table.n_steps - 1}")
    drift, noise_sq, coupling, _ = _step_blocks(
        table, theta1, theta2, mu, "asymptotic", None, None
    )
    gen = np.zeros((8, 8))
    gen[:4, :4] = -drift[i]
    gen[:4, 4:] = noise_sq[i]
    gen[4:, :4] = 0.25 * a * mu * mu * coupling[i]
    gen[4:, 4:] = drift[i].T

    swap = np.eye(8)
    swap[4:6, 4:6] = _SWAP2
    swap[6:8, 6:8] = _SWAP2
    conjugated = swap @ gen @ swap

    psi = table.psi[i]
    a_mat = np.outer([1.0, psi], [psi, 1.0])
    target = np.kron(xi_mix(theta1, theta2, a, mu).matrix, 0.5 * a_mat)
    return float(np.abs(conjugated - target).max())


def laplace_a_min(
    params: ModelParams,
    table: KernelTable,
    theta1: float,
    theta2: float,
    mode: str = "asymptotic",
    a_floor: float = -32.0,
    tol: float = 1e-2,
) -> float:
    """Smallest Laplace parameter keeping det Xi1 positive, by bisection.

    Returns a value a_min <= 0 such that integration succeeds at a_min and
    fails at a_min - tol (or a_floor when no failure occurs above it).
    """

    def ok(a: float) -> bool:
        try:
            _run_xi(table, theta1, theta2, a, params.mu, mode)
        except DeterminantError:
            return False
        return True

    if not ok(0.0):
        raise DeterminantError("integration fails even at a = 0")
    good, bad = 0.0, None
    step = -0.5
    while bad is None:
        probe = good + step
        if probe < a_floor:
            return a_floor
        if ok(probe):
            good = probe
            step *= 2.0
        else:
            bad = probe
    while good - bad > tol:
        mid = 0.5 * (good + bad)
        if ok(mid):
            good = mid
        else:
            bad = mid
    return good


def save_laplace_sweep(rows: list[dict], path) -> None:
    """Write sweep rows as CSV: a,theta1,theta2,h,T,mode,laplace,slope,x1,x3."""
    header = ["a", "theta1", "theta2", "h", "T", "mode", "laplace", "slope", "x1", "x3"]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(row[k]) for k in header) + "\n")
