"""Histogram of standardized errors with the limiting normal overlay."""

import math
from dataclasses import dataclass

import numpy as np


def fisher_info(theta: float, mu: float) -> float:
    """Asymptotic information for the drift, from (theta, mu) alone."""
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    alpha = math.hypot(theta, mu)
    return (
        1.0 / (2.0 * theta)
        - 2.0 * theta / (alpha * (alpha + theta))
        + theta * theta / (2.0 * alpha**3)
    )


@dataclass(frozen=True)
class PlotSpec:
    """Everything the renderer draws, plus the two checkable scalars."""

    edges: np.ndarray
    density: np.ndarray
    overlay_x: np.ndarray
    overlay_y: np.ndarray
    hist_area: float
    overlay_peak: float
    sigma: float
    n_rows: int


def build_spec(errors, theta: float, mu: float, bins: int) -> tuple[PlotSpec, list[str]]:
    errors = np.asarray(errors, dtype=float)
    if errors.ndim != 1 or errors.size == 0:
        raise ValueError("errors must be a non-empty 1-d array")
    if bins < 1:
        raise ValueError("bins must be at least 1")
    warnings = []
    if errors.size == 1:
        warnings.append(
            "single replication: the histogram degenerates to one bar"
        )
    sigma = math.sqrt(1.0 / fisher_info(theta, mu))
    density, edges = np.histogram(errors, bins=bins, density=True)
    # symmetric grid with an odd count so x = 0 is a sample point and the
    # reported peak is the exact mode of the overlay
    span = max(4.0 * sigma, float(np.abs(errors).max()))
    overlay_x = np.linspace(-span, span, 1001)
    overlay_y = np.exp(-0.5 * (overlay_x / sigma) ** 2) / (
        sigma * math.sqrt(2.0 * math.pi)
    )
    spec = PlotSpec(
        edges=edges,
        density=density,
        overlay_x=overlay_x,
        overlay_y=overlay_y,
        hist_area=float(np.sum(density * np.diff(edges))),
        overlay_peak=float(overlay_y.max()),
        sigma=sigma,
        n_rows=int(errors.size),
    )
    return spec, warnings


def render(spec: PlotSpec, out_path, theta: float, mu: float) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.stairs(spec.density, spec.edges, fill=True, alpha=0.45, label="replications")
    ax.plot(
        spec.overlay_x,
        spec.overlay_y,
        lw=1.6,
        label=f"normal, sd = {spec.sigma:.3f}",
    )
    ax.set_xlabel("standardized error")
    ax.set_ylabel("density")
    ax.set_title(f"drift estimates, theta = {theta:g}, mu = {mu:g}")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
