import numpy as np
import pytest

from mixedfou.kernel import ModelParams, solve_kernel


@pytest.fixture(scope="session")
def table_cache():
    """Memoized kernel tables shared across the whole test run.

    Several test modules and the acceptance suite need the same medium-size
    tables; solving each once keeps the suite fast.
    """
    cache = {}

    def get(hurst: float, horizon: float, n_steps: int):
        key = (hurst, horizon, n_steps)
        if key not in cache:
            params = ModelParams(2.0, 2.0, hurst, horizon, n_steps)
            cache[key] = solve_kernel(params)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def gamma_run_200(table_cache):
    """A true-drift filter run on the long-horizon grid, shared because the
    covariance limit checks and the acceptance suite probe the same run."""
    from mixedfou.filtering import run_filter
    from mixedfou.innovation import simulate

    table = table_cache(0.75, 200.0, 4096)
    traj = simulate(ModelParams(2.0, 2.0, 0.75, 200.0, 4096), table, seed=3)
    return run_filter(2.0, traj, table, mu=2.0), table


@pytest.fixture()
def rng():
    return np.random.default_rng(123456789)
