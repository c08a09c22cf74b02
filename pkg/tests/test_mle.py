"""Tests for the drift search and the closed-form information quantities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixedfou.filtering import _filter_core, _riccati_batch, run_filter
from mixedfou.innovation import Trajectory, simulate
from mixedfou.kernel import ModelParams, solve_kernel
from mixedfou.mle import (
    MleResult,
    SearchConfig,
    fisher_decomposition,
    fisher_info,
    mle,
    _maximize_batch,
)

pos = st.floats(min_value=0.05, max_value=50.0, allow_nan=False)


class TestFisherInfo:
    def test_reference_point(self):
        info = fisher_info(2.0, 2.0)
        assert info == pytest.approx(0.045495128834865936, rel=1e-15)
        assert 1.0 / info == pytest.approx(21.98037516565144, rel=1e-13)
        assert f"{info:.6f}" == "0.045495"

    def test_vanishes_without_observation_channel(self):
        assert fisher_info(2.0, 0.0) == 0.0

    def test_strong_observation_limit(self):
        assert fisher_info(2.0, 1e6) == pytest.approx(0.25, abs=1e-6)
        mus = np.array([0.5, 1.0, 2.0, 4.0, 8.0, 100.0])
        vals = [fisher_info(2.0, m) for m in mus]
        assert np.all(np.diff(vals) > 0.0)
        assert vals[-1] < 0.25

    @given(theta=pos, mu=pos)
    @settings(max_examples=50, deadline=None)
    def test_equivalent_closed_form(self, theta, mu):
        alpha = math.hypot(theta, mu)
        # alpha - theta written as mu^2/(alpha + theta) to avoid cancellation
        gap = mu * mu / (alpha + theta)
        drift_part = gap / (2.0 * theta * (alpha + theta))
        obs_part = gap * gap / (2.0 * alpha**3)
        got = fisher_decomposition(theta, mu)
        assert got[0] == pytest.approx(drift_part, rel=1e-12, abs=1e-300)
        assert got[1] == pytest.approx(obs_part, rel=1e-12, abs=1e-300)
        # the stationary gain satisfies theta + mu^2 g = alpha
        g = 1.0 / (alpha + theta)
        assert theta + mu * mu * g == pytest.approx(alpha, rel=1e-12)

    def test_rejects_non_positive_theta(self):
        for bad in (0.0, -1.0):
            with pytest.raises(ValueError):
                fisher_info(bad, 2.0)
            with pytest.raises(ValueError):
                fisher_decomposition(bad, 2.0)


class TestFisherDecomposition:
    def test_reference_point(self):
        drift_part, obs_part = fisher_decomposition(2.0, 2.0)
        assert drift_part == pytest.approx(0.04289321881345248, rel=1e-14)
        assert obs_part == pytest.approx(0.01516504294495532, rel=1e-14)
        assert drift_part + obs_part == pytest.approx(0.0580582617584078, rel=1e-13)

    def test_sum_differs_from_information(self):
        # the two-term split does NOT add up to the closed form at generic
        # parameters; keeping the gap visible is the point of returning it
        info = fisher_info(2.0, 2.0)
        split_sum = sum(fisher_decomposition(2.0, 2.0))
        assert split_sum - info > 0.0125

    @given(theta=pos, mu=st.floats(min_value=0.5, max_value=50.0))
    @settings(max_examples=50, deadline=None)
    def test_parts_are_positive(self, theta, mu):
        drift_part, obs_part = fisher_decomposition(theta, mu)
        assert drift_part > 0.0
        assert obs_part > 0.0


class TestSearchConfig:
    def test_defaults(self):
        cfg = SearchConfig()
        assert cfg.theta_lo == 0.05
        assert cfg.theta_hi == 20.0
        assert cfg.grid_points == 32
        assert cfg.tol == 1e-4

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"theta_lo": 0.0},
            {"theta_lo": -1.0},
            {"theta_lo": 5.0, "theta_hi": 2.0},
            {"grid_points": 3},
            {"tol": 0.0},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            SearchConfig(**kwargs)


@pytest.fixture(scope="module")
def estimation_run(table_cache):
    params = ModelParams(theta=2.0, mu=2.0, hurst=0.75, horizon=100.0, n_steps=2048)
    table = table_cache(0.75, 100.0, 2048)
    traj = simulate(params, table, seed=11)
    return params, table, traj, mle(traj, table, params)


def _grid_argmax(thetas, dz, table, mu):
    gammas = _riccati_batch(thetas, table, mu, record=True)
    ll = _filter_core(thetas, gammas, dz[None, :], table, mu, pairing="cross")
    return float(thetas[int(np.argmax(ll[:, 0]))])


class TestMle:
    def test_matches_exhaustive_grid_search(self, estimation_run):
        # two-stage dense scan: a coarse log grid locates the peak, a fine
        # uniform grid pins it below the comparison tolerance
        params, table, traj, result = estimation_run
        dz = traj.dz_obs
        stage1 = _grid_argmax(
            np.geomspace(0.05, 20.0, 400), dz, table, params.mu
        )
        fine = np.linspace(stage1 - 0.03, stage1 + 0.03, 400)
        stage2 = _grid_argmax(fine, dz, table, params.mu)
        assert result.theta_hat == pytest.approx(stage2, abs=1e-3)

    def test_estimate_lands_near_truth(self, estimation_run):
        _, _, _, result = estimation_run
        assert abs(result.theta_hat - 2.0) < 1.5
        assert not result.boundary
        assert not result.flat
        assert result.standardized_error == pytest.approx(
            10.0 * (result.theta_hat - 2.0), rel=1e-12
        )

    def test_reported_maximum_beats_bracket_ends(self, estimation_run):
        params, table, traj, result = estimation_run
        assert result.bracket == (0.05, 20.0)
        for theta in result.bracket:
            rf = run_filter(theta, traj, table, mu=params.mu)
            assert result.loglik_at_hat > rf.loglik

    def test_reported_maximum_matches_public_filter(self, estimation_run):
        params, table, traj, result = estimation_run
        rf = run_filter(result.theta_hat, traj, table, mu=params.mu)
        assert result.loglik_at_hat == pytest.approx(rf.loglik, rel=1e-9)

    def test_eval_budget(self, estimation_run):
        _, _, _, result = estimation_run
        # 32-point scan + 2 seeds + one batched evaluation per refinement step
        assert 34 <= result.n_evals <= 70

    def test_narrow_bracket_agrees(self, estimation_run):
        params, table, traj, result = estimation_run
        narrow = mle(
            traj, table, params,
            SearchConfig(theta_lo=1.0, theta_hi=4.0, grid_points=16, tol=1e-5),
        )
        assert narrow.theta_hat == pytest.approx(result.theta_hat, abs=5e-4)
        assert narrow.bracket == (1.0, 4.0)

    def test_flat_objective_is_flagged(self):
        params = ModelParams(theta=2.0, mu=2.0, hurst=0.6, horizon=5.0, n_steps=64)
        table = solve_kernel(params)
        silent = Trajectory(
            grid=table.grid,
            zeta=np.zeros((65, 2)),
            z_obs=np.zeros(65),
            d_mart=np.zeros(64),
            d_nois=np.zeros(64),
            seed=0,
        )
        result = mle(silent, table, params)
        assert result.flat
        assert result.boundary
        assert result.loglik_at_hat == 0.0
        assert result.theta_hat == 0.05

    def test_different_seeds_give_different_estimates(self, table_cache):
        params = ModelParams(theta=2.0, mu=2.0, hurst=0.75, horizon=10.0, n_steps=128)
        table = table_cache(0.75, 10.0, 128)
        hats = {
            mle(simulate(params, table, seed=s), table, params).theta_hat
            for s in (1, 2, 3)
        }
        assert len(hats) == 3

    def test_batch_agrees_with_single_path_calls(self, table_cache):
        params = ModelParams(theta=2.0, mu=2.0, hurst=0.75, horizon=10.0, n_steps=128)
        table = table_cache(0.75, 10.0, 128)
        trajs = [simulate(params, table, seed=s) for s in (4, 5, 6)]
        dz = np.stack([t.dz_obs for t in trajs])
        out = _maximize_batch(dz, table, params.mu, SearchConfig())
        solo = [mle(t, table, params) for t in trajs]
        for k, res in enumerate(solo):
            # lockstep refinement may run extra iterations on some paths,
            # so agreement holds to the stopping tolerance, not bitwise
            assert out["theta_hat"][k] == pytest.approx(res.theta_hat, abs=3e-4)
            assert bool(out["boundary"][k]) == res.boundary
            assert bool(out["flat"][k]) == res.flat

    def test_rejects_mismatched_grid(self, table_cache):
        params = ModelParams(theta=2.0, mu=2.0, hurst=0.75, horizon=10.0, n_steps=128)
        table = table_cache(0.75, 10.0, 128)
        traj = simulate(params, table, seed=1)
        other = solve_kernel(
            ModelParams(theta=2.0, mu=2.0, hurst=0.75, horizon=10.0, n_steps=256)
        )
        with pytest.raises(ValueError, match="grids"):
            mle(traj, other, params)

    def test_result_is_frozen(self, estimation_run):
        _, _, _, result = estimation_run
        assert isinstance(result, MleResult)
        with pytest.raises(AttributeError):
            result.theta_hat = 3.0
