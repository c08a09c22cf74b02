"""Replication harness: seeding, KS statistics, CSV plumbing, determinism."""

import json
import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from mixedfou.errors import ExperimentError
from mixedfou.harness import (
    ExperimentConfig,
    ReplicationRecord,
    kolmogorov_pvalue,
    ks_normal,
    load_kernel_cached,
    read_reps_csv,
    rep_seed,
    run_experiment,
    summarize,
    write_reps_csv,
)
from mixedfou.kernel import ModelParams
from mixedfou.mle import fisher_info


class TestKolmogorovPvalue:
    def test_matches_scipy_on_a_grid(self):
        for lam in np.linspace(0.25, 2.5, 19):
            ours = kolmogorov_pvalue(float(lam))
            ref = scipy.special.kolmogorov(float(lam))
            assert ours == pytest.approx(ref, rel=1e-10, abs=1e-14)

    def test_branch_switch_is_seamless(self):
        # both series forms stay on the reference curve at the crossover
        for lam in (0.6 - 1e-9, 0.6, 0.6 + 1e-9):
            assert kolmogorov_pvalue(lam) == pytest.approx(
                scipy.special.kolmogorov(lam), rel=1e-12
            )

    def test_degenerate_argument(self):
        assert kolmogorov_pvalue(0.0) == 1.0
        assert kolmogorov_pvalue(-3.0) == 1.0
        assert kolmogorov_pvalue(50.0) == 0.0


class TestKsNormal:
    def test_matches_scipy_asymptotic(self):
        rng = np.random.default_rng(1234)
        x = rng.standard_normal(400)
        stat, p = ks_normal(x)
        ref = scipy.stats.kstest(x, "norm", mode="asymp")
        assert stat == pytest.approx(ref.statistic, rel=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-12)

    def test_detects_a_shifted_sample(self):
        rng = np.random.default_rng(99)
        stat, p = ks_normal(rng.standard_normal(500) + 1.0)
        assert p < 1e-6
        assert stat > 0.3

    def test_small_sample_is_finite(self):
        stat, p = ks_normal(np.array([0.3]))
        assert 0.0 <= stat <= 1.0
        assert 0.0 <= p <= 1.0


class TestRepSeed:
    def test_deterministic_and_order_free(self):
        a = rep_seed(7, 5)
        b = rep_seed(7, 5)
        assert a == b
        # deriving rep 5 must not depend on having derived reps 0..4
        seeds = [rep_seed(7, r) for r in range(6)]
        assert seeds[5] == a

    def test_distinct_across_reps_and_masters(self):
        seeds = {rep_seed(7, r) for r in range(300)}
        assert len(seeds) == 300
        assert rep_seed(8, 0) != rep_seed(7, 0)

    def test_uint64_range(self):
        s = rep_seed(2**64 - 1, 12345)
        assert 0 <= s < 2**64


class TestRepsCsv:
    def _records(self):
        return [
            ReplicationRecord(0, 12345, 2.0317, 0.317, -3.25e-2, 41),
            ReplicationRecord(1, 99, 1.75, -2.5, 0.125, 7),
        ]

    def test_roundtrip_is_exact(self, tmp_path):
        path = tmp_path / "reps.csv"
        write_reps_csv(self._records(), path)
        assert read_reps_csv(path) == self._records()

    def test_header_and_line_endings(self, tmp_path):
        path = tmp_path / "reps.csv"
        write_reps_csv(self._records(), path)
        raw = path.read_bytes()
        assert raw.startswith(b"rep,seed,theta_hat,std_error,loglik,millis\n")
        assert b"\r" not in raw

    def test_rejects_foreign_header(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            read_reps_csv(path)


class TestConfigValidation:
    def test_rejects_zero_reps(self):
        with pytest.raises(ValueError):
            ExperimentConfig(n_reps=0)

    def test_rejects_negative_master_seed(self):
        with pytest.raises(ValueError):
            ExperimentConfig(master_seed=-1)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("mc_out")
    cache = tmp_path_factory.mktemp("mc_cache")
    cfg = ExperimentConfig(
        model=ModelParams(2.0, 2.0, 0.6, 50.0, 512),
        n_reps=12,
        master_seed=11,
        out_dir=str(out),
        cache_dir=str(cache),
    )
    records, summary = run_experiment(cfg)
    return cfg, records, summary, out, cache


def _zero_millis(text):
    rows = text.strip().split("\n")
    return [",".join(r.split(",")[:5]) for r in rows]


class TestRunExperiment:
    def test_accounting_adds_up(self, small_run):
        cfg, records, summary, _, _ = small_run
        assert summary.n_ok == len(records)
        assert summary.n_ok + summary.n_fail == cfg.n_reps
        assert summary.n_fail <= 0.10 * cfg.n_reps
        for rep, reason in summary.failed:
            assert 0 <= rep < cfg.n_reps
            assert isinstance(reason, str) and reason

    def test_standardization_and_seeds(self, small_run):
        cfg, records, _, _, _ = small_run
        sqrt_t = math.sqrt(cfg.model.horizon)
        for r in records:
            assert r.seed == rep_seed(cfg.master_seed, r.rep)
            expected = sqrt_t * (r.theta_hat - cfg.model.theta)
            assert r.std_error == pytest.approx(expected, rel=1e-12)
            assert isinstance(r.millis, int) and r.millis >= 0

    def test_files_written(self, small_run):
        _, records, summary, out, _ = small_run
        assert read_reps_csv(out / "reps.csv") == records
        on_disk = json.loads((out / "summary.json").read_text())
        assert on_disk == summary.as_dict()

    def test_summary_recomputable_from_csv(self, small_run):
        cfg, _, summary, out, _ = small_run
        records = read_reps_csv(out / "reps.csv")
        again = summarize(records, list(summary.failed), cfg)
        assert again.mean == summary.mean
        assert again.var == summary.var
        assert again.ks_stat == summary.ks_stat
        assert again.ks_p == summary.ks_p

    def test_summary_stats_against_numpy(self, small_run):
        cfg, records, summary, _, _ = small_run
        errs = np.array([r.std_error for r in records])
        assert summary.mean == pytest.approx(errs.mean(), rel=1e-14)
        assert summary.var == pytest.approx(errs.var(ddof=1), rel=1e-14)
        info = fisher_info(cfg.model.theta, cfg.model.mu)
        stat, p = ks_normal(errs * math.sqrt(info))
        assert summary.ks_stat == stat
        assert summary.ks_p == p
        assert summary.fisher == info
        assert summary.inv_fisher == pytest.approx(1.0 / info, rel=1e-15)

    def test_params_echo_carries_defaults(self, small_run):
        cfg, _, summary, _, _ = small_run
        assert summary.params["hurst"] == 0.6
        assert summary.params["n_reps"] == 12
        assert summary.params["master_seed"] == 11
        assert summary.params["theta_lo"] == cfg.search.theta_lo
        assert summary.params["theta_hi"] == cfg.search.theta_hi

    def test_rerun_reproduces_everything_but_millis(self, small_run, tmp_path):
        cfg, _, summary, out, cache = small_run
        cfg2 = ExperimentConfig(
            model=cfg.model,
            n_reps=cfg.n_reps,
            master_seed=cfg.master_seed,
            out_dir=str(tmp_path),
            cache_dir=str(cache),
        )
        _, summary2 = run_experiment(cfg2)
        assert (tmp_path / "summary.json").read_bytes() == (out / "summary.json").read_bytes()
        first = _zero_millis((out / "reps.csv").read_text())
        second = _zero_millis((tmp_path / "reps.csv").read_text())
        assert first == second
        assert summary2.as_dict() == summary.as_dict()

    def test_no_files_when_disabled(self, small_run, tmp_path):
        cfg, _, _, _, cache = small_run
        cfg3 = ExperimentConfig(
            model=cfg.model,
            n_reps=2,
            master_seed=cfg.master_seed,
            out_dir=str(tmp_path),
            cache_dir=str(cache),
            write_files=False,
        )
        run_experiment(cfg3)
        assert list(tmp_path.iterdir()) == []

    def test_aborts_when_too_many_replications_fail(self, tmp_path):
        # short horizon drives some searches into the bracket edge
        cfg = ExperimentConfig(
            model=ModelParams(2.0, 2.0, 0.6, 20.0, 512),
            n_reps=8,
            master_seed=11,
            out_dir=str(tmp_path),
            cache_dir=str(tmp_path),
        )
        with pytest.raises(ExperimentError, match="8"):
            run_experiment(cfg)


class TestKernelCache:
    def test_cache_roundtrip_is_bit_exact(self, tmp_path):
        model = ModelParams(2.0, 2.0, 0.75, 5.0, 128)
        fresh = load_kernel_cached(model, str(tmp_path))
        assert any(tmp_path.iterdir())
        again = load_kernel_cached(model, str(tmp_path))
        np.testing.assert_array_equal(fresh.psi, again.psi)
        np.testing.assert_array_equal(fresh.bracket, again.bracket)
        np.testing.assert_array_equal(fresh.grid, again.grid)

    def test_no_cache_dir_still_solves(self):
        model = ModelParams(2.0, 2.0, 0.5, 2.0, 64)
        table = load_kernel_cached(model, None)
        assert table.n_steps == 64
