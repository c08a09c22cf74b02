import math

import numpy as np
import pytest

from plot_report.figure import build_spec, fisher_info, render


class TestFisherInfo:
    def test_reference_point(self):
        assert fisher_info(2.0, 2.0) == pytest.approx(
            0.045495128834865936, rel=1e-15
        )

    def test_channel_limits(self):
        # no observation channel: nothing to learn from Z; strong channel:
        # the classical fully-observed rate 1/(2 theta)
        assert fisher_info(3.0, 0.0) == 0.0
        assert fisher_info(2.0, 1e6) == pytest.approx(0.25, abs=1e-6)

    def test_rejects_nonpositive_theta(self):
        with pytest.raises(ValueError):
            fisher_info(0.0, 2.0)


class TestBuildSpec:
    def test_histogram_integrates_to_one(self):
        rng = np.random.default_rng(5)
        for n, bins in ((300, 25), (37, 8), (2, 3)):
            spec, _ = build_spec(rng.normal(0, 4.7, n), 2.0, 2.0, bins)
            assert spec.hist_area == pytest.approx(1.0, abs=1e-12)

    def test_overlay_peak_is_the_mode(self):
        rng = np.random.default_rng(6)
        spec, _ = build_spec(rng.normal(0, 4.7, 200), 2.0, 2.0, 25)
        assert spec.overlay_peak == pytest.approx(0.08509274141001413, rel=1e-12)
        assert spec.overlay_peak == pytest.approx(
            math.sqrt(fisher_info(2.0, 2.0) / (2 * math.pi)), rel=1e-12
        )
        mid = len(spec.overlay_x) // 2
        assert spec.overlay_x[mid] == 0.0
        assert spec.overlay_y[mid] == spec.overlay_peak
        np.testing.assert_allclose(spec.overlay_y, spec.overlay_y[::-1], rtol=1e-13)

    def test_sigma_matches_information(self):
        spec, _ = build_spec(np.array([0.1, -0.2, 0.4]), 2.0, 2.0, 5)
        assert spec.sigma == pytest.approx(4.688323278705452, rel=1e-12)

    def test_single_row_warns_but_builds(self):
        spec, warnings = build_spec(np.array([1.3]), 2.0, 2.0, 25)
        assert spec.n_rows == 1
        assert spec.hist_area == pytest.approx(1.0, abs=1e-12)
        assert any("single replication" in w for w in warnings)

    def test_overlay_covers_outliers(self):
        spec, _ = build_spec(np.array([0.0, 44.9]), 2.0, 2.0, 10)
        assert spec.overlay_x.max() >= 44.9

    def test_validation(self):
        with pytest.raises(ValueError):
            build_spec(np.array([]), 2.0, 2.0, 25)
        with pytest.raises(ValueError):
            build_spec(np.array([0.1, 0.2]), 2.0, 2.0, 0)
        with pytest.raises(ValueError):
            build_spec(np.array([0.1]), -1.0, 2.0, 25)


class TestRender:
    def test_writes_svg(self, tmp_path):
        rng = np.random.default_rng(7)
        spec, _ = build_spec(rng.normal(0, 4.7, 120), 2.0, 2.0, 25)
        out = tmp_path / "fig1.svg"
        render(spec, out, 2.0, 2.0)
        head = out.read_text()[:300]
        assert "<svg" in head or head.startswith("<?xml")
