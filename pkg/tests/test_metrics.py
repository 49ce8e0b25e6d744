import math

import numpy as np
import pytest

from oamlink import (
    Pose,
    UcaPairConfig,
    approximation_report,
    build_matrix,
    mode_effective_gains,
    se_mode_snr,
    se_sinr,
)

from conftest import STOCK_D


class TestModeSnrVariant:
    def test_zero_gains_zero_efficiency(self):
        result = se_mode_snr(np.zeros((4, 4), dtype=complex), np.ones(4), np.ones(4))
        assert result.total == 0.0
        np.testing.assert_array_equal(result.per_mode, 0.0)

    def test_unit_snr_single_mode(self):
        # |h|^2 P / sigma^2 = 1 gives exactly one bit
        result = se_mode_snr(np.array([[1.0 + 0j]]), np.array([2.0]), np.array([2.0]))
        assert result.total == pytest.approx(1.0, rel=1e-15)
        assert result.variant == "paper"

    def test_total_is_sum_of_modes(self):
        rng = np.random.default_rng(4)
        gains = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        result = se_mode_snr(gains, 0.5, 0.1)
        assert result.total == pytest.approx(float(np.sum(result.per_mode)), rel=1e-14)
        assert np.all(result.per_mode >= 0.0)

    def test_doubling_power_adds_at_most_one_bit_per_mode(self):
        rng = np.random.default_rng(44)
        for _ in range(10):
            gains = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            powers = rng.uniform(0.1, 2.0, size=4)
            base = se_mode_snr(gains, powers, 0.3)
            doubled = se_mode_snr(gains, 2.0 * powers, 0.3)
            assert doubled.total > base.total
            assert np.all(doubled.per_mode - base.per_mode <= 1.0 + 1e-12)

    def test_nonpositive_noise_rejected(self):
        with pytest.raises(ValueError):
            se_mode_snr(np.ones((2, 2), dtype=complex), np.ones(2), np.zeros(2))


class TestSinrVariant:
    def test_aligned_matches_mode_snr_variant(self, stock_link):
        for count in (4, 8, 16):
            cfg = UcaPairConfig(K=count, V=count)
            H = build_matrix(cfg, Pose(d=STOCK_D), stock_link, "farfield")
            powers = np.full(count, 1.0 / count)
            sigma2 = 1e-7
            via_sinr = se_sinr(H, cfg, powers, sigma2)
            via_snr = se_mode_snr(mode_effective_gains(H, cfg), powers, np.full(count, sigma2))
            assert via_sinr.total == pytest.approx(via_snr.total, abs=1e-6)

    def test_misalignment_reduces_efficiency(self, stock_link):
        cfg = UcaPairConfig(K=8, V=8)
        powers = np.full(8, 1.0 / 8.0)
        sigma2 = abs(build_matrix(cfg, Pose(d=STOCK_D), stock_link).entries[0, 0]) ** 2
        aligned = se_sinr(build_matrix(cfg, Pose(d=STOCK_D), stock_link), cfg, powers, sigma2)
        tilted = se_sinr(
            build_matrix(cfg, Pose(d=STOCK_D, phi=math.radians(5.0)), stock_link), cfg, powers, sigma2
        )
        assert tilted.total < aligned.total

    def test_aligned_beats_any_tested_tilt(self, stock_link):
        cfg = UcaPairConfig(K=8, V=8)
        powers = np.full(8, 1.0 / 8.0)
        sigma2 = 1e-7
        aligned = se_sinr(build_matrix(cfg, Pose(d=STOCK_D), stock_link), cfg, powers, sigma2).total
        for phi_deg in (0.5, 1.0, 2.0, 5.0, 10.0):
            for theta_deg in (0.0, 120.0, 240.0):
                pose = Pose(d=STOCK_D, theta=math.radians(theta_deg), phi=math.radians(phi_deg))
                tilted = se_sinr(build_matrix(cfg, pose, stock_link), cfg, powers, sigma2).total
                assert tilted <= aligned

    def test_noise_washes_out_efficiency(self, stock_link):
        cfg = UcaPairConfig(K=4, V=4)
        H = build_matrix(cfg, Pose(d=STOCK_D), stock_link)
        assert se_sinr(H, cfg, np.ones(4), 1e12).total < 1e-9

    def test_monotone_in_power_and_noise(self, stock_link):
        cfg = UcaPairConfig(K=8, V=8)
        pose = Pose(d=STOCK_D, theta=0.3, phi=0.01)
        H = build_matrix(cfg, pose, stock_link)
        base_p = np.full(8, 0.125)
        values_p = [se_sinr(H, cfg, scale * base_p, 1e-7).total for scale in (0.5, 1.0, 2.0, 4.0)]
        assert all(v1 < v2 for v1, v2 in zip(values_p, values_p[1:]))
        values_n = [se_sinr(H, cfg, base_p, sigma2).total for sigma2 in (1e-8, 1e-7, 1e-6)]
        assert all(v1 > v2 for v1, v2 in zip(values_n, values_n[1:]))
        snr_values = [
            se_mode_snr(mode_effective_gains(H, cfg), base_p, np.full(8, s)).total
            for s in (1e-8, 1e-7, 1e-6)
        ]
        assert all(v1 > v2 for v1, v2 in zip(snr_values, snr_values[1:]))

    def test_rectangular_channel_rejected(self, stock_link):
        cfg = UcaPairConfig(K=4, V=8)
        H = build_matrix(cfg, Pose(d=STOCK_D), stock_link)
        with pytest.raises(ValueError):
            se_sinr(H, cfg, np.ones(4), 1e-6)


class TestApproximationReport:
    def test_distant_small_arrays_are_accurate(self, stock_link):
        cfg = UcaPairConfig(K=8, V=8, R_t=0.001, R_r=0.001)
        pose = Pose(d=1.0, theta=0.4, phi=0.01)
        report = approximation_report(cfg, pose, stock_link)
        assert report.max_rel_distance_error < 1e-5
        assert report.max_rel_gain_error < 1e-2
        assert report.mean_abs_phase_error < 1e-2

    def test_stock_geometry_reported_not_assumed(self, stock_uca, stock_link, stock_pose):
        # the stock geometry strains the expansion premise; the report
        # quantifies it instead of hiding it
        report = approximation_report(stock_uca, stock_pose, stock_link)
        assert np.isfinite(report.max_rel_distance_error)
        assert np.isfinite(report.max_rel_gain_error)
        assert np.isfinite(report.mean_abs_phase_error)
        assert report.max_rel_distance_error > 0.0

    def test_zero_tilt_equal_radii_symmetric_in_index_difference(self, stock_link):
        cfg = UcaPairConfig(K=8, V=8, R_t=0.5, R_r=0.5)
        pose = Pose(d=STOCK_D)
        exact = build_matrix(cfg, pose, stock_link, "exact").entries
        far = build_matrix(cfg, pose, stock_link, "farfield").entries
        phase_error = np.angle(far / exact)
        for v in range(8):
            for k in range(8):
                assert phase_error[v, k] == pytest.approx(
                    phase_error[(v - k) % 8, 0], rel=1e-9, abs=1e-12
                )
