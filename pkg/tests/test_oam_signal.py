import math

import numpy as np
import pytest

from oamlink import (
    NoiseSpec,
    Pose,
    UcaPairConfig,
    build_matrix,
    demodulate,
    modulate,
    noise_samples,
    pilot_matrix,
    transmit,
)

from conftest import STOCK_D


class TestModulate:
    def test_mode_zero_is_uniform(self):
        cfg = UcaPairConfig(K=8, V=8)
        s = np.zeros(8, dtype=complex)
        s[0] = 1.0
        np.testing.assert_allclose(modulate(s, cfg), np.full(8, 1.0 / math.sqrt(8.0)), rtol=1e-15)

    def test_single_mode_magnitude_and_phase(self):
        cfg = UcaPairConfig(K=8, V=8, a_t=0.4)
        mode = 3
        s = np.zeros(8, dtype=complex)
        s[mode] = 1.0
        x = modulate(s, cfg)
        np.testing.assert_allclose(np.abs(x), 1.0 / math.sqrt(8.0), rtol=1e-15)
        expected_phase = cfg.tx_azimuths() * mode
        np.testing.assert_allclose(np.cos(np.angle(x) - expected_phase), 1.0, atol=1e-12)

    def test_parseval(self):
        rng = np.random.default_rng(15)
        for count in (4, 8, 16):
            cfg = UcaPairConfig(K=count, V=count, a_t=0.9, a_r=0.9)
            s = rng.normal(size=count) + 1j * rng.normal(size=count)
            x = modulate(s, cfg)
            assert np.sum(np.abs(x) ** 2) == pytest.approx(np.sum(np.abs(s) ** 2), rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            modulate(np.ones(3), UcaPairConfig(K=4, V=4))


class TestNoise:
    def test_zero_variance_is_exact_propagation(self, stock_uca, stock_link, stock_pose):
        H = build_matrix(stock_uca, stock_pose, stock_link)
        x = np.ones(stock_uca.K, dtype=complex)
        np.testing.assert_array_equal(transmit(H, x, NoiseSpec(sigma2=0.0, seed=1)), H.entries @ x)

    def test_fixed_seed_reproducible(self, stock_uca, stock_link, stock_pose):
        H = build_matrix(stock_uca, stock_pose, stock_link)
        x = np.ones(stock_uca.K, dtype=complex)
        noise = NoiseSpec(sigma2=1e-6, seed=99)
        np.testing.assert_array_equal(transmit(H, x, noise), transmit(H, x, noise))

    def test_block_and_column_generation_agree(self):
        # keyed per (element, slot): slicing a block equals generating columns
        noise = NoiseSpec(sigma2=0.5, seed=4)
        block = noise_samples(noise, 16, 8)
        for slot in range(8):
            np.testing.assert_array_equal(block[:, slot], noise_samples(noise, 16, 1, first_slot=slot)[:, 0])

    def test_empirical_variance(self):
        noise = NoiseSpec(sigma2=0.37, seed=123)
        samples = noise_samples(noise, 100, 1000)
        var = float(np.mean(np.abs(samples) ** 2))
        assert abs(var - 0.37) / 0.37 < 0.02
        assert abs(np.mean(samples)) < 0.01

    def test_different_seeds_uncorrelated(self):
        a = noise_samples(NoiseSpec(sigma2=1.0, seed=1), 100, 100)
        b = noise_samples(NoiseSpec(sigma2=1.0, seed=2), 100, 100)
        rho = np.corrcoef(a.real.ravel(), b.real.ravel())[0, 1]
        assert abs(rho) < 0.05

    def test_real_imag_balanced(self):
        samples = noise_samples(NoiseSpec(sigma2=2.0, seed=8), 200, 500)
        assert np.var(samples.real) == pytest.approx(1.0, rel=0.03)
        assert np.var(samples.imag) == pytest.approx(1.0, rel=0.03)

    def test_dimension_mismatch(self, stock_uca, stock_link, stock_pose):
        H = build_matrix(stock_uca, stock_pose, stock_link)
        with pytest.raises(ValueError):
            transmit(H, np.ones(5, dtype=complex), NoiseSpec(sigma2=0.0))

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            NoiseSpec(sigma2=-1.0)


class TestDemodulate:
    def test_unitary_round_trip(self):
        cfg = UcaPairConfig(K=8, V=8, a_t=0.6, a_r=0.6)
        rng = np.random.default_rng(2)
        s = rng.normal(size=8) + 1j * rng.normal(size=8)
        received = transmit(np.eye(8, dtype=complex), modulate(s, cfg), NoiseSpec(sigma2=0.0))
        np.testing.assert_allclose(demodulate(received, cfg), s, rtol=1e-12, atol=1e-12)

    def test_aligned_farfield_is_mode_diagonal(self, stock_link):
        cfg = UcaPairConfig(K=8, V=8)
        H = build_matrix(cfg, Pose(d=STOCK_D), stock_link, "farfield")
        leak = []
        for mode in range(8):
            s = np.zeros(8, dtype=complex)
            s[mode] = 1.0
            out = demodulate(transmit(H, modulate(s, cfg), NoiseSpec(sigma2=0.0)), cfg)
            others = np.delete(np.abs(out), mode)
            leak.append(np.max(others) / abs(out[mode]))
        assert max(leak) <= 1e-10

    def test_misaligned_leaks_across_modes(self, stock_link):
        cfg = UcaPairConfig(K=8, V=8)
        pose = Pose(d=STOCK_D, theta=0.0, phi=math.radians(5.0))
        H = build_matrix(cfg, pose, stock_link, "farfield")
        s = np.zeros(8, dtype=complex)
        s[1] = 1.0
        out = demodulate(transmit(H, modulate(s, cfg), NoiseSpec(sigma2=0.0)), cfg)
        others = np.delete(np.abs(out), 1)
        assert np.max(others) / abs(out[1]) > 1e-3

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            demodulate(np.ones(3), UcaPairConfig(K=4, V=4))


class TestPilotMatrix:
    @pytest.mark.parametrize("count", [1, 4, 8, 16])
    def test_orthogonality(self, count):
        cfg = UcaPairConfig(K=count, V=count)
        power = 0.3
        X = pilot_matrix(cfg, power)
        np.testing.assert_allclose(X @ X.conj().T, power * count * np.eye(count), atol=1e-12)

    def test_scalar_case(self):
        X = pilot_matrix(UcaPairConfig(K=1, V=1), 4.0)
        assert X.shape == (1, 1)
        assert X[0, 0] == pytest.approx(2.0)

    @pytest.mark.parametrize("count", [2, 4, 8, 16])
    def test_condition_number_one(self, count):
        X = pilot_matrix(UcaPairConfig(K=count, V=count), 1.7)
        singular = np.linalg.svd(X, compute_uv=False)
        assert singular[0] / singular[-1] == pytest.approx(1.0, rel=1e-12)

    def test_nonpositive_power_rejected(self):
        with pytest.raises(ValueError):
            pilot_matrix(UcaPairConfig(K=4, V=4), 0.0)


class TestEndToEndConsistency:
    def test_mode_gain_superposition_matches_element_propagation(self, stock_uca, stock_link, stock_pose):
        from oamlink import mode_effective_gains

        rng = np.random.default_rng(31)
        H = build_matrix(stock_uca, stock_pose, stock_link, "farfield")
        gains = mode_effective_gains(H, stock_uca)
        for _ in range(5):
            s = rng.normal(size=stock_uca.K) + 1j * rng.normal(size=stock_uca.K)
            via_elements = transmit(H, modulate(s, stock_uca), NoiseSpec(sigma2=0.0))
            via_modes = gains @ s
            np.testing.assert_allclose(via_elements, via_modes, rtol=1e-12)
