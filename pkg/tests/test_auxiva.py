"""Auxiliary-function IVA: sweep algebra, projection back, source ordering."""

import numpy as np
import pytest

import oracles
from conftest import instantaneous_scene, separate_to_waves
from hybridse import (IvaConfig, StftConfig, auxiva_separate, demix, istft,
                      iva_macs_per_second, iva_sweep, order_sources,
                      projection_back, si_snr, stft)
from hybridse.errors import (DegenerateInputError, InvalidInputError,
                             NumericalError)


def identity_w(n_bins=257):
    return np.tile(np.eye(2, dtype=np.complex128), (n_bins, 1, 1))


def random_spec(rng, frames=40, bins=257, scale=1.0):
    shape = (2, frames, bins)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


class TestConfig:
    def test_defaults(self):
        cfg = IvaConfig()
        assert cfg.iterations == 20
        assert cfg.eps == 1e-8
        assert cfg.contrast == "laplace"
        assert cfg.ref_channel == 0

    @pytest.mark.parametrize("kwargs", [
        {"iterations": -1}, {"eps": 0.0}, {"contrast": "cauchy"},
        {"ref_channel": 2},
    ])
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(InvalidInputError):
            IvaConfig(**kwargs)


class TestDemix:
    def test_rows_act_as_conjugated_vectors(self):
        spec = np.zeros((2, 1, 1), dtype=complex)
        spec[0, 0, 0] = 2.0 + 1.0j
        spec[1, 0, 0] = -1.0j
        w = np.array([[[1.0, 2.0j], [0.5, -1.0]]], dtype=complex)
        out = demix(spec, w)
        assert out[0, 0, 0] == pytest.approx((2 + 1j) + 2j * (-1j))
        assert out[1, 0, 0] == pytest.approx(0.5 * (2 + 1j) - (-1j))

    def test_identity_keeps_channels(self):
        spec = random_spec(np.random.default_rng(0), frames=5)
        np.testing.assert_array_equal(demix(spec, identity_w()), spec)


class TestSweep:
    def test_normalization_after_each_sweep(self):
        rng = np.random.default_rng(1)
        spec = random_spec(rng)
        w = identity_w()
        for _ in range(3):
            w, v = iva_sweep(spec, w)
            for m in range(2):
                wm = np.conj(w[:, m, :])
                quad = np.real(np.einsum("ka,kab,kb->k", np.conj(wm), v[m], wm))
                assert np.max(np.abs(quad - 1.0)) < 1e-6

    def test_constant_two_frame_input_completes(self):
        # rank-deficient covariance goes through the regularized retry and
        # still satisfies the unit quadratic form
        spec = np.ones((2, 2, 8), dtype=complex)
        spec[1] *= 1j
        w, v = iva_sweep(spec, identity_w(8), IvaConfig(iterations=1))
        for m in range(2):
            wm = np.conj(w[:, m, :])
            quad = np.real(np.einsum("ka,kab,kb->k", np.conj(wm), v[m], wm))
            np.testing.assert_allclose(quad, 1.0, atol=1e-6)

    def test_single_frame_matches_adjugate_oracle(self):
        # one frame of unit-magnitude uncorrelated channels: the weighted
        # covariance is a scaled outer product plus the documented
        # trace-scaled ridge; the 2x2 solve must agree with the closed-form
        # adjugate inverse applied to that system
        y = np.array([1.0 + 0.0j, 0.0 + 1.0j])
        spec = y[:, None, None]
        cfg = IvaConfig()
        w, v = iva_sweep(spec, identity_w(1), cfg)

        # each source's envelope is the magnitude of its own channel, 1 here,
        # so both weighted covariances equal the observation outer product
        # plus the documented trace-scaled ridge
        outer = np.outer(y, np.conj(y))
        lam = cfg.eps * np.real(np.trace(outer)) / 2.0 + cfg.eps
        v_expect = outer + lam * np.eye(2)
        np.testing.assert_allclose(v[0][0], v_expect, atol=1e-12)
        np.testing.assert_allclose(v[1][0], v_expect, atol=1e-12)

        wm = oracles.inverse_2x2(v_expect) @ np.array([1.0, 0.0])
        wm = wm / np.sqrt(np.real(np.conj(wm) @ v_expect @ wm))
        np.testing.assert_allclose(w[0, 0, :], np.conj(wm), atol=1e-10)

    def test_scale_equivariance_at_convergence(self):
        rng = np.random.default_rng(2)
        n = 32000
        env = np.repeat(rng.exponential(1.0, 41), 800)[:n] + 0.05
        y = np.stack([rng.laplace(size=n) * env + 0.4 * rng.standard_normal(n),
                      rng.standard_normal(n)])
        spec = stft(y, StftConfig())
        w1, w3 = identity_w(), identity_w()
        for _ in range(30):
            w1, _ = iva_sweep(spec, w1)
            w3, _ = iva_sweep(3.0 * spec, w3)
        scale = np.max(np.abs(w1))
        assert np.max(np.abs(3.0 * w3 - w1)) / scale < 1e-6
        out1 = demix(spec, w1)
        out3 = demix(3.0 * spec, w3)
        assert np.max(np.abs(out3 - out1)) / np.max(np.abs(out1)) < 1e-6

    def test_no_frames_rejected(self):
        with pytest.raises(DegenerateInputError):
            iva_sweep(np.zeros((2, 0, 4), dtype=complex), identity_w(4))


class TestSeparate:
    def test_already_separated_keeps_w_near_diagonal(self):
        # a diagonal mixture of independent nonstationary Laplacian sources
        # should leave the demixing solution close to diagonal in every bin
        rng = np.random.default_rng(7)
        n = 160000
        blocks = n // 640 + 1
        s = np.stack([
            rng.laplace(size=n) * (np.repeat(rng.exponential(1.0, blocks), 640)[:n] + 0.05),
            rng.laplace(size=n) * (np.repeat(rng.exponential(1.0, blocks), 640)[:n] + 0.05),
        ])
        spec = stft(s, StftConfig())
        w = identity_w()
        for _ in range(20):
            w, _ = iva_sweep(spec, w)
        ratio0 = np.abs(w[:, 0, 1]) / np.abs(w[:, 0, 0])
        ratio1 = np.abs(w[:, 1, 0]) / np.abs(w[:, 1, 1])
        assert max(ratio0.max(), ratio1.max()) <= 0.1

    def test_snr_improvement_on_instantaneous_mixtures(self):
        cfg = StftConfig()
        gains = []
        for seed in range(7):
            mix, speech_ref, _ = instantaneous_scene(seed)
            waves = separate_to_waves(mix)
            before = si_snr(mix[0], speech_ref)
            gains.append(si_snr(waves[0], speech_ref) - before)
        assert np.median(gains) >= 5.0

    def test_permutation_covariance(self):
        # swapping the input channels permutes the unordered source set when
        # projection back targets the same physical microphone
        mix, _, _ = instantaneous_scene(3)
        cfg = StftConfig()
        ya, _ = auxiva_separate(stft(mix, cfg), IvaConfig(iterations=30, ref_channel=1))
        yb, _ = auxiva_separate(stft(mix[::-1].copy(), cfg),
                                IvaConfig(iterations=30, ref_channel=0))
        direct = max(np.max(np.abs(ya[0] - yb[0])), np.max(np.abs(ya[1] - yb[1])))
        crossed = max(np.max(np.abs(ya[0] - yb[1])), np.max(np.abs(ya[1] - yb[0])))
        assert min(direct, crossed) / np.max(np.abs(ya)) < 1e-6

    def test_determinism(self):
        mix, _, _ = instantaneous_scene(4)
        spec = stft(mix, StftConfig())
        y1, w1 = auxiva_separate(spec, IvaConfig(iterations=5))
        y2, w2 = auxiva_separate(spec, IvaConfig(iterations=5))
        np.testing.assert_array_equal(y1, y2)
        np.testing.assert_array_equal(w1, w2)

    def test_single_channel_rejected(self):
        with pytest.raises(InvalidInputError):
            auxiva_separate(np.zeros((1, 10, 257), dtype=complex))

    def test_all_zero_rejected(self):
        with pytest.raises(DegenerateInputError):
            auxiva_separate(np.zeros((2, 10, 257), dtype=complex))

    def test_needs_two_frames(self):
        with pytest.raises(InvalidInputError):
            auxiva_separate(np.ones((2, 1, 257), dtype=complex))


class TestProjectionBack:
    def test_identity_w_keeps_reference_image(self):
        # under the decomposition convention source m is scaled by the
        # mixing-matrix entry A[ref, m]; for W = I that keeps the reference
        # source exactly and assigns the other source no image at that mic,
        # so the two images still sum to the reference channel
        y = random_spec(np.random.default_rng(5), frames=6, bins=16)
        out = projection_back(y, identity_w(16), ref_channel=0)
        np.testing.assert_array_equal(out[0], y[0])
        np.testing.assert_array_equal(out[1], 0.0 * y[1])

    def test_decomposition_sums_to_reference(self):
        rng = np.random.default_rng(6)
        spec = random_spec(rng, frames=12, bins=32)
        w = (rng.standard_normal((32, 2, 2)) + 1j * rng.standard_normal((32, 2, 2)))
        for ref in (0, 1):
            proj = projection_back(demix(spec, w), w, ref)
            resid = proj[0] + proj[1] - spec[ref]
            assert np.max(np.abs(resid)) < 1e-6

    def test_diagonal_w_scales_by_inverse_entry(self):
        y = random_spec(np.random.default_rng(7), frames=4, bins=8)
        w = np.tile(np.diag([2.0 + 0j, 0.5 + 0j]), (8, 1, 1))
        # at its own reference microphone each source is undone by the
        # diagonal inverse entry: 1/2 for source 0, 2 for source 1
        np.testing.assert_allclose(projection_back(y, w, 0)[0], 0.5 * y[0])
        np.testing.assert_allclose(projection_back(y, w, 1)[1], 2.0 * y[1])

    def test_singular_w_raises_with_bin(self):
        y = random_spec(np.random.default_rng(8), frames=3, bins=4)
        w = identity_w(4)
        w[2] = 0.0
        with pytest.raises(NumericalError, match="bin"):
            projection_back(y, w, 0)

    def test_bad_ref_channel(self):
        with pytest.raises(InvalidInputError):
            projection_back(random_spec(np.random.default_rng(9), 3, 4),
                            identity_w(4), ref_channel=5)


class TestOrderSources:
    @staticmethod
    def enveloped_spec(rng, env):
        frames = len(env)
        base = rng.standard_normal((frames, 64)) + 1j * rng.standard_normal((frames, 64))
        return base * env[:, None]

    def test_heavy_tailed_envelope_first(self):
        rng = np.random.default_rng(10)
        lap = self.enveloped_spec(rng, rng.laplace(size=400))
        gau = self.enveloped_spec(rng, rng.standard_normal(400))
        perm = order_sources(np.stack([lap, gau]))
        np.testing.assert_array_equal(perm, [0, 1])
        swapped = order_sources(np.stack([gau, lap]))
        np.testing.assert_array_equal(swapped, [1, 0])

    def test_identical_channels_tie_break(self):
        rng = np.random.default_rng(11)
        ch = self.enveloped_spec(rng, rng.standard_normal(100))
        perm = order_sources(np.stack([ch, ch]))
        np.testing.assert_array_equal(perm, [0, 1])

    def test_matches_kurtosis_oracle(self):
        rng = np.random.default_rng(12)
        y = np.stack([self.enveloped_spec(rng, rng.standard_normal(200)),
                      self.enveloped_spec(rng, rng.laplace(size=200))])
        env = np.sqrt(np.sum(np.abs(y) ** 2, axis=2))
        k = [oracles.kurtosis_naive(env[m]) for m in range(2)]
        expect = [0, 1] if k[0] >= k[1] else [1, 0]
        np.testing.assert_array_equal(order_sources(y), expect)


class TestMacs:
    def test_zero_iterations(self):
        assert iva_macs_per_second(IvaConfig(iterations=0)) == 0.0

    def test_default_within_documented_bracket(self):
        cfg = IvaConfig()
        per_iter = iva_macs_per_second(cfg) / cfg.iterations / 1e6
        assert 0.05 <= per_iter <= 2.0

    def test_linear_in_frame_rate(self):
        cfg = IvaConfig()
        base = iva_macs_per_second(cfg, StftConfig())
        double = iva_macs_per_second(cfg, StftConfig(hop=128))
        assert double == 2.0 * base

    def test_linear_in_iterations(self):
        assert (iva_macs_per_second(IvaConfig(iterations=40))
                == 2.0 * iva_macs_per_second(IvaConfig(iterations=20)))
