"""Inference primitives against naive-loop references."""

import numpy as np
import pytest

import oracles
from hybridse.errors import InvalidInputError
from hybridse.nn import (BatchNormParams, Conv2dParams, GruParams,
                         batch_norm_infer, channel_shuffle, conv2d,
                         conv_transpose2d, gru_sequence, prelu, tanh_act)


def rel_linf(got, want):
    scale = max(np.max(np.abs(want)), 1e-12)
    return np.max(np.abs(got - want)) / scale


class TestConv2d:
    def test_depthwise_identity_kernel(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 6, 8, 10))
        p = Conv2dParams(kernel=np.ones((6, 1, 1, 1)))
        np.testing.assert_array_equal(conv2d(x, p, groups=6), x)

    def test_zero_kernel_with_bias(self):
        x = np.random.default_rng(1).standard_normal((1, 3, 5, 7))
        bias = np.array([1.5, -2.0, 0.25])
        p = Conv2dParams(kernel=np.zeros((3, 3, 2, 2)), bias=bias)
        out = conv2d(x, p)
        for c in range(3):
            np.testing.assert_allclose(out[0, c], bias[c])

    def test_grouped_dilated_matches_naive(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((2, 4, 9, 6))
        k = rng.standard_normal((6, 2, 3, 3))
        b = rng.standard_normal(6)
        got = conv2d(x, Conv2dParams(k, b), dilation=(2, 1), groups=2)
        want = oracles.conv2d_naive(x, k, b, dilation=(2, 1), groups=2)
        assert rel_linf(got, want) < 1e-5

    def test_strided_matches_naive(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((1, 2, 7, 13))
        k = rng.standard_normal((4, 2, 1, 5))
        got = conv2d(x, Conv2dParams(k), stride=(1, 2))
        want = oracles.conv2d_naive(x, k, stride=(1, 2))
        assert got.shape == want.shape == (1, 4, 7, 7)
        assert rel_linf(got, want) < 1e-5

    def test_linearity_without_bias(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((1, 3, 6, 6))
        y = rng.standard_normal((1, 3, 6, 6))
        p = Conv2dParams(rng.standard_normal((5, 3, 3, 3)))
        lhs = conv2d(1.7 * x - 0.3 * y, p)
        rhs = 1.7 * conv2d(x, p) - 0.3 * conv2d(y, p)
        assert np.max(np.abs(lhs - rhs)) < 1e-9

    def test_causal_padding_blocks_future(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((1, 2, 12, 5))
        p = Conv2dParams(rng.standard_normal((3, 2, 3, 3)))
        base = conv2d(x, p, dilation=(2, 1))
        cut = 6
        x2 = x.copy()
        x2[:, :, cut:, :] = rng.standard_normal((1, 2, 12 - cut, 5))
        pert = conv2d(x2, p, dilation=(2, 1))
        np.testing.assert_array_equal(base[:, :, :cut], pert[:, :, :cut])

    def test_group_mismatch_rejected(self):
        x = np.zeros((1, 5, 4, 4))
        p = Conv2dParams(np.zeros((4, 2, 1, 1)))
        with pytest.raises(InvalidInputError):
            conv2d(x, p, groups=2)

    def test_dtype_preserved(self):
        x = np.zeros((1, 2, 4, 4), dtype=np.float32)
        p = Conv2dParams(np.zeros((2, 2, 1, 1), dtype=np.float32))
        assert conv2d(x, p).dtype == np.float32


class TestConvTranspose2d:
    def test_identity_kernel(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((2, 3, 5, 5))
        p = Conv2dParams(np.stack([np.eye(3)[:, :, None, None][i] for i in range(3)]))
        out = conv_transpose2d(x, p)
        np.testing.assert_allclose(out, x, atol=1e-12)

    def test_inverts_encoder_downsampling_extent(self):
        # freq chain 129 -> 65 -> 33 under (1,5)/(1,2) comes back 33 -> 65 -> 129
        rng = np.random.default_rng(7)
        k = rng.standard_normal((4, 4, 1, 5))
        for f_in in (33, 65):
            x = rng.standard_normal((1, 4, 6, f_in))
            out = conv_transpose2d(x, Conv2dParams(k), stride=(1, 2))
            assert out.shape[-1] == (f_in - 1) * 2 + 1

    def test_matches_scatter_add_naive(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((2, 4, 5, 6))
        k = rng.standard_normal((4, 3, 2, 3))
        b = rng.standard_normal(6)
        got = conv_transpose2d(x, Conv2dParams(k, b), stride=(1, 2), groups=2)
        want = oracles.conv_transpose2d_naive(x, k, b, stride=(1, 2), groups=2)
        assert rel_linf(got, want) < 1e-5

    def test_adjoint_of_conv2d(self):
        # <conv(x), y> == <x, conv_transpose(y)>; the two ops share one
        # kernel array under the [out, in/g] vs [in, out/g] layouts
        rng = np.random.default_rng(9)
        x = rng.standard_normal((1, 4, 8, 9))
        k = rng.standard_normal((6, 2, 3, 3))
        fwd = conv2d(x, Conv2dParams(k), stride=(1, 2), dilation=(2, 1), groups=2)
        y = rng.standard_normal(fwd.shape)
        back = conv_transpose2d(y, Conv2dParams(k), stride=(1, 2),
                                dilation=(2, 1), groups=2)
        assert back.shape == x.shape
        assert np.dot(fwd.ravel(), y.ravel()) == pytest.approx(
            np.dot(x.ravel(), back.ravel()), rel=1e-9)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            conv_transpose2d(np.zeros((1, 3, 4, 4)),
                             Conv2dParams(np.zeros((4, 2, 1, 1))))


class TestBatchNorm:
    def test_identity_params(self):
        x = np.random.default_rng(10).standard_normal((2, 3, 4, 5))
        p = BatchNormParams(gamma=np.ones(3), beta=np.zeros(3),
                            running_mean=np.zeros(3), running_var=np.ones(3),
                            eps=0.0)
        np.testing.assert_allclose(batch_norm_infer(x, p), x, atol=1e-12)

    def test_input_at_mean_returns_beta(self):
        mean = np.array([1.0, -2.0])
        beta = np.array([0.5, 3.0])
        x = np.broadcast_to(mean[None, :, None, None], (1, 2, 3, 3)).copy()
        p = BatchNormParams(gamma=np.ones(2), beta=beta, running_mean=mean,
                            running_var=np.ones(2))
        out = batch_norm_infer(x, p)
        for c in range(2):
            np.testing.assert_allclose(out[0, c], beta[c], atol=1e-12)

    def test_matches_naive(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((2, 4, 3, 6))
        p = BatchNormParams(gamma=rng.standard_normal(4),
                            beta=rng.standard_normal(4),
                            running_mean=rng.standard_normal(4),
                            running_var=rng.uniform(0.1, 2.0, 4),
                            eps=1e-5)
        want = oracles.batch_norm_naive(x, p.gamma, p.beta, p.running_mean,
                                        p.running_var, p.eps)
        assert rel_linf(batch_norm_infer(x, p), want) < 1e-5


class TestActivations:
    def test_prelu_alpha_one_is_identity(self):
        x = np.random.default_rng(12).standard_normal((1, 3, 4, 4))
        np.testing.assert_array_equal(prelu(x, np.ones(3)), x)

    def test_prelu_nonnegative_input_unchanged(self):
        x = np.abs(np.random.default_rng(13).standard_normal((1, 2, 4, 4)))
        np.testing.assert_array_equal(prelu(x, np.full(2, 0.25)), x)

    def test_prelu_matches_naive(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal((2, 3, 5, 4))
        alpha = rng.uniform(0.0, 1.0, 3)
        want = oracles.prelu_naive(x, alpha)
        np.testing.assert_array_equal(prelu(x, alpha), want)

    def test_tanh_range_and_values(self):
        x = np.random.default_rng(15).standard_normal((1, 2, 3, 3)) * 5
        out = tanh_act(x)
        assert np.all(np.abs(out) < 1.0)
        np.testing.assert_allclose(out, np.vectorize(np.tanh)(x), atol=1e-12)


class TestGru:
    @staticmethod
    def random_params(rng, d_in, hidden, scale=0.5):
        return GruParams(w_x=scale * rng.standard_normal((d_in, 3 * hidden)),
                         w_h=scale * rng.standard_normal((hidden, 3 * hidden)),
                         bias=scale * rng.standard_normal(3 * hidden))

    def test_zero_weights_give_zero_outputs(self):
        p = GruParams(w_x=np.zeros((4, 12)), w_h=np.zeros((4, 12)),
                      bias=np.zeros(12))
        x = np.random.default_rng(16).standard_normal((7, 2, 4))
        np.testing.assert_array_equal(gru_sequence(x, p), 0.0)

    def test_single_step_matches_scalar_recurrence(self):
        rng = np.random.default_rng(17)
        p = self.random_params(rng, 3, 2, scale=0.1)
        x = rng.standard_normal((1, 1, 3))
        got = gru_sequence(x, p)
        want = oracles.gru_naive(x, p.w_x, p.w_h, p.bias)
        assert np.max(np.abs(got - want)) < 1e-6

    def test_sequence_matches_naive(self):
        rng = np.random.default_rng(18)
        p = self.random_params(rng, 5, 4)
        x = rng.standard_normal((9, 3, 5))
        got = gru_sequence(x, p)
        want = oracles.gru_naive(x, p.w_x, p.w_h, p.bias)
        assert rel_linf(got, want) < 1e-5

    def test_backward_is_time_reversed_forward(self):
        rng = np.random.default_rng(19)
        p = self.random_params(rng, 4, 3)
        x = rng.standard_normal((6, 2, 4))
        bwd = gru_sequence(x, p, direction="backward")
        fwd_rev = gru_sequence(x[::-1].copy(), p)[::-1]
        np.testing.assert_allclose(bwd, fwd_rev, atol=1e-12)

    def test_bidirectional_concatenates(self):
        rng = np.random.default_rng(20)
        pf = self.random_params(rng, 4, 3)
        pb = self.random_params(rng, 4, 3)
        x = rng.standard_normal((5, 2, 4))
        out = gru_sequence(x, (pf, pb), direction="bidirectional")
        assert out.shape == (5, 2, 6)
        np.testing.assert_allclose(out[..., :3], gru_sequence(x, pf), atol=1e-12)
        np.testing.assert_allclose(out[..., 3:],
                                   gru_sequence(x, pb, direction="backward"),
                                   atol=1e-12)

    def test_empty_sequence(self):
        p = self.random_params(np.random.default_rng(21), 4, 3)
        out = gru_sequence(np.zeros((0, 2, 4)), p)
        assert out.shape == (0, 2, 3)

    def test_unknown_direction_rejected(self):
        p = self.random_params(np.random.default_rng(22), 2, 2)
        with pytest.raises(InvalidInputError):
            gru_sequence(np.zeros((1, 1, 2)), p, direction="sideways")


class TestChannelShuffle:
    def test_single_group_is_identity(self):
        x = np.random.default_rng(23).standard_normal((2, 6, 3, 3))
        np.testing.assert_array_equal(channel_shuffle(x, 1), x)

    def test_four_channels_two_groups(self):
        x = np.arange(4, dtype=float)[None, :, None, None]
        out = channel_shuffle(x, 2)
        np.testing.assert_array_equal(out[0, :, 0, 0], [0, 2, 1, 3])

    def test_inverse_restores_order(self):
        rng = np.random.default_rng(24)
        for c, g in [(4, 2), (6, 2), (6, 3), (8, 4)]:
            x = rng.standard_normal((1, c, 2, 2))
            np.testing.assert_array_equal(
                channel_shuffle(channel_shuffle(x, g), c // g), x)

    def test_matches_naive(self):
        rng = np.random.default_rng(25)
        x = rng.standard_normal((2, 8, 3, 4))
        np.testing.assert_array_equal(channel_shuffle(x, 4),
                                      oracles.channel_shuffle_naive(x, 4))

    def test_divisibility_enforced(self):
        with pytest.raises(InvalidInputError):
            channel_shuffle(np.zeros((1, 5, 2, 2)), 2)
