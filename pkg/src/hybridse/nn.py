"""Inference-only neural network primitives on plain numpy arrays.

All image-like tensors are indexed ``[batch, channel, time, freq]``.
Convolutions use cross-correlation semantics (no kernel flip) so weights
exported from the usual deep-learning frameworks drop in unchanged.  Time
padding is causal (left only) when requested; frequency padding is always
symmetric "same"-style, total ``(kf - 1) * dilation``.  Functions preserve
the dtype of their inputs and keep no hidden state.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import InvalidInputError


@dataclass
class Conv2dParams:
    kernel: np.ndarray            # conv: [out, in/groups, kt, kf]; transpose: [in, out/groups, kt, kf]
    bias: Optional[np.ndarray] = None


@dataclass
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5


@dataclass
class GruParams:
    """One GRU direction; gate columns ordered (update, reset, candidate)."""
    w_x: np.ndarray               # [input, 3*hidden]
    w_h: np.ndarray               # [hidden, 3*hidden]
    bias: np.ndarray              # [3*hidden]

    @property
    def hidden(self) -> int:
        return self.w_h.shape[0]


def _pads(kt, kf, dt, df, causal_pad_time):
    pt = (kt - 1) * dt if causal_pad_time else 0
    total_f = (kf - 1) * df
    return pt, total_f // 2, total_f - total_f // 2


def conv2d(x: np.ndarray, p: Conv2dParams,
           stride: Tuple[int, int] = (1, 1),
           dilation: Tuple[int, int] = (1, 1),
           groups: int = 1,
           causal_pad_time: bool = True) -> np.ndarray:
    """Grouped dilated 2-D convolution (cross-correlation)."""
    if x.ndim != 4:
        raise InvalidInputError(f"expected [batch, channel, time, freq], got shape {x.shape}")
    out_ch, in_per_g, kt, kf = p.kernel.shape
    st, sf = stride
    dt, df = dilation
    if x.shape[1] != in_per_g * groups:
        raise InvalidInputError(
            f"{x.shape[1]} input channels incompatible with kernel {p.kernel.shape} and groups={groups}")
    if out_ch % groups != 0:
        raise InvalidInputError("output channels must be divisible by groups")

    pt, pf_l, pf_r = _pads(kt, kf, dt, df, causal_pad_time)
    xp = np.pad(x, ((0, 0), (0, 0), (pt, 0), (pf_l, pf_r)))
    b, _, tp, fp = xp.shape
    t_out = (tp - ((kt - 1) * dt + 1)) // st + 1
    f_out = (fp - ((kf - 1) * df + 1)) // sf + 1
    if t_out <= 0 or f_out <= 0:
        raise InvalidInputError("input smaller than the (dilated) kernel")

    o_per_g = out_ch // groups
    out = np.zeros((b, out_ch, t_out, f_out), dtype=x.dtype)
    for g in range(groups):
        xg = xp[:, g * in_per_g:(g + 1) * in_per_g]
        kg = p.kernel[g * o_per_g:(g + 1) * o_per_g]
        acc = np.zeros((b, o_per_g, t_out * f_out), dtype=x.dtype)
        for i in range(kt):
            for j in range(kf):
                patch = xg[:, :,
                           i * dt:i * dt + (t_out - 1) * st + 1:st,
                           j * df:j * df + (f_out - 1) * sf + 1:sf]
                acc += np.matmul(kg[:, :, i, j], patch.reshape(b, in_per_g, -1))
        out[:, g * o_per_g:(g + 1) * o_per_g] = acc.reshape(b, o_per_g, t_out, f_out)
    if p.bias is not None:
        out += p.bias[None, :, None, None]
    return out


def conv_transpose2d(x: np.ndarray, p: Conv2dParams,
                     stride: Tuple[int, int] = (1, 1),
                     dilation: Tuple[int, int] = (1, 1),
                     groups: int = 1,
                     causal_pad_time: bool = True) -> np.ndarray:
    """Transposed convolution: the adjoint of :func:`conv2d` with the same
    stride/dilation/padding arguments.

    Output extents are ``(n - 1) * stride + 1`` per axis (scatter-add of the
    dilated kernel, then the conv2d padding margins are trimmed), which
    restores the input extent of a matching conv2d whenever
    ``(extent - 1) % stride == 0``.
    """
    if x.ndim != 4:
        raise InvalidInputError(f"expected [batch, channel, time, freq], got shape {x.shape}")
    in_ch, o_per_g, kt, kf = p.kernel.shape
    st, sf = stride
    dt, df = dilation
    if x.shape[1] != in_ch:
        raise InvalidInputError(
            f"{x.shape[1]} input channels incompatible with kernel {p.kernel.shape}")
    if in_ch % groups != 0:
        raise InvalidInputError("input channels must be divisible by groups")

    b, _, t_in, f_in = x.shape
    pt, pf_l, pf_r = _pads(kt, kf, dt, df, causal_pad_time)
    t_full = (t_in - 1) * st + (kt - 1) * dt + 1
    f_full = (f_in - 1) * sf + (kf - 1) * df + 1
    i_per_g = in_ch // groups
    out_ch = o_per_g * groups
    full = np.zeros((b, out_ch, t_full, f_full), dtype=x.dtype)
    for g in range(groups):
        xg = x[:, g * i_per_g:(g + 1) * i_per_g]
        kg = p.kernel[g * i_per_g:(g + 1) * i_per_g]
        for i in range(kt):
            for j in range(kf):
                contrib = np.matmul(kg[:, :, i, j].T, xg.reshape(b, i_per_g, -1))
                full[:, g * o_per_g:(g + 1) * o_per_g,
                     i * dt:i * dt + (t_in - 1) * st + 1:st,
                     j * df:j * df + (f_in - 1) * sf + 1:sf] += \
                    contrib.reshape(b, o_per_g, t_in, f_in)
    out = full[:, :, pt:t_full, pf_l:f_full - pf_r]
    if p.bias is not None:
        out = out + p.bias[None, :, None, None]
    return out


def batch_norm_infer(x: np.ndarray, p: BatchNormParams) -> np.ndarray:
    """Inference batch norm over the channel axis."""
    scale = p.gamma / np.sqrt(p.running_var + p.eps)
    shift = p.beta - p.running_mean * scale
    return x * scale[None, :, None, None] + shift[None, :, None, None]


def prelu(x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Per-channel parametric ReLU."""
    alpha = np.asarray(alpha)
    return np.where(x >= 0, x, alpha[None, :, None, None] * x)


def tanh_act(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _gru_pass(x: np.ndarray, p: GruParams) -> np.ndarray:
    t_len, batch, _ = x.shape
    h_dim = p.hidden
    pre = x @ p.w_x + p.bias
    h = np.zeros((batch, h_dim), dtype=x.dtype)
    out = np.empty((t_len, batch, h_dim), dtype=x.dtype)
    wz, wr, wc = p.w_h[:, :h_dim], p.w_h[:, h_dim:2 * h_dim], p.w_h[:, 2 * h_dim:]
    for t in range(t_len):
        z = _sigmoid(pre[t, :, :h_dim] + h @ wz)
        r = _sigmoid(pre[t, :, h_dim:2 * h_dim] + h @ wr)
        c = np.tanh(pre[t, :, 2 * h_dim:] + r * (h @ wc))
        h = (1.0 - z) * c + z * h
        out[t] = h
    return out


def gru_sequence(x: np.ndarray,
                 p: Union[GruParams, Tuple[GruParams, GruParams]],
                 direction: str = "forward") -> np.ndarray:
    """Run a GRU over ``x`` of shape [time, batch, input] from a zero state.

    ``direction`` is "forward", "backward", or "bidirectional"; the latter
    takes ``p = (forward_params, backward_params)`` and concatenates both
    hidden sequences on the feature axis.
    """
    if direction == "bidirectional":
        pf, pb = p
        if x.shape[0] == 0:
            return np.empty((0, x.shape[1], pf.hidden + pb.hidden), dtype=x.dtype)
        fwd = _gru_pass(x, pf)
        bwd = _gru_pass(x[::-1], pb)[::-1]
        return np.concatenate([fwd, bwd], axis=-1)
    if direction not in ("forward", "backward"):
        raise InvalidInputError(f"unknown direction {direction!r}")
    if x.shape[0] == 0:
        return np.empty((0, x.shape[1], p.hidden), dtype=x.dtype)
    if direction == "backward":
        return _gru_pass(x[::-1], p)[::-1]
    return _gru_pass(x, p)


def channel_shuffle(x: np.ndarray, groups: int) -> np.ndarray:
    """Interleave channels across groups (ShuffleNet-style)."""
    b, c = x.shape[:2]
    if c % groups != 0:
        raise InvalidInputError(f"{c} channels not divisible by {groups} groups")
    shape = x.shape
    x = x.reshape(b, groups, c // groups, *shape[2:])
    x = np.swapaxes(x, 1, 2)
    return x.reshape(shape)
