"""Convolution -> GRU -> multi-head attention branch.

All functions take sequences as ``L x width`` tensors plus a 0/1 mask of
length ``L``.  Weight matrices are stored input-major (``in x out``) and
applied as ``x @ W``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError, ContractError, DimensionError
from .tensor import Tensor

MASK_FILL = -1e9


@dataclass
class ConvBankParams:
    weights: dict[int, Tensor]  # kernel size -> F x k x d
    biases: dict[int, Tensor]  # kernel size -> F

    @property
    def kernel_sizes(self) -> list[int]:
        return sorted(self.weights)

    @property
    def out_channels(self) -> int:
        return sum(self.weights[k].shape[0] for k in self.kernel_sizes)

    def named(self, prefix="conv"):
        out = {}
        for k in self.kernel_sizes:
            out[f"{prefix}.k{k}.weight"] = self.weights[k]
            out[f"{prefix}.k{k}.bias"] = self.biases[k]
        return out


@dataclass
class GruParams:
    W_z: Tensor
    W_r: Tensor
    W_h: Tensor
    U_z: Tensor
    U_r: Tensor
    U_h: Tensor
    b_z: Tensor | None = None
    b_r: Tensor | None = None
    b_h: Tensor | None = None

    @property
    def input_dim(self) -> int:
        return self.W_z.shape[0]

    @property
    def hidden(self) -> int:
        return self.U_z.shape[0]

    def named(self, prefix="gru"):
        out = {}
        for key in ("W_z", "W_r", "W_h", "U_z", "U_r", "U_h", "b_z", "b_r", "b_h"):
            value = getattr(self, key)
            if value is not None:
                out[f"{prefix}.{key}"] = value
        return out


@dataclass
class MhaParams:
    W_q: Tensor
    W_k: Tensor
    W_v: Tensor
    W_o: Tensor
    heads: int = field(default=4)

    def named(self, prefix="mha"):
        return {f"{prefix}.{k}": getattr(self, k) for k in ("W_q", "W_k", "W_v", "W_o")}


def _valid(mask, L) -> np.ndarray:
    m = np.asarray(mask, dtype=np.float64).reshape(-1)
    if m.shape[0] != L:
        raise DimensionError(f"mask length {m.shape[0]} does not match sequence length {L}")
    return m


def conv_bank(E: Tensor, params: ConvBankParams) -> Tensor:
    """Same-padded multi-width 1-D convolution with ReLU.

    Output row i for kernel size k is ``relu(sum_j W[:, j] . E[i + j] + b)``
    for j in [0, k), with rows past the end read as zeros.  Per-kernel maps
    are concatenated along channels in ascending kernel order.
    """
    L, d = E.shape
    if L < 1:
        raise DimensionError("empty sequence")
    maps = []
    for k in params.kernel_sizes:
        W = params.weights[k]
        F, kk, wd = W.shape
        if wd != d or kk != k:
            raise DimensionError(f"kernel {k} weights {W.shape} do not fit embeddings {E.shape}")
        padded = T.pad_rows(E, 0, k - 1)
        unfolded = T.concat([T.slice_rows(padded, j, j + L) for j in range(k)], axis=1)
        kernel = T.transpose(T.reshape(W, (F, k * d)))
        maps.append(T.relu(T.add(T.matmul(unfolded, kernel), params.biases[k])))
    return maps[0] if len(maps) == 1 else T.concat(maps, axis=1)


def global_max_pool(feature_maps: Tensor, mask) -> Tensor:
    m = _valid(mask, feature_maps.shape[0])
    idx = np.flatnonzero(m)
    if idx.size == 0:
        raise ContractError("max pool over a fully masked sequence")
    return T.reduce("max", T.take_rows(feature_maps, idx), axis=0)


def gru_cell(x_t: Tensor, h_prev: Tensor, params: GruParams) -> Tensor:
    """One GRU step on row vectors (``1 x C`` input, ``1 x h`` state)."""
    x_t = _as_row(x_t)
    h_prev = _as_row(h_prev)
    if x_t.shape[1] != params.input_dim or h_prev.shape[1] != params.hidden:
        raise DimensionError(
            f"gru_cell got x {x_t.shape}, h {h_prev.shape} for params C={params.input_dim}, h={params.hidden}"
        )
    return _step(
        _affine(x_t, params.W_z, params.b_z),
        _affine(x_t, params.W_r, params.b_r),
        _affine(x_t, params.W_h, params.b_h),
        h_prev,
        params,
    )


def _step(xz, xr, xh, h_prev, p: GruParams) -> Tensor:
    z = T.sigmoid(T.add(xz, T.matmul(h_prev, p.U_z)))
    r = T.sigmoid(T.add(xr, T.matmul(h_prev, p.U_r)))
    cand = T.tanh(T.add(xh, T.matmul(T.mul(r, h_prev), p.U_h)))
    # (1 - z) * h_prev + z * cand == h_prev + z * (cand - h_prev)
    return T.add(h_prev, T.mul(z, T.sub(cand, h_prev)))


def _affine(x, W, b):
    y = T.matmul(x, W)
    return y if b is None else T.add(y, b)


def _as_row(x: Tensor) -> Tensor:
    return T.reshape(x, (1, x.shape[0])) if x.data.ndim == 1 else x


def _run(seq: Tensor, m: np.ndarray, p: GruParams, reverse: bool) -> Tensor:
    L = seq.shape[0]
    xz, xr, xh = (_affine(seq, W, b) for W, b in ((p.W_z, p.b_z), (p.W_r, p.b_r), (p.W_h, p.b_h)))
    h = Tensor(np.zeros((1, p.hidden)))
    zero_row = Tensor(np.zeros((1, p.hidden)))
    rows: list[Tensor] = [zero_row] * L
    steps = range(L - 1, -1, -1) if reverse else range(L)
    for t in steps:
        if not m[t]:
            continue  # state carries over, output row stays zero
        h = _step(T.slice_rows(xz, t, t + 1), T.slice_rows(xr, t, t + 1), T.slice_rows(xh, t, t + 1), h, p)
        rows[t] = h
    return T.concat(rows, axis=0)


def gru_forward(
    seq: Tensor,
    mask,
    params: GruParams,
    bidirectional: bool = False,
    reverse_params: GruParams | None = None,
) -> Tensor:
    """Run the recurrence over valid positions from a zero initial state.

    Returns ``L x h``, or ``L x 2h`` (forward states then backward states)
    when ``bidirectional`` is set, which requires ``reverse_params``.
    """
    L, C = seq.shape
    if C != params.input_dim:
        raise DimensionError(f"sequence width {C} does not match GRU input dim {params.input_dim}")
    m = _valid(mask, L)
    out = _run(seq, m, params, reverse=False)
    if not bidirectional:
        return out
    if reverse_params is None:
        raise ConfigError("bidirectional GRU needs reverse_params")
    return T.concat([out, _run(seq, m, reverse_params, reverse=True)], axis=1)


def multi_head_attention(H: Tensor, mask, params: MhaParams) -> Tensor:
    L, d = H.shape
    heads = params.heads
    if heads < 1 or d % heads:
        raise ConfigError(f"width {d} is not divisible by {heads} heads")
    if params.W_q.shape[0] != d:
        raise DimensionError(f"attention projections expect width {params.W_q.shape[0]}, got {d}")
    m = _valid(mask, L)
    dk = d // heads
    Q = T.matmul(H, params.W_q)
    K = T.matmul(H, params.W_k)
    V = T.matmul(H, params.W_v)
    key_bias = Tensor(np.where(m > 0, 0.0, MASK_FILL))
    outs = []
    for i in range(heads):
        lo, hi = i * dk, (i + 1) * dk
        scores = T.scale(T.matmul(T.slice_cols(Q, lo, hi), T.transpose(T.slice_cols(K, lo, hi))), 1.0 / math.sqrt(dk))
        weights = T.softmax_rows(T.add(scores, key_bias))
        outs.append(T.matmul(weights, T.slice_cols(V, lo, hi)))
    merged = outs[0] if heads == 1 else T.concat(outs, axis=1)
    projected = T.matmul(merged, params.W_o)
    if m.all():
        return projected
    return T.mul(projected, Tensor(np.repeat(m[:, None], projected.shape[1], axis=1)))


def masked_mean_pool(H: Tensor, mask) -> Tensor:
    """Average of the rows at valid positions, as a 1-D tensor."""
    m = _valid(mask, H.shape[0])
    n = m.sum()
    if n == 0:
        raise ContractError("mean pool over a fully masked sequence")
    pooled = T.matmul(Tensor((m / n)[None, :]), H)
    return T.reshape(pooled, (H.shape[1],))
