"""Parameter container, initialization, the fused forward pass and checkpoints."""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor as T
from .cograph import Adjacency, graph_for
from .config import RunConfig, from_dict
from .errors import ConfigError, ContractError, DimensionError, RagatError
from .semantic import ConvBankParams, GruParams, MhaParams, conv_bank, gru_forward, masked_mean_pool, multi_head_attention
from .structural import BigcnParams, bigcn_forward, graph_mean_pool
from .tensor import Tensor
from .textdata import PAD, EncodedExample, Vocabulary

PROB_FLOOR = 1e-12
EMBED_SCALE = 0.05


@dataclass
class ModelParams:
    embedding: Tensor
    conv: ConvBankParams
    gru: GruParams
    mha: MhaParams
    gcn: BigcnParams
    W_c: Tensor
    b_c: Tensor
    gru_reverse: GruParams | None = None
    bi_proj: Tensor | None = None
    gcn_embedding: Tensor | None = None
    config: RunConfig | None = None

    def named(self) -> dict[str, Tensor]:
        """Every trainable tensor under a stable dotted name."""
        out = {"embedding": self.embedding}
        if self.gcn_embedding is not None:
            out["gcn_embedding"] = self.gcn_embedding
        out.update(self.conv.named())
        out.update(self.gru.named())
        if self.gru_reverse is not None:
            out.update(self.gru_reverse.named("gru_reverse"))
            out["gru_bi_proj"] = self.bi_proj
        out.update(self.mha.named())
        out.update(self.gcn.named())
        out["head.W_c"] = self.W_c
        out["head.b_c"] = self.b_c
        return out

    def embedding_names(self) -> tuple[str, ...]:
        return ("embedding", "gcn_embedding") if self.gcn_embedding is not None else ("embedding",)

    def copy(self) -> "ModelParams":
        return params_from_arrays(self.config, {k: v.data.copy() for k, v in self.named().items()})

    def zero_grad(self) -> None:
        for p in self.named().values():
            p.grad = None


def _glorot(rng, shape, fan_in, fan_out) -> Tensor:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def _zeros(n) -> Tensor:
    return Tensor(np.zeros(n), requires_grad=True)


def _embedding(rng, vocab_size, d) -> Tensor:
    table = rng.uniform(-EMBED_SCALE, EMBED_SCALE, size=(vocab_size, d))
    table[PAD] = 0.0
    return Tensor(table, requires_grad=True)


def _gru(rng, C, h, bias) -> GruParams:
    W = [_glorot(rng, (C, h), C, h) for _ in range(3)]
    U = [_glorot(rng, (h, h), h, h) for _ in range(3)]
    b = [_zeros(h) if bias else None for _ in range(3)]
    return GruParams(*W, *U, *b)


def init_params(config: RunConfig, vocab_size: int, seed: int | None = None) -> ModelParams:
    """Glorot-uniform matrices, zero biases, small uniform embeddings with a zero PAD row."""
    if vocab_size < 2:
        raise ConfigError("vocabulary must hold at least PAD and UNK")
    rng = np.random.Generator(np.random.PCG64(config.seed if seed is None else seed))
    d, F, h, g = config.embed_dim, config.filters_per_kernel, config.gru_hidden, config.gcn_hidden
    if h % config.heads:
        raise ConfigError(f"gru_hidden {h} is not divisible by heads {config.heads}")
    embedding = _embedding(rng, vocab_size, d)
    conv = ConvBankParams(
        {k: _glorot(rng, (F, k, d), k * d, F) for k in config.kernel_sizes},
        {k: _zeros(F) for k in config.kernel_sizes},
    )
    C = F * len(config.kernel_sizes)
    gru = _gru(rng, C, h, config.gru_bias)
    gru_reverse = bi_proj = None
    if config.bidirectional_gru:
        gru_reverse = _gru(rng, C, h, config.gru_bias)
        bi_proj = _glorot(rng, (2 * h, h), 2 * h, h)
    mha = MhaParams(*(_glorot(rng, (h, h), h, h) for _ in range(4)), heads=config.heads)
    gcn = BigcnParams(
        _glorot(rng, (d, g), d, g),
        _glorot(rng, (d, g), d, g),
        _zeros(g) if config.gcn_bias else None,
        _zeros(g) if config.gcn_bias else None,
    )
    gcn_embedding = None if config.share_embedding else _embedding(rng, vocab_size, d)
    W_c = _glorot(rng, (h + 2 * g, 2), h + 2 * g, 2)
    b_c = _zeros(2)
    return ModelParams(embedding, conv, gru, mha, gcn, W_c, b_c, gru_reverse, bi_proj, gcn_embedding, config)


def params_from_arrays(config: RunConfig, arrays: dict[str, np.ndarray]) -> ModelParams:
    """Rebuild parameters from named arrays, checking every shape against ``config``."""
    vocab_size = arrays["embedding"].shape[0] if "embedding" in arrays else 2
    template = init_params(config, vocab_size, seed=0)
    named = template.named()
    missing = sorted(set(named) - set(arrays))
    extra = sorted(set(arrays) - set(named))
    if missing or extra:
        raise DimensionError(f"parameter names do not match config (missing {missing}, unexpected {extra})")
    for name, t in named.items():
        a = np.asarray(arrays[name], dtype=np.float64)
        if a.shape != t.shape:
            raise DimensionError(f"{name}: checkpoint shape {a.shape} != config shape {t.shape}")
        t.data = a.copy()
    return template


# ------------------------------------------------------------------ forward


def fuse(h_attn: Tensor, h_gcn: Tensor) -> Tensor:
    return T.concat([h_attn, h_gcn], axis=0)


def dropout(x: Tensor, p: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero with probability ``p``, scale survivors by ``1/(1-p)``."""
    if not 0 <= p < 1:
        raise ValueError(f"dropout rate must lie in [0, 1), got {p}")
    if not training or p == 0:
        return x
    if rng is None:
        raise ContractError("training-mode dropout needs an rng")
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    return T.mul(x, Tensor(keep))


@dataclass
class ForwardResult:
    probs: Tensor
    loss: Tensor | None
    pred: int

    @property
    def probabilities(self) -> np.ndarray:
        return self.probs.data.reshape(-1)


def forward(
    example: EncodedExample,
    params: ModelParams,
    training: bool = False,
    rng: np.random.Generator | None = None,
    adj: Adjacency | None = None,
    config: RunConfig | None = None,
    truncate: bool = True,
) -> ForwardResult:
    """Embed, run both paths, fuse, classify.

    With ``truncate`` the computation runs on the valid prefix only.  This
    is exact: the PAD embedding is zero, masked keys get exactly zero
    attention weight, and padded rows never reach either pooled vector.
    """
    config = config or params.config
    if config is None:
        raise ConfigError("forward needs a RunConfig")
    n = example.true_len
    if n < 1 or not any(example.mask):
        raise ContractError("example has no valid tokens")
    if adj is None:
        adj = graph_for(example, config.window, config.adjacency_mode)
    ids = np.asarray(example.ids)
    mask = np.asarray(example.mask, dtype=np.float64)
    A = adj.matrix
    if A.shape != (len(ids), len(ids)):
        raise DimensionError(f"adjacency {A.shape} does not match sequence length {len(ids)}")
    if truncate:
        if mask[:n].min() < 1 or mask[n:].max(initial=0) > 0:
            raise ContractError("truncation needs a prefix mask")
        ids, mask, A = ids[:n], mask[:n], A[:n, :n]

    E = T.take_rows(params.embedding, ids)
    feats = conv_bank(E, params.conv)
    states = gru_forward(feats, mask, params.gru, config.bidirectional_gru, params.gru_reverse)
    if config.bidirectional_gru:
        states = T.matmul(states, params.bi_proj)
    h_attn = masked_mean_pool(multi_head_attention(states, mask, params.mha), mask)

    X = E if params.gcn_embedding is None else T.take_rows(params.gcn_embedding, ids)
    h_gcn = graph_mean_pool(bigcn_forward(X, A, params.gcn), mask)

    h_final = dropout(fuse(h_attn, h_gcn), config.dropout, training, rng)
    logits = T.add(T.matmul(T.reshape(h_final, (1, h_final.shape[0])), params.W_c), params.b_c)
    probs = T.softmax_rows(logits)
    p = probs.data[0]
    pred = 1 if p[1] > p[0] else 0
    loss = None
    if example.label is not None:
        picked = T.slice_cols(probs, example.label, example.label + 1)
        loss = T.reshape(T.scale(T.log(T.clamp_min(picked, PROB_FLOOR)), -1.0), ())
    return ForwardResult(T.reshape(probs, (2,)), loss, pred)


def predict_proba(example: EncodedExample, params: ModelParams, config: RunConfig | None = None) -> np.ndarray:
    with T.no_grad():
        return forward(example, params, training=False, config=config).probabilities


# --------------------------------------------------------------- checkpoint

MAGIC = b"RAGATCKP"
VERSION = 1


class CheckpointError(RagatError, ValueError):
    pass


def save_checkpoint(path, params: ModelParams, config: RunConfig, vocab: Vocabulary) -> None:
    """Write the binary checkpoint (layout documented in README)."""
    out = bytearray(MAGIC)
    out += struct.pack("<I", VERSION)
    for blob in (config.to_json().encode("utf-8"), vocab.to_tsv().encode("utf-8")):
        out += struct.pack("<I", len(blob)) + blob
    named = params.named()
    out += struct.pack("<I", len(named))
    for name, t in named.items():
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<B", t.data.ndim)
        out += struct.pack(f"<{t.data.ndim}I", *t.shape)
        out += np.ascontiguousarray(t.data, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(out))


def load_checkpoint(path) -> tuple[ModelParams, RunConfig, Vocabulary]:
    buf = Path(path).read_bytes()
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(buf):
            raise CheckpointError("checkpoint is truncated")
        chunk = buf[pos : pos + n]
        pos += n
        return chunk

    if take(len(MAGIC)) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    (version,) = struct.unpack("<I", take(4))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        config = from_dict(json.loads(take(struct.unpack("<I", take(4))[0]).decode("utf-8")))
        vocab = Vocabulary.from_tsv(take(struct.unpack("<I", take(4))[0]).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupted checkpoint metadata: {exc}") from None
    (count,) = struct.unpack("<I", take(4))
    arrays = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        name = take(nlen).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        size = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(take(8 * size), dtype="<f8").astype(np.float64).reshape(shape)
    if pos != len(buf):
        raise CheckpointError("trailing bytes after parameters")
    if arrays.get("embedding") is not None and arrays["embedding"].shape[0] != len(vocab):
        raise DimensionError(
            f"embedding has {arrays['embedding'].shape[0]} rows but vocabulary has {len(vocab)} entries"
        )
    return params_from_arrays(config, arrays), config, vocab
