"""Bidirectional graph convolution over the co-occurrence adjacency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .cograph import Adjacency
from .errors import DimensionError
from .semantic import masked_mean_pool
from .tensor import Tensor


@dataclass
class BigcnParams:
    W_f: Tensor  # d x g
    W_b: Tensor  # d x g
    b_f: Tensor | None = None
    b_b: Tensor | None = None

    def named(self, prefix="gcn"):
        out = {f"{prefix}.W_f": self.W_f, f"{prefix}.W_b": self.W_b}
        if self.b_f is not None:
            out[f"{prefix}.b_f"] = self.b_f
            out[f"{prefix}.b_b"] = self.b_b
        return out


def bigcn_forward(X: Tensor, adj: Adjacency | np.ndarray, params: BigcnParams) -> Tensor:
    """``[relu(A X W_f) ; relu(A^T X W_b)]`` concatenated along columns.

    Row i of ``A X`` sums the embeddings of i's out-neighbours, so the
    forward half aggregates successors and the backward half predecessors.
    """
    A = adj.matrix if isinstance(adj, Adjacency) else np.asarray(adj, dtype=np.float64)
    L = X.shape[0]
    if A.shape != (L, L):
        raise DimensionError(f"adjacency {A.shape} does not match {L} nodes")
    if X.shape[1] != params.W_f.shape[0]:
        raise DimensionError(f"node features {X.shape} do not fit weights {params.W_f.shape}")
    fwd = T.matmul(T.matmul(Tensor(A), X), params.W_f)
    bwd = T.matmul(T.matmul(Tensor(A.T.copy()), X), params.W_b)
    if params.b_f is not None:
        fwd = T.add(fwd, params.b_f)
        bwd = T.add(bwd, params.b_b)
    return T.concat([T.relu(fwd), T.relu(bwd)], axis=1)


def graph_mean_pool(H: Tensor, mask) -> Tensor:
    return masked_mean_pool(H, mask)
