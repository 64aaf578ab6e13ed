"""Per-sentence directed co-occurrence graphs over token positions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .textdata import EncodedExample

ADJACENCY_MODES = ("raw", "row_norm")


@dataclass(frozen=True)
class Adjacency:
    matrix: np.ndarray
    window: int
    mode: str = "raw"

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.matrix)
        return list(zip(rows.tolist(), cols.tolist()))


def build_cooccurrence(example: EncodedExample, window: int = 3) -> Adjacency:
    """Edge i -> j for valid positions i < j with j - i < window.

    Edges point forward in word order, so the transpose carries the
    backward relation.  Padding positions are isolated.
    """
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    L = example.max_len
    n = example.true_len
    offsets = np.arange(L)[None, :] - np.arange(L)[:, None]
    A = ((offsets > 0) & (offsets < window)).astype(np.float64)
    A[n:, :] = 0.0
    A[:, n:] = 0.0
    return Adjacency(A, window, "raw")


def normalize(adj: Adjacency, mode: str, mask=None) -> Adjacency:
    """``raw`` is the identity; ``row_norm`` adds self-loops on valid nodes then row-normalizes.

    Valid nodes are taken from ``mask`` when given, otherwise the nodes that
    touch any edge plus node 0 (a sentence always has at least one token).
    """
    if mode == "raw":
        return adj
    if mode != "row_norm":
        raise ValueError(f"unknown adjacency mode {mode!r}")
    A = adj.matrix.copy()
    if mask is None:
        valid = (A.sum(axis=0) + A.sum(axis=1)) > 0
        valid[0] = True
    else:
        valid = np.asarray(mask, dtype=bool)
    idx = np.flatnonzero(valid)
    A[idx, idx] += 1.0
    sums = A.sum(axis=1, keepdims=True)
    A = np.divide(A, sums, out=np.zeros_like(A), where=sums > 0)
    return Adjacency(A, adj.window, "row_norm")


def graph_for(example: EncodedExample, window: int = 3, mode: str = "raw") -> Adjacency:
    return normalize(build_cooccurrence(example, window), mode, example.mask)


def format_edges(adj: Adjacency, tokens=None) -> str:
    """One ``i(tok) -> j(tok)`` line per edge in row-major order."""
    edges = adj.edges()
    if not edges:
        return "no edges"

    def label(i):
        return f"{i}({tokens[i]})" if tokens is not None else str(i)

    return "\n".join(f"{label(i)} -> {label(j)}" for i, j in edges)
