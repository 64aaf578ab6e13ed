import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ragat import tensor as T
from ragat.cograph import build_cooccurrence
from ragat.errors import ContractError, DimensionError
from ragat.gradcheck import grad_check
from ragat.structural import BigcnParams, bigcn_forward, graph_mean_pool
from ragat.tensor import Tensor
from ragat.textdata import EncodedExample

from oracles import filtered_mean, neighbor_sum_oracle


def graph(n, L=None, window=2):
    L = L or n
    ex = EncodedExample(tuple([2] * n + [0] * (L - n)), (1,) * n + (0,) * (L - n), n)
    return build_cooccurrence(ex, window), np.array(ex.mask)


def params(rng, d, g):
    return BigcnParams(Tensor(rng.normal(size=(d, g)), requires_grad=True), Tensor(rng.normal(size=(d, g)), requires_grad=True))


def test_zero_adjacency_annihilates():
    rng = np.random.default_rng(0)
    out = bigcn_forward(Tensor(rng.normal(size=(4, 3))), np.zeros((4, 4)), params(rng, 3, 2))
    assert out.shape == (4, 4) and not out.data.any()


def test_symmetric_adjacency_equal_halves():
    rng = np.random.default_rng(1)
    A, _ = graph(5)
    S = A.matrix + A.matrix.T
    W = rng.normal(size=(3, 2))
    p = BigcnParams(Tensor(W), Tensor(W.copy()))
    out = bigcn_forward(Tensor(rng.normal(size=(5, 3))), S, p).data
    np.testing.assert_array_equal(out[:, :2], out[:, 2:])


def test_neighbor_sum_oracle():
    rng = np.random.default_rng(2)
    A, _ = graph(4)
    X = rng.normal(size=(4, 3))
    p = params(rng, 3, 2)
    want = neighbor_sum_oracle(X, A.matrix, p.W_f.data, p.W_b.data)
    np.testing.assert_allclose(bigcn_forward(Tensor(X), A, p).data, want, rtol=0, atol=1e-12)


def test_direction_sensitivity():
    rng = np.random.default_rng(3)
    for n in range(2, 9):
        A, _ = graph(n, window=3)
        W = rng.normal(size=(4, 3))
        out = bigcn_forward(Tensor(rng.normal(size=(n, 4))), A, BigcnParams(Tensor(W), Tensor(W.copy()))).data
        assert not np.allclose(out[:, :3], out[:, 3:])


def test_isolated_node_has_zero_forward_row():
    rng = np.random.default_rng(4)
    A, _ = graph(4)
    out = bigcn_forward(Tensor(rng.normal(size=(4, 3))), A, params(rng, 3, 2)).data
    # last node has no successors, first node no predecessors
    assert not out[3, :2].any() and not out[0, 2:].any()


@given(st.integers(2, 8), st.integers(0, 1000))
def test_relabeling_equivariance(n, seed):
    rng = np.random.default_rng(seed)
    A, _ = graph(n, window=3)
    X = rng.normal(size=(n, 3))
    p = params(rng, 3, 2)
    perm = rng.permutation(n)
    Pm = np.eye(n)[perm]
    base = bigcn_forward(Tensor(X), A, p).data
    moved = bigcn_forward(Tensor(Pm @ X), Pm @ A.matrix @ Pm.T, p).data
    np.testing.assert_allclose(moved, base[perm], atol=1e-12)
    ones = np.ones(n)
    np.testing.assert_allclose(graph_mean_pool(Tensor(moved), ones).data, graph_mean_pool(Tensor(base), ones).data, atol=1e-12)


def test_size_mismatch():
    rng = np.random.default_rng(5)
    with pytest.raises(DimensionError):
        bigcn_forward(Tensor(np.zeros((3, 3))), np.zeros((4, 4)), params(rng, 3, 2))


class TestMeanPool:
    def test_one_node(self):
        assert graph_mean_pool(Tensor([[1.0, 2.0], [9.0, 9.0]]), [1, 0]).data.tolist() == [1.0, 2.0]

    def test_two_rows(self):
        assert graph_mean_pool(Tensor([[0.0, 2.0], [4.0, 6.0]]), [1, 1]).data.tolist() == [2.0, 4.0]

    def test_random(self):
        rng = np.random.default_rng(6)
        H = rng.normal(size=(6, 4))
        mask = [1, 1, 0, 1, 0, 0]
        np.testing.assert_allclose(graph_mean_pool(Tensor(H), mask).data, filtered_mean(H, mask), atol=1e-14)

    def test_all_masked(self):
        with pytest.raises(ContractError):
            graph_mean_pool(Tensor(np.ones((2, 2))), [0, 0])


def test_gradients_toy_dims():
    rng = np.random.default_rng(7)
    A, mask = graph(5, window=3)
    X = Tensor(rng.normal(size=(5, 6)), requires_grad=True)
    p = params(rng, 6, 4)

    def f():
        h = graph_mean_pool(bigcn_forward(X, A, p), mask)
        return T.reduce("sum", T.mul(h, h))

    assert grad_check(f, {"X": X, **p.named()}) < 1e-4
