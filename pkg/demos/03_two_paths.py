# coding: utf-8

# # The semantic path and the structural path
#
# One encoded post goes through both branches by hand, and the composed
# `forward` then gives the same probabilities.

# In[1]:

import numpy as np

from ragat import tensor as T
from ragat.cograph import graph_for
from ragat.config import RunConfig
from ragat.model import forward, init_params
from ragat.semantic import conv_bank, gru_forward, masked_mean_pool, multi_head_attention
from ragat.structural import bigcn_forward, graph_mean_pool
from ragat.textdata import EncodedExample

config = RunConfig(max_len=10, embed_dim=16, filters_per_kernel=4, gru_hidden=12, gcn_hidden=6, heads=3, dropout=0.0)
params = init_params(config, vocab_size=30)
ids = (5, 9, 2, 17, 9, 23, 0, 0, 0, 0)
ex = EncodedExample(ids, tuple(int(i != 0) for i in ids), 6, 1)


# Semantic path: embeddings, a bank of 3/4/5-wide convolutions, a GRU, then
# masked multi-head self-attention and a mean over valid positions.

# In[2]:

n = ex.true_len
mask = np.ones(n)
E = T.take_rows(params.embedding, list(ex.ids[:n]))
C = conv_bank(E, params.conv)
H = gru_forward(C, mask, params.gru)
A = multi_head_attention(H, mask, params.mha)
semantic = masked_mean_pool(A, mask)
print("conv", C.shape, "gru", H.shape, "attention", A.shape, "pooled", semantic.shape)


# Structural path: the same embeddings as node features, one BiGCN layer
# over the directed graph and its transpose, then a mean over nodes.

# In[3]:

adj = graph_for(ex, config.window, config.adjacency_mode).matrix[:n, :n]
G = bigcn_forward(E, adj, params.gcn)
structural = graph_mean_pool(G, mask)
# node 0 has successors but no predecessors, so only its forward half can be nonzero
print("node 0 forward half ", G.data[0, :6].round(3))
print("node 0 backward half", G.data[0, 6:].round(3))


# Concatenate, project to two logits, softmax.

# In[4]:

fused = T.concat([semantic, structural])
logits = T.add(T.matmul(T.reshape(fused, (1, fused.shape[0])), params.W_c), params.b_c)
by_hand = T.softmax_rows(logits).data[0]
print("by hand  ", by_hand)
print("forward()", forward(ex, params).probabilities)
