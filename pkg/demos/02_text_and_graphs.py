# coding: utf-8

# # From raw text to co-occurrence graphs

# In[1]:

from ragat.cograph import build_cooccurrence, format_edges, normalize
from ragat.corpus import generate
from ragat.textdata import build_vocab, encode, split, tokenize


# The synthetic corpus has two disjoint keyword pools and a shared filler
# vocabulary. Label 1 is rumor, label 0 is non-rumor.

# In[2]:

corpus = generate(n_per_class=20, seed=3)
for ex in corpus[:4]:
    print(ex.label, ex.text)


# Split 8:2 by seed, then build the vocabulary from the training part only.
# Ids 0 and 1 are reserved for padding and unknown tokens.

# In[3]:

train, test = split(corpus, 0.8, seed=0)
vocab = build_vocab(train, "whitespace")
print(len(train), "train /", len(test), "test, vocabulary size", len(vocab))
print(vocab.itos[:8])


# Encoding pads or truncates to max_len and keeps a validity mask.

# In[4]:

tokens = tokenize(test[0].text, "whitespace")
enc = encode(tokens, vocab, max_len=12)
print(enc.ids)
print(enc.mask, "true_len =", enc.true_len)


# Each token is a node. With window w there is a directed edge i -> j
# whenever j follows i by fewer than w positions.

# In[5]:

adj = build_cooccurrence(enc, window=3)
print(format_edges(adj, tokens))
print(adj.matrix.astype(int))


# Row normalization adds self-loops on the valid nodes. Padding rows stay zero.

# In[6]:

print(normalize(adj, "row_norm", enc.mask).matrix.round(2))
