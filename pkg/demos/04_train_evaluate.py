# coding: utf-8

# # Training, early stopping and macro metrics

# In[1]:

import logging

from ragat.config import RunConfig
from ragat.corpus import generate
from ragat.evaluation import format_report
from ragat.model import init_params
from ragat.textdata import build_vocab, encode, split, tokenize
from ragat.training import default_evaluate, fit, prepare

logging.basicConfig(level=logging.INFO, format="%(message)s")

config = RunConfig(max_len=24, embed_dim=32, filters_per_kernel=16, gru_hidden=32, gcn_hidden=16, heads=4,
                   epochs=4, lr=0.003, seed=7)


# In[2]:

train_raw, test_raw = split(generate(60, seed=7), config.train_ratio, config.seed)
vocab = build_vocab(train_raw, config.tokenizer)

def samples(raw):
    return prepare([encode(tokenize(r.text), vocab, config.max_len).with_label(r.label) for r in raw], config)

train, test = samples(train_raw), samples(test_raw)


# `fit` runs Adam with learning-rate decay of 0.9 per epoch, keeps the
# checkpoint with the best validation macro-F1 and stops after `patience`
# epochs without a gain.

# In[3]:

best, log = fit(init_params(config, len(vocab)), train, test, config)
print(log.to_tsv())
print("best epoch:", log.best_epoch)


# In[4]:

print(format_report(default_evaluate(best, test, config)))
