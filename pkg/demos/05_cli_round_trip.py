# coding: utf-8

# # The command line and the checkpoint file
#
# Same flow as a shell session, driven through `ragat.cli.main`.

# In[1]:

import json
import tempfile
from pathlib import Path

from ragat.cli import main
from ragat.model import load_checkpoint

work = Path(tempfile.mkdtemp())
(work / "small.json").write_text(json.dumps({"embed_dim": 32, "gru_hidden": 32, "gcn_hidden": 16,
                                             "filters_per_kernel": 16, "max_len": 24, "lr": 0.003}))


# In[2]:

main(["gen-corpus", "--out", str(work / "corpus.tsv"), "--n-per-class", "50", "--seed", "1"])
print(open(work / "corpus.tsv").read().splitlines()[:3])


# In[3]:

code = main(["train", "--config", str(work / "small.json"), "--data", str(work / "corpus.tsv"),
             "--out", str(work / "run")])
print("exit code", code, "->", sorted(p.name for p in (work / "run").iterdir()))


# The checkpoint holds the config, the vocabulary and every named weight.

# In[4]:

params, config, vocab = load_checkpoint(work / "run" / "checkpoint.bin")
print(config.embed_dim, len(vocab), {k: v.shape for k, v in list(params.named().items())[:4]})


# In[5]:

for text in ("shocking leaked secret hoax", "official confirmed announced report"):
    main(["predict", "--checkpoint", str(work / "run" / "checkpoint.bin"), "--text", text])
main(["inspect-graph", "--text", "a b c d"])
