"""Seeded, separable synthetic corpus in the dataset file format.

Rumor sentences (label 1) draw keywords from ``RUMOR_POOL``; non-rumor
sentences draw from ``FACT_POOL``.  Both mix in words from the same
``FILLER`` list, so only the keywords separate the classes.
"""

from __future__ import annotations

import numpy as np

from .textdata import RawExample, write_dataset

RUMOR_POOL = (
    "shocking", "leaked", "secret", "hoax", "unverified", "insider", "cover-up", "exposed",
    "banned", "miracle", "forwarded", "urgent", "conspiracy", "hidden", "scandal", "viral",
)
FACT_POOL = (
    "official", "confirmed", "announced", "report", "statement", "ministry", "verified", "published",
    "bureau", "statistics", "press", "agency", "schedule", "according", "data", "notice",
)
FILLER = (
    "the", "city", "people", "today", "about", "new", "water", "school", "said", "after",
    "local", "residents", "market", "weather", "road", "health", "video", "photo", "news", "week",
    "online", "post", "users", "reported", "center", "price", "food", "hospital", "train", "police",
)


def generate(n_per_class: int, seed: int = 0) -> list[RawExample]:
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for _ in range(n_per_class):
        for label, pool in ((1, RUMOR_POOL), (0, FACT_POOL)):
            keys = rng.choice(pool, size=int(rng.integers(2, 5)), replace=False).tolist()
            fill = rng.choice(FILLER, size=int(rng.integers(4, 9)), replace=True).tolist()
            words = keys + fill
            order = rng.permutation(len(words))
            out.append(RawExample(label, " ".join(words[i] for i in order)))
    return out


def write_corpus(path, n_per_class: int, seed: int = 0) -> list[RawExample]:
    examples = generate(n_per_class, seed)
    write_dataset(path, examples)
    return examples
