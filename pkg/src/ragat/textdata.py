"""Tokenization, vocabulary, dataset files, splitting, encoding and batching."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ContractError, EmptyInputError, ParseError

PAD = 0
UNK = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
TOKENIZER_MODES = ("whitespace", "char")


@dataclass(frozen=True)
class RawExample:
    label: int
    text: str


@dataclass(frozen=True)
class EncodedExample:
    ids: tuple[int, ...]
    mask: tuple[int, ...]
    true_len: int
    label: int | None = None

    @property
    def max_len(self) -> int:
        return len(self.ids)

    def with_label(self, label: int) -> "EncodedExample":
        return EncodedExample(self.ids, self.mask, self.true_len, label)


def tokenize(text: str, mode: str = "whitespace") -> list[str]:
    if mode == "whitespace":
        tokens = text.split()
    elif mode == "char":
        tokens = [ch for ch in text if not ch.isspace()]
    else:
        raise ValueError(f"unknown tokenizer mode {mode!r}; expected one of {TOKENIZER_MODES}")
    if not tokens:
        raise EmptyInputError("text has no tokens")
    return tokens


@dataclass
class Vocabulary:
    itos: list[str]
    freqs: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.itos[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ContractError("vocabulary must start with the PAD and UNK entries")
        self.stoi = {tok: i for i, tok in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ContractError("duplicate token in vocabulary")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def id(self, token: str) -> int:
        return self.stoi.get(token, UNK)

    def token(self, idx: int) -> str:
        return self.itos[idx]

    def to_tsv(self) -> str:
        return "".join(f"{tok}\t{i}\n" for i, tok in enumerate(self.itos))

    def save(self, path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

    @classmethod
    def from_tsv(cls, text: str) -> "Vocabulary":
        pairs = []
        for n, line in enumerate(text.splitlines(), 1):
            if not line:
                continue
            tok, sep, idx = line.rpartition("\t")
            if not sep or not idx.isdigit():
                raise ParseError("expected <token>\\t<id>", n)
            pairs.append((int(idx), tok))
        pairs.sort()
        if [i for i, _ in pairs] != list(range(len(pairs))):
            raise ParseError("vocabulary ids are not dense from 0")
        return cls([tok for _, tok in pairs])

    @classmethod
    def load(cls, path) -> "Vocabulary":
        return cls.from_tsv(Path(path).read_text(encoding="utf-8"))


def build_vocab(
    corpus: Sequence[RawExample],
    mode: str = "whitespace",
    min_freq: int = 1,
    max_size: int = 50_000,
) -> Vocabulary:
    """Most frequent tokens first, ties broken lexicographically."""
    if not corpus:
        raise EmptyInputError("cannot build a vocabulary from an empty corpus")
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    if max_size < 2:
        raise ValueError("max_size must leave room for PAD and UNK")
    counts: Counter[str] = Counter()
    for ex in corpus:
        counts.update(tokenize(ex.text, mode))
    for reserved in (PAD_TOKEN, UNK_TOKEN):
        counts.pop(reserved, None)
    kept = sorted((tok for tok, c in counts.items() if c >= min_freq), key=lambda t: (-counts[t], t))
    kept = kept[: max_size - 2]
    return Vocabulary([PAD_TOKEN, UNK_TOKEN, *kept], {t: counts[t] for t in kept})


def encode(tokens: Sequence[str], vocab: Vocabulary, max_len: int = 128) -> EncodedExample:
    """Map tokens to ids, keeping the first ``max_len`` and right-padding."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if not tokens:
        raise EmptyInputError("cannot encode an empty token list")
    ids = [vocab.id(t) for t in tokens[:max_len]]
    n = len(ids)
    pad = max_len - n
    return EncodedExample(tuple(ids + [PAD] * pad), (1,) * n + (0,) * pad, n)


def load_dataset(path) -> list[RawExample]:
    """Read ``<label>\\t<text>`` lines; blank lines are skipped."""
    examples = []
    with open(path, encoding="utf-8", newline="") as fh:
        for n, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            label, sep, text = line.partition("\t")
            if not sep:
                raise ParseError("expected <label>\\t<text>", n)
            if label not in ("0", "1"):
                raise ParseError(f"label must be 0 or 1, got {label!r}", n)
            if not text.strip():
                raise ParseError("empty text", n)
            examples.append(RawExample(int(label), text))
    return examples


def write_dataset(path, examples: Iterable[RawExample]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(f"{ex.label}\t{ex.text}\n")


def seeded_permutation(n: int, seed: int) -> list[int]:
    """Fisher-Yates shuffle of ``range(n)`` driven by numpy's PCG64 generator.

    For i = n-1 down to 1, swap position i with j drawn uniformly from
    [0, i] via ``Generator.integers(0, i + 1)``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return order


def split(examples: Sequence, train_ratio: float = 0.8, seed: int = 0) -> tuple[list, list]:
    if not 0 < train_ratio < 1:
        raise ContractError("train_ratio must lie strictly between 0 and 1")
    if len(examples) < 2:
        raise ContractError("need at least two examples to split")
    order = seeded_permutation(len(examples), seed)
    n_train = math.floor(len(examples) * train_ratio)
    return [examples[i] for i in order[:n_train]], [examples[i] for i in order[n_train:]]


def batches(examples: Sequence, batch_size: int, shuffle: bool = False, seed: int = 0) -> Iterator[list]:
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = seeded_permutation(len(examples), seed) if shuffle else range(len(examples))
    order = list(order)
    for start in range(0, len(order), batch_size):
        yield [examples[i] for i in order[start : start + batch_size]]
