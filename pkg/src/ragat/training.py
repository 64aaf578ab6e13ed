"""Adam with per-epoch learning-rate decay and early stopping on validation macro-F1."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .cograph import Adjacency, graph_for
from .config import RunConfig
from .errors import NumericError, StateError
from .evaluation import MetricsReport, evaluate
from .model import ModelParams, forward
from .textdata import PAD, EncodedExample, batches

logger = logging.getLogger(__name__)


@dataclass
class Sample:
    example: EncodedExample
    adj: Adjacency

    @property
    def label(self) -> int | None:
        return self.example.label


def prepare(examples: Sequence[EncodedExample], config: RunConfig) -> list[Sample]:
    return [Sample(ex, graph_for(ex, config.window, config.adjacency_mode)) for ex in examples]


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ModelParams, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        named = params.named()
        return cls(
            {k: np.zeros_like(p.data) for k, p in named.items()},
            {k: np.zeros_like(p.data) for k, p in named.items()},
            0,
            beta1,
            beta2,
            eps,
        )


def adam_step(params: ModelParams, state: AdamState, lr: float, frozen_rows: dict[str, int] | None = None) -> None:
    """One bias-corrected Adam update from the gradients stored on ``params``.

    ``frozen_rows`` maps a parameter name to a row index that is never
    updated; by default the PAD row of every embedding table.
    """
    named = params.named() if hasattr(params, "named") else params
    if frozen_rows is None:
        frozen_rows = {name: PAD for name in getattr(params, "embedding_names", lambda: ())()}
    if set(named) != set(state.m):
        raise StateError("optimizer state does not match the parameter set")
    for name, p in named.items():
        if state.m[name].shape != p.shape:
            raise StateError(f"optimizer state for {name} has shape {state.m[name].shape}, parameter {p.shape}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for name, p in named.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        row = frozen_rows.get(name)
        if row is not None:
            g = g.copy()
            g[row] = 0.0
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        update = lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        if row is not None:
            update[row] = 0.0
        p.data = p.data - update


def decay_lr(lr0: float, epoch_index: int, gamma: float) -> float:
    if epoch_index < 0:
        raise ValueError("epoch_index must be >= 0")
    return lr0 * gamma**epoch_index


def _rng(seed: int, epoch_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64([seed, epoch_index]))


def train_epoch(
    params: ModelParams,
    state: AdamState,
    train_set: Sequence[Sample],
    config: RunConfig,
    epoch_index: int,
) -> float:
    """Run one pass of mini-batch Adam; return the mean per-example loss."""
    if not train_set:
        raise ValueError("empty training set")
    lr = decay_lr(config.lr, epoch_index, config.lr_decay)
    rng = _rng(config.seed, epoch_index)
    total, count = 0.0, 0
    for b, batch in enumerate(batches(train_set, config.batch_size, shuffle=True, seed=config.seed + epoch_index)):
        params.zero_grad()
        with T.tape():
            losses = [forward(s.example, params, True, rng, s.adj, config).loss for s in batch]
            batch_loss = T.scale(T.reduce("sum", T.concat([T.reshape(l, (1,)) for l in losses])), 1.0 / len(batch))
            value = batch_loss.item()
            if not np.isfinite(value):
                raise NumericError(f"non-finite loss in epoch {epoch_index + 1}, batch {b}")
            T.backward(batch_loss)
        adam_step(params, state, lr)
        for name, p in params.named().items():
            if not np.all(np.isfinite(p.data)):
                raise NumericError(f"parameter {name} became non-finite in epoch {epoch_index + 1}, batch {b}")
        total += sum(l.item() for l in losses)
        count += len(batch)
    return total / count


def predict(params: ModelParams, dataset: Sequence[Sample], config: RunConfig | None = None) -> list[int]:
    with T.no_grad():
        return [forward(s.example, params, False, None, s.adj, config).pred for s in dataset]


def default_evaluate(params: ModelParams, dataset: Sequence[Sample], config: RunConfig | None = None) -> MetricsReport:
    return evaluate(predict(params, dataset, config), [s.label for s in dataset])


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    loss: float
    train_acc: float
    val_acc: float
    val_macro_f1: float


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None
    stopped_early: bool = False

    HEADER = "epoch\tlr\tloss\ttrain_acc\tval_acc\tval_macro_f1"

    def to_tsv(self) -> str:
        lines = [self.HEADER]
        for r in self.records:
            lines.append(
                f"{r.epoch}\t{r.lr!r}\t{r.loss!r}\t{r.train_acc!r}\t{r.val_acc!r}\t{r.val_macro_f1!r}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> "TrainLog":
        log = cls()
        for line in text.splitlines():
            if not line or line == cls.HEADER:
                continue
            e, *vals = line.split("\t")
            log.records.append(EpochRecord(int(e), *map(float, vals)))
        return log


Evaluator = Callable[[ModelParams, Sequence[Sample]], MetricsReport]


def fit(
    params: ModelParams,
    train_set: Sequence[Sample],
    val_set: Sequence[Sample],
    config: RunConfig,
    evaluate_fn: Evaluator | None = None,
    epoch_fn: Callable[..., float] | None = None,
) -> tuple[ModelParams, TrainLog]:
    """Train for up to ``config.epochs`` and return the best validation checkpoint.

    Stops once ``config.patience`` consecutive epochs fail to beat the best
    validation macro-F1 by more than ``config.min_delta``.
    """
    if not train_set or not val_set:
        raise ValueError("fit needs non-empty training and validation sets")
    evaluate_fn = evaluate_fn or (lambda p, data: default_evaluate(p, data, config))
    epoch_fn = epoch_fn or train_epoch
    state = AdamState.for_params(params, config.beta1, config.beta2, config.adam_eps)
    log = TrainLog()
    best_score = -np.inf
    best = params.copy()
    stale = 0
    for epoch in range(config.epochs):
        loss = epoch_fn(params, state, train_set, config, epoch)
        train_report = evaluate_fn(params, train_set)
        val_report = evaluate_fn(params, val_set)
        record = EpochRecord(
            epoch + 1,
            decay_lr(config.lr, epoch, config.lr_decay),
            loss,
            train_report.accuracy,
            val_report.accuracy,
            val_report.macro_f1,
        )
        log.records.append(record)
        logger.info(
            "epoch %d lr=%.6g loss=%.4f train_acc=%.4f val_acc=%.4f val_f1=%.4f",
            record.epoch, record.lr, record.loss, record.train_acc, record.val_acc, record.val_macro_f1,
        )
        if val_report.macro_f1 > best_score + config.min_delta:
            best_score = val_report.macro_f1
            best = params.copy()
            log.best_epoch = epoch + 1
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                log.stopped_early = epoch + 1 < config.epochs
                break
    return best, log
