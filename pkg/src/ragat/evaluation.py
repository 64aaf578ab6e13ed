"""Confusion counts, macro-averaged metrics and a printable report."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ContractError

CLASS_NAMES = ("non-rumor", "rumor")


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class ConfusionCounts:
    """The shared 2x2 table; ``matrix[true][pred]``."""

    matrix: tuple[tuple[int, int], tuple[int, int]]

    @property
    def total(self) -> int:
        return sum(map(sum, self.matrix))

    def view(self, positive: int) -> ClassCounts:
        """Counts with ``positive`` treated as the positive class."""
        neg = 1 - positive
        m = self.matrix
        return ClassCounts(tp=m[positive][positive], fp=m[neg][positive], fn=m[positive][neg], tn=m[neg][neg])

    @classmethod
    def from_view(cls, tp: int, fp: int, fn: int, tn: int, positive: int = 1) -> "ConfusionCounts":
        if positive == 1:
            return cls(((tn, fp), (fn, tp)))
        return cls(((tp, fn), (fp, tn)))


def confusion(preds: Sequence[int], labels: Sequence[int]) -> ConfusionCounts:
    if len(preds) != len(labels):
        raise ContractError(f"{len(preds)} predictions for {len(labels)} labels")
    if not preds:
        raise ContractError("no predictions to count")
    m = [[0, 0], [0, 0]]
    for p, y in zip(preds, labels):
        if p not in (0, 1) or y not in (0, 1):
            raise ContractError(f"labels must be 0 or 1, got pred={p!r} label={y!r}")
        m[y][p] += 1
    return ConfusionCounts((tuple(m[0]), tuple(m[1])))


def _ratio(num, den) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: tuple[float, float]
    recall: tuple[float, float]
    f1: tuple[float, float]
    support: tuple[int, int]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    counts: ConfusionCounts | None = None


def compute_metrics(c: ConfusionCounts) -> MetricsReport:
    """Per-class precision/recall/F1 and their unweighted means.

    A zero denominator yields 0 for that metric.
    """
    if c.total < 1:
        raise ContractError("metrics need at least one counted example")
    precision, recall, f1, support = [], [], [], []
    for cls in (0, 1):
        v = c.view(cls)
        p = _ratio(v.tp, v.tp + v.fp)
        r = _ratio(v.tp, v.tp + v.fn)
        precision.append(p)
        recall.append(r)
        f1.append(_ratio(2 * p * r, p + r))
        support.append(v.tp + v.fn)
    v1 = c.view(1)
    accuracy = (v1.tp + v1.tn) / c.total
    return MetricsReport(
        accuracy=accuracy,
        precision=tuple(precision),
        recall=tuple(recall),
        f1=tuple(f1),
        support=tuple(support),
        macro_precision=(precision[0] + precision[1]) / 2,
        macro_recall=(recall[0] + recall[1]) / 2,
        macro_f1=(f1[0] + f1[1]) / 2,
        counts=c,
    )


def evaluate(preds, labels) -> MetricsReport:
    return compute_metrics(confusion(preds, labels))


def format_report(r: MetricsReport, tsv: bool = False) -> str:
    if tsv:
        lines = ["class\tprecision\trecall\tf1\tsupport"]
        for i, name in enumerate(CLASS_NAMES):
            lines.append(f"{name}\t{r.precision[i]:.4f}\t{r.recall[i]:.4f}\t{r.f1[i]:.4f}\t{r.support[i]}")
        lines.append(f"accuracy\t\t\t{r.accuracy:.4f}\t{sum(r.support)}")
        lines.append(f"macro avg\t{r.macro_precision:.4f}\t{r.macro_recall:.4f}\t{r.macro_f1:.4f}\t{sum(r.support)}")
        return "\n".join(lines) + "\n"
    head = f"{'':>12} {'precision':>9} {'recall':>9} {'f1-score':>9} {'support':>9}"
    lines = [head, ""]
    for i, name in enumerate(CLASS_NAMES):
        lines.append(f"{name:>12} {r.precision[i]:>9.4f} {r.recall[i]:>9.4f} {r.f1[i]:>9.4f} {r.support[i]:>9d}")
    lines.append("")
    n = sum(r.support)
    lines.append(f"{'accuracy':>12} {'':>9} {'':>9} {r.accuracy:>9.4f} {n:>9d}")
    lines.append(f"{'macro avg':>12} {r.macro_precision:>9.4f} {r.macro_recall:>9.4f} {r.macro_f1:>9.4f} {n:>9d}")
    return "\n".join(lines) + "\n"
