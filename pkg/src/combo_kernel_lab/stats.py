"""Signal statistics for contingency tables and classification metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import ContingencyTable, LabeledInstance
from .exceptions import LengthMismatch, Overflow, UndefinedOdds, ValidationError

FISHER_MAX_TOTAL = 10**7


def odds_ratio(ct: ContingencyTable) -> float:
    """``(n1 / m1) / (n2 / m2)``; zero cells are not corrected."""
    if ct.m1 == 0 or ct.n2 == 0 or ct.m2 == 0:
        raise UndefinedOdds(f"odds ratio undefined for {ct}")
    return (ct.n1 / ct.m1) / (ct.n2 / ct.m2)


def _log_choose(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def hypergeometric_support(ct: ContingencyTable) -> tuple[int, int]:
    """Range of ``n1`` values compatible with the table's margins."""
    total = ct.total
    adr = ct.n1 + ct.n2
    taking = ct.n1 + ct.m1
    return max(0, taking - (total - adr)), min(adr, taking)


def fisher_right_tail(ct: ContingencyTable) -> float:
    """P(X >= n1) for X hypergeometric with the table's row and column sums."""
    total = ct.total
    if total > FISHER_MAX_TOTAL:
        raise Overflow(f"table total {total} exceeds {FISHER_MAX_TOTAL}")
    adr = ct.n1 + ct.n2
    taking = ct.n1 + ct.m1
    lo, hi = hypergeometric_support(ct)
    if ct.n1 <= lo:
        return 1.0
    log_norm = _log_choose(total, taking)
    terms = [
        math.exp(_log_choose(adr, x) + _log_choose(total - adr, taking - x) - log_norm)
        for x in range(ct.n1, hi + 1)
    ]
    return min(1.0, math.fsum(terms))


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: Optional[float]
    tp: int
    fp: int
    tn: int
    fn: int
    flags: tuple[str, ...] = field(default=())

    METRICS = ("accuracy", "precision", "recall", "f1", "auc")

    def as_dict(self) -> dict:
        return asdict(self)


def _midranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    ranks = np.empty(x.shape[0], dtype=np.float64)
    start = 0
    n = x.shape[0]
    while start < n:
        stop = start + 1
        while stop < n and sorted_x[stop] == sorted_x[start]:
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + stop - 1) + 1.0
        start = stop
    return ranks


def auc_score(scores, labels) -> Optional[float]:
    """Rank-statistic AUC, ties credited 0.5. ``None`` with a single class."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise LengthMismatch("scores and labels differ in length")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _midranks(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def classification_metrics(scores, labels, threshold: float = 0.0) -> MetricsReport:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or s.shape != y.shape:
        raise LengthMismatch("scores and labels must be 1-d of equal length")
    if s.size == 0:
        raise ValidationError("no scores")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValidationError("labels must be -1/+1")
    pred_pos = s >= threshold
    actual_pos = y == 1
    tp = int(np.sum(pred_pos & actual_pos))
    fp = int(np.sum(pred_pos & ~actual_pos))
    tn = int(np.sum(~pred_pos & ~actual_pos))
    fn = int(np.sum(~pred_pos & actual_pos))
    flags = []
    precision = tp / (tp + fp) if tp + fp else 0.0
    if tp + fp == 0:
        flags.append("precision_undefined")
    recall = tp / (tp + fn) if tp + fn else 0.0
    if tp + fn == 0:
        flags.append("recall_undefined")
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    auc = auc_score(s, y)
    if auc is None:
        flags.append("auc_undefined")
    return MetricsReport(
        accuracy=(tp + tn) / s.size,
        precision=precision,
        recall=recall,
        f1=f1,
        auc=auc,
        tp=tp, fp=fp, tn=tn, fn=fn,
        flags=tuple(flags),
    )


def mean_metrics(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Arithmetic mean of each metric; confusion counts are summed."""
    if not reports:
        raise ValidationError("no reports to average")
    aucs = [r.auc for r in reports if r.auc is not None]
    flags = sorted({f for r in reports for f in r.flags})
    return MetricsReport(
        accuracy=math.fsum(r.accuracy for r in reports) / len(reports),
        precision=math.fsum(r.precision for r in reports) / len(reports),
        recall=math.fsum(r.recall for r in reports) / len(reports),
        f1=math.fsum(r.f1 for r in reports) / len(reports),
        auc=math.fsum(aucs) / len(aucs) if aucs else None,
        tp=sum(r.tp for r in reports),
        fp=sum(r.fp for r in reports),
        tn=sum(r.tn for r in reports),
        fn=sum(r.fn for r in reports),
        flags=tuple(flags),
    )


def dmyo_percentage(drugs: Iterable[int], dmyo) -> float:
    drugs = tuple(drugs)
    return 100.0 * sum(1 for d in drugs if d in dmyo) / len(drugs)


def dmyo_enrichment(instances: Sequence, dmyo) -> Optional[float]:
    """Mean over combinations of the percentage of their drugs in ``dmyo``.

    Accepts :class:`LabeledInstance` objects or bare combinations.
    """
    if not instances:
        return None
    dmyo = set(dmyo)
    pcts = [
        dmyo_percentage(inst.combination if isinstance(inst, LabeledInstance) else inst, dmyo)
        for inst in instances
    ]
    return math.fsum(pcts) / len(pcts)
