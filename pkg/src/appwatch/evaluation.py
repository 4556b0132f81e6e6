"""Confusion-matrix metrics, ROC/AUC, and stratified cross-validation.

Count-derived metrics use exact rational arithmetic; floats appear only
when rendering. Note that the sensitivity/specificity exposed here follow
the column-wise (predictive-value) definitions used by the source data's
reporting convention; the row-wise rates are available as tpr/tnr.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .extract import MALICIOUS, NORMAL, FeatureInstance
from .knn import ClassifierConfig, classify, train
from .simulate import Xorshift64Star

Metric = Optional[Fraction]  # None = undefined (zero denominator)


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts keyed truth->prediction: nn/nm over Normal rows, mn/mm over Malicious."""

    nn: int = 0  # Normal classified Normal
    nm: int = 0  # Normal classified Malicious
    mn: int = 0  # Malicious classified Normal
    mm: int = 0  # Malicious classified Malicious

    def __post_init__(self):
        if min(self.nn, self.nm, self.mn, self.mm) < 0:
            raise EvaluationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.nn + self.nm + self.mn + self.mm


def confusion(predictions: Sequence[str], truths: Sequence[str]) -> ConfusionMatrix:
    if len(predictions) != len(truths):
        raise EvaluationError(f"{len(predictions)} predictions for {len(truths)} truths")
    if not truths:
        raise EvaluationError("empty input")
    counts = {"nn": 0, "nm": 0, "mn": 0, "mm": 0}
    for pred, truth in zip(predictions, truths):
        if truth not in (NORMAL, MALICIOUS) or pred not in (NORMAL, MALICIOUS):
            raise EvaluationError(f"labels must be known, got ({truth!r}, {pred!r})")
        key = ("n" if truth == NORMAL else "m") + ("n" if pred == NORMAL else "m")
        counts[key] += 1
    return ConfusionMatrix(**counts)


def _ratio(num: int, den: int) -> Metric:
    return Fraction(num, den) if den else None


@dataclass(frozen=True)
class ClassMetrics:
    """One-vs-rest rates with the named class as positive."""

    tp_rate: Metric
    fp_rate: Metric
    precision: Metric
    recall: Metric
    f_measure: Metric
    support: int


@dataclass(frozen=True)
class EvaluationReport:
    matrix: ConfusionMatrix
    accuracy: Fraction
    error_rate: Fraction
    tpr: Metric  # detection rate, Malicious positive
    tnr: Metric
    fpr: Metric
    fnr: Metric
    precision: Metric  # precision of Malicious verdicts
    sensitivity: Metric  # column-wise: nn / (nn + mn)
    specificity: Metric  # column-wise: mm / (nm + mm)
    kappa: Metric
    per_class: dict[str, ClassMetrics] = field(default_factory=dict)
    weighted: Optional[ClassMetrics] = None
    auc: Optional[float] = None


def _class_metrics(tp: int, fp: int, fn: int, tn: int, support: int) -> ClassMetrics:
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f_measure = None
    if precision is not None and recall is not None and (precision + recall) > 0:
        f_measure = 2 * precision * recall / (precision + recall)
    return ClassMetrics(
        tp_rate=recall,
        fp_rate=_ratio(fp, fp + tn),
        precision=precision,
        recall=recall,
        f_measure=f_measure,
        support=support,
    )


def metrics(matrix: ConfusionMatrix, auc: Optional[float] = None) -> EvaluationReport:
    """Derive the full metric suite from a 2x2 confusion matrix.

    Zero-denominator metrics come back as None (undefined), never 0 or 1.
    """
    if matrix.total == 0:
        raise EvaluationError("confusion matrix is empty")
    nn, nm, mn, mm = matrix.nn, matrix.nm, matrix.mn, matrix.mm
    total = matrix.total
    accuracy = Fraction(nn + mm, total)
    per_class = {
        # Normal as positive: TP=nn, FP=mn (Malicious predicted Normal), FN=nm, TN=mm
        NORMAL: _class_metrics(tp=nn, fp=mn, fn=nm, tn=mm, support=nn + nm),
        # Malicious as positive: TP=mm, FP=nm, FN=mn, TN=nn
        MALICIOUS: _class_metrics(tp=mm, fp=nm, fn=mn, tn=nn, support=mn + mm),
    }
    weighted = _weighted_average(per_class, total)

    # Cohen's kappa from observed vs chance agreement
    p_observed = accuracy
    p_chance = Fraction((nn + nm) * (nn + mn) + (mn + mm) * (nm + mm), total * total)
    kappa = None if p_chance == 1 else (p_observed - p_chance) / (1 - p_chance)

    return EvaluationReport(
        matrix=matrix,
        accuracy=accuracy,
        error_rate=1 - accuracy,
        tpr=_ratio(mm, mm + mn),
        tnr=_ratio(nn, nn + nm),
        fpr=_ratio(nm, nm + nn),
        fnr=_ratio(mn, mm + mn),
        precision=_ratio(mm, nm + mm),
        sensitivity=_ratio(nn, nn + mn),
        specificity=_ratio(mm, nm + mm),
        kappa=kappa,
        per_class=per_class,
        weighted=weighted,
        auc=auc,
    )


def _weighted_average(per_class: dict[str, ClassMetrics], total: int) -> ClassMetrics:
    def avg(attr: str) -> Metric:
        acc = Fraction(0)
        for cm in per_class.values():
            v = getattr(cm, attr)
            if v is None:
                return None
            acc += v * cm.support
        return acc / total

    return ClassMetrics(
        tp_rate=avg("tp_rate"),
        fp_rate=avg("fp_rate"),
        precision=avg("precision"),
        recall=avg("recall"),
        f_measure=avg("f_measure"),
        support=total,
    )


# --- ROC / AUC ---------------------------------------------------------------

def roc_points(scores: Sequence[float], truths: Sequence[str]) -> list[tuple[Fraction, Fraction]]:
    """(FPR, TPR) points from sweeping the threshold over distinct scores.

    Malicious is the positive class; tied scores move as one step. (0,0)
    and (1,1) are always included.
    """
    if len(scores) != len(truths):
        raise EvaluationError("scores and truths differ in length")
    pos = sum(1 for t in truths if t == MALICIOUS)
    neg = len(truths) - pos
    if pos == 0 or neg == 0:
        raise EvaluationError("ROC requires at least one row of each class")
    paired = sorted(zip(scores, truths), key=lambda st: -st[0])
    points = [(Fraction(0), Fraction(0))]
    tp = fp = 0
    i = 0
    n = len(paired)
    while i < n:
        j = i
        while j < n and paired[j][0] == paired[i][0]:
            if paired[j][1] == MALICIOUS:
                tp += 1
            else:
                fp += 1
            j += 1
        points.append((Fraction(fp, neg), Fraction(tp, pos)))
        i = j
    if points[-1] != (Fraction(1), Fraction(1)):
        points.append((Fraction(1), Fraction(1)))
    return points


def auc(points: Sequence[tuple[Fraction, Fraction]]) -> Fraction:
    """Trapezoidal area under an ROC polygon."""
    area = Fraction(0)
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2
    return area


# --- cross-validation --------------------------------------------------------

def stratified_kfold(labels: Sequence[str], k: int, seed: int = 0) -> list[list[int]]:
    """Deterministic stratified partition into k index folds.

    Indices are shuffled within each class, then dealt round-robin with a
    pointer shared across classes, so fold sizes differ by at most one and
    per-fold class counts differ from exact proportion by under one row.
    """
    if k < 2:
        raise EvaluationError(f"fold count must be >= 2, got {k}")
    if k > len(labels):
        raise EvaluationError(f"fold count {k} exceeds {len(labels)} rows")
    rng = Xorshift64Star(seed)
    by_class: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    folds: list[list[int]] = [[] for _ in range(k)]
    cursor = 0
    for label in sorted(by_class):
        indices = by_class[label]
        # Fisher-Yates with the portable generator
        for i in range(len(indices) - 1, 0, -1):
            j = rng.randbelow(i + 1)
            indices[i], indices[j] = indices[j], indices[i]
        for idx in indices:
            folds[cursor % k].append(idx)
            cursor += 1
    return folds


@dataclass(frozen=True)
class CrossValidationResult:
    report: EvaluationReport
    fold_assignment: tuple[int, ...]  # row index -> fold
    predictions: tuple[str, ...]  # pooled, in row order
    scores: tuple[float, ...]


def cross_validate(
    rows: Sequence[FeatureInstance],
    config: ClassifierConfig,
    k: int,
    seed: int = 0,
) -> CrossValidationResult:
    """Train on each fold's complement, classify the fold, pool everything."""
    labels = [r.label for r in rows]
    for i, label in enumerate(labels):
        if label is None:
            raise EvaluationError(f"row {i} has unknown class")
    folds = stratified_kfold(labels, k, seed)
    predictions: list[Optional[str]] = [None] * len(rows)
    scores: list[float] = [0.0] * len(rows)
    assignment = [0] * len(rows)
    for fold_no, fold in enumerate(folds):
        holdout = set(fold)
        training = [r for i, r in enumerate(rows) if i not in holdout]
        clf = train(training, config)
        for i in fold:
            pred = classify(clf, rows[i])
            predictions[i] = pred.label
            scores[i] = pred.score
            assignment[i] = fold_no
    matrix = confusion(predictions, labels)
    try:
        pooled_auc = float(auc(roc_points(scores, labels)))
    except EvaluationError:
        pooled_auc = None
    report = metrics(matrix, auc=pooled_auc)
    return CrossValidationResult(report, tuple(assignment), tuple(predictions), tuple(scores))


# --- text rendering ----------------------------------------------------------

def _fmt(value, width: int = 9) -> str:
    if value is None:
        return "?".rjust(width)
    return f"{float(value):.3f}".rjust(width)


def render_report(report: EvaluationReport, title: str = "Stratified cross-validation") -> str:
    """Plain-text block: summary, detailed accuracy by class, confusion matrix."""
    m = report.matrix
    correct = m.nn + m.mm
    incorrect = m.nm + m.mn
    lines = [
        f"=== {title} ===",
        "=== Summary ===",
        "",
        f"Correctly Classified Instances   {correct:>6}    {float(report.accuracy) * 100:8.4g} %",
        f"Incorrectly Classified Instances {incorrect:>6}    {float(report.error_rate) * 100:8.4g} %",
        f"Kappa statistic                  {float(report.kappa):>9.4f}" if report.kappa is not None
        else "Kappa statistic                  undefined",
        f"Total Number of Instances        {m.total:>6}",
        "",
        "=== Detailed Accuracy By Class ===",
        "",
        "                TP Rate  FP Rate  Precision  Recall  F-Measure  Class",
    ]

    def class_row(name: str, cm: ClassMetrics) -> str:
        return (
            f"{'':16}{_fmt(cm.tp_rate, 7)}{_fmt(cm.fp_rate, 9)}{_fmt(cm.precision, 11)}"
            f"{_fmt(cm.recall, 8)}{_fmt(cm.f_measure, 11)}  {name}"
        )

    lines.append(class_row(NORMAL, report.per_class[NORMAL]))
    lines.append(class_row(MALICIOUS, report.per_class[MALICIOUS]))
    w = report.weighted
    lines.append(
        f"{'Weighted Avg.':<16}{_fmt(w.tp_rate, 7)}{_fmt(w.fp_rate, 9)}{_fmt(w.precision, 11)}"
        f"{_fmt(w.recall, 8)}{_fmt(w.f_measure, 11)}"
    )
    if report.auc is not None:
        lines.append("")
        lines.append(f"Area under ROC (pooled scores)   {report.auc:9.4f}")
    lines += [
        "",
        "=== Confusion Matrix ===",
        "",
        "     a     b   <-- classified as",
        f"{m.nn:>6}{m.nm:>6}   a = {NORMAL}",
        f"{m.mn:>6}{m.mm:>6}   b = {MALICIOUS}",
    ]
    return "\n".join(lines) + "\n"


def report_as_dict(report: EvaluationReport) -> dict:
    """JSON-shaped view of a report; undefined metrics map to null."""

    def num(v):
        return None if v is None else float(v)

    def cm_dict(cm: ClassMetrics) -> dict:
        return {
            "tp_rate": num(cm.tp_rate),
            "fp_rate": num(cm.fp_rate),
            "precision": num(cm.precision),
            "recall": num(cm.recall),
            "f_measure": num(cm.f_measure),
            "support": cm.support,
        }

    return {
        "confusion_matrix": {
            "normal_as_normal": report.matrix.nn,
            "normal_as_malicious": report.matrix.nm,
            "malicious_as_normal": report.matrix.mn,
            "malicious_as_malicious": report.matrix.mm,
        },
        "accuracy": num(report.accuracy),
        "error_rate": num(report.error_rate),
        "tpr": num(report.tpr),
        "tnr": num(report.tnr),
        "fpr": num(report.fpr),
        "fnr": num(report.fnr),
        "precision": num(report.precision),
        "sensitivity": num(report.sensitivity),
        "specificity": num(report.specificity),
        "kappa": num(report.kappa),
        "per_class": {name: cm_dict(cm) for name, cm in report.per_class.items()},
        "weighted": cm_dict(report.weighted),
        "auc": report.auc,
    }
