"""K-nearest-neighbor classifier (K=1 by default) over feature instances.

Distance is Euclidean over the included attributes: nominal attributes
contribute 0/1 on mismatch, numeric attributes the squared min-max
normalized difference. By default only the five feature bits participate;
Time and AppName can be opted in to mimic a run that keeps all predictors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import arff
from .extract import (
    MALICIOUS,
    FeatureInstance,
    check_schema,
    instances_from_document,
)


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierConfig:
    k: int = 1
    include_identifiers: bool = False  # let Time and AppName join the distance

    def __post_init__(self):
        if self.k < 1:
            raise TrainingError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class TrainedClassifier:
    config: ClassifierConfig
    rows: tuple[FeatureInstance, ...]
    time_range: tuple[int, int] = (0, 0)  # (min, max) for normalization

    @property
    def k(self) -> int:
        return self.config.k


@dataclass(frozen=True)
class Prediction:
    label: str
    score: float  # fraction of the k neighbors labeled Malicious
    neighbor_indices: tuple[int, ...]


def train(rows: list[FeatureInstance], config: ClassifierConfig = ClassifierConfig()) -> TrainedClassifier:
    """Store the training rows; row order is the distance tie-break key."""
    if not rows:
        raise TrainingError("training set is empty")
    for i, row in enumerate(rows):
        if row.label is None:
            raise TrainingError(f"training row {i} has unknown class")
    if config.k > len(rows):
        raise TrainingError(f"k={config.k} exceeds training set size {len(rows)}")
    times = [r.time for r in rows]
    return TrainedClassifier(config, tuple(rows), (min(times), max(times)))


def distance(a: FeatureInstance, b: FeatureInstance, classifier: TrainedClassifier) -> float:
    total = 0.0
    for x, y in zip(a.bits.as_tuple(), b.bits.as_tuple()):
        if x != y:
            total += 1.0
    if classifier.config.include_identifiers:
        if a.app != b.app:
            total += 1.0
        lo, hi = classifier.time_range
        if hi > lo:
            d = (min(max(a.time, lo), hi) - min(max(b.time, lo), hi)) / (hi - lo)
            total += d * d
        elif a.time != b.time:
            total += 1.0
    return math.sqrt(total)


def classify(classifier: TrainedClassifier, instance: FeatureInstance) -> Prediction:
    """Deterministic k-NN vote; distance ties go to the lowest row index."""
    ranked = sorted(
        range(len(classifier.rows)),
        key=lambda i: (distance(instance, classifier.rows[i], classifier), i),
    )
    neighbors = tuple(ranked[: classifier.k])
    malicious = sum(1 for i in neighbors if classifier.rows[i].label == MALICIOUS)
    score = malicious / classifier.k
    if score > 0.5:
        label = MALICIOUS
    elif score < 0.5:
        label = "Normal"
    else:
        label = classifier.rows[neighbors[0]].label  # nearest tied neighbor decides
    return Prediction(label, score, neighbors)


def train_from_document(doc: arff.ArffDocument, config: ClassifierConfig = ClassifierConfig()) -> TrainedClassifier:
    return train(instances_from_document(doc), config)


def classify_document(
    classifier: TrainedClassifier, doc: arff.ArffDocument
) -> tuple[arff.ArffDocument, list[Prediction]]:
    """Fill every missing Class value with a prediction.

    All other row values pass through untouched; rows that already carry a
    class keep it (their prediction is still reported).
    """
    check_schema(doc)
    instances = instances_from_document(doc)
    class_idx = doc.attribute_index("Class")
    rows = []
    predictions = []
    for row, inst in zip(doc.rows, instances):
        pred = classify(classifier, inst)
        predictions.append(pred)
        if row[class_idx] is None:
            row = row[:class_idx] + (pred.label,) + row[class_idx + 1:]
        rows.append(row)
    labeled = arff.ArffDocument(doc.relation, list(doc.attributes), rows)
    return labeled, predictions
