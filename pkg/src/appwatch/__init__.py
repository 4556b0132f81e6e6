"""Behavior-based anomaly detection toolkit for device activity traces.

Simulates SMS/call/screen activity, folds traces into per-app feature
vectors, classifies them with a nearest-neighbor model trained on an
enumerated normality ruleset, and evaluates the results.
"""

from .events import DeviceEvent, EventKind, EventTrace, read_trace, validate_trace, write_trace
from .extract import FeatureBits, FeatureInstance, to_arff, to_csv
from .knn import ClassifierConfig, Prediction, TrainedClassifier, classify, train
from .model import LabelRule, NormalityModel, default_rules, enumerate_model
from .simulate import Injection, Scenario, generate

__all__ = [
    "ClassifierConfig",
    "DeviceEvent",
    "EventKind",
    "EventTrace",
    "FeatureBits",
    "FeatureInstance",
    "Injection",
    "LabelRule",
    "NormalityModel",
    "Prediction",
    "Scenario",
    "TrainedClassifier",
    "classify",
    "default_rules",
    "enumerate_model",
    "generate",
    "read_trace",
    "to_arff",
    "to_csv",
    "train",
    "validate_trace",
    "write_trace",
]

__version__ = "0.1.0"
