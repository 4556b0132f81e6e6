from pathlib import Path

import pytest

from appwatch import knn, model
from appwatch.extract import instances_from_document

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def snapshot_arff_path():
    return FIXTURES / "device_snapshot.arff"


@pytest.fixture(scope="session")
def snapshot_arff_text(snapshot_arff_path):
    return snapshot_arff_path.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def training_rows():
    doc = model.to_training_arff(model.enumerate_model(model.default_rules()))
    return instances_from_document(doc)


@pytest.fixture(scope="session")
def default_classifier(training_rows):
    return knn.train(training_rows, knn.ClassifierConfig(k=1))
