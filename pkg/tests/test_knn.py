import math

import pytest
from hypothesis import given, strategies as st

from appwatch import arff, knn
from appwatch.extract import (
    MALICIOUS,
    NORMAL,
    FeatureBits,
    FeatureInstance,
    SchemaMismatchError,
    manual_vector,
)

_bits = st.tuples(*[st.integers(0, 1)] * 5)


def inst(bits, label=None, app="t", time=0):
    return FeatureInstance(time, app, FeatureBits(*bits), label)


def test_train_stores_rows(training_rows, default_classifier):
    assert len(default_classifier.rows) == 32
    assert default_classifier.rows == tuple(training_rows)


def test_train_rejects_bad_input():
    with pytest.raises(knn.TrainingError):
        knn.train([])
    with pytest.raises(knn.TrainingError):
        knn.train([inst((0, 0, 0, 0, 0))])  # unknown class
    with pytest.raises(knn.TrainingError):
        knn.train([inst((0, 0, 0, 0, 0), NORMAL)], knn.ClassifierConfig(k=2))


def test_single_row_classifier():
    clf = knn.train([inst((0, 0, 0, 0, 0), MALICIOUS)])
    assert knn.classify(clf, inst((1, 1, 1, 1, 1))).label == MALICIOUS


def test_distance_examples(default_classifier):
    clf = default_classifier
    assert knn.distance(inst((0, 0, 1, 0, 0)), inst((0, 0, 1, 0, 0)), clf) == 0
    assert knn.distance(inst((0, 0, 1, 0, 0)), inst((0, 0, 1, 0, 1)), clf) == 1
    assert knn.distance(inst((0, 0, 0, 0, 0)), inst((1, 1, 1, 1, 1)), clf) == pytest.approx(math.sqrt(5))


@given(_bits, _bits, _bits)
def test_metric_axioms(a, b, c):
    clf = knn.train([inst((0, 0, 0, 0, 0), NORMAL)])
    ia, ib, ic = inst(a), inst(b), inst(c)
    dab = knn.distance(ia, ib, clf)
    dba = knn.distance(ib, ia, clf)
    assert dab >= 0
    assert dab == dba
    assert (dab == 0) == (a == b)
    assert knn.distance(ia, ic, clf) <= dab + knn.distance(ib, ic, clf) + 1e-12


def test_zero_distance_dominance(default_classifier, training_rows):
    for row in training_rows:
        pred = knn.classify(default_classifier, inst(row.bits.as_tuple()))
        assert pred.label == row.label


def test_tie_break_lowest_index():
    rows = [
        inst((0, 0, 0, 0, 1), NORMAL),
        inst((0, 0, 0, 1, 0), MALICIOUS),
    ]
    clf = knn.train(rows)
    # query equidistant (distance sqrt(2)) from both rows
    pred = knn.classify(clf, inst((0, 0, 0, 1, 1)))
    assert pred.label == NORMAL
    assert pred.neighbor_indices == (0,)


def test_k1_score_is_hard_label(default_classifier, training_rows):
    for row in training_rows[:8]:
        pred = knn.classify(default_classifier, inst(row.bits.as_tuple()))
        assert pred.score in (0.0, 1.0)


def test_k3_vote_and_score():
    rows = [
        inst((0, 0, 0, 0, 0), NORMAL),
        inst((0, 0, 0, 0, 1), MALICIOUS),
        inst((0, 0, 0, 1, 0), MALICIOUS),
        inst((1, 1, 1, 1, 1), NORMAL),
    ]
    clf = knn.train(rows, knn.ClassifierConfig(k=3))
    pred = knn.classify(clf, inst((0, 0, 0, 0, 0)))
    assert pred.neighbor_indices == (0, 1, 2)
    assert pred.score == pytest.approx(2 / 3)
    assert pred.label == MALICIOUS


def test_even_k_tie_goes_to_nearest():
    rows = [
        inst((0, 0, 0, 0, 0), MALICIOUS),
        inst((0, 0, 0, 1, 1), NORMAL),
    ]
    clf = knn.train(rows, knn.ClassifierConfig(k=2))
    pred = knn.classify(clf, inst((0, 0, 0, 0, 1)))  # closer to row 0
    assert pred.score == 0.5
    assert pred.label == MALICIOUS


def test_include_identifiers_distance():
    rows = [
        FeatureInstance(0, "a", FeatureBits(0, 0, 0, 0, 0), NORMAL),
        FeatureInstance(100, "b", FeatureBits(0, 0, 0, 0, 0), MALICIOUS),
    ]
    clf = knn.train(rows, knn.ClassifierConfig(include_identifiers=True))
    probe = FeatureInstance(0, "a", FeatureBits(0, 0, 0, 0, 0))
    assert knn.distance(probe, rows[0], clf) == 0
    # app mismatch (1) + normalized time difference (1) -> sqrt(2)
    assert knn.distance(probe, rows[1], clf) == pytest.approx(math.sqrt(2))


def test_classify_snapshot_fixture(snapshot_arff_path, default_classifier):
    doc = arff.read_file(snapshot_arff_path)
    labeled, predictions = knn.classify_document(default_classifier, doc)
    class_idx = labeled.attribute_index("Class")
    assert len(labeled.rows) == 38
    assert all(row[class_idx] is not None for row in labeled.rows)
    # everything except the class column is untouched
    for before, after in zip(doc.rows, labeled.rows):
        assert before[:class_idx] == after[:class_idx]
    by_app = {}
    for row, pred in zip(doc.rows, predictions):
        by_app.setdefault(row[1], []).append(pred.label)
    # screen-off SMS burst is flagged; idle screen-on rows stay normal
    assert by_app["com.bbm.BbmService"] == [MALICIOUS]
    assert all(l == NORMAL for l in by_app["com.whatsapp"])
    assert all(l == NORMAL for l in by_app["Launcher"])


def test_classify_empty_document(default_classifier):
    from appwatch.extract import to_arff

    labeled, predictions = knn.classify_document(default_classifier, to_arff([]))
    assert labeled.rows == []
    assert predictions == []


def test_schema_mismatch_names_attribute(default_classifier):
    text = (
        "@relation r\n"
        "@attribute Time date 'MM.dd.yyyy HH:mm:ss'\n"
        "@attribute AppName {a}\n"
        "@attribute OutCall {0,1}\n"
        "@attribute InCall {0,1}\n"
        "@attribute OutSMS {0,1}\n"
        "@attribute InSMS {0,1}\n"
        "@attribute Class {Normal,Malicious}\n"
        "@data\n"
    )
    with pytest.raises(SchemaMismatchError, match="Screen"):
        knn.classify_document(default_classifier, arff.parse(text))


def test_already_labeled_rows_are_preserved(default_classifier):
    row = manual_vector((0, 0, 1, 0, 1), label=MALICIOUS)  # labeled contrary to the model
    from appwatch.extract import to_arff

    doc = to_arff([row])
    labeled, predictions = knn.classify_document(default_classifier, doc)
    assert labeled.rows[0][7] == MALICIOUS  # kept, not overwritten
    assert predictions[0].label == NORMAL  # prediction still reported
