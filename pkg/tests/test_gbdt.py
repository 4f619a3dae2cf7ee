import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scflink.errors import (
    DegenerateLabelsError,
    ModelFormatError,
    UnsupportedModelVersionError,
)
from scflink.features import FeatureVector, LabeledRecord, to_matrix
from scflink.gbdt import (
    evaluate,
    load_model,
    log_loss,
    model_to_json,
    predict_class,
    predict_proba,
    save_model,
    softmax,
    softmax_gradient_hessian,
    train_decision_tree,
    train_gbdt,
)


def make_record(ds, label, wcn=4):
    fv = FeatureVector(mm=4096, mc=4, wn=4, wmn=8192, wcn=wcn, ds=float(ds),
                       ac=2, mec=4 * 8192)
    return LabeledRecord(fv, label)


@pytest.fixture
def separable():
    # class determined by a single cut on ds
    low = [make_record(ds, 0) for ds in range(1, 11)]
    high = [make_record(ds, 1) for ds in range(1000, 1010)]
    return low + high


class TestTrainGbdt:
    def test_separable_training_accuracy(self, separable):
        # a depth-1 split at any ds in (10, 1000) separates: verify by
        # brute-force single-split enumeration first
        X, y = to_matrix(separable)
        ds_col = X[:, 5]
        cuts = [(a + b) / 2 for a, b in zip(sorted(ds_col), sorted(ds_col)[1:])]
        assert any(
            ((ds_col < c).astype(int) != y).sum() in (0, len(y)) for c in cuts)
        model = train_gbdt(separable, {"max_depth": 3, "n_estimators": 3},
                           seed=1)
        assert evaluate(model, separable).accuracy == 1.0

    def test_default_params_shape(self, separable):
        model = train_gbdt(separable,
                           {"max_depth": 3, "n_estimators": 3,
                            "learning_rate": 0.3}, seed=0)
        assert model.n_estimators == 3
        assert len(model.trees) == 3 * model.n_classes

    def test_deterministic_serialization(self, separable):
        m1 = train_gbdt(separable, {"n_estimators": 3}, seed=7)
        m2 = train_gbdt(separable, {"n_estimators": 3}, seed=7)
        assert model_to_json(m1) == model_to_json(m2)

    def test_empty_data_rejected(self):
        with pytest.raises(ValueError):
            train_gbdt([], {})

    def test_single_class_rejected(self):
        data = [make_record(d, 0) for d in range(1, 20)]
        with pytest.raises(DegenerateLabelsError):
            train_gbdt(data, {})

    def test_invalid_learning_rate(self, separable):
        with pytest.raises(ValueError):
            train_gbdt(separable, {"learning_rate": 0.0})

    def test_training_loss_non_increasing(self, separable):
        model = train_gbdt(separable, {"n_estimators": 6}, seed=3)
        curve = model.train_loss_curve
        assert all(b <= a + 1e-12 for a, b in zip(curve, curve[1:]))


class TestPredict:
    def test_untrained_model_uniform(self, separable):
        from scflink.gbdt import GbdtModel
        model = GbdtModel(n_classes=4, learning_rate=0.3, base_score=0.0,
                          trees=[])
        p = predict_proba(model, separable[0].features)
        assert p == pytest.approx([0.25] * 4)
        assert predict_class(model, separable[0].features) == 0  # tie-break

    def test_probabilities_in_open_interval(self, separable):
        model = train_gbdt(separable, {"n_estimators": 3}, seed=0)
        X, _ = to_matrix(separable)
        p = predict_proba(model, X)
        assert np.all(p > 0) and np.all(p < 1)
        assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)

    def test_true_class_probability_above_half(self, separable):
        model = train_gbdt(separable, {"n_estimators": 3}, seed=0)
        for rec in separable:
            p = predict_proba(model, rec.features)
            assert p[rec.label] > 0.5

    def test_argmax_scale_invariance(self, separable):
        model = train_gbdt(separable, {"n_estimators": 3}, seed=0)
        X, _ = to_matrix(separable)
        base = predict_class(model, X)
        for tree in model.trees:
            for node in tree.nodes:
                if node.is_leaf:
                    node.leaf *= 3.5
        assert np.array_equal(predict_class(model, X), base)

    @given(st.integers(2, 5), st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_softmax_rows_normalized(self, n_classes, seed):
        rng = np.random.default_rng(seed)
        scores = rng.normal(size=(8, n_classes)) * 5
        p = softmax(scores)
        assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)


class TestGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(99)
        eps = 1e-5
        for _ in range(50):
            n_classes = int(rng.integers(2, 6))
            scores = rng.normal(size=(1, n_classes)) * 3
            y = np.zeros((1, n_classes))
            label = int(rng.integers(n_classes))
            y[0, label] = 1.0
            grad, _ = softmax_gradient_hessian(scores, y)
            for c in range(n_classes):
                plus = scores.copy()
                plus[0, c] += eps
                minus = scores.copy()
                minus[0, c] -= eps
                fd = (log_loss(plus, np.array([label]))
                      - log_loss(minus, np.array([label]))) / (2 * eps)
                # mixed tolerance: relative where the gradient is large,
                # absolute where finite-difference noise dominates
                assert abs(grad[0, c] - fd) < 1e-6 * max(1.0, abs(fd))


class TestDecisionTree:
    def test_separable_accuracy(self, separable):
        model = train_decision_tree(separable, {"max_depth": 4}, seed=0)
        assert evaluate(model, separable).accuracy == 1.0

    def test_depth_zero_majority(self, separable):
        data = separable + [make_record(5000, 1), make_record(6000, 1)]
        model = train_decision_tree(data, {"max_depth": 0}, seed=0)
        preds = model.predict(to_matrix(data)[0])
        assert set(preds) == {1}  # class 1 is the majority

    def test_deterministic(self, separable):
        m1 = train_decision_tree(separable, {"max_depth": 4}, seed=5)
        m2 = train_decision_tree(separable, {"max_depth": 4}, seed=5)
        X, _ = to_matrix(separable)
        assert np.array_equal(m1.predict(X), m2.predict(X))

    def test_single_class_rejected(self):
        with pytest.raises(DegenerateLabelsError):
            train_decision_tree([make_record(d, 1) for d in range(1, 30)], {})


class TestEvaluate:
    def test_perfect_predictions(self, separable):
        model = train_gbdt(separable, {"n_estimators": 3}, seed=0)
        report = evaluate(model, separable)
        assert (report.accuracy, report.precision, report.recall,
                report.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_constant_predictor_on_balanced_set(self, separable):
        from scflink.gbdt import GbdtModel
        model = GbdtModel(n_classes=2, learning_rate=0.3, base_score=0.0,
                          trees=[])  # always predicts class 0
        report = evaluate(model, separable)
        assert report.accuracy == 0.5

    def test_confusion_trace_identity(self, separable):
        model = train_gbdt(separable, {"n_estimators": 1}, seed=0)
        report = evaluate(model, separable)
        assert report.accuracy == np.trace(report.confusion) / report.confusion.sum()

    def test_empty_test_rejected(self, separable):
        model = train_gbdt(separable, {"n_estimators": 1}, seed=0)
        with pytest.raises(ValueError):
            evaluate(model, [])


class TestSerialization:
    def test_round_trip_predictions(self, separable, tmp_path):
        model = train_gbdt(separable, {"n_estimators": 3}, seed=0)
        path = str(tmp_path / "model.json")
        save_model(model, path)
        loaded = load_model(path)
        assert model_to_json(loaded) == model_to_json(model)
        rng = np.random.default_rng(1)
        X = np.abs(rng.normal(size=(100, 8))) * 100 + 1
        assert np.array_equal(predict_class(loaded, X), predict_class(model, X))
        assert np.array_equal(predict_proba(loaded, X), predict_proba(model, X))

    def test_version_gate(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"version": 99, "n_classes": 2, "learning_rate": 0.3,'
                        ' "base_score": 0.0, "trees": []}')
        with pytest.raises(UnsupportedModelVersionError):
            load_model(str(path))

    def test_truncated_file(self, separable, tmp_path):
        model = train_gbdt(separable, {"n_estimators": 3}, seed=0)
        path = str(tmp_path / "model.json")
        save_model(model, path)
        text = open(path).read()
        open(path, "w").write(text[:len(text) // 2])
        with pytest.raises(ModelFormatError):
            load_model(path)
