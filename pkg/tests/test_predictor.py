from __future__ import annotations

import json

import numpy as np
import pytest
from scipy.special import expit

from surrogate_learning.datagen import (
    Example1Spec,
    default_grid_range,
    discretize_example,
    sample_example,
    sample_joint,
)
from surrogate_learning.errors import (
    DimensionMismatch,
    DomainError,
    EmptyData,
    NonFiniteLoss,
    SingleClassData,
)
from surrogate_learning.oracle import (
    CIJointSpec,
    cond_x1_given_x2,
    joint_from_ci_spec,
    x1_given_x2_table,
)
from surrogate_learning.predictor import (
    FeatureVector,
    HistogramModel,
    LogisticModel,
    TrainConfig,
    design_matrix,
    fit_histogram,
    fit_histogram_arrays,
    fit_logistic,
    fit_logistic_matrix,
    logistic_gradient,
    logistic_loss,
    predict_proba,
)


def _logistic_data(
    rng: np.random.Generator, n: int, weights: np.ndarray, bias: float
) -> tuple[np.ndarray, np.ndarray]:
    X = rng.normal(size=(n, len(weights)))
    y = (rng.uniform(size=n) < expit(X @ weights + bias)).astype(np.float64)
    return X, y


class TestFeatureVector:
    def test_from_optional_marks_missing(self):
        fv = FeatureVector.from_optional([1.0, None, 3.0])
        np.testing.assert_array_equal(fv.missing_mask, [False, True, False])
        np.testing.assert_array_equal(fv.as_row(), [1.0, np.nan, 3.0])
        assert len(fv) == 3

    def test_mismatched_mask(self):
        with pytest.raises(DimensionMismatch):
            FeatureVector(np.zeros(3), np.zeros(2, dtype=bool))

    def test_present_values_must_be_finite(self):
        with pytest.raises(DomainError):
            FeatureVector(np.array([np.inf]), np.array([False]))

    def test_missing_values_may_be_anything(self):
        fv = FeatureVector(np.array([np.nan]), np.array([True]))
        assert np.isnan(fv.as_row()[0])

    def test_design_matrix(self):
        X = design_matrix(
            [
                FeatureVector.from_optional([1.0, None]),
                FeatureVector.from_optional([2.0, 5.0]),
            ]
        )
        np.testing.assert_array_equal(X, [[1.0, np.nan], [2.0, 5.0]])

    def test_design_matrix_rejects_ragged_rows(self):
        with pytest.raises(DimensionMismatch):
            design_matrix(
                [
                    FeatureVector.from_optional([1.0]),
                    FeatureVector.from_optional([1.0, 2.0]),
                ]
            )

    def test_design_matrix_rejects_empty(self):
        with pytest.raises(EmptyData):
            design_matrix([])


class TestLogisticObjective:
    def test_gradient_matches_finite_differences(self, rng):
        step = 1e-5
        for _ in range(20):
            d = int(rng.integers(1, 5))
            X = rng.normal(size=(30, d))
            y = rng.integers(0, 2, size=30).astype(np.float64)
            weights = rng.normal(size=d)
            bias = float(rng.normal())
            l2 = float(rng.uniform(0.0, 0.1))

            grad_w, grad_b = logistic_gradient(weights, bias, X, y, l2)
            for i in range(d):
                shift = np.zeros(d)
                shift[i] = step
                numeric = (
                    logistic_loss(weights + shift, bias, X, y, l2)
                    - logistic_loss(weights - shift, bias, X, y, l2)
                ) / (2 * step)
                assert abs(numeric - grad_w[i]) < 1e-6
            numeric_b = (
                logistic_loss(weights, bias + step, X, y, l2)
                - logistic_loss(weights, bias - step, X, y, l2)
            ) / (2 * step)
            assert abs(numeric_b - grad_b) < 1e-6

    def test_loss_at_zero_is_log_two(self):
        X = np.array([[1.0], [-2.0]])
        y = np.array([0.0, 1.0])
        assert logistic_loss(np.zeros(1), 0.0, X, y, 0.0) == pytest.approx(np.log(2))

    def test_penalty_excludes_bias(self):
        X = np.zeros((2, 1))
        y = np.array([0.0, 1.0])
        base = logistic_loss(np.zeros(1), 3.0, X, y, 0.0)
        assert logistic_loss(np.zeros(1), 3.0, X, y, 1.0) == pytest.approx(base)
        assert logistic_loss(np.ones(1), 3.0, X, y, 1.0) == pytest.approx(base + 0.5)


class TestFitLogistic:
    def test_loss_is_non_increasing(self, rng):
        X, y = _logistic_data(rng, 2000, np.array([1.0, -1.0]), 0.2)
        model = fit_logistic_matrix(X, y, TrainConfig(max_epochs=300))
        history = np.asarray(model.loss_history)
        assert np.all(np.diff(history) <= 1e-12)
        assert model.epochs == len(history)

    def test_recovers_generating_weights(self, rng):
        true_weights = np.array([1.0, -1.0, 1.0])
        X, y = _logistic_data(rng, 200_000, true_weights, 0.3)
        model = fit_logistic_matrix(
            X, y, TrainConfig(learning_rate=1.0, l2_penalty=0.0, max_epochs=5000)
        )
        np.testing.assert_allclose(model.weights, true_weights, rtol=0.05)
        assert model.bias == pytest.approx(0.3, abs=0.05)

    def test_feature_vector_interface(self, rng):
        X, y = _logistic_data(rng, 500, np.array([2.0]), 0.0)
        data = [
            (FeatureVector.from_optional([float(x)]), int(label))
            for x, label in zip(X[:, 0], y, strict=True)
        ]
        from_vectors = fit_logistic(data, TrainConfig(max_epochs=200))
        from_matrix = fit_logistic_matrix(X, y, TrainConfig(max_epochs=200))
        np.testing.assert_allclose(from_vectors.weights, from_matrix.weights)
        assert from_vectors.trained_on == 500

    def test_missing_features_are_imputed_with_training_mean(self):
        X = np.array([[1.0], [3.0], [np.nan], [0.0], [4.0]])
        y = np.array([0.0, 1.0, 1.0, 0.0, 1.0])
        model = fit_logistic_matrix(X, y, TrainConfig(max_epochs=50))
        np.testing.assert_allclose(model.feature_means, [2.0])
        missing = FeatureVector.from_optional([None])
        present = FeatureVector.from_optional([2.0])
        assert model.predict_proba(missing) == pytest.approx(
            model.predict_proba(present)
        )

    def test_is_deterministic(self, rng):
        X, y = _logistic_data(rng, 1000, np.array([0.5, 0.5]), -0.5)
        first = fit_logistic_matrix(X, y, TrainConfig(max_epochs=100))
        second = fit_logistic_matrix(X, y, TrainConfig(max_epochs=100))
        np.testing.assert_array_equal(first.weights, second.weights)
        assert first.bias == second.bias

    def test_single_class(self):
        with pytest.raises(SingleClassData):
            fit_logistic_matrix(np.ones((3, 1)), np.ones(3))

    def test_no_data(self):
        with pytest.raises(EmptyData):
            fit_logistic([])

    def test_non_binary_labels(self):
        with pytest.raises(DomainError):
            fit_logistic_matrix(np.ones((2, 1)), np.array([0.0, 2.0]))

    def test_divergence_is_reported(self):
        X = np.array([[10.0], [-10.0]])
        y = np.array([0.0, 1.0])
        with (
            np.errstate(all="ignore"),
            pytest.raises(NonFiniteLoss),
        ):
            fit_logistic_matrix(X, y, TrainConfig(learning_rate=1e308))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"learning_rate": 0.0},
            {"l2_penalty": -1.0},
            {"max_epochs": 0},
            {"tolerance": 0.0},
        ],
    )
    def test_invalid_train_config(self, kwargs):
        with pytest.raises(DomainError):
            TrainConfig(**kwargs)


class TestLogisticPrediction:
    def test_zero_model_predicts_half(self):
        model = LogisticModel(np.zeros(2), 0.0, np.zeros(2), trained_on=0)
        assert predict_proba(model, FeatureVector.from_optional([3.0, -1.0])) == 0.5

    def test_sigmoid_of_linear_score(self):
        model = LogisticModel(np.array([2.0, -1.0]), 0.5, np.zeros(2), trained_on=0)
        x = FeatureVector.from_optional([1.0, 3.0])
        assert predict_proba(model, x) == pytest.approx(expit(2.0 - 3.0 + 0.5))

    def test_missing_value_uses_mean(self):
        model = LogisticModel(np.array([2.0]), 0.0, np.array([0.5]), trained_on=0)
        assert predict_proba(model, FeatureVector.from_optional([None])) == (
            pytest.approx(expit(1.0))
        )

    def test_matrix_matches_single_predictions(self):
        model = LogisticModel(np.array([1.0, -0.5]), 0.1, np.array([0.0, 2.0]), 0)
        rows = [[0.3, None], [-1.0, 4.0]]
        X = np.array([[np.nan if v is None else v for v in row] for row in rows])
        expected = [predict_proba(model, FeatureVector.from_optional(r)) for r in rows]
        np.testing.assert_allclose(model.predict_proba_matrix(X), expected)

    def test_wrong_dimension(self):
        model = LogisticModel(np.zeros(2), 0.0, np.zeros(2), trained_on=0)
        with pytest.raises(DimensionMismatch):
            predict_proba(model, FeatureVector.from_optional([1.0]))
        with pytest.raises(DimensionMismatch):
            model.predict_proba_matrix(np.zeros((4, 3)))

    def test_json_round_trip(self):
        model = LogisticModel(
            np.array([0.25, -1.5]),
            0.75,
            np.array([1.0, 2.0]),
            trained_on=10,
            config=TrainConfig(learning_rate=0.5, seed=3),
            epochs=42,
        )
        document = model.to_json()
        assert json.loads(document)["kind"] == "logistic"
        restored = LogisticModel.from_json(document)
        np.testing.assert_array_equal(restored.weights, model.weights)
        assert restored.bias == model.bias
        assert restored.config == model.config
        assert restored.epochs == 42


class TestHistogram:
    def test_add_one_smoothing(self):
        model = fit_histogram(
            [(0.1, 1), (0.2, 1), (0.3, 0), (0.9, 0)], bins=2, x2_range=(0.0, 1.0)
        )
        np.testing.assert_array_equal(model.totals, [3, 1])
        np.testing.assert_array_equal(model.positives, [2, 0])
        np.testing.assert_allclose(model.estimates, [3 / 5, 1 / 3])

    def test_empty_bin_predicts_half(self, caplog):
        model = fit_histogram([(0.1, 1), (0.2, 1)], bins=4, x2_range=(0.0, 1.0))
        assert model.predict_proba(0.9) == 0.5
        assert "histogram bins are empty" in caplog.text

    def test_out_of_range_values_use_edge_bins(self):
        model = fit_histogram([(0.1, 1), (0.9, 0)], bins=2, x2_range=(0.0, 1.0))
        assert model.predict_proba(-50.0) == model.predict_proba(0.1)
        assert model.predict_proba(50.0) == model.predict_proba(0.9)
        np.testing.assert_array_equal(
            model.bin_index(np.array([-1.0, 0.0, 0.49, 0.5, 1.0, 2.0])),
            [0, 0, 0, 1, 1, 1],
        )

    @pytest.mark.parametrize("value", [np.nan, np.inf, -np.inf])
    def test_non_finite_x2_is_rejected(self, value):
        model = fit_histogram([(0.1, 1), (0.9, 0)], bins=2, x2_range=(0.0, 1.0))
        with pytest.raises(DomainError):
            model.predict_proba(value)
        with pytest.raises(DomainError):
            fit_histogram_arrays(
                np.array([0.2, value]), np.array([1, 0]), 2, (0.0, 1.0)
            )

    def test_many_matches_single(self, rng):
        x2 = rng.normal(size=200)
        model = fit_histogram_arrays(x2, rng.integers(0, 2, 200), 8, (-3.0, 3.0))
        np.testing.assert_array_equal(
            model.predict_proba_many(x2[:20]), [model.predict_proba(v) for v in x2[:20]]
        )

    def test_converges_to_exact_conditional(self):
        spec = Example1Spec()
        x2_range = default_grid_range(spec)
        sample = sample_example(spec, 1_000_000, seed=3)
        model = fit_histogram_arrays(sample.x2, sample.x1, 64, x2_range)
        exact = x1_given_x2_table(
            joint_from_ci_spec(discretize_example(spec, 64, x2_range))
        )

        error = np.abs(model.estimates - exact)
        weights = model.totals / model.totals.sum()
        assert float(np.sum(weights * error)) < 0.01
        populated = model.totals >= 20_000
        assert np.all(error[populated] < 0.02)

    @pytest.mark.parametrize("seed", [21, 22])
    def test_matches_discrete_oracle_on_aligned_bins(self, recall_joint, seed):
        spec = CIJointSpec(
            p_y0=0.45,
            p_x1_given_y=(0.25, 0.7),
            p_x2_given_y=(
                np.array([0.3, 0.25, 0.2, 0.15, 0.1]),
                np.array([0.1, 0.15, 0.2, 0.25, 0.3]),
            ),
        )
        for joint in (recall_joint, joint_from_ci_spec(spec)):
            x1, x2, _ = sample_joint(joint, 1_000_000, seed)
            model = fit_histogram_arrays(
                x2.astype(np.float64), x1, joint.k, (-0.5, joint.k - 0.5)
            )
            exact = [cond_x1_given_x2(joint, cell) for cell in range(joint.k)]
            assert np.max(np.abs(model.estimates - exact)) < 0.01

    @pytest.mark.parametrize(
        ("bins", "x2_range"), [(1, (0.0, 1.0)), (4, (1.0, 1.0)), (4, (2.0, 1.0))]
    )
    def test_invalid_layout(self, bins, x2_range):
        with pytest.raises(DomainError):
            fit_histogram([(0.5, 1)], bins=bins, x2_range=x2_range)

    def test_no_data(self):
        with pytest.raises(EmptyData):
            fit_histogram([], bins=4, x2_range=(0.0, 1.0))

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            fit_histogram_arrays(np.zeros(3), np.zeros(2), 4, (0.0, 1.0))

    def test_json_round_trip(self):
        model = fit_histogram([(0.1, 1), (0.7, 0)], bins=3, x2_range=(0.0, 1.0))
        document = model.to_json()
        assert json.loads(document)["kind"] == "histogram"
        restored = HistogramModel.from_json(document)
        assert restored.x2_range == model.x2_range
        np.testing.assert_array_equal(restored.estimates, model.estimates)
