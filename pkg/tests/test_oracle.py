from __future__ import annotations

import numpy as np
import pytest

from surrogate_learning.core_math import ClassConditionalX1
from surrogate_learning.datagen import (
    Example1Spec,
    Example2Spec,
    discretize_example,
    random_ci_joint,
)
from surrogate_learning.errors import (
    DegenerateConditionals,
    DomainError,
    InvalidSimplex,
    ZeroMarginal,
)
from surrogate_learning.oracle import (
    CIJointSpec,
    DiscreteJoint,
    bayes_accuracy,
    check_conditional_independence,
    ci_spec_from_joint,
    cond_x1_given_x2,
    cond_x1_given_y,
    cond_y_given_x1_x2,
    cond_y_given_x2,
    joint_from_ci_spec,
    posterior_table,
    x1_given_x2_table,
)


def _sparse_joint() -> DiscreteJoint:
    """A joint whose last x2 cell has zero probability."""
    return joint_from_ci_spec(
        CIJointSpec(
            p_y0=0.5,
            p_x1_given_y=(0.3, 0.7),
            p_x2_given_y=(np.array([0.5, 0.5, 0.0]), np.array([0.2, 0.8, 0.0])),
        )
    )


class TestJointConstruction:
    def test_table_shape_and_total(self, recall_joint):
        assert recall_joint.table.shape == (2, 4, 2)
        assert recall_joint.k == 4
        assert recall_joint.table.sum() == pytest.approx(1.0, abs=1e-12)

    def test_table_is_read_only(self, recall_joint):
        with pytest.raises(ValueError, match="read-only"):
            recall_joint.table[0, 0, 0] = 0.5

    @pytest.mark.parametrize("seed", range(10))
    def test_ci_joint_passes_independence_check(self, seed):
        joint = joint_from_ci_spec(random_ci_joint(6, seed))
        assert check_conditional_independence(joint) < 1e-12

    def test_dependent_joint_fails_independence_check(self):
        # x1 and x2 perfectly correlated within each class.
        table = np.zeros((2, 2, 2))
        table[0, 0, :] = 0.25
        table[1, 1, :] = 0.25
        assert check_conditional_independence(DiscreteJoint(table)) == pytest.approx(
            0.25
        )

    def test_spec_recovered_from_joint(self):
        spec = random_ci_joint(8, seed=4)
        recovered = ci_spec_from_joint(joint_from_ci_spec(spec))
        assert recovered.p_y0 == pytest.approx(spec.p_y0)
        np.testing.assert_allclose(recovered.p_x1_given_y, spec.p_x1_given_y)
        for got, want in zip(recovered.p_x2_given_y, spec.p_x2_given_y, strict=True):
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_example2_has_no_positive_with_x1_zero(self):
        joint = joint_from_ci_spec(discretize_example(Example2Spec()))
        np.testing.assert_array_equal(joint.table[0, :, 1], 0.0)

    def test_json_round_trip(self, recall_joint):
        restored = DiscreteJoint.from_json(recall_joint.to_json())
        np.testing.assert_array_equal(restored.table, recall_joint.table)

    def test_rejects_unnormalised_vectors(self):
        with pytest.raises(InvalidSimplex):
            CIJointSpec(
                p_y0=0.5,
                p_x1_given_y=(0.2, 0.8),
                p_x2_given_y=(np.array([0.5, 0.4]), np.array([0.5, 0.5])),
            )

    def test_rejects_mismatched_vectors(self):
        with pytest.raises(InvalidSimplex):
            CIJointSpec(
                p_y0=0.5,
                p_x1_given_y=(0.2, 0.8),
                p_x2_given_y=(np.array([0.5, 0.5]), np.array([0.2, 0.3, 0.5])),
            )

    def test_rejects_wrong_table_shape(self):
        with pytest.raises(InvalidSimplex):
            DiscreteJoint(np.full((3, 2, 2), 1.0 / 12.0))

    def test_rejects_negative_cells(self):
        table = np.full((2, 2, 2), 0.125)
        table[0, 0, 0] = -0.125
        table[1, 1, 1] = 0.375
        with pytest.raises(InvalidSimplex):
            DiscreteJoint(table)


class TestConditionals:
    def test_example1_conditionals(self):
        cond = cond_x1_given_y(joint_from_ci_spec(discretize_example(Example1Spec())))
        assert cond.p_x1_given_y0 == pytest.approx(0.4)
        assert cond.p_x1_given_y1 == pytest.approx(0.8)

    def test_example2_conditionals(self):
        cond = cond_x1_given_y(joint_from_ci_spec(discretize_example(Example2Spec())))
        assert cond.p_x1_given_y0 == pytest.approx(0.4)
        assert cond.p_x1_given_y1 == pytest.approx(1.0)

    def test_uniform_joint_is_degenerate(self):
        with pytest.raises(DegenerateConditionals):
            cond_x1_given_y(DiscreteJoint(np.full((2, 5, 2), 0.05)))

    def test_zero_class_has_no_conditionals(self):
        table = np.zeros((2, 2, 2))
        table[:, :, 0] = 0.25
        with pytest.raises(ZeroMarginal):
            cond_x1_given_y(DiscreteJoint(table))

    def test_zero_x2_cell(self):
        joint = _sparse_joint()
        with pytest.raises(ZeroMarginal):
            cond_x1_given_x2(joint, 2)
        with pytest.raises(ZeroMarginal):
            cond_y_given_x2(joint, 2)
        with pytest.raises(ZeroMarginal):
            cond_y_given_x1_x2(joint, 1, 2)
        assert np.isnan(x1_given_x2_table(joint)[2])
        assert np.all(np.isnan(posterior_table(joint)[:, 2]))

    def test_tables_agree_with_cellwise_queries(self, recall_joint):
        p_x1 = x1_given_x2_table(recall_joint)
        posterior = posterior_table(recall_joint)
        for x2 in range(recall_joint.k):
            assert p_x1[x2] == pytest.approx(cond_x1_given_x2(recall_joint, x2))
            for x1 in (0, 1):
                assert posterior[x1, x2] == pytest.approx(
                    cond_y_given_x1_x2(recall_joint, x1, x2)
                )

    def test_class_posterior_given_x2_by_bayes_rule(self, recall_joint):
        p_y0 = 0.6
        p_x2_y0 = np.array([0.4, 0.3, 0.2, 0.1])
        p_x2_y1 = np.array([0.1, 0.2, 0.3, 0.4])
        expected = (1 - p_y0) * p_x2_y1 / ((1 - p_y0) * p_x2_y1 + p_y0 * p_x2_y0)
        got = [cond_y_given_x2(recall_joint, x2) for x2 in range(4)]
        np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_recall_joint_positive_posterior_with_x1_zero(self, recall_joint):
        # No positive has x1=0, so P(y=0|x1=0, x2) is one everywhere.
        np.testing.assert_allclose(posterior_table(recall_joint)[0], 1.0)

    @pytest.mark.parametrize(("x1", "x2"), [(2, 0), (-1, 0), (0, 4), (1, -1)])
    def test_out_of_range_queries(self, recall_joint, x1, x2):
        with pytest.raises(DomainError):
            cond_y_given_x1_x2(recall_joint, x1, x2)

    def test_out_of_range_x2(self, recall_joint):
        with pytest.raises(DomainError):
            cond_x1_given_x2(recall_joint, recall_joint.k)


class TestBayesAccuracy:
    def test_uninformative_features_give_majority_rate(self):
        joint = joint_from_ci_spec(
            CIJointSpec(
                p_y0=0.7,
                p_x1_given_y=(0.5, 0.5),
                p_x2_given_y=(np.array([0.25, 0.75]), np.array([0.25, 0.75])),
            )
        )
        assert bayes_accuracy(joint) == pytest.approx(0.7)

    def test_separable_joint_is_perfect(self):
        table = np.zeros((2, 2, 2))
        table[0, 0, 0] = 0.5
        table[1, 1, 1] = 0.5
        assert bayes_accuracy(DiscreteJoint(table)) == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_at_least_majority_rate(self, seed):
        joint = joint_from_ci_spec(random_ci_joint(5, seed))
        p_y = joint.table.sum(axis=(0, 1))
        assert bayes_accuracy(joint) >= p_y.max() - 1e-12

    def test_conditionals_type(self, recall_joint):
        cond = cond_x1_given_y(recall_joint)
        assert isinstance(cond, ClassConditionalX1)
        assert (cond.p_x1_given_y0, cond.p_x1_given_y1) == pytest.approx((0.5, 1.0))
