import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cgshrink.constants import ShrinkageConstant, ShrinkSource
from cgshrink.errors import DomainError, SingularObservationError
from cgshrink.estimators import (
    EstimatorId,
    apply_estimator,
    estimate_james_stein,
    estimate_mle,
    estimate_shrink,
    shrink_factor,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def nonzero_vectors(p_min=2, p_max=8):
    return st.integers(p_min, p_max).flatmap(
        lambda p: arrays(float, p, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-6)
    )


class TestMle:
    def test_returns_copy(self):
        y = np.array([1.0, -2.0, 3.0])
        est = estimate_mle(y)
        np.testing.assert_array_equal(est.theta_hat, y)
        est.theta_hat[0] = 99.0
        assert y[0] == 1.0
        assert est.estimator_id is EstimatorId.MLE

    @pytest.mark.parametrize("y", [[1.0], 3.0, np.zeros((4, 1))])
    def test_rejects_scalar_dimension(self, y):
        with pytest.raises(DomainError):
            estimate_mle(y)


class TestJamesStein:
    def test_known_value(self):
        y = np.array([3.0, 4.0, 0.0])
        # 1 - (3 - 2)/25
        np.testing.assert_allclose(estimate_james_stein(y).theta_hat, 0.96 * y)

    def test_p2_is_identity(self):
        y = np.array([0.3, -0.4])
        np.testing.assert_array_equal(estimate_james_stein(y).theta_hat, y)

    def test_singular(self):
        with pytest.raises(SingularObservationError):
            estimate_james_stein(np.zeros(3))


class TestShrink:
    def test_known_value(self):
        y = np.array([3.0, 4.0])
        np.testing.assert_allclose(estimate_shrink(y, 1.0).theta_hat, 0.8 * y)

    def test_zero_constant_is_mle(self):
        y = np.array([0.1, 0.2, 0.3])
        out = estimate_shrink(y, 0.0).theta_hat
        np.testing.assert_array_equal(out, y)
        assert out is not y

    def test_accepts_shrinkage_constant(self):
        c = ShrinkageConstant(0.5, ShrinkSource.THEOREM_2_1)
        np.testing.assert_allclose(estimate_shrink([0.0, 2.0], c).theta_hat, [0.0, 1.5])

    def test_not_truncated_at_zero(self):
        # ||y|| < c: the factor is negative and the estimate flips through the origin
        y = np.array([0.3, 0.4])
        np.testing.assert_allclose(estimate_shrink(y, 1.0).theta_hat, -1.0 * y)

    def test_positive_part_extension(self):
        y = np.array([0.3, 0.4])
        est = estimate_shrink(y, 1.0, positive_part=True)
        np.testing.assert_array_equal(est.theta_hat, np.zeros(2))
        assert est.estimator_id is EstimatorId.SHRINK_POSITIVE_PART

    def test_rowwise_on_stacks(self):
        y = np.array([[3.0, 4.0], [0.0, 2.0]])
        np.testing.assert_allclose(estimate_shrink(y, 1.0).theta_hat, [[2.4, 3.2], [0.0, 1.0]])

    def test_singular(self):
        with pytest.raises(SingularObservationError):
            estimate_shrink(np.array([[1.0, 0.0], [0.0, 0.0]]), 0.5)

    def test_negative_constant(self):
        with pytest.raises(DomainError):
            estimate_shrink([1.0, 1.0], -0.1)

    @settings(max_examples=100, deadline=None)
    @given(y=nonzero_vectors(), c=st.floats(0, 20))
    def test_norm_identity(self, y, c):
        # ||theta*|| = | ||y|| - c | and theta* is parallel to y
        out = estimate_shrink(y, c).theta_hat
        norm = np.linalg.norm(y)
        assert np.linalg.norm(out) == pytest.approx(abs(norm - c), rel=1e-9, abs=1e-9)
        np.testing.assert_allclose(out, (1.0 - c / norm) * y, atol=1e-12 * (norm + c))

    @settings(max_examples=100, deadline=None)
    @given(y=nonzero_vectors(), c=st.floats(0, 5), scale=st.floats(0.1, 10))
    def test_rotation_equivariance(self, y, c, scale):
        rng = np.random.default_rng(0)
        q, _ = np.linalg.qr(rng.standard_normal((y.size, y.size)))
        lhs = estimate_shrink(q @ y, c).theta_hat
        rhs = q @ estimate_shrink(y, c).theta_hat
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.linalg.norm(y) + c))


class TestDispatch:
    @pytest.mark.parametrize("kind", list(EstimatorId))
    def test_matches_direct_calls(self, kind):
        y = np.array([1.0, 2.0, -2.0])
        direct = {
            EstimatorId.MLE: estimate_mle(y).theta_hat,
            EstimatorId.JAMES_STEIN: estimate_james_stein(y).theta_hat,
            EstimatorId.SHRINK: estimate_shrink(y, 0.7).theta_hat,
            EstimatorId.SHRINK_POSITIVE_PART: estimate_shrink(y, 0.7, positive_part=True).theta_hat,
        }[kind]
        np.testing.assert_allclose(apply_estimator(kind.value, y, 0.7), direct)

    def test_shrink_factor_clipping(self):
        norms = np.array([[0.5], [2.0]])
        np.testing.assert_allclose(shrink_factor(norms, 1.0), [[-1.0], [0.5]])
        np.testing.assert_allclose(shrink_factor(norms, 1.0, positive_part=True), [[0.0], [0.5]])

    def test_unknown_id(self):
        with pytest.raises(ValueError):
            apply_estimator("ridge", [1.0, 2.0])
