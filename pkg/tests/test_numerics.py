"""Dense-algebra substrate: matmul, stable scalars, Adam, finite differences."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from huge import numerics
from huge.numerics import (
    AdamState,
    NumericalError,
    adam_step,
    cosine_similarity,
    finite_diff_gradient,
    matmul,
    sigmoid,
    softplus_neg,
)


class TestMatmul:
    def test_identity(self):
        M = np.arange(12.0).reshape(3, 4)
        np.testing.assert_array_equal(matmul(np.eye(3), M), M)

    def test_1x2_times_2x1(self):
        out = matmul(np.array([[1.0, 2.0]]), np.array([[3.0], [4.0]]))
        assert out.shape == (1, 1)
        assert out[0, 0] == 11.0

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(5, 4))
        b = rng.normal(size=(4, 3))
        want = np.zeros((5, 3))
        for i in range(5):
            for j in range(3):
                for k in range(4):
                    want[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(matmul(a, b), want, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_transpose_identity(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(4, 6))
        b = rng.normal(size=(6, 5))
        np.testing.assert_allclose(matmul(a, b).T, matmul(b.T, a.T), atol=1e-10)


class TestCosineSimilarity:
    def test_self_is_one(self):
        v = np.array([2.0, -1.0, 0.5])
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_is_zero(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.0, abs=1e-15)

    def test_appendix_pair(self):
        # cos([1,2],[3,4]) = 11/(sqrt(5)*5) = 0.9838699..., distance 0.016
        c = cosine_similarity(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
        assert 1.0 - c == pytest.approx(0.016, abs=5e-4)

    def test_zero_vector_guarded(self):
        z = np.zeros(3)
        v = np.ones(3)
        assert cosine_similarity(z, v) == 0.0

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_bounded_and_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        u = rng.normal(size=4) * 10.0 ** rng.integers(-3, 4)
        v = rng.normal(size=4) * 10.0 ** rng.integers(-3, 4)
        c = cosine_similarity(u, v)
        assert -1.0 <= c <= 1.0
        assert c == cosine_similarity(v, u)


class TestSoftplusNeg:
    def test_zero(self):
        assert softplus_neg(0.0) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_large_positive_no_overflow(self):
        assert softplus_neg(1000.0) == pytest.approx(0.0, abs=1e-300)

    def test_minus_three(self):
        # log(1 + e^3) to full precision
        assert softplus_neg(-3.0) == pytest.approx(3.048587351573742, abs=1e-12)

    def test_large_negative_no_overflow(self):
        v = softplus_neg(-1e6)
        assert np.isfinite(v) and v == pytest.approx(1e6, rel=1e-12)

    @given(st.floats(-1e6, 1e6, allow_nan=False))
    @settings(max_examples=100, deadline=None)
    def test_positive_and_reflection_identity(self, x):
        a = softplus_neg(x)
        b = softplus_neg(-x)
        assert a > 0.0
        # softplus_neg(x) + softplus_neg(-x) = |x| + 2*softplus_neg(|x|)
        assert a + b == pytest.approx(abs(x) + 2.0 * softplus_neg(abs(x)), rel=1e-12, abs=1e-12)

    def test_vectorized(self):
        x = np.array([-2.0, 0.0, 2.0])
        np.testing.assert_allclose(softplus_neg(x), [softplus_neg(v) for v in x], rtol=1e-15)


class TestSigmoid:
    def test_extremes_stable(self):
        assert sigmoid(1000.0) == pytest.approx(1.0)
        assert sigmoid(-1000.0) == pytest.approx(0.0, abs=1e-300)
        assert sigmoid(0.0) == 0.5


class TestAdam:
    def _one_param(self, value):
        return {"w": np.array([value])}

    def test_zero_gradient_keeps_params(self):
        p = self._one_param(0.7)
        st0 = AdamState.zeros_like(p)
        p1, st1 = adam_step(p, {"w": np.zeros(1)}, st0, lr=0.001)
        np.testing.assert_array_equal(p1["w"], p["w"])
        assert st1.step == 1

    def test_first_step_displacement(self):
        # g=1 at step 1: mhat=1, vhat=1, delta = lr/(1+eps) ~ lr
        p = self._one_param(0.0)
        p1, _ = adam_step(p, {"w": np.ones(1)}, AdamState.zeros_like(p), lr=0.001)
        assert p1["w"][0] == pytest.approx(-0.001, rel=1e-6)

    def test_determinism(self):
        p = self._one_param(0.3)
        g = {"w": np.array([0.2])}
        a1, s1 = adam_step(p, g, AdamState.zeros_like(p), lr=0.01)
        a2, s2 = adam_step(p, g, AdamState.zeros_like(p), lr=0.01)
        assert a1["w"].tobytes() == a2["w"].tobytes()
        assert s1.m["w"].tobytes() == s2.m["w"].tobytes()

    def test_lr_scale_equivariance_first_step(self):
        p = self._one_param(0.0)
        g = {"w": np.array([0.37])}
        a, _ = adam_step(p, g, AdamState.zeros_like(p), lr=0.001)
        b, _ = adam_step(p, g, AdamState.zeros_like(p), lr=0.002)
        assert b["w"][0] == pytest.approx(2.0 * a["w"][0], rel=1e-12)

    def test_functional_no_mutation(self):
        p = self._one_param(0.5)
        st0 = AdamState.zeros_like(p)
        before = p["w"].copy()
        adam_step(p, {"w": np.ones(1)}, st0, lr=0.01)
        np.testing.assert_array_equal(p["w"], before)
        assert st0.step == 0

    def test_shape_mismatch(self):
        p = {"w": np.zeros(2)}
        with pytest.raises(ValueError):
            adam_step(p, {"w": np.zeros(3)}, AdamState.zeros_like(p), lr=0.01)


class TestFiniteDiff:
    def test_quadratic(self):
        params = {"t": np.array([3.0])}
        grad = finite_diff_gradient(lambda p: float(p["t"][0] ** 2), params)
        assert grad["t"][0] == pytest.approx(6.0, abs=1e-8)

    def test_constant(self):
        params = {"t": np.arange(4.0)}
        grad = finite_diff_gradient(lambda p: 1.5, params)
        np.testing.assert_array_equal(grad["t"], np.zeros(4))

    def test_nonfinite_loss_rejected(self):
        params = {"t": np.array([0.0])}
        with pytest.raises(NumericalError):
            finite_diff_gradient(lambda p: float("nan"), params)

    def test_multi_array(self):
        params = {"a": np.array([1.0, 2.0]), "b": np.array([[3.0]])}

        def f(p):
            return float(np.sum(p["a"] ** 2) + 5.0 * p["b"][0, 0])

        grad = finite_diff_gradient(f, params)
        np.testing.assert_allclose(grad["a"], [2.0, 4.0], atol=1e-7)
        assert grad["b"][0, 0] == pytest.approx(5.0, abs=1e-7)


def test_as_matrix_rejects_ragged():
    with pytest.raises(ValueError):
        numerics.as_matrix([[1.0, 2.0], [3.0]])
