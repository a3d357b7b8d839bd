"""Tests for row-norm sampling and sketch construction."""
import numpy as np
import pytest

from sketchnorm.errors import ParameterError
from sketchnorm.estimate.sketch import (
    SketchParams,
    draw_sketch,
    make_plan,
    required_samples,
    sketch_error,
)
from sketchnorm.linalg import oracle
from sketchnorm.linalg.matrix import Matrix, frobenius_sq, row_norms_squared, scale, to_dense


class TestSamplingPlan:
    def test_identity_is_uniform(self):
        plan = make_plan(Matrix.from_dense(np.eye(3)))
        np.testing.assert_allclose(plan.probabilities, [1 / 3, 1 / 3, 1 / 3])
        assert plan.source_frobenius_sq == 3.0

    def test_proportional_to_squared_row_norms(self):
        plan = make_plan(Matrix.from_dense([[3, 0], [0, 4]]))
        np.testing.assert_allclose(plan.probabilities, [9 / 25, 16 / 25])

    def test_zero_row_has_zero_probability(self):
        plan = make_plan(Matrix.from_dense([[1, 2], [0, 0], [2, 1]]))
        assert plan.probabilities[1] == 0.0
        assert plan.probabilities.sum() == pytest.approx(1.0)

    def test_zero_matrix(self):
        with pytest.raises(ParameterError, match="zero matrix has no sampling distribution"):
            make_plan(Matrix.from_dense(np.zeros((3, 3))))

    def test_unknown_sampler(self):
        with pytest.raises(ParameterError):
            make_plan(Matrix.from_dense(np.eye(2)), sampler="reservoir")

    @pytest.mark.parametrize("sampler", ["cumulative", "alias"])
    def test_zero_rows_never_drawn(self, sampler):
        plan = make_plan(Matrix.from_dense([[0, 0], [1, 1], [0, 0], [2, 0], [0, 0]]), sampler=sampler)
        idx = plan.draw_indices(5000, np.random.default_rng(0))
        assert set(np.unique(idx)) <= {1, 3}

    @pytest.mark.parametrize("sampler", ["cumulative", "alias"])
    def test_draw_frequencies(self, sampler):
        m = Matrix.from_dense(np.diag([1.0, 2.0, 3.0, 4.0]))
        plan = make_plan(m, sampler=sampler)
        draws = 200_000
        counts = np.bincount(plan.draw_indices(draws, np.random.default_rng(1)), minlength=4)
        expected = plan.probabilities * draws
        # 5 binomial standard errors per cell
        tolerance = 5 * np.sqrt(expected * (1 - plan.probabilities))
        assert np.all(np.abs(counts - expected) <= tolerance)


class TestRequiredSamples:
    def test_small(self):
        assert required_samples(10, 0.5, 0.1) == 848

    def test_large(self):
        # 40000 ln(4000) = 331761.1...
        assert required_samples(100, 0.1, 0.05) == 331762

    def test_near_unit_epsilon(self):
        # ln(2d/delta) = 1 at delta = 2/e, so r -> ceil(4 / eps^2) -> 4 as eps -> 1
        assert required_samples(1, 0.999999, 2 / np.e) in (4, 5)

    @pytest.mark.parametrize("epsilon,delta", [(0.0, 0.1), (1.0, 0.1), (0.1, 0.0), (0.1, 1.0), (-0.2, 0.5)])
    def test_out_of_range(self, epsilon, delta):
        with pytest.raises(ParameterError):
            required_samples(10, epsilon, delta)

    def test_monotone(self):
        assert required_samples(10, 0.2, 0.1) > required_samples(10, 0.4, 0.1)
        assert required_samples(10, 0.2, 0.01) > required_samples(10, 0.2, 0.1)
        assert required_samples(20, 0.2, 0.1) > required_samples(10, 0.2, 0.1)


class TestSketchParams:
    def test_from_tolerance(self):
        params = SketchParams.from_tolerance(10, 0.5, 0.1, seed=3)
        assert params.r == 848
        assert params.seed == 3

    def test_oversample(self):
        params = SketchParams.from_tolerance(10, 0.5, 0.1, seed=3, oversample=4.0)
        assert params.r == 4 * 848

    def test_rejects_zero_r(self):
        with pytest.raises(ParameterError):
            SketchParams(r=0, seed=1)


class TestDrawSketch:
    def test_single_nonzero_row_is_forced(self):
        m = Matrix.from_dense([[0, 0, 0], [1.5, -2, 3], [0, 0, 0]])
        sketch = draw_sketch(m, make_plan(m), SketchParams(r=1, seed=9))
        np.testing.assert_array_equal(to_dense(sketch), [[1.5, -2, 3]])

    @pytest.mark.parametrize("seed", range(5))
    def test_identity_frobenius_preserved(self, seed):
        m = Matrix.from_dense(np.eye(2))
        sketch = draw_sketch(m, make_plan(m), SketchParams(r=2, seed=seed))
        np.testing.assert_allclose(row_norms_squared(sketch), [1.0, 1.0])
        assert frobenius_sq(sketch) == pytest.approx(2.0)

    def test_every_row_norm_is_frobenius_over_r(self):
        rng = np.random.default_rng(4)
        m = Matrix.from_dense(rng.standard_normal((50, 5)))
        r = 37
        sketch = draw_sketch(m, make_plan(m), SketchParams(r=r, seed=2))
        np.testing.assert_allclose(row_norms_squared(sketch), frobenius_sq(m) / r, rtol=1e-12)

    def test_seed_determinism(self):
        rng = np.random.default_rng(6)
        m = Matrix.from_dense(rng.standard_normal((40, 4)))
        plan = make_plan(m)
        a = draw_sketch(m, plan, SketchParams(r=25, seed=123))
        b = draw_sketch(m, plan, SketchParams(r=25, seed=123))
        np.testing.assert_array_equal(to_dense(a), to_dense(b))

    def test_sparse_in_sparse_out(self):
        m = Matrix.from_coo([0, 2, 3], [1, 0, 1], [1.0, 2.0, 3.0], (4, 2))
        sketch = draw_sketch(m, make_plan(m), SketchParams(r=10, seed=0))
        assert sketch.is_sparse
        assert sketch.shape == (10, 2)

    def test_plan_mismatch(self):
        m = Matrix.from_dense(np.eye(3))
        other = Matrix.from_dense(np.eye(4))
        with pytest.raises(ParameterError):
            draw_sketch(other, make_plan(m), SketchParams(r=2, seed=0))

    @pytest.mark.parametrize("c", [2.0, 0.25, -4.0])
    def test_scaling_commutes_with_sketch(self, c):
        m = Matrix.from_dense(np.random.default_rng(10).standard_normal((60, 5)))
        params = SketchParams(r=40, seed=17)
        scaled = scale(m, c)
        np.testing.assert_array_equal(
            to_dense(draw_sketch(scaled, make_plan(scaled), params)),
            c * to_dense(draw_sketch(m, make_plan(m), params)),
        )

    def test_unbiased_gram(self):
        rng = np.random.default_rng(8)
        values = rng.standard_normal((30, 3))
        m = Matrix.from_dense(values)
        plan = make_plan(m)
        total = np.zeros((3, 3))
        trials = 400
        for seed in range(trials):
            s = to_dense(draw_sketch(m, plan, SketchParams(r=20, seed=seed)))
            total += s.T @ s
        gram = values.T @ values
        assert np.linalg.norm(total / trials - gram) <= 0.1 * np.linalg.norm(gram)


def test_sketch_error_within_tolerance_for_required_r():
    rng = np.random.default_rng(12)
    m = Matrix.from_dense(rng.standard_normal((100, 5)))
    params = SketchParams.from_tolerance(5, 0.5, 0.1, seed=1)
    sketch = draw_sketch(m, make_plan(m), params)
    norm_sq = np.linalg.eigvalsh(to_dense(m).T @ to_dense(m))[-1]
    assert sketch_error(m, sketch) <= 0.5 * norm_sq


def test_sketch_error_reuses_source_gram():
    rng = np.random.default_rng(13)
    m = Matrix.from_dense(rng.standard_normal((40, 4)))
    sketch = draw_sketch(m, make_plan(m), SketchParams(r=30, seed=2))
    gram = oracle.gram_matrix(m)
    assert sketch_error(m, sketch, source_gram=gram) == sketch_error(m, sketch)
