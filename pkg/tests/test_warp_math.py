import math

import numpy as np
import pytest

from fspecaug.errors import DataError, NumericError, SingularSystemError
from fspecaug.warp_math import (
    RIDGE_FALLBACK,
    bilinear_sample,
    dense_flow,
    eval_spline,
    fit_spline,
    grid_points,
    kernel_phi,
    sparse_image_warp,
)

from oracles import bilinear_scalar, mp_spline


class TestKernel:
    def test_fixed_values(self):
        assert kernel_phi(0.0) == 0.0
        assert kernel_phi(1.0) == 0.0
        assert kernel_phi(math.e) == pytest.approx(math.e ** 2, rel=1e-15)

    def test_array_and_negative(self):
        np.testing.assert_allclose(kernel_phi([0.0, 2.0]), [0.0, 4 * math.log(2)])
        with pytest.raises(ValueError):
            kernel_phi(-0.1)


def random_centers(rng, k):
    return rng.uniform(-5, 5, size=(k, 2))


class TestSpline:
    def test_zero_values(self):
        s = fit_spline(random_centers(np.random.default_rng(1), 5), np.zeros((5, 2)))
        assert not s.kernel_weights.any() and not s.affine.any()
        assert not eval_spline(s, [[0.3, -1.0], [9.0, 9.0]]).any()

    def test_affine_reproduction_on_square(self):
        centers = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)

        def f(p):
            return np.column_stack([2 + 3 * p[:, 0] - p[:, 1], -1 + 0.5 * p[:, 1]])

        s = fit_spline(centers, f(centers))
        assert np.abs(s.kernel_weights).max() < 1e-8
        np.testing.assert_allclose(s.affine, [[2, -1], [3, 0], [-1, 0.5]], atol=1e-8)
        q = np.random.default_rng(0).uniform(-10, 10, size=(50, 2))
        np.testing.assert_allclose(eval_spline(s, q), f(q), atol=1e-8)

    def test_interpolates_random_centers(self, np_rng):
        c = random_centers(np_rng, 6)
        v = np_rng.normal(size=(6, 2))
        s = fit_spline(c, v)
        np.testing.assert_allclose(eval_spline(s, c), v, atol=1e-8)

    def test_side_conditions(self, np_rng):
        for _ in range(20):
            k = int(np_rng.integers(3, 9))
            c = random_centers(np_rng, k)
            s = fit_spline(c, np_rng.normal(size=(k, 2)))
            w = s.kernel_weights
            np.testing.assert_allclose(w.sum(axis=0), 0, atol=1e-8)
            np.testing.assert_allclose(c[:, 0] @ w, 0, atol=1e-8)
            np.testing.assert_allclose(c[:, 1] @ w, 0, atol=1e-8)

    def test_matches_extended_precision_solver(self, np_rng):
        for _ in range(10):
            k = int(np_rng.integers(3, 9))
            c = random_centers(np_rng, k)
            v = np_rng.normal(size=(k, 2))
            s = fit_spline(c, v)
            ref = mp_spline(c, v)
            for q in np_rng.uniform(-6, 6, size=(5, 2)):
                np.testing.assert_allclose(eval_spline(s, [q])[0], ref(q), atol=1e-8)

    def test_regularized_matches_oracle(self, np_rng):
        c = random_centers(np_rng, 5)
        v = np_rng.normal(size=(5, 1))
        s = fit_spline(c, v, regularization=0.3)
        ref = mp_spline(c, v, reg=0.3)
        q = [0.1, 0.2]
        np.testing.assert_allclose(eval_spline(s, [q])[0], ref(q), atol=1e-8)
        # smoothing: no longer exact at the centers
        assert np.abs(eval_spline(s, c) - v).max() > 1e-6

    def test_single_center_is_constant(self):
        # k=1 leaves only the constant term determined; the system is singular
        with pytest.raises(SingularSystemError):
            fit_spline([[1.0, 2.0]], [[3.0]])

    def test_collinear_centers_singular(self):
        c = [[0, 0], [1, 1], [2, 2], [3, 3]]
        with pytest.raises(SingularSystemError, match="collinear"):
            fit_spline(c, [[0], [1], [0], [1]])

    def test_near_duplicate_triggers_ridge_retry(self):
        c = [[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5], [0.5, 0.5 + 1e-13]]
        v = [[0, 0], [1, 1], [2, 0], [0, 1], [1, 1], [1, 1]]
        s = fit_spline(c, v)
        assert s.regularization == RIDGE_FALLBACK
        assert s.diagnostics and "ridge" in s.diagnostics[0]
        np.testing.assert_allclose(eval_spline(s, c), v, atol=1e-6)

    def test_exact_duplicates_merge(self):
        c = [[0, 0], [1, 0], [0, 1], [0, 1]]
        v = [[1.0], [2.0], [3.0], [3.0]]
        s = fit_spline(c, v)
        assert s.num_centers == 3 and not s.diagnostics

    def test_conflicting_duplicates(self):
        with pytest.raises(DataError, match="conflicting"):
            fit_spline([[0, 0], [1, 0], [0, 1], [0, 1]], [[1.0], [2.0], [3.0], [4.0]])

    @pytest.mark.parametrize(
        "centers,values",
        [([[0, 0, 0]], [[1]]), ([[np.nan, 0]], [[1]]), ([[0, 0], [1, 1]], [[1]]), ([[0, 0]], [[np.inf]])],
    )
    def test_bad_inputs(self, centers, values):
        with pytest.raises(DataError):
            fit_spline(centers, values)

    def test_negative_regularization(self):
        with pytest.raises(ValueError):
            fit_spline([[0, 0], [1, 0], [0, 1]], [[0], [0], [0]], regularization=-1)


class TestDenseFlow:
    def test_zero_flow(self):
        pts = [[0, 0], [3, 1], [5, 0]]
        assert not dense_flow(pts, pts, 8, 2).flow.any()

    def test_constant_displacement(self):
        src = np.array([[1, 0], [4, 1], [6, 0], [2, 1]], dtype=float)
        flow = dense_flow(src, src + [1.5, -0.25], 9, 3).flow
        np.testing.assert_allclose(flow[..., 0], 1.5, atol=1e-6)
        np.testing.assert_allclose(flow[..., 1], -0.25, atol=1e-6)

    def test_time_warp_control_set(self):
        tau, w0, w = 41, 10, 3
        c = tau // 2
        src = [(w0, 0), (w0, 1), (c, 0), (c, 1)]
        dst = [(w0 + w, 0), (w0 + w, 1), (c, 0), (c, 1)]
        flow = dense_flow(src, dst, tau, 2).flow
        np.testing.assert_allclose(flow[w0 + w, :, 0], 3, atol=1e-6)
        np.testing.assert_allclose(flow[c, :, 0], 0, atol=1e-6)
        assert np.abs(flow[..., 1]).max() <= 1e-8

    def test_needs_three_points(self):
        with pytest.raises(DataError):
            dense_flow([[0, 0], [1, 1]], [[0, 0], [1, 1]], 4, 4)
        with pytest.raises(DataError):
            dense_flow([[0, 0], [1, 1], [2, 0]], [[0, 0], [1, 1]], 4, 4)


class TestBilinear:
    def test_identity_grid_exact(self, np_rng):
        img = np_rng.normal(size=(5, 7, 3)).astype(np.float32)
        out = bilinear_sample(img, grid_points(5, 7))
        assert out.dtype == np.float32
        np.testing.assert_array_equal(out, img)

    def test_hand_value(self):
        img = np.array([[0.0, 1.0], [2.0, 3.0]])[..., None]
        coords = np.full((2, 2, 2), 0.5)
        np.testing.assert_array_equal(bilinear_sample(img, coords)[..., 0], 1.5)

    def test_clamps_to_border(self):
        img = np.arange(6, dtype=float).reshape(2, 3, 1)
        coords = np.array([[[-4.0, -1.0], [9.0, 0.0], [0.0, 7.5]], [[1.0, 2.0], [0.5, -3.0], [5.0, 5.0]]])
        got = bilinear_sample(img, coords)[..., 0]
        np.testing.assert_allclose(got, [[0, 3, 2], [5, 1.5, 5]])

    def test_random_vs_four_corner(self, np_rng):
        img = np_rng.normal(size=(5, 7, 2))
        coords = np.stack([np_rng.uniform(0, 4, (5, 7)), np_rng.uniform(0, 6, (5, 7))], axis=-1)
        got = bilinear_sample(img, coords)
        for i in range(5):
            for j in range(7):
                np.testing.assert_allclose(got[i, j], bilinear_scalar(img, *coords[i, j]), atol=1e-6)

    def test_errors(self):
        img = np.zeros((2, 2, 1))
        with pytest.raises(NumericError):
            bilinear_sample(img, np.full((2, 2, 2), np.nan))
        with pytest.raises(DataError):
            bilinear_sample(img, np.zeros((3, 2, 2)))
        with pytest.raises(DataError):
            bilinear_sample(np.zeros((2, 2)), np.zeros((2, 2, 2)))


class TestSparseWarp:
    def test_no_displacement(self, np_rng):
        img = np_rng.normal(size=(9, 2, 4))
        pts = [[2, 0], [2, 1], [4, 0], [4, 1]]
        np.testing.assert_allclose(sparse_image_warp(img, pts, pts), img, atol=1e-6)

    def test_spike_moves(self):
        img = np.zeros((20, 2, 1))
        img[5] = 1.0
        src = [(5, 0), (5, 1), (10, 0), (10, 1), (0, 0), (0, 1), (19, 0), (19, 1)]
        dst = [(8, 0), (8, 1), (10, 0), (10, 1), (0, 0), (0, 1), (19, 0), (19, 1)]
        out = sparse_image_warp(img, src, dst)
        np.testing.assert_allclose(out[8], 1.0, atol=1e-6)
        assert np.argmax(out[:, 0, 0]) == 8

    def test_constant_image(self, np_rng):
        img = np.full((12, 2, 3), 4.25)
        src = [(3, 0), (3, 1), (6, 0), (6, 1)]
        dst = [(1, 0), (1, 1), (6, 0), (6, 1)]
        np.testing.assert_allclose(sparse_image_warp(img, src, dst), 4.25, atol=1e-6)

    def test_dtype_preserved(self):
        img = np.ones((6, 2, 1), dtype=np.float32)
        pts = [(1, 0), (1, 1), (3, 0)]
        assert sparse_image_warp(img, pts, pts).dtype == np.float32
