"""Sparse control-point image warping.

A thin-plate (order-2 polyharmonic) spline with an affine term turns a few
control-point displacements into a dense flow field, and the image is
resampled bilinearly through that flow. Conventions:

* images are indexed ``(row, col, channel)``; points are ``(row, col)``;
* the spline is fitted on the *destination* points, mapping each one to its
  displacement ``dest - source``;
* resampling is an inverse map, ``out[q] = image[q - flow(q)]``, with sample
  coordinates clamped to the image border.

All arithmetic is float64.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

import numpy as np
import scipy.linalg

from .errors import DataError, NumericError, SingularSystemError

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
RIDGE_FALLBACK = 1e-10
SNAP_TOL = 1e-9


class Point2(NamedTuple):
    row: float
    col: float


def kernel_phi(r):
    """Thin-plate kernel ``r**2 * ln(r)`` with ``phi(0) = 0``. Scalar or array."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("kernel_phi is defined for r >= 0 only")
    safe = np.where(r > 0, r, 1.0)
    out = np.where(r > 0, r * r * np.log(safe), 0.0)
    return out if out.ndim else float(out)


def _phi_from_sq(r2: np.ndarray) -> np.ndarray:
    # r^2 ln r == 0.5 * r^2 ln r^2; avoids a sqrt
    safe = np.where(r2 > 0, r2, 1.0)
    return np.where(r2 > 0, 0.5 * r2 * np.log(safe), 0.0)


def _as_points(pts) -> np.ndarray:
    arr = np.asarray(pts, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DataError(f"expected a (k, 2) array of points, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("point coordinates must be finite")
    return arr


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


@dataclass(eq=False)
class Spline:
    centers: np.ndarray          # (k, 2)
    kernel_weights: np.ndarray   # (k, m)
    affine: np.ndarray           # (3, m): constant, row, col
    regularization: float = 0.0
    diagnostics: Tuple[str, ...] = field(default=())

    @property
    def num_centers(self) -> int:
        return self.centers.shape[0]


def _pivoted_solve(matrix: np.ndarray, rhs: np.ndarray):
    """LU with partial pivoting; ``None`` when the smallest pivot is below PIVOT_TOL."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    if np.min(np.abs(np.diag(lu))) < PIVOT_TOL:
        return None
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def _dedupe(centers: np.ndarray, values: np.ndarray):
    uniq, first, inverse = np.unique(centers, axis=0, return_index=True, return_inverse=True)
    if len(uniq) == len(centers):
        return centers, values
    inverse = inverse.reshape(-1)
    for i, group in enumerate(inverse):
        if not np.array_equal(values[i], values[first[group]]):
            raise DataError(
                f"duplicate center {tuple(centers[i])} with conflicting values "
                f"{tuple(values[first[group]])} and {tuple(values[i])}"
            )
    keep = np.sort(first)
    return centers[keep], values[keep]


def fit_spline(centers, values, regularization: float = 0.0) -> Spline:
    """Fit the thin-plate interpolant through ``values`` at ``centers``.

    Solves ``[[A + reg*I, P], [P.T, 0]] @ [w; v] = [values; 0]`` where
    ``A[i, j] = phi(|c_i - c_j|)`` and ``P[i] = (1, row_i, col_i)``. A
    near-singular system is retried once with a small ridge and the retry is
    noted in ``Spline.diagnostics``; if that also fails SingularSystemError
    is raised. Repeated centers carrying identical values are merged.
    """
    c = _as_points(centers)
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] != c.shape[0]:
        raise DataError(f"{c.shape[0]} centers but {v.shape[0]} values")
    if c.shape[0] < 1:
        raise DataError("at least one center is required")
    if regularization < 0:
        raise ValueError("regularization must be >= 0")
    if not np.isfinite(v).all():
        raise DataError("spline values must be finite")
    c, v = _dedupe(c, v)
    k, m = v.shape

    system = np.zeros((k + 3, k + 3))
    system[:k, :k] = _phi_from_sq(_sq_dists(c, c))
    system[:k, k] = 1.0
    system[:k, k + 1:] = c
    system[k:, :k] = system[:k, k:].T
    rhs = np.zeros((k + 3, m))
    rhs[:k] = v

    diagnostics = []
    reg = regularization
    solution = _pivoted_solve(_with_ridge(system, k, reg), rhs)
    if solution is None:
        reg = regularization + RIDGE_FALLBACK
        msg = f"near-singular spline system (k={k}); retried with ridge {reg:g}"
        logger.warning(msg)
        diagnostics.append(msg)
        solution = _pivoted_solve(_with_ridge(system, k, reg), rhs)
        if solution is None:
            raise SingularSystemError(
                f"spline system singular even with ridge {reg:g} "
                "(collinear or too few control points?)"
            )
    return Spline(c, solution[:k], solution[k:], reg, tuple(diagnostics))


def _with_ridge(system: np.ndarray, k: int, reg: float) -> np.ndarray:
    if reg == 0:
        return system
    out = system.copy()
    out[np.arange(k), np.arange(k)] += reg
    return out


def eval_spline(spline: Spline, queries) -> np.ndarray:
    """Evaluate at ``queries`` (n, 2); returns (n, m)."""
    q = _as_points(queries)
    kernel = _phi_from_sq(_sq_dists(q, spline.centers))
    poly = np.column_stack([np.ones(len(q)), q])
    return kernel @ spline.kernel_weights + poly @ spline.affine


@dataclass(eq=False)
class FlowField:
    rows: int
    cols: int
    flow: np.ndarray  # (rows, cols, 2): row and col displacement


def grid_points(R: int, C: int) -> np.ndarray:
    rr, cc = np.meshgrid(np.arange(R, dtype=np.float64), np.arange(C, dtype=np.float64), indexing="ij")
    return np.stack([rr, cc], axis=-1)


def dense_flow(source_pts, dest_pts, R: int, C: int, regularization: float = 0.0) -> FlowField:
    src = _as_points(source_pts)
    dst = _as_points(dest_pts)
    if src.shape != dst.shape:
        raise DataError("source and destination point lists differ in length")
    if src.shape[0] < 3:
        raise DataError("dense_flow needs at least 3 control points")
    spline = fit_spline(dst, dst - src, regularization)
    grid = grid_points(R, C)
    flow = eval_spline(spline, grid.reshape(-1, 2)).reshape(R, C, 2)
    if not np.isfinite(flow).all():
        raise NumericError("spline produced non-finite flow")
    return FlowField(R, C, flow)


class BilinearPlan(NamedTuple):
    """Precomputed corner indices and weights for resampling an R x C grid."""

    r0: np.ndarray
    r1: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    fr: np.ndarray
    fc: np.ndarray

    def apply(self, image: np.ndarray) -> np.ndarray:
        """Resample ``image`` of shape (..., R, C, channels) in float64."""
        img = np.asarray(image, dtype=np.float64)
        fr = self.fr[..., None]
        if not self.fc.any():
            # columns land on integers: the c1 terms all carry weight 0
            top = img[..., self.r0, self.c0, :]
            bottom = img[..., self.r1, self.c0, :]
        else:
            fc = self.fc[..., None]
            top = (1.0 - fc) * img[..., self.r0, self.c0, :] + fc * img[..., self.r0, self.c1, :]
            bottom = (1.0 - fc) * img[..., self.r1, self.c0, :] + fc * img[..., self.r1, self.c1, :]
        return (1.0 - fr) * top + fr * bottom


def bilinear_plan(coords, R: int, C: int) -> BilinearPlan:
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[-1] != 2:
        raise DataError(f"coords must end in a (row, col) axis, got shape {coords.shape}")
    if not np.isfinite(coords).all():
        raise NumericError("non-finite sample coordinates")
    r = np.clip(coords[..., 0], 0.0, R - 1)
    c = np.clip(coords[..., 1], 0.0, C - 1)
    r0 = np.floor(r).astype(np.intp)
    c0 = np.floor(c).astype(np.intp)
    r1 = np.minimum(r0 + 1, R - 1)
    c1 = np.minimum(c0 + 1, C - 1)
    return BilinearPlan(r0, r1, c0, c1, r - r0, c - c0)


def bilinear_sample(image, coords) -> np.ndarray:
    """Bilinear lookup of ``image`` (R, C, channels) at ``coords`` (R, C, 2).

    Coordinates are clamped into ``[0, R-1] x [0, C-1]`` first. The result
    is computed in float64 and returned in the image's dtype.
    """
    img = np.asarray(image)
    if img.ndim != 3:
        raise DataError(f"image must be (R, C, channels), got shape {img.shape}")
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[:-1] != img.shape[:2]:
        raise DataError(f"coords shape {coords.shape} does not match image {img.shape}")
    out = bilinear_plan(coords, img.shape[0], img.shape[1]).apply(img)
    return out.astype(img.dtype) if np.issubdtype(img.dtype, np.floating) else out


def warp_plan(source_pts, dest_pts, R: int, C: int, regularization: float = 0.0) -> BilinearPlan:
    """Resampling plan of a sparse warp; reusable across images of one geometry.

    Pull coordinates within SNAP_TOL of an integer are snapped to it, so rows
    and columns the flow leaves in place (or moves by whole cells) are copied
    exactly instead of picking up round-off from the spline solve.
    """
    flow = dense_flow(source_pts, dest_pts, R, C, regularization)
    coords = grid_points(R, C) - flow.flow
    nearest = np.rint(coords)
    coords = np.where(np.abs(coords - nearest) <= SNAP_TOL, nearest, coords)
    return bilinear_plan(coords, R, C)


def sparse_image_warp(image, source_pts, dest_pts, regularization: float = 0.0) -> np.ndarray:
    """Warp ``image`` (R, C, channels) so content at each source point lands on its destination."""
    img = np.asarray(image)
    if img.ndim != 3:
        raise DataError(f"image must be (R, C, channels), got shape {img.shape}")
    plan = warp_plan(source_pts, dest_pts, img.shape[0], img.shape[1], regularization)
    out = plan.apply(img)
    return out.astype(img.dtype) if np.issubdtype(img.dtype, np.floating) else out

