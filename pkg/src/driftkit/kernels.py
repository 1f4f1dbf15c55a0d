"""Kernel evaluations and the squared maximum mean discrepancy (MMD).

The MMD estimator is the biased V-statistic

    mmd(X, Y) = (1/n_x^2) sum_ij k(x_i, x_j)
              + (1/n_y^2) sum_ij k(y_i, y_j)
              - (2/(n_x n_y)) sum_ij k(x_i, y_j)

with the diagonal terms included.  Kernel sums are accumulated with
``math.fsum`` so the result is exact up to the final rounding: mmd is then
bitwise symmetric in (X, Y) and invariant under row permutations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptyBatchError, InsufficientPointsError

LINEAR = "linear"
POLY2 = "poly2"
GAUSSIAN = "gaussian"

_FAMILIES = (LINEAR, POLY2, GAUSSIAN)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its parameters.

    sigma=None on a Gaussian kernel means "resolve via the median heuristic
    over the two batches being compared" at mmd() call time.
    """

    family: str = GAUSSIAN
    offset: float = 1.0  # poly2 only
    sigma: float | None = None  # gaussian only

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == GAUSSIAN and self.sigma is not None and self.sigma <= 0:
            raise ValueError("gaussian sigma must be > 0")
        if self.family == POLY2 and self.offset < 0:
            raise ValueError("poly2 offset must be >= 0")


def _as_batch(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[0] == 0:
        raise EmptyBatchError(f"{name} must be a non-empty 2-D batch")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for a single pair of vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DimensionMismatchError(f"dim(x)={x.shape[0]} != dim(y)={y.shape[0]}")
    if spec.family == LINEAR:
        return float(x @ y)
    if spec.family == POLY2:
        return float((x @ y + spec.offset) ** 2)
    if spec.sigma is None:
        raise ValueError("gaussian kernel_eval requires an explicit sigma")
    d2 = float(np.sum((x - y) ** 2))
    return math.exp(-d2 / (2.0 * spec.sigma**2))


def _cross_linear(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # Row-wise gemv keeps every entry's accumulation order independent of
    # batch size and row position (required for exact permutation invariance).
    K = np.empty((X.shape[0], Y.shape[0]))
    for i in range(X.shape[0]):
        K[i] = Y @ X[i]
    return K


def _cross_sqdist(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    D = np.empty((X.shape[0], Y.shape[0]))
    for i in range(X.shape[0]):
        D[i] = np.sum((Y - X[i]) ** 2, axis=1)
    return D


def kernel_matrix(spec: KernelSpec, X, Y, sigma: float | None = None) -> np.ndarray:
    """Full kernel matrix K[i, j] = k(X[i], Y[j]).

    For a Gaussian spec with sigma=None the caller must pass a resolved sigma.
    """
    X = _as_batch(X, "X")
    Y = _as_batch(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatchError(f"d(X)={X.shape[1]} != d(Y)={Y.shape[1]}")
    if spec.family == LINEAR:
        return _cross_linear(X, Y)
    if spec.family == POLY2:
        return (_cross_linear(X, Y) + spec.offset) ** 2
    s = spec.sigma if spec.sigma is not None else sigma
    if s is None:
        raise ValueError("gaussian kernel_matrix requires a resolved sigma")
    return np.exp(-_cross_sqdist(X, Y) / (2.0 * s**2))


def median_heuristic(X, Y=None) -> float:
    """sigma = median pairwise Euclidean distance over the pooled batch.

    Self-distances (i == j) are excluded; duplicate points at distance zero
    are not.  Degenerate pooled batches (all points identical) fall back to
    sigma = 1.
    """
    X = _as_batch(X, "X")
    if Y is not None:
        Y = _as_batch(Y, "Y")
        if X.shape[1] != Y.shape[1]:
            raise DimensionMismatchError(f"d(X)={X.shape[1]} != d(Y)={Y.shape[1]}")
        Z = np.vstack([X, Y])
    else:
        Z = X
    n = Z.shape[0]
    if n < 2:
        raise InsufficientPointsError("median heuristic needs >= 2 pooled points")
    d2 = _cross_sqdist(Z, Z)
    dists = np.sqrt(d2[np.triu_indices(n, k=1)])
    sigma = float(np.median(dists))
    return sigma if sigma > 0.0 else 1.0


def mmd(X, Y, spec: KernelSpec) -> float:
    """Squared-MMD estimate between two batches (biased V-statistic)."""
    X = _as_batch(X, "X")
    Y = _as_batch(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatchError(f"d(X)={X.shape[1]} != d(Y)={Y.shape[1]}")
    sigma = None
    if spec.family == GAUSSIAN and spec.sigma is None:
        sigma = median_heuristic(X, Y)
    n_x, n_y = X.shape[0], Y.shape[0]
    s_xx = math.fsum(kernel_matrix(spec, X, X, sigma).ravel())
    s_yy = math.fsum(kernel_matrix(spec, Y, Y, sigma).ravel())
    s_xy = math.fsum(kernel_matrix(spec, X, Y, sigma).ravel())
    return s_xx / n_x**2 + s_yy / n_y**2 - 2.0 * s_xy / (n_x * n_y)


class ReferenceMmd:
    """mmd(batch, reference, spec) with the reference-side work precomputed.

    Bitwise-identical to the plain mmd() call: the kernel entries, the
    median-heuristic distance multiset, and the fsum accumulations are the
    same, only cached across calls.  Used by the monitor, which compares many
    stream windows against one fixed reference.
    """

    def __init__(self, reference, spec: KernelSpec):
        self.spec = spec
        self.reference = _as_batch(reference, "reference")
        self.n_ref = self.reference.shape[0]
        self._d_rr = None
        self._ref_dists = None
        self._s_rr = None
        if spec.family == GAUSSIAN:
            self._d_rr = _cross_sqdist(self.reference, self.reference)
            if spec.sigma is None:
                iu = np.triu_indices(self.n_ref, k=1)
                self._ref_dists = np.sqrt(self._d_rr[iu])
            else:
                self._s_rr = math.fsum(np.exp(-self._d_rr / (2.0 * spec.sigma**2)).ravel())
        else:
            self._s_rr = math.fsum(kernel_matrix(spec, self.reference, self.reference).ravel())

    def value(self, batch) -> float:
        X = _as_batch(batch, "batch")
        if X.shape[1] != self.reference.shape[1]:
            raise DimensionMismatchError(
                f"d(batch)={X.shape[1]} != d(reference)={self.reference.shape[1]}")
        n_x = X.shape[0]
        if self.spec.family == GAUSSIAN:
            d_xx = _cross_sqdist(X, X)
            d_xr = _cross_sqdist(X, self.reference)
            sigma = self.spec.sigma
            if sigma is None:
                iu = np.triu_indices(n_x, k=1)
                dists = np.concatenate([np.sqrt(d_xx[iu]), np.sqrt(d_xr).ravel(),
                                        self._ref_dists])
                sigma = float(np.median(dists))
                if sigma <= 0.0:
                    sigma = 1.0
                s_rr = math.fsum(np.exp(-self._d_rr / (2.0 * sigma**2)).ravel())
            else:
                s_rr = self._s_rr
            denom = 2.0 * sigma**2
            s_xx = math.fsum(np.exp(-d_xx / denom).ravel())
            s_xr = math.fsum(np.exp(-d_xr / denom).ravel())
        else:
            s_rr = self._s_rr
            s_xx = math.fsum(kernel_matrix(self.spec, X, X).ravel())
            s_xr = math.fsum(kernel_matrix(self.spec, X, self.reference).ravel())
        return s_xx / n_x**2 + s_rr / self.n_ref**2 - 2.0 * s_xr / (n_x * self.n_ref)
