"""scikit-learn style transformers over the counting and kernel-sum core.

Rows of the input are points of the upper half-plane given as (x, y), or
point pairs (x_z, y_z, x_w, y_w).  Both transformers are stateless: ``fit``
only validates and records the input width.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bergman import KernelSumParams, kernel_sum
from .halfplane import Point, point_matrix
from .lattice import OrderSpec, count_profile


def _check_points(X, width: int) -> np.ndarray:
    X = check_array(X, dtype=float, ensure_all_finite=True)
    if X.shape[1] != width:
        raise ValueError(f"expected {width} columns, got {X.shape[1]}")
    if np.any(X[:, 1::2] <= 0):
        raise ValueError("imaginary parts must be positive")
    return X


class CountProfileTransformer(TransformerMixin, BaseEstimator):
    """Map each point z to its count profile (M(g_z, n; delta))_{n <= N}."""

    def __init__(self, order: str = "full", N: int = 20, delta: float = 0.5, threads: int = 1):
        self.order = order
        self.N = N
        self.delta = delta
        self.threads = threads

    def fit(self, X, y=None):
        X = _check_points(X, 2)
        if int(self.N) < 1 or not self.delta >= 0:
            raise ValueError("need N >= 1 and delta >= 0")
        self.order_ = OrderSpec.parse(self.order)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "order_")
        X = _check_points(X, self.n_features_in_)
        rows = [count_profile(self.order_, point_matrix(Point(x, y)), int(self.N), float(self.delta),
                              threads=self.threads).counts for x, y in X]
        return np.array(rows, dtype=np.int64).reshape(len(X), int(self.N))


class KernelSumTransformer(TransformerMixin, BaseEstimator):
    """Map point pairs (z, w) to [Re S(n), Im S(n)] for each n in ``n_values``."""

    def __init__(self, m: int = 12, n_values=(1, 2, 3), tol: float = 1e-10, order: str = "full"):
        self.m = m
        self.n_values = n_values
        self.tol = tol
        self.order = order

    def fit(self, X, y=None):
        X = _check_points(X, 4)
        self.params_ = KernelSumParams(int(self.m), float(self.tol))
        self.order_ = OrderSpec.parse(self.order)
        if not all(int(n) >= 1 for n in self.n_values):
            raise ValueError("n_values must be positive integers")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = _check_points(X, self.n_features_in_)
        out = np.empty((len(X), 2 * len(self.n_values)))
        for r, (zx, zy, wx, wy) in enumerate(X):
            for k, n in enumerate(self.n_values):
                s = kernel_sum(int(n), Point(zx, zy), Point(wx, wy), self.params_, self.order_)
                out[r, 2 * k], out[r, 2 * k + 1] = s.real, s.imag
        return out
