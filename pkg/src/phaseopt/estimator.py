"""scikit-learn style wrapper around the probe-state optimizer."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .cost_model import (DENSE_LIMIT, CostSpec, cost_matrix, expected_cost,
                         fourier_coefficients, optimize_state, toeplitz_from_coeffs)
from .states import TWO_PI, ProbeState, uniform_state


def check_cost(cost) -> CostSpec:
    if isinstance(cost, CostSpec):
        return cost
    if cost == "fidelity":
        return CostSpec.fidelity()
    if isinstance(cost, str) and cost.startswith("window:"):
        return CostSpec.window(float(cost.split(":", 1)[1]))
    raise ValueError(f"cost must be a CostSpec, 'fidelity' or 'window:<delta>', got {cost!r}")


def check_states(X, n_amplitudes: int) -> np.ndarray:
    """2-D array of candidate probe amplitudes, one unit-norm state per row."""
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_amplitudes:
        raise ValueError(f"expected states with {n_amplitudes} amplitudes, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("states contain non-finite amplitudes")
    norms = np.sum(np.abs(X) ** 2, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ValueError("every state must have unit norm")
    return X


def check_outcomes(y, m_grid: int) -> np.ndarray:
    y = np.asarray(y)
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.mod(y, 1) == 0):
            raise ValueError("outcomes must be integers")
        y = y.astype(np.int64)
    if np.any((y < 0) | (y >= m_grid)):
        raise ValueError(f"outcomes must lie in 0..{m_grid - 1}")
    return y


class ProbeStateOptimizer(BaseEstimator):
    """Optimal probe for ``n_oracles`` phase-oracle calls under a covariant cost.

    ``fit`` ignores its data arguments (the problem is fully specified by
    the parameters) and learns ``state_`` and ``cost_``.  ``transform``
    scores candidate states, ``predict`` maps measured outcomes to phase
    estimates on the grid of size ``m_grid`` (default ``N + 1``).
    """

    def __init__(self, cost="fidelity", n_oracles=7, m_grid=None, dense_limit=DENSE_LIMIT):
        self.cost = cost
        self.n_oracles = n_oracles
        self.m_grid = m_grid
        self.dense_limit = dense_limit

    def fit(self, X=None, y=None):
        if int(self.n_oracles) != self.n_oracles or self.n_oracles < 0:
            raise ValueError(f"n_oracles must be a non-negative integer, got {self.n_oracles!r}")
        n = int(self.n_oracles)
        m = n + 1 if self.m_grid is None else int(self.m_grid)
        if m <= n:
            raise ValueError(f"m_grid={m} must be >= n_oracles + 1")
        cost = check_cost(self.cost)
        self.coefficients_ = fourier_coefficients(cost, n)
        self.matrix_ = toeplitz_from_coeffs(self.coefficients_, n)
        self.state_, self.cost_ = optimize_state(self.matrix_, dense_limit=self.dense_limit)
        self.uniform_cost_ = expected_cost(uniform_state(n), self.matrix_)
        self.m_grid_ = m
        self.cost_spec_ = cost
        return self

    def transform(self, X):
        """Expected cost of each row of ``X`` as a column vector."""
        check_is_fitted(self, "state_")
        X = check_states(X, self.matrix_.dim)
        mat = self.matrix_.dense()
        costs = np.real(np.einsum("ij,jk,ik->i", X.conj(), mat, X))
        return costs[:, None]

    def predict(self, X):
        """Phase estimates ``2 pi y / M`` for measured outcomes ``X``."""
        check_is_fitted(self, "state_")
        y = check_outcomes(X, self.m_grid_)
        return TWO_PI * y / self.m_grid_

    def score(self, X=None, y=None):
        """Negative expected cost: of the fitted state, or the mean over rows of ``X``."""
        check_is_fitted(self, "state_")
        if X is None:
            return -self.cost_
        return -float(np.mean(self.transform(X)))

    def probe_state(self) -> ProbeState:
        check_is_fitted(self, "state_")
        return self.state_


def optimal_state(cost, n_oracles: int) -> tuple[ProbeState, float]:
    """Shortcut: optimal probe and its cost."""
    return optimize_state(cost_matrix(check_cost(cost), n_oracles))
