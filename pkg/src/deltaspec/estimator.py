"""scikit-learn estimator facade over the reconstruction pipeline.

The inverse step is estimator-shaped (observed samples in, fitted function
out), so it is exposed with the fit/predict/get_params protocol for
pipeline and model-selection interoperability.  The forward solvers stay
plain functions.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .inverse import SampleTable, reconstruct, table_from_entries
from .model import SolverConfig


class PotentialReconstructor(BaseEstimator):
    """Recover a potential from first-eigenvalue-function samples.

    Parameters mirror the reconstruction knobs of SolverConfig.

    Attributes after fit: lambda1_, xs_, phi0_, qhat_, window_,
    diagnostics_.  predict(x) linearly interpolates the reconstruction
    inside the validity window and returns NaN outside it.
    """

    def __init__(self, smooth: bool = False, phi_floor_rel: float = 1e-3,
                 slope_tol: float = 1e-6, table_tol: float = 1e-6):
        self.smooth = smooth
        self.phi_floor_rel = phi_floor_rel
        self.slope_tol = slope_tol
        self.table_tol = table_tol

    def _as_table(self, X) -> SampleTable:
        if isinstance(X, SampleTable):
            return X
        arr = check_array(X, ensure_2d=True, dtype=float)
        if arr.shape[1] != 3:
            raise ValueError(
                f"expected columns (t, r, lambda); got shape {arr.shape}"
            )
        return table_from_entries(map(tuple, arr))

    def fit(self, X, y=None):
        """Fit on a SampleTable or an (n, 3) array of (t, r, lambda) rows."""
        table = self._as_table(X)
        cfg = SolverConfig(
            smooth=self.smooth,
            phi_floor_rel=self.phi_floor_rel,
            slope_tol=self.slope_tol,
            eig_tol=max(self.table_tol / 10.0, 1e-15),
        )
        result = reconstruct(table, cfg)
        self.lambda1_ = result.lambda_1
        self.xs_ = result.xs
        self.phi0_ = result.phi0
        self.qhat_ = result.qhat
        self.window_ = result.window
        self.diagnostics_ = result.diagnostics
        self.n_features_in_ = 3
        return self

    def predict(self, X):
        """Reconstructed potential values at positions X (NaN off-window)."""
        check_is_fitted(self, "qhat_")
        x = np.asarray(X, dtype=float).reshape(-1)
        out = np.interp(x, self.xs_, self.qhat_)
        lo, hi = self.window_
        out[(x < lo) | (x > hi)] = np.nan
        return out

    def predict_ground_state(self, X):
        """Fitted phi0 values at positions X (NaN off-window)."""
        check_is_fitted(self, "phi0_")
        x = np.asarray(X, dtype=float).reshape(-1)
        out = np.interp(x, self.xs_, self.phi0_)
        lo, hi = self.window_
        out[(x < lo) | (x > hi)] = np.nan
        return out
