"""scikit-learn style wrapper around the CLS fit, the CUSUM test and the change-point scan."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_counts, check_lag_support, check_level
from .changepoint import ScanKind, changepoint_scan, estimate_changepoint
from .cusum import TestConfig, TestKind, evaluate_fit
from .estimate import cls_estimate, design_matrix, inverse_sqrt
from .model import ObservationSeries


class InarCusumDetector(TransformerMixin, BaseEstimator):
    """Retrospective change detection in an INAR(p) count series.

    ``fit`` takes the raw chronological series; its first ``max(lags)``
    values serve as initial values. After fitting, ``transform`` returns the
    normalized score CUSUM path and ``predict`` labels each raw observation
    with its regime (0 up to the estimated change point, 1 after).

    Parameters
    ----------
    lags : int or sequence of int, default=1
        Model order ``p`` (lags ``1..p``) or an explicit lag set such as ``(1, 12)``.
    kind : {"one-sided", "sup", "inf", "two-sided", "epidemic"}, default="two-sided"
        Functional of the test process.
    alpha : float, default=0.05
        Overall significance level across the monitored components.
    components : sequence of int or None, default=None
        1-based components to monitor; the intercept is the last one. ``None`` monitors all.
    scan : {"max", "min", "max-abs"}, default="max-abs"
        Change-point scan.
    weight_lag : int or None, default=None
        Weight residuals by ``X_{j - weight_lag}`` in the scan (coefficient change).

    Attributes
    ----------
    estimation_ : EstimationResult
    report_ : TestReport
    changepoint_ : ChangePointEstimate
    theta_ : ndarray of shape (n_params,)
    sigma2_ : float
    statistics_ : dict
        Statistic per monitored component.
    critical_value_ : float
    reject_ : bool
    tau_ : int
        Change point as an index into the post-initial observations (1-based).
    tau_raw_ : int
        The same point as a 1-based row of the raw series.
    n_initial_ : int
    """

    def __init__(self, lags=1, kind="two-sided", alpha=0.05, components=None, scan="max-abs", weight_lag=None):
        self.lags = lags
        self.kind = kind
        self.alpha = alpha
        self.components = components
        self.scan = scan
        self.weight_lag = weight_lag

    def _validate_params(self):
        support = check_lag_support(self.lags)
        check_level(self.alpha)
        TestKind.coerce(self.kind)
        ScanKind.coerce(self.scan)
        if self.weight_lag is not None and self.weight_lag not in support:
            raise ValueError(f"weight_lag {self.weight_lag} is not in the lag set {support}")
        return support

    def _series(self, X):
        counts = check_counts(X, min_length=self.n_initial_ + 1)
        return ObservationSeries.from_raw(counts, self.n_initial_)

    def fit(self, X, y=None):
        support = self._validate_params()
        self.lag_support_ = support
        self.n_initial_ = max(support)
        series = self._series(X)
        est = cls_estimate(series, support)
        config = TestConfig(self.kind, self.alpha, None if self.components is None else tuple(self.components))
        report = evaluate_fit(series, est, config)
        cp = estimate_changepoint(series, est, self.scan, self.weight_lag)

        self.estimation_ = est
        self.report_ = report
        self.changepoint_ = cp
        self.theta_ = est.theta_hat
        self.sigma2_ = est.sigma2_hat
        self.statistics_ = report.statistics
        self.critical_value_ = report.critical
        self.reject_ = report.reject
        self.tau_ = cp.tau_hat
        self.tau_raw_ = cp.tau_hat + self.n_initial_
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        """Score CUSUM path of ``X`` under the fitted parameters, shape ``(n + 1, n_params)``.

        On the training series this is exactly ``report_.path.values``.
        """
        check_is_fitted(self, "estimation_")
        series = self._series(X)
        Z = design_matrix(series, self.lag_support_)
        resid = series.values - Z @ self.theta_
        partial = np.vstack([np.zeros(Z.shape[1]), np.cumsum(Z * resid[:, None], axis=0)])
        return partial @ inverse_sqrt(self.estimation_.I_hat)

    def predict(self, X):
        """Regime label per raw observation; initial values belong to regime 0."""
        check_is_fitted(self, "estimation_")
        series = self._series(X)
        Z = design_matrix(series, self.lag_support_)
        resid = series.values - Z @ self.theta_
        weights = None if self.weight_lag is None else series.lagged(self.weight_lag)
        tau = changepoint_scan(resid, weights, self.scan).tau_hat
        labels = np.zeros(self.n_initial_ + series.n, dtype=np.int64)
        labels[self.n_initial_ + tau :] = 1
        return labels
