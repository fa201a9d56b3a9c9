"""Conditional least squares (CLS) estimation for INAR(p) series.

The CLS estimator regresses ``X_k`` on ``(X_{k-i})_{i in support}`` and an
intercept. Besides the parameter vector it returns the innovation-variance
estimate and the estimated information matrix, both of which feed the
CUSUM test process.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import check_lag_support
from .exceptions import NotPositiveDefinite, SingularDesign
from .model import ObservationSeries

__all__ = [
    "EstimationResult",
    "design_matrix",
    "cls_estimate",
    "residuals",
    "sigma2_estimate",
    "information_matrix",
    "inverse_sqrt",
    "is_positive_definite",
    "CONDITION_CAP",
    "PD_TOLERANCE",
]

#: Q_n with a larger 2-norm condition number is treated as singular.
CONDITION_CAP = 1e12
#: Smallest admissible eigenvalue, relative to the largest one.
PD_TOLERANCE = 1e-10


@dataclass(frozen=True)
class EstimationResult:
    """Output of :func:`cls_estimate`.

    ``theta_hat`` holds the coefficients on ``lag_support`` followed by the
    innovation mean. Matrices are indexed the same way.
    """

    theta_hat: np.ndarray
    Q_n: np.ndarray
    sigma2_hat: float
    I_hat: np.ndarray
    residuals: np.ndarray
    lag_support: tuple[int, ...]
    condition_number: float

    @property
    def alpha_hat(self):
        return self.theta_hat[:-1]

    @property
    def mu_hat(self):
        return float(self.theta_hat[-1])

    @property
    def n(self):
        return int(self.residuals.size)

    @property
    def dim(self):
        return int(self.theta_hat.size)

    @property
    def sigma2_negative(self):
        return self.sigma2_hat < 0

    @property
    def alpha_sum_hat(self):
        return float(np.sum(self.alpha_hat))

    @property
    def stable_fit(self):
        return self.alpha_sum_hat < 1.0

    def alpha_full(self, order=None):
        """Coefficients embedded in a length-``order`` vector (zeros off the support)."""
        order = self.lag_support[-1] if order is None else order
        out = np.zeros(order)
        out[np.asarray(self.lag_support) - 1] = self.alpha_hat
        return out


def _support_for(series, lag_support):
    if lag_support is None:
        return check_lag_support(series.order)
    return check_lag_support(lag_support, order=series.order)


def design_matrix(series: ObservationSeries, lag_support=None) -> np.ndarray:
    """Rows ``(X_{k-i})_{i in support}, 1`` for ``k = 1..n``."""
    support = _support_for(series, lag_support)
    cols = [series.lagged(lag) for lag in support]
    cols.append(np.ones(series.n, dtype=np.int64))
    return np.column_stack(cols).astype(float)


def residuals(series: ObservationSeries, theta, lag_support=None) -> np.ndarray:
    """``X_k - sum_i alpha_i X_{k-i} - mu`` for ``k = 1..n``."""
    Z = design_matrix(series, lag_support)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (Z.shape[1],):
        raise ValueError(f"theta must have length {Z.shape[1]}, got {theta.shape}")
    return series.values - Z @ theta


def sigma2_estimate(series: ObservationSeries, theta_hat, resid, lag_support=None) -> float:
    """Innovation variance: mean of ``M_k^2 - sum_i alpha_i (1 - alpha_i) X_{k-i}``.

    Can be negative in small samples; the value is returned unchanged.
    """
    Z = design_matrix(series, lag_support)
    alpha = np.asarray(theta_hat, dtype=float)[:-1]
    resid = np.asarray(resid, dtype=float)
    conditional = Z[:, :-1] @ (alpha * (1.0 - alpha))
    return float(np.mean(resid**2 - conditional))


def information_matrix(series: ObservationSeries, theta_hat, sigma2_hat, lag_support=None) -> np.ndarray:
    """``sum_k (alpha2' X_{k-1} + sigma2) (X_{k-1}; 1)(X_{k-1}; 1)'``."""
    Z = design_matrix(series, lag_support)
    alpha = np.asarray(theta_hat, dtype=float)[:-1]
    weights = Z[:, :-1] @ (alpha * (1.0 - alpha)) + float(sigma2_hat)
    I_hat = (Z * weights[:, None]).T @ Z
    return (I_hat + I_hat.T) / 2.0


def is_positive_definite(M, tol=PD_TOLERANCE) -> bool:
    M = np.asarray(M, dtype=float)
    if not np.allclose(M, M.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(M).max())):
        return False
    eig = np.linalg.eigvalsh(M)
    return bool(eig[-1] > 0 and eig[0] > tol * eig[-1])


def inverse_sqrt(M, tol=PD_TOLERANCE) -> np.ndarray:
    """Principal symmetric inverse square root of a symmetric positive definite matrix.

    Raises
    ------
    NotPositiveDefinite
        If the smallest eigenvalue does not exceed ``tol`` times the largest.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max()))
    if not np.allclose(M, M.T, rtol=1e-10, atol=1e-12 * scale):
        raise ValueError("matrix is not symmetric")
    eig, vec = np.linalg.eigh((M + M.T) / 2.0)
    if not (eig[-1] > 0 and eig[0] > tol * eig[-1]):
        raise NotPositiveDefinite(
            f"matrix is not positive definite (eigenvalues {eig.tolist()})", eigenvalues=eig
        )
    R = (vec / np.sqrt(eig)) @ vec.T
    return (R + R.T) / 2.0


def cls_estimate(series: ObservationSeries, lag_support=None, *, check_information=True) -> EstimationResult:
    """Fit an INAR model by conditional least squares.

    Parameters
    ----------
    series : ObservationSeries
        Needs at least ``max(lag_support)`` initial values.
    lag_support : int or iterable of int, optional
        Lags to estimate; defaults to ``1..series.order``.
    check_information : bool
        Raise :class:`NotPositiveDefinite` if the estimated information
        matrix is not positive definite.

    Raises
    ------
    SingularDesign
        If ``Q_n`` is singular or its condition number exceeds :data:`CONDITION_CAP`.
    """
    support = _support_for(series, lag_support)
    Z = design_matrix(series, support)
    if series.n <= Z.shape[1]:
        raise SingularDesign(
            f"need more than {Z.shape[1]} observations to fit {Z.shape[1]} parameters, got {series.n}"
        )
    Q = Z.T @ Z
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(Q))
    if not np.isfinite(cond) or cond > CONDITION_CAP:
        raise SingularDesign(
            f"design matrix Q_n is singular or ill-conditioned (condition number {cond:.3g})",
            condition_number=cond,
        )
    theta = np.linalg.solve(Q, Z.T @ series.values.astype(float))
    resid = series.values - Z @ theta
    sigma2 = sigma2_estimate(series, theta, resid, support)
    if sigma2 < 0:
        warnings.warn(f"negative innovation variance estimate {sigma2:.4g}", RuntimeWarning, stacklevel=2)
    if np.sum(theta[:-1]) >= 1:
        warnings.warn(
            f"fitted coefficients sum to {np.sum(theta[:-1]):.4g} >= 1 (unstable fit)",
            RuntimeWarning,
            stacklevel=2,
        )
    I_hat = information_matrix(series, theta, sigma2, support)
    if check_information and not is_positive_definite(I_hat):
        raise NotPositiveDefinite(
            "estimated information matrix is not positive definite", eigenvalues=np.linalg.eigvalsh(I_hat)
        )
    return EstimationResult(theta, Q, sigma2, I_hat, resid, support, cond)
