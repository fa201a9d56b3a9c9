"""Change-point location estimates and limit quantities under a single change.

Under a change in the innovation mean (or in one coefficient ``alpha_q``)
the CLS estimate converges to a blend ``theta_tilde`` of the two regimes, and
the maximal residual partial sum grows linearly with slope ``psi``. Both are
computed here from the stationary moment matrices of the two regimes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .estimate import EstimationResult, cls_estimate, design_matrix
from .model import ChangeSpec, ObservationSeries, moment_matrix_C

__all__ = [
    "ScanKind",
    "ChangePointEstimate",
    "AlternativeQuantities",
    "changepoint_scan",
    "estimate_changepoint",
    "scan_kind_for",
    "theta_tilde",
    "psi_mu",
    "psi_alpha",
    "alternative_quantities",
    "empirical_moment_matrix",
    "plugin_alternative_quantities",
]


class ScanKind(str, enum.Enum):
    """Which extremum of the partial sums locates the change.

    ``ARGMAX_SUM`` matches a downward one-sided change, ``ARGMIN_SUM`` an
    upward one, ``ARGMAX_ABS_SUM`` a change of unknown direction.
    """

    ARGMAX_SUM = "max"
    ARGMIN_SUM = "min"
    ARGMAX_ABS_SUM = "max-abs"

    @classmethod
    def coerce(cls, kind):
        if isinstance(kind, cls):
            return kind
        key = str(kind).strip().lower().replace("_", "-")
        aliases = {"argmax": "max", "argmin": "min", "abs": "max-abs", "maxabs": "max-abs", "argmax-abs": "max-abs"}
        return cls(aliases.get(key, key))


def scan_kind_for(direction):
    """Scan matching a test direction: ``"downward"``, ``"upward"`` or ``None`` (unknown)."""
    if direction is None or direction == "unknown":
        return ScanKind.ARGMAX_ABS_SUM
    return {"downward": ScanKind.ARGMAX_SUM, "upward": ScanKind.ARGMIN_SUM}[direction]


@dataclass(frozen=True)
class ChangePointEstimate:
    """``tau_hat`` is 1-based: the change happens after observation ``tau_hat``."""

    tau_hat: int
    kind: ScanKind
    partial_sums: np.ndarray
    weight_lag: int | None = None

    @property
    def extremum(self):
        return float(self.partial_sums[self.tau_hat - 1])


def changepoint_scan(resid, weights=None, kind=ScanKind.ARGMAX_ABS_SUM, *, weight_lag=None) -> ChangePointEstimate:
    """Smallest index attaining the extremum of ``S_k = sum_{j<=k} resid_j * weights_j``.

    ``weights`` defaults to ones (a scan for a change in the innovation
    mean); pass ``(X_{j-q})_j`` to scan for a change in ``alpha_q``.
    """
    kind = ScanKind.coerce(kind)
    resid = np.asarray(resid, dtype=float)
    if resid.ndim != 1 or resid.size == 0:
        raise ValueError("residuals must be a nonempty 1-D array")
    if weights is None:
        terms = resid
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != resid.shape:
            raise ValueError(f"weights shape {weights.shape} does not match residuals {resid.shape}")
        terms = resid * weights
    sums = np.cumsum(terms)
    if kind is ScanKind.ARGMAX_SUM:
        idx = int(np.argmax(sums))
    elif kind is ScanKind.ARGMIN_SUM:
        idx = int(np.argmin(sums))
    else:
        idx = int(np.argmax(np.abs(sums)))
    return ChangePointEstimate(idx + 1, kind, sums, weight_lag)


def estimate_changepoint(series: ObservationSeries, est: EstimationResult, kind=ScanKind.ARGMAX_ABS_SUM, weight_lag=None):
    """Scan the fitted residuals of ``series``, optionally weighted by ``X_{j - weight_lag}``."""
    weights = None if weight_lag is None else series.lagged(int(weight_lag))
    return changepoint_scan(est.residuals, weights, kind, weight_lag=weight_lag)


def _blend(rho, C_pre, C_post):
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    C_pre, C_post = np.asarray(C_pre, dtype=float), np.asarray(C_post, dtype=float)
    Q = rho * C_pre + (1.0 - rho) * C_post
    if np.linalg.cond(Q) > 1e12:
        raise np.linalg.LinAlgError("blended moment matrix is singular")
    return C_pre, C_post, Q


def theta_tilde(rho, theta_pre, theta_post, C_pre, C_post) -> np.ndarray:
    """Limit of the CLS estimate over a sample that changes regime at fraction ``rho``.

    Solves ``(rho C' + (1-rho) C'') theta = rho C' theta' + (1-rho) C'' theta''``.
    """
    C_pre, C_post, Q = _blend(rho, C_pre, C_post)
    rhs = rho * C_pre @ np.asarray(theta_pre, float) + (1.0 - rho) * C_post @ np.asarray(theta_post, float)
    return np.linalg.solve(Q, rhs)


def _psi(rho, delta, index, C_pre, C_post):
    C_pre, C_post, Q = _blend(rho, C_pre, C_post)
    e = np.zeros(Q.shape[0])
    e[index] = 1.0
    quad = e @ C_post @ np.linalg.solve(Q, C_pre @ e)
    return float(rho * (1.0 - rho) * delta * quad)


def psi_mu(rho, mu_pre, mu_post, C_pre, C_post) -> float:
    """Linear growth rate of ``max_k sum_{j<=k} M_hat_j`` under a change in the innovation mean."""
    dim = np.asarray(C_pre).shape[0]
    return _psi(rho, mu_pre - mu_post, dim - 1, C_pre, C_post)


def psi_alpha(rho, q, alpha_q_pre, alpha_q_post, C_pre, C_post) -> float:
    """Linear growth rate of ``max_k sum_{j<=k} M_hat_j X_{j-q}`` under a change in ``alpha_q``.

    ``q`` is the 1-based position of the coefficient in the (possibly
    restricted) parameter vector.
    """
    dim = np.asarray(C_pre).shape[0]
    if not 1 <= q < dim:
        raise ValueError(f"q must lie in 1..{dim - 1}, got {q}")
    return _psi(rho, alpha_q_pre - alpha_q_post, q - 1, C_pre, C_post)


@dataclass(frozen=True)
class AlternativeQuantities:
    rho: float
    C_pre: np.ndarray
    C_post: np.ndarray
    Q_tilde: np.ndarray
    theta_tilde: np.ndarray
    psi: float
    component: int


def alternative_quantities(spec: ChangeSpec, lag_support=None) -> AlternativeQuantities:
    """Analytic ``theta_tilde`` and ``psi`` for a change in exactly one parameter.

    The changed parameter decides the flavour: the innovation mean gives
    ``psi_mu``, a coefficient ``alpha_q`` gives ``psi_alpha``.
    """
    support = spec.pre.lag_support if lag_support is None else lag_support
    C_pre = moment_matrix_C(spec.pre, support)
    C_post = moment_matrix_C(spec.post, support)
    theta_pre, theta_post = spec.pre.theta(support), spec.post.theta(support)
    changed = np.flatnonzero(theta_pre != theta_post)
    tilde = theta_tilde(spec.rho, theta_pre, theta_post, C_pre, C_post)
    Q = spec.rho * C_pre + (1.0 - spec.rho) * C_post
    if changed.size == 0:
        return AlternativeQuantities(spec.rho, C_pre, C_post, Q, tilde, 0.0, theta_pre.size)
    if changed.size > 1:
        raise ValueError("psi is only defined for a change in a single parameter")
    j = int(changed[0])
    if j == theta_pre.size - 1:
        psi = psi_mu(spec.rho, spec.pre.mu, spec.post.mu, C_pre, C_post)
    else:
        psi = psi_alpha(spec.rho, j + 1, theta_pre[j], theta_post[j], C_pre, C_post)
    return AlternativeQuantities(spec.rho, C_pre, C_post, Q, tilde, psi, j + 1)


def empirical_moment_matrix(series: ObservationSeries, lag_support=None) -> np.ndarray:
    """Sample analogue of the moment matrix: ``Q_n / n``."""
    Z = design_matrix(series, lag_support)
    return Z.T @ Z / Z.shape[0]


def _segment(series, start, stop):
    full = series.full
    p = series.order
    return ObservationSeries(full[start : start + p], full[start + p : stop + p])


def plugin_alternative_quantities(
    series: ObservationSeries, tau_hat, lag_support=None, component=None
) -> AlternativeQuantities:
    """Data-only ``theta_tilde`` and ``psi`` from the two segments split after ``tau_hat``.

    Each regime's parameters come from a CLS fit of its segment and its
    moment matrix from the segment's sample moments. ``component`` (1-based,
    default the intercept) picks the parameter whose change ``psi`` measures.
    With a known model use :func:`alternative_quantities` instead.
    """
    support = tuple(range(1, series.order + 1)) if lag_support is None else tuple(lag_support)
    n = series.n
    if not 0 < tau_hat < n:
        raise ValueError(f"tau_hat must lie in 1..{n - 1}, got {tau_hat}")
    dim = len(support) + 1
    component = dim if component is None else int(component)
    if not 1 <= component <= dim:
        raise ValueError(f"component must lie in 1..{dim}, got {component}")
    pre = _segment(series, 0, tau_hat)
    post = _segment(series, tau_hat, n)
    theta_pre = cls_estimate(pre, support, check_information=False).theta_hat
    theta_post = cls_estimate(post, support, check_information=False).theta_hat
    C_pre, C_post = empirical_moment_matrix(pre, support), empirical_moment_matrix(post, support)
    rho = tau_hat / n
    tilde = theta_tilde(rho, theta_pre, theta_post, C_pre, C_post)
    Q = rho * C_pre + (1.0 - rho) * C_post
    psi = _psi(rho, theta_pre[component - 1] - theta_post[component - 1], component - 1, C_pre, C_post)
    return AlternativeQuantities(rho, C_pre, C_post, Q, tilde, psi, component)
