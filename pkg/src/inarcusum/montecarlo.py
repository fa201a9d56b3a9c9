"""Monte Carlo experiments: size, power, change-point error, estimator rates.

Replica ``r`` of an experiment with master seed ``s`` simulates from
:func:`inarcusum.model.replica_seed` ``(s, r)``, so results depend only on
the replica index and never on evaluation order. Replicas whose fit fails
(singular design, indefinite information matrix) are counted separately and
left out of every rate.
"""

from __future__ import annotations

import math
import time
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .changepoint import ScanKind, alternative_quantities, changepoint_scan, estimate_changepoint
from .cusum import TestConfig, TestKind, evaluate_fit
from .estimate import cls_estimate
from .exceptions import InarError
from .model import ChangeSpec, InarModel, replica_seed, simulate, simulate_with_change

__all__ = [
    "MonteCarloSummary",
    "ExperimentSpec",
    "replicate",
    "empirical_size",
    "empirical_power",
    "changepoint_error_quantiles",
    "bridge_tail",
    "simulate_bridges",
    "estimator_rates",
    "psi_growth",
    "theta_tilde_convergence",
    "partial_sum_variance",
    "loglog_slope",
    "run_experiment",
]

DEFAULT_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.9, 0.95)


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def replicate(fn: Callable, reps: int, seed):
    """Call ``fn(seed_sequence)`` for each replica.

    Returns ``(results, failures)`` where ``results`` maps replica index to
    the return value and ``failures`` counts exceptions by class name.
    """
    if reps < 1:
        raise ValueError(f"replications must be positive, got {reps}")
    results, failures = {}, Counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for r in range(reps):
            try:
                results[r] = fn(replica_seed(seed, r))
            except InarError as exc:
                failures[type(exc).__name__] += 1
    return results, dict(failures)


def _ordered(results):
    return [results[k] for k in sorted(results)]


@dataclass(frozen=True)
class MonteCarloSummary:
    """Aggregated outcome of one experiment; ``wall_clock`` is excluded from comparisons."""

    experiment: str
    n: int
    replications: int
    seed: int | None
    successes: int
    failures: dict = field(default_factory=dict)
    rejection_rate: float | None = None
    rejection_se: float | None = None
    tau_error_quantiles: dict | None = None
    theta_rmse: float | None = None
    sigma2_mae: float | None = None
    extras: dict = field(default_factory=dict)
    wall_clock: float = field(default=0.0, compare=False)

    @property
    def total(self):
        return self.successes + sum(self.failures.values())

    def to_dict(self, include_timing=False):
        out = asdict(self)
        if not include_timing:
            out.pop("wall_clock")
        return _jsonable(out)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _rate(flags):
    flags = np.asarray(flags, dtype=float)
    if flags.size == 0:
        return None, None
    rate = float(flags.mean())
    return rate, float(math.sqrt(rate * (1.0 - rate) / flags.size))


def _quantiles(values, quantiles=DEFAULT_QUANTILES):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return None
    return {f"{q:g}": float(np.quantile(values, q)) for q in quantiles}


def _support(model, lag_support):
    return model.lag_support if lag_support is None else tuple(lag_support)


def _interior(spec: ChangeSpec):
    """Keep both regimes large enough to matter in validation runs."""
    if not 0.05 <= spec.rho <= 0.95:
        raise ValueError(f"rho must lie in [0.05, 0.95] for a Monte Carlo experiment, got {spec.rho}")


def _replica_log(results, fields):
    return [dict(replica=r, **dict(zip(fields, _jsonable(list(results[r]))))) for r in sorted(results)]


def empirical_size(
    model: InarModel, n, reps, config: TestConfig | None = None, seed=0, lag_support=None, keep_replicas=False
) -> MonteCarloSummary:
    """Rejection rate of the test on series simulated without a change.

    With ``keep_replicas`` the per-replica outcomes are stored under
    ``extras["replicas"]``.
    """
    config = TestConfig() if config is None else config
    support = _support(model, lag_support)
    truth_theta = model.theta(support)
    start = time.perf_counter()

    def one(ss):
        series = simulate(model, n, seed=ss)
        est = cls_estimate(series, support)
        report = evaluate_fit(series, est, config)
        return report.reject, est.theta_hat - truth_theta, est.sigma2_hat - model.sigma2

    results, failures = replicate(one, reps, seed)
    rows = _ordered(results)
    rate, se = _rate([r[0] for r in rows])
    errors = np.array([r[1] for r in rows]) if rows else np.empty((0, truth_theta.size))
    return MonteCarloSummary(
        "size",
        n,
        reps,
        seed,
        len(rows),
        failures,
        rate,
        se,
        theta_rmse=float(np.sqrt(np.mean(np.sum(errors**2, axis=1)))) if rows else None,
        sigma2_mae=float(np.mean([abs(r[2]) for r in rows])) if rows else None,
        extras={"replicas": _replica_log(results, ("reject", "theta_error", "sigma2_error"))} if keep_replicas else {},
        wall_clock=time.perf_counter() - start,
    )


def empirical_power(
    spec: ChangeSpec,
    n,
    reps,
    config: TestConfig | None = None,
    seed=0,
    lag_support=None,
    scan=ScanKind.ARGMAX_ABS_SUM,
    weight_lag=None,
    keep_replicas=False,
) -> MonteCarloSummary:
    """Rejection rate under a single change, plus quantiles of ``tau_hat - floor(n rho)``.

    ``scan`` and ``weight_lag`` select the change-point estimator applied to
    each replica (``weight_lag=q`` scans ``sum M_hat_j X_{j-q}``).
    """
    _interior(spec)
    config = TestConfig() if config is None else config
    support = _support(spec.pre, lag_support)
    target = math.floor(n * spec.rho)
    start = time.perf_counter()

    def one(ss):
        series = simulate_with_change(spec, n, seed=ss)
        est = cls_estimate(series, support)
        report = evaluate_fit(series, est, config)
        cp = estimate_changepoint(series, est, scan, weight_lag)
        return report.reject, cp.tau_hat - target

    results, failures = replicate(one, reps, seed)
    rows = _ordered(results)
    rate, se = _rate([r[0] for r in rows])
    extras = {"tau": spec.tau(n), "scan": ScanKind.coerce(scan).value, "weight_lag": weight_lag}
    if keep_replicas:
        extras["replicas"] = _replica_log(results, ("reject", "tau_error"))
    return MonteCarloSummary(
        "power",
        n,
        reps,
        seed,
        len(rows),
        failures,
        rate,
        se,
        tau_error_quantiles=_quantiles([r[1] for r in rows]),
        extras=extras,
        wall_clock=time.perf_counter() - start,
    )


def changepoint_error_quantiles(
    spec: ChangeSpec,
    n_list: Sequence[int],
    reps,
    kind=ScanKind.ARGMAX_SUM,
    seed=0,
    weight_lag=None,
    lag_support=None,
    quantiles=DEFAULT_QUANTILES,
):
    """Per-``n`` quantiles of ``tau_hat - floor(n rho)`` and of its absolute value.

    Returns ``{n: {"signed": {...}, "abs": {...}, "failures": {...}}}``.
    """
    _interior(spec)
    support = _support(spec.pre, lag_support)
    out = {}
    for n in n_list:
        if n < 200:
            raise ValueError(f"every n must be at least 200, got {n}")
        target = math.floor(n * spec.rho)

        def one(ss, n=n, target=target):
            series = simulate_with_change(spec, n, seed=ss)
            est = cls_estimate(series, support, check_information=False)
            return estimate_changepoint(series, est, kind, weight_lag).tau_hat - target

        results, failures = replicate(one, reps, seed)
        errors = np.asarray(_ordered(results), dtype=float)
        out[int(n)] = {
            "signed": _quantiles(errors, quantiles),
            "abs": _quantiles(np.abs(errors), quantiles),
            "failures": failures,
        }
    return out


def simulate_bridges(reps, grid_points, rng):
    """Standard Brownian bridges on ``k / grid_points``: Wiener path minus ``t W(1)``."""
    steps = rng.standard_normal((reps, grid_points)) / math.sqrt(grid_points)
    walk = np.concatenate([np.zeros((reps, 1)), np.cumsum(steps, axis=1)], axis=1)
    t = np.linspace(0.0, 1.0, grid_points + 1)
    return walk - t * walk[:, -1:]


def bridge_tail(kind, x, reps=100_000, grid_points=2000, seed=0, chunk=5000):
    """Empirical ``P(F(B) >= x)`` over simulated bridges; returns ``(probability, standard_error)``.

    Discretization biases the suprema down, so the estimate slightly
    undershoots the limit tail.
    """
    if x <= 0:
        raise ValueError("x must be positive")
    if grid_points < 100:
        raise ValueError("grid_points must be at least 100")
    kind = TestKind.coerce(kind)
    rng = np.random.default_rng(seed)
    hits, done = 0, 0
    while done < reps:
        m = min(chunk, reps - done)
        b = simulate_bridges(m, grid_points, rng)
        hi, lo = b.max(axis=1), b.min(axis=1)
        if kind in (TestKind.ONE_SIDED, TestKind.SUP):
            stat = hi
        elif kind is TestKind.INF:
            stat = -lo
        elif kind is TestKind.TWO_SIDED:
            stat = np.maximum(hi, -lo)
        else:
            stat = hi - lo
        hits += int(np.count_nonzero(stat >= x))
        done += m
    prob = hits / reps
    return prob, math.sqrt(prob * (1.0 - prob) / reps)


def estimator_rates(model: InarModel, n_list: Sequence[int], reps, seed=0, lag_support=None):
    """RMSE of ``theta_hat`` and mean ``|sigma2_hat - sigma2|`` per ``n``, with log-log slopes."""
    support = _support(model, lag_support)
    theta = model.theta(support)
    rows = {}
    for n in n_list:

        def one(ss, n=n):
            est = cls_estimate(simulate(model, n, seed=ss), support, check_information=False)
            return est.theta_hat - theta, est.sigma2_hat - model.sigma2

        results, failures = replicate(one, reps, seed)
        res = _ordered(results)
        err = np.array([r[0] for r in res])
        rows[int(n)] = {
            "theta_rmse": float(np.sqrt(np.mean(np.sum(err**2, axis=1)))),
            "sigma2_mae": float(np.mean([abs(r[1]) for r in res])),
            "failures": failures,
        }
    ns = sorted(rows)
    return {
        "per_n": rows,
        "theta_slope": loglog_slope(ns, [rows[n]["theta_rmse"] for n in ns]),
        "sigma2_slope": loglog_slope(ns, [rows[n]["sigma2_mae"] for n in ns]),
    }


def psi_growth(spec: ChangeSpec, n, reps, seed=0, lag_support=None):
    """Mean of ``max_k S_k / n`` against the analytic slope, for a single-parameter change.

    ``S_k`` sums ``M_hat_j`` for a change in the innovation mean and
    ``M_hat_j X_{j-q}`` for a change in ``alpha_q``.
    """
    _interior(spec)
    support = _support(spec.pre, lag_support)
    aq = alternative_quantities(spec, support)
    weight_lag = None if aq.component == len(support) + 1 else support[aq.component - 1]

    def one(ss):
        series = simulate_with_change(spec, n, seed=ss)
        est = cls_estimate(series, support, check_information=False)
        weights = None if weight_lag is None else series.lagged(weight_lag)
        cp = changepoint_scan(est.residuals, weights, ScanKind.ARGMAX_SUM)
        return cp.extremum / n

    results, failures = replicate(one, reps, seed)
    values = np.asarray(_ordered(results))
    return {
        "psi": aq.psi,
        "mean": float(values.mean()),
        "se": float(values.std(ddof=1) / math.sqrt(values.size)),
        "relative_error": float(abs(values.mean() - aq.psi) / abs(aq.psi)),
        "weight_lag": weight_lag,
        "failures": failures,
    }


def theta_tilde_convergence(spec: ChangeSpec, n, reps, seed=0, lag_support=None):
    """Mean CLS estimate over replicas straddling the change, against the analytic blend."""
    _interior(spec)
    support = _support(spec.pre, lag_support)
    aq = alternative_quantities(spec, support)

    def one(ss):
        return cls_estimate(simulate_with_change(spec, n, seed=ss), support, check_information=False).theta_hat

    results, failures = replicate(one, reps, seed)
    estimates = np.array(_ordered(results))
    mean = estimates.mean(axis=0)
    return {
        "theta_tilde": aq.theta_tilde,
        "mean_estimate": mean,
        "max_abs_error": float(np.max(np.abs(mean - aq.theta_tilde))),
        "failures": failures,
    }


def partial_sum_variance(model: InarModel, n_list: Sequence[int], reps, seed=0):
    """Monte Carlo variance of ``sum_k X_k`` per ``n`` and its log-log slope in ``n``."""
    variances = {}
    for n in n_list:
        results, _ = replicate(lambda ss, n=n: int(simulate(model, n, seed=ss).values.sum()), reps, seed)
        variances[int(n)] = float(np.var(_ordered(results), ddof=1))
    ns = sorted(variances)
    return {"variance": variances, "slope": loglog_slope(ns, [variances[n] for n in ns])}


@dataclass(frozen=True)
class ExperimentSpec:
    """A size or power experiment as read from a JSON document.

    ``scenario`` is an :class:`InarModel` (size) or a :class:`ChangeSpec` (power).
    """

    scenario: InarModel | ChangeSpec
    n: int
    replications: int
    config: TestConfig = field(default_factory=TestConfig)
    seed: int = 0
    lag_support: tuple[int, ...] | None = None
    scan: ScanKind = ScanKind.ARGMAX_ABS_SUM
    weight_lag: int | None = None

    def __post_init__(self):
        if self.replications < 100:
            raise ValueError(f"replications must be at least 100 for a reported rate, got {self.replications}")
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")

    @property
    def kind(self):
        return "power" if isinstance(self.scenario, ChangeSpec) else "size"


def run_experiment(spec: ExperimentSpec, keep_replicas=False) -> MonteCarloSummary:
    if isinstance(spec.scenario, ChangeSpec):
        return empirical_power(
            spec.scenario,
            spec.n,
            spec.replications,
            spec.config,
            spec.seed,
            spec.lag_support,
            spec.scan,
            spec.weight_lag,
            keep_replicas,
        )
    return empirical_size(
        spec.scenario, spec.n, spec.replications, spec.config, spec.seed, spec.lag_support, keep_replicas
    )
