"""INAR(p) models, innovation laws, simulation and stationary moments.

An INAR(p) process evolves as

    X_k = alpha_1 o X_{k-1} + ... + alpha_p o X_{k-p} + eps_k,

where ``a o X`` is binomial thinning (a Binomial(X, a) draw) and the
innovations ``eps_k`` are i.i.d. nonnegative integers with mean ``mu`` and
variance ``sigma2``. Seasonal models are encoded as a full INAR(p) whose
coefficients vanish off a lag support.

Random number discipline
------------------------
Every simulation owns two generators spawned from one ``SeedSequence``:
the first child drives the thinning draws (one scalar binomial per nonzero
lag per step, lags in increasing order), the second draws innovations in
bulk, one block per regime. A regime switch therefore changes parameters
but not the order in which the streams are consumed, so a change
specification with identical regimes reproduces :func:`simulate` bit for
bit. Monte Carlo replica ``r`` of master seed ``s`` uses
``SeedSequence(s, spawn_key=(r,))`` (see :func:`replica_seed`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg

from ._validation import check_counts, check_lag_support
from .exceptions import UnstableModel

__all__ = [
    "InnovationSpec",
    "InarModel",
    "ObservationSeries",
    "ChangeSpec",
    "simulate",
    "simulate_with_change",
    "companion_matrix",
    "stationary_moments",
    "moment_matrix_C",
    "burn_in_length",
    "replica_seed",
]

_FAMILIES = ("poisson", "negative_binomial", "degenerate", "finite_pmf")


@dataclass(frozen=True)
class InnovationSpec:
    """Distribution of the immigration (innovation) term.

    Use the constructors :meth:`poisson`, :meth:`negative_binomial`,
    :meth:`degenerate` and :meth:`finite_pmf` rather than the raw dataclass.
    """

    family: str
    mean: float
    variance: float
    pmf: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown innovation family {self.family!r}")
        if not (self.mean >= 0 and self.variance >= 0):
            raise ValueError("innovation mean and variance must be nonnegative")
        if self.family == "degenerate" and self.mean != int(self.mean):
            raise ValueError(
                f"degenerate innovation needs an integer value, got {self.mean}"
            )
        if self.family == "finite_pmf":
            table = np.asarray(self.pmf, dtype=float)
            if table.ndim != 1 or table.size == 0 or np.any(table < 0):
                raise ValueError("pmf table must be a nonempty vector of nonnegative masses")
            if abs(table.sum() - 1.0) > 1e-12:
                raise ValueError(f"pmf table sums to {table.sum()!r}, not 1")

    @classmethod
    def poisson(cls, mean):
        return cls("poisson", float(mean), float(mean))

    @classmethod
    def negative_binomial(cls, mean, variance):
        """Negative binomial with the given mean and variance (variance > mean)."""
        mean, variance = float(mean), float(variance)
        if not variance > mean > 0:
            raise ValueError("negative binomial needs variance > mean > 0")
        return cls("negative_binomial", mean, variance)

    @classmethod
    def degenerate(cls, value):
        if value < 0 or value != int(value):
            raise ValueError(f"degenerate innovation needs a nonnegative integer, got {value}")
        return cls("degenerate", float(value), 0.0)

    @classmethod
    def finite_pmf(cls, table):
        """Law on ``{0, ..., K}`` with ``P(eps = j) = table[j]``."""
        table = tuple(float(t) for t in table)
        arr = np.asarray(table)
        support = np.arange(arr.size)
        mean = float(support @ arr)
        variance = float(((support - mean) ** 2) @ arr)
        return cls("finite_pmf", mean, variance, table)

    @classmethod
    def parse(cls, text):
        """Parse ``poisson:MU``, ``negbin:MU:VAR``, ``degenerate:V`` or ``pmf:p0,p1,...``."""
        name, _, rest = text.partition(":")
        name = name.strip().lower()
        try:
            if name == "poisson":
                return cls.poisson(float(rest))
            if name in ("negbin", "negative_binomial", "nb"):
                mean, variance = rest.split(":")
                return cls.negative_binomial(float(mean), float(variance))
            if name in ("degenerate", "const", "constant"):
                return cls.degenerate(float(rest))
            if name in ("pmf", "finite_pmf"):
                return cls.finite_pmf([float(v) for v in rest.split(",")])
        except ValueError as exc:
            raise ValueError(f"cannot parse innovation {text!r}: {exc}") from None
        raise ValueError(f"unknown innovation family in {text!r}")

    def with_mean(self, mean):
        """Same family with a new mean (dispersion kept where meaningful)."""
        if self.family == "poisson":
            return InnovationSpec.poisson(mean)
        if self.family == "degenerate":
            return InnovationSpec.degenerate(mean)
        if self.family == "negative_binomial":
            ratio = self.variance / self.mean
            return InnovationSpec.negative_binomial(mean, mean * ratio)
        raise ValueError("cannot rescale the mean of a finite pmf innovation")

    def sample(self, rng, size):
        if self.family == "poisson":
            return rng.poisson(self.mean, size=size).astype(np.int64)
        if self.family == "degenerate":
            return np.full(size, int(self.mean), dtype=np.int64)
        if self.family == "negative_binomial":
            prob = self.mean / self.variance
            shape = self.mean * prob / (1.0 - prob)
            return rng.negative_binomial(shape, prob, size=size).astype(np.int64)
        cdf = np.cumsum(self.pmf)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)

    def describe(self):
        if self.family == "finite_pmf":
            return f"pmf:{','.join(repr(p) for p in self.pmf)}"
        if self.family == "negative_binomial":
            return f"negbin:{self.mean!r}:{self.variance!r}"
        return f"{self.family}:{self.mean!r}"


@dataclass(frozen=True)
class InarModel:
    """A time-homogeneous INAR(p) model.

    Parameters
    ----------
    alpha : sequence of float
        Full coefficient vector ``(alpha_1, ..., alpha_p)``; the order is its length.
    innovation : InnovationSpec
    lag_support : sequence of int, optional
        Lags treated as free parameters. Defaults to ``1..p``. Coefficients
        outside the support must be zero.
    """

    alpha: tuple[float, ...]
    innovation: InnovationSpec
    lag_support: tuple[int, ...] = field(default=())

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        if not alpha:
            raise ValueError("model order must be positive")
        for i, a in enumerate(alpha, start=1):
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"coefficient alpha_{i}={a} outside [0, 1]")
        support = check_lag_support(self.lag_support or len(alpha), order=len(alpha))
        off = [i for i, a in enumerate(alpha, start=1) if a != 0 and i not in support]
        if off:
            raise ValueError(f"nonzero coefficients at lags {off} outside the lag support")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "lag_support", support)

    @classmethod
    def seasonal(cls, order, coefficients: Mapping[int, float], innovation):
        """Sparse model, e.g. ``seasonal(12, {1: 0.5, 12: 0.2}, eps)``."""
        alpha = [0.0] * order
        for lag, value in coefficients.items():
            alpha[lag - 1] = value
        return cls(tuple(alpha), innovation, tuple(coefficients))

    @property
    def order(self):
        return len(self.alpha)

    @property
    def mu(self):
        return self.innovation.mean

    @property
    def sigma2(self):
        return self.innovation.variance

    @property
    def alpha_sum(self):
        return math.fsum(self.alpha)

    @property
    def is_stable(self):
        return self.alpha_sum < 1.0

    @property
    def satisfies_c0(self):
        """Stability, positive innovation mean and a nondegenerate conditional variance."""
        return self.is_stable and self.mu > 0 and (self.alpha_sum > 0 or self.sigma2 > 0)

    @property
    def alpha2(self):
        """Thinning variances ``alpha_i (1 - alpha_i)``."""
        a = np.asarray(self.alpha)
        return a * (1.0 - a)

    def theta(self, lag_support=None):
        """Parameter vector restricted to ``lag_support``, intercept last."""
        support = self.lag_support if lag_support is None else check_lag_support(lag_support, self.order)
        return np.array([self.alpha[i - 1] for i in support] + [self.mu])

    def replace(self, *, alpha=None, innovation=None):
        return InarModel(
            self.alpha if alpha is None else tuple(alpha),
            self.innovation if innovation is None else innovation,
            self.lag_support,
        )


@dataclass(frozen=True)
class ObservationSeries:
    """Counts ``X_{-p+1}, ..., X_0`` (``initial``) followed by ``X_1, ..., X_n`` (``values``)."""

    initial: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        initial = check_counts(self.initial, name="initial", min_length=0)
        values = check_counts(self.values, name="values", min_length=1)
        initial.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_raw(cls, counts, n_initial):
        """Split a raw chronological series, using the first ``n_initial`` entries as initial values."""
        counts = check_counts(counts, name="counts", min_length=n_initial + 1)
        return cls(counts[:n_initial], counts[n_initial:])

    @property
    def n(self):
        return int(self.values.size)

    @property
    def order(self):
        return int(self.initial.size)

    @property
    def full(self):
        """Initial values followed by observations, as one array."""
        return np.concatenate([self.initial, self.values])

    def lagged(self, lag):
        """The vector ``(X_{1-lag}, ..., X_{n-lag})``."""
        if not 1 <= lag <= self.order:
            raise ValueError(f"lag {lag} needs at least {lag} initial values, have {self.order}")
        full = self.full
        return full[self.order - lag : self.order - lag + self.n]

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class ChangeSpec:
    """Single change after ``tau = max(floor(n * rho), 1)`` steps."""

    rho: float
    pre: InarModel
    post: InarModel

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.pre.order != self.post.order:
            raise ValueError("pre- and post-change models must have the same order")

    def tau(self, n):
        return max(int(math.floor(n * self.rho)), 1)

    @property
    def satisfies_ca(self):
        return self.pre.satisfies_c0 and self.post.satisfies_c0

    @property
    def changed_components(self):
        """Indices (1-based, intercept = p + 1) of parameters that differ across regimes."""
        pre = np.append(self.pre.alpha, self.pre.mu)
        post = np.append(self.post.alpha, self.post.mu)
        return tuple(int(i) + 1 for i in np.flatnonzero(pre != post))


def burn_in_length(order):
    return max(500, 50 * order)


def replica_seed(master_seed, index):
    """Seed sequence for Monte Carlo replica ``index`` under ``master_seed``."""
    return np.random.SeedSequence(master_seed, spawn_key=(int(index),))


def _streams(seed):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    thin, innov = ss.spawn(2)
    return np.random.default_rng(thin), np.random.default_rng(innov)


def _run(history, segments, thin_rng, innov_rng):
    """Advance the chain through ``segments`` of ``(model, steps)``; returns the new values."""
    buf = [int(v) for v in history]
    p = len(buf)
    binomial = thin_rng.binomial
    for model, steps in segments:
        eps = model.innovation.sample(innov_rng, steps).tolist()
        lags = [(i, model.alpha[i - 1]) for i in range(1, model.order + 1) if model.alpha[i - 1] > 0]
        for t in range(steps):
            pos = len(buf)
            x = eps[t]
            for lag, a in lags:
                prev = buf[pos - lag]
                if prev:
                    x += prev if a == 1.0 else int(binomial(prev, a))
            buf.append(x)
    return np.asarray(buf[p:], dtype=np.int64)


def _start(model, initial, thin_rng, innov_rng):
    p = model.order
    if initial is not None:
        initial = check_counts(initial, name="initial", min_length=0)
        if initial.size != p:
            raise ValueError(f"need {p} initial values, got {initial.size}")
        return initial
    # Stationary start: burn in from the rounded stationary mean.
    level = int(round(model.mu / (1.0 - model.alpha_sum))) if model.is_stable else 0
    burn = _run([level] * p, [(model, burn_in_length(p))], thin_rng, innov_rng)
    return burn[-p:]


def simulate(model: InarModel, n: int, initial: Sequence[int] | None = None, seed=None) -> ObservationSeries:
    """Simulate ``n`` steps of ``model``.

    If ``initial`` is omitted the chain is started near stationarity: it runs
    ``max(500, 50 p)`` burn-in steps which are discarded, and the last ``p``
    burn-in values become the initial values.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    thin_rng, innov_rng = _streams(seed)
    start = _start(model, initial, thin_rng, innov_rng)
    values = _run(start, [(model, int(n))], thin_rng, innov_rng)
    return ObservationSeries(start, values)


def simulate_with_change(spec: ChangeSpec, n: int, initial: Sequence[int] | None = None, seed=None) -> ObservationSeries:
    """Simulate ``spec.tau(n)`` steps of the pre-change model, then the rest under the post-change model.

    The state carries over the change; a stationary start (``initial=None``)
    uses the pre-change model for burn-in.
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    tau = spec.tau(n)
    thin_rng, innov_rng = _streams(seed)
    start = _start(spec.pre, initial, thin_rng, innov_rng)
    values = _run(start, [(spec.pre, tau), (spec.post, n - tau)], thin_rng, innov_rng)
    return ObservationSeries(start, values)


def companion_matrix(model: InarModel) -> np.ndarray:
    """Mean matrix of the vector branching form: first row alpha, ones on the subdiagonal."""
    p = model.order
    A = np.zeros((p, p))
    A[0, :] = model.alpha
    if p > 1:
        A[np.arange(1, p), np.arange(p - 1)] = 1.0
    return A


def _require_stable(model):
    if not model.is_stable:
        raise UnstableModel(f"model is not stable: sum(alpha) = {model.alpha_sum} >= 1")


def stationary_moments(model: InarModel):
    """Stationary mean vector and second-moment matrix of ``(X_k, ..., X_{k-p+1})``.

    The mean solves ``(I - A) m = mu e_1``. The second-moment matrix ``S``
    solves ``S = A S A' + c e_1 e_1' + mu (A m e_1' + e_1 m' A')`` with
    ``c = mu^2 + sigma^2 + alpha2' m``, which is the stationary limit of the
    squared vector recursion.
    """
    _require_stable(model)
    p = model.order
    A = companion_matrix(model)
    e1 = np.zeros(p)
    e1[0] = 1.0
    mean = np.linalg.solve(np.eye(p) - A, model.mu * e1)
    c = model.mu**2 + model.sigma2 + model.alpha2 @ mean
    Am = A @ mean
    rhs = c * np.outer(e1, e1) + model.mu * (np.outer(Am, e1) + np.outer(e1, Am))
    second = linalg.solve_discrete_lyapunov(A, rhs)
    return mean, (second + second.T) / 2.0


def moment_matrix_C(model: InarModel, lag_support=None) -> np.ndarray:
    """``E[(X; 1)(X; 1)']`` under the stationary law, regressors restricted to ``lag_support``."""
    support = model.lag_support if lag_support is None else check_lag_support(lag_support, model.order)
    mean, second = stationary_moments(model)
    idx = np.asarray(support) - 1
    d = idx.size
    C = np.empty((d + 1, d + 1))
    C[:d, :d] = second[np.ix_(idx, idx)]
    C[:d, d] = C[d, :d] = mean[idx]
    C[d, d] = 1.0
    return C
