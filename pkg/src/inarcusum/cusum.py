"""CUSUM test process, Brownian-bridge critical values and the change tests.

The test process is the normalized partial sum of estimated scores

    M_n(k/n) = I_hat^{-1/2} sum_{j <= k} M_hat_j (X_{j-1}; 1),

which under no change converges to a standard Brownian bridge with
independent components. Each monitored component is tested marginally at
the per-component level ``1 - (1 - alpha)^(1/d)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_level
from .estimate import EstimationResult, cls_estimate, design_matrix, inverse_sqrt
from .model import ObservationSeries

__all__ = [
    "TestKind",
    "CusumPath",
    "TestConfig",
    "ComponentResult",
    "TestReport",
    "cusum_path",
    "statistic",
    "alpha_star",
    "tail_probability",
    "critical_value",
    "run_test",
    "evaluate_fit",
]

_TERM_TOL = 1e-14
_MAX_TERMS = 10_000


class TestKind(str, enum.Enum):
    """Functional of the test process.

    ``ONE_SIDED`` rejects on ``sup >= C`` or ``inf <= -C``; ``SUP`` and
    ``INF`` restrict it to one direction and share its critical value.
    """

    __test__ = False

    ONE_SIDED = "one-sided"
    SUP = "sup"
    INF = "inf"
    TWO_SIDED = "two-sided"
    EPIDEMIC = "epidemic"

    @classmethod
    def coerce(cls, kind):
        if isinstance(kind, cls):
            return kind
        key = str(kind).strip().lower().replace("_", "-")
        aliases = {"onesided": "one-sided", "twosided": "two-sided", "kuiper": "epidemic", "range": "epidemic"}
        return cls(aliases.get(key.replace("-", ""), key))

    @property
    def tail_kind(self):
        return TestKind.ONE_SIDED if self in (TestKind.SUP, TestKind.INF) else self


@dataclass(frozen=True)
class CusumPath:
    """Test process on the grid ``t = k/n``, ``k = 0..n``; ``values[k]`` is a ``(d,)`` vector."""

    values: np.ndarray

    @property
    def n(self):
        return self.values.shape[0] - 1

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def grid(self):
        return np.arange(self.n + 1) / self.n

    def component(self, index):
        """Component ``index`` (1-based)."""
        if not 1 <= index <= self.dim:
            raise IndexError(f"component {index} outside 1..{self.dim}")
        return self.values[:, index - 1]


def cusum_path(series: ObservationSeries, est: EstimationResult) -> CusumPath:
    """Build the normalized score CUSUM path from a CLS fit of ``series``."""
    Z = design_matrix(series, est.lag_support)
    scores = Z * np.asarray(est.residuals)[:, None]
    partial = np.vstack([np.zeros(Z.shape[1]), np.cumsum(scores, axis=0)])
    R = inverse_sqrt(est.I_hat)
    return CusumPath(partial @ R)


def statistic(path, component, kind) -> float:
    """Evaluate a functional of one component over the step grid.

    ``path`` may be a :class:`CusumPath` (with 1-based ``component``) or a
    plain 1-D array, in which case ``component`` is ignored.
    """
    kind = TestKind.coerce(kind)
    x = path.component(component) if isinstance(path, CusumPath) else np.asarray(path, dtype=float)
    hi, lo = float(np.max(x)), float(np.min(x))
    if kind is TestKind.SUP:
        return hi
    if kind is TestKind.INF:
        return lo
    if kind is TestKind.TWO_SIDED:
        return max(hi, -lo)
    if kind is TestKind.EPIDEMIC:
        return hi - lo
    # ONE_SIDED: the larger excursion, signed by its direction
    return hi if hi >= -lo else lo


def alpha_star(alpha, d) -> float:
    """Per-component level giving overall level ``alpha`` across ``d`` independent tests."""
    alpha = check_level(alpha)
    if d < 1:
        raise ValueError(f"d must be at least 1, got {d}")
    return float(-math.expm1(math.log1p(-alpha) / d))


def _two_sided_tail(x):
    if x <= 0:
        return 1.0
    if x < 1.0:
        # Theta-function form of the CDF converges fast for small x.
        cdf, k = 0.0, 1
        factor = math.pi**2 / (8.0 * x * x)
        while k < _MAX_TERMS:
            term = math.exp(-((2 * k - 1) ** 2) * factor)
            cdf += term
            if term < _TERM_TOL:
                break
            k += 1
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / x * cdf))
    total = 0.0
    for k in range(1, _MAX_TERMS):
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < _TERM_TOL:
            break
    return min(1.0, max(0.0, 2.0 * total))


def _kuiper_tail(x):
    if x <= 0:
        return 1.0
    total = 0.0
    for k in range(1, _MAX_TERMS):
        kx2 = k * k * x * x
        term = (4.0 * kx2 - 1.0) * math.exp(-2.0 * kx2)
        total += term
        if abs(term) < _TERM_TOL and 4.0 * kx2 > 1.0:
            break
    else:
        return 1.0
    return min(1.0, max(0.0, 2.0 * total))


def tail_probability(kind, x) -> float:
    """Limit tail ``P(F(B) >= x)`` of a Brownian bridge functional ``F``."""
    kind = TestKind.coerce(kind).tail_kind
    x = float(x)
    if kind is TestKind.ONE_SIDED:
        return 1.0 if x <= 0 else math.exp(-2.0 * x * x)
    if kind is TestKind.TWO_SIDED:
        return _two_sided_tail(x)
    return _kuiper_tail(x)


def critical_value(kind, alpha, tol=1e-10) -> float:
    """The ``x`` with ``P(F(B) >= x) = alpha`` for the functional selected by ``kind``."""
    kind = TestKind.coerce(kind).tail_kind
    alpha = check_level(alpha)
    if kind is TestKind.ONE_SIDED:
        return math.sqrt(-math.log(alpha) / 2.0)
    lo, hi = 0.0, 1.0
    while tail_probability(kind, hi) > alpha:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if tail_probability(kind, mid) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TestConfig:
    """Which components to monitor (1-based, intercept = ``dim``), the functional and the overall level.

    ``monitored=None`` monitors every component.
    """

    __test__ = False

    kind: TestKind = TestKind.TWO_SIDED
    overall_alpha: float = 0.05
    monitored: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", TestKind.coerce(self.kind))
        check_level(self.overall_alpha, "overall_alpha")
        if self.monitored is not None:
            monitored = tuple(sorted({int(i) for i in self.monitored}))
            if not monitored or monitored[0] < 1:
                raise ValueError(f"monitored components must be a nonempty set of positive indices, got {monitored}")
            object.__setattr__(self, "monitored", monitored)

    def components(self, dim):
        comps = tuple(range(1, dim + 1)) if self.monitored is None else self.monitored
        if comps[-1] > dim:
            raise ValueError(f"component {comps[-1]} exceeds process dimension {dim}")
        return comps


@dataclass(frozen=True)
class ComponentResult:
    component: int
    statistic: float
    critical_value: float
    reject: bool
    direction: str | None = None
    sup: float = 0.0
    inf: float = 0.0


@dataclass(frozen=True)
class TestReport:
    """Per-component decisions plus the fitted model and the full test path."""

    __test__ = False

    config: TestConfig
    alpha_star: float
    components: tuple[ComponentResult, ...]
    path: CusumPath
    estimation: EstimationResult = field(repr=False)

    @property
    def reject(self):
        return any(c.reject for c in self.components)

    @property
    def statistics(self):
        return {c.component: c.statistic for c in self.components}

    @property
    def critical(self):
        return self.components[0].critical_value


def _decide(path, comp, kind, crit):
    x = path.component(comp)
    hi, lo = float(np.max(x)), float(np.min(x))
    if kind is TestKind.SUP:
        return ComponentResult(comp, hi, crit, hi >= crit, "downward" if hi >= crit else None, hi, lo)
    if kind is TestKind.INF:
        return ComponentResult(comp, lo, crit, lo <= -crit, "upward" if lo <= -crit else None, hi, lo)
    if kind is TestKind.ONE_SIDED:
        down, up = hi >= crit, lo <= -crit
        if down and up:
            direction = "downward" if hi >= -lo else "upward"
        else:
            direction = "downward" if down else "upward" if up else None
        return ComponentResult(comp, statistic(x, 1, kind), crit, down or up, direction, hi, lo)
    stat = statistic(x, 1, kind)
    return ComponentResult(comp, stat, crit, stat >= crit, None, hi, lo)


def evaluate_fit(series: ObservationSeries, est: EstimationResult, config: TestConfig) -> TestReport:
    """Run the configured test on an existing fit."""
    path = cusum_path(series, est)
    comps = config.components(path.dim)
    a_star = alpha_star(config.overall_alpha, len(comps))
    crit = critical_value(config.kind, a_star)
    results = tuple(_decide(path, c, config.kind, crit) for c in comps)
    return TestReport(config, a_star, results, path, est)




def run_test(series: ObservationSeries, config: TestConfig | None = None, lag_support=None) -> TestReport:
    """Fit by CLS, build the test process and test every monitored component.

    Raises
    ------
    SingularDesign, NotPositiveDefinite
        Propagated from the fit.
    """
    config = TestConfig() if config is None else config
    est = cls_estimate(series, lag_support)
    return evaluate_fit(series, est, config)
