import numpy as np
import pytest

from inarcusum.cusum import TestConfig
from inarcusum.exceptions import SingularDesign
from inarcusum.model import ChangeSpec, InarModel, InnovationSpec
from inarcusum.montecarlo import (
    ExperimentSpec,
    MonteCarloSummary,
    changepoint_error_quantiles,
    empirical_power,
    empirical_size,
    loglog_slope,
    replicate,
    run_experiment,
)

MODEL = InarModel((0.3,), InnovationSpec.poisson(2.0))


def test_loglog_slope_exact():
    x = np.array([10, 100, 1000])
    assert loglog_slope(x, 3 * x**-0.5) == pytest.approx(-0.5)


def test_replicate_counts_failures():
    def fn(ss):
        if ss.spawn_key[-1] % 3 == 0:
            raise SingularDesign("constant", 1e20)
        return ss.spawn_key[-1]

    results, failures = replicate(fn, 10, seed=1)
    assert failures == {"SingularDesign": 4}
    assert sorted(results) == [1, 2, 4, 5, 7, 8]
    with pytest.raises(ValueError):
        replicate(fn, 0, seed=1)


def test_replicate_propagates_other_errors():
    def fn(ss):
        raise KeyError("bug")

    with pytest.raises(KeyError):
        replicate(fn, 3, seed=0)


def test_size_is_deterministic_and_order_free():
    a = empirical_size(MODEL, 200, 30, seed=11, keep_replicas=True)
    b = empirical_size(MODEL, 200, 30, seed=11, keep_replicas=True)
    assert a == b
    assert a.to_dict() == b.to_dict()
    # the first 10 replicas of a longer run are the same replicas
    c = empirical_size(MODEL, 200, 10, seed=11, keep_replicas=True)
    assert c.extras["replicas"] == a.extras["replicas"][:10]
    assert a.total == 30


def test_wall_clock_excluded():
    s = MonteCarloSummary("size", 10, 100, 0, 100, wall_clock=1.0)
    t = MonteCarloSummary("size", 10, 100, 0, 100, wall_clock=2.0)
    assert s == t
    assert "wall_clock" not in s.to_dict()
    assert s.to_dict(include_timing=True)["wall_clock"] == 1.0


def test_level_near_one_always_rejects():
    summary = empirical_size(MODEL, 200, 20, TestConfig(overall_alpha=1 - 1e-12), seed=2)
    assert summary.rejection_rate == 1.0


def test_constant_series_all_fail():
    model = InarModel((0.0,), InnovationSpec.degenerate(3))
    summary = empirical_size(model, 100, 5, seed=0)
    assert summary.successes == 0
    assert summary.failures == {"SingularDesign": 5}
    assert summary.rejection_rate is None


def test_no_change_power_equals_size():
    spec = ChangeSpec(0.5, MODEL, MODEL)
    power = empirical_power(spec, 300, 40, seed=5)
    size = empirical_size(MODEL, 300, 40, seed=5)
    assert power.rejection_rate == size.rejection_rate


def test_large_mean_jump_detected():
    spec = ChangeSpec(0.5, MODEL, InarModel((0.3,), InnovationSpec.poisson(8.0)))
    power = empirical_power(spec, 400, 30, seed=3, keep_replicas=True)
    assert power.rejection_rate == 1.0
    assert abs(power.tau_error_quantiles["0.5"]) <= 3
    assert len(power.extras["replicas"]) == 30


def test_changepoint_error_quantiles_shape():
    spec = ChangeSpec(0.5, MODEL, InarModel((0.3,), InnovationSpec.poisson(1.0)))
    out = changepoint_error_quantiles(spec, [200, 400], 20, seed=1)
    assert set(out) == {200, 400}
    assert out[400]["abs"]["0.5"] >= 0
    with pytest.raises(ValueError):
        changepoint_error_quantiles(spec, [100], 5)


def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(MODEL, 100, 0)
    with pytest.raises(ValueError):
        ExperimentSpec(MODEL, 100, 99)
    with pytest.raises(ValueError):
        ExperimentSpec(MODEL, 1, 100)
    spec = ExperimentSpec(MODEL, 50, 100, seed=4)
    assert spec.kind == "size"
    assert run_experiment(spec) == run_experiment(spec)


def test_rho_guard():
    spec = ChangeSpec(0.02, MODEL, InarModel((0.3,), InnovationSpec.poisson(1.0)))
    with pytest.raises(ValueError, match="rho"):
        empirical_power(spec, 200, 5)
    with pytest.raises(ValueError, match="rho"):
        changepoint_error_quantiles(spec, [200], 5)
