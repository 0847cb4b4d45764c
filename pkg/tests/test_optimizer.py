import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_h

from susytweezer.optimizer import (ScheduleParamVector, ParamBounds, project,
                                   optimize_schedule)

INIT = ScheduleParamVector(fractions=(0.30, 0.25, 0.45), delta=0.5,
                           d_min=8.0, shape_power=1.0)
BOUNDS = ParamBounds()


def quadratic(pv: ScheduleParamVector) -> float:
    x = pv.as_array()
    target = np.array([0.32, 0.28, 0.40, 0.45, 9.0, 1.2])
    return float(np.sum((x - target) ** 2))


def test_converges_on_smooth_objective():
    res = optimize_schedule(quadratic, INIT, BOUNDS, budget=400, seed=3)
    assert res.best_objective < 1e-4
    x = res.best.as_array()
    assert abs(x[3] - 0.45) < 0.02 and abs(x[4] - 9.0) < 0.1


def test_never_worse_than_init():
    f_init = quadratic(INIT)
    for budget in (1, 3, 10, 50):
        res = optimize_schedule(quadratic, INIT, BOUNDS, budget=budget, seed=0)
        assert res.best_objective <= f_init + 1e-15
        assert res.evaluations <= budget


def test_history_elitism_and_determinism():
    r1 = optimize_schedule(quadratic, INIT, BOUNDS, budget=80, seed=7)
    r2 = optimize_schedule(quadratic, INIT, BOUNDS, budget=80, seed=7)
    h1 = [(e.index, tuple(e.params.as_array()), e.objective) for e in r1.history]
    h2 = [(e.index, tuple(e.params.as_array()), e.objective) for e in r2.history]
    assert h1 == h2
    best_so_far = np.inf
    mins = []
    for e in r1.history:
        best_so_far = min(best_so_far, e.objective)
        mins.append(best_so_far)
    assert all(a >= b for a, b in zip(mins, mins[1:]))
    assert r1.best_objective == mins[-1]
    # seeds only drive the jittered restarts; with a budget that reaches
    # them, different seeds explore different points
    r3 = optimize_schedule(quadratic, INIT, BOUNDS, budget=400, seed=8)
    r4 = optimize_schedule(quadratic, INIT, BOUNDS, budget=400, seed=9)
    assert [e.objective for e in r3.history] != [e.objective for e in r4.history]


@settings(max_examples=50, deadline=None)
@given(vec=st_h.lists(st_h.floats(-3, 3), min_size=6, max_size=6))
def test_projection_feasible(vec):
    y = project(np.array(vec), BOUNDS)
    assert abs(y[:3].sum() - 1.0) < 1e-12
    assert np.all(y[:3] >= BOUNDS.fraction_floor - 1e-12)
    assert BOUNDS.delta[0] <= y[3] <= BOUNDS.delta[1]
    assert BOUNDS.d_min[0] <= y[4] <= BOUNDS.d_min[1]
    assert BOUNDS.shape_power[0] <= y[5] <= BOUNDS.shape_power[1]


def test_every_evaluated_point_feasible():
    seen = []

    def spy(pv):
        seen.append(pv)
        return quadratic(pv)

    optimize_schedule(spy, INIT, BOUNDS, budget=60, seed=1)
    for pv in seen:
        x = pv.as_array()
        assert abs(x[:3].sum() - 1.0) < 1e-12
        assert BOUNDS.delta[0] <= x[3] <= BOUNDS.delta[1]
        assert BOUNDS.d_min[0] <= x[4] <= BOUNDS.d_min[1]


def test_collapsed_bounds_single_evaluation():
    tight = ParamBounds(delta=(0.5, 0.5), d_min=(8.0, 8.0),
                        shape_power=(1.0, 1.0), fraction_floor=1.0 / 3.0)
    res = optimize_schedule(quadratic, INIT, tight, budget=50, seed=0)
    assert res.evaluations == 1
    assert res.converged
    assert np.allclose(res.best.as_array()[:3], 1.0 / 3.0)


def test_infeasible_evaluations_survive():
    def flaky(pv):
        if pv.delta > 0.5:
            raise RuntimeError("simulated solver failure")
        return quadratic(pv)

    res = optimize_schedule(flaky, INIT, BOUNDS, budget=120, seed=2)
    assert any(not e.feasible for e in res.history)
    assert np.isfinite(res.best_objective)
    assert res.best.delta <= 0.5


def test_budget_exhaustion_flag():
    res = optimize_schedule(quadratic, INIT, BOUNDS, budget=12, seed=0)
    assert not res.converged
    assert res.evaluations == 12


def test_param_vector_validation():
    with pytest.raises(ValueError, match="sum to 1"):
        ScheduleParamVector(fractions=(0.5, 0.5, 0.5), delta=0.5, d_min=8.0,
                            shape_power=1.0)


def test_to_schedule_roundtrip():
    s = INIT.to_schedule(1000.0, 26.0)
    assert s.tau == 1000.0 and s.d_max == 26.0
    assert s.fractions == INIT.fractions
