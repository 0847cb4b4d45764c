"""Derivative-free tuning of schedule parameters.

The objective (max_n extraction infidelity at fixed tau) is an expensive
black-box simulation with plateaus near its floor, so the search is a
Nelder-Mead simplex with box projection, restarted from jittered initial
points to guard against simplex collapse. Candidate evaluations that raise
are marked infeasible and the search continues.

The standard objective runs on the cheap surrogate tier (the projected
few-level model); the final candidate is meant to be confirmed by one full
propagation, which the caller owns.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .schedule import CosineLoopSchedule


@dataclass(frozen=True)
class ScheduleParamVector:
    """Free parameters of the extraction loop.

    ``fractions`` live on the simplex (positive, sum 1); the rest are box
    bounded. ``as_array`` flattens in a fixed order for the optimizer.
    """

    fractions: tuple[float, float, float]
    delta: float
    d_min: float
    shape_power: float

    def __post_init__(self):
        f = np.asarray(self.fractions, dtype=float)
        if f.shape != (3,) or np.any(f <= 0) or abs(f.sum() - 1.0) > 1e-12:
            raise ValueError(f"fractions must be positive and sum to 1, got {self.fractions}")

    def as_array(self) -> np.ndarray:
        return np.array([*self.fractions, self.delta, self.d_min, self.shape_power])

    @staticmethod
    def from_array(x: np.ndarray) -> "ScheduleParamVector":
        return ScheduleParamVector(fractions=(x[0], x[1], x[2]), delta=float(x[3]),
                                   d_min=float(x[4]), shape_power=float(x[5]))

    def to_schedule(self, tau: float, d_max: float) -> CosineLoopSchedule:
        return CosineLoopSchedule(tau=tau, delta=self.delta, d_min=self.d_min,
                                  d_max=d_max, fractions=self.fractions,
                                  shape_power=self.shape_power)

    def to_dict(self) -> dict:
        return {"fractions": list(self.fractions), "delta_Er": self.delta,
                "d_min": self.d_min, "shape_power": self.shape_power}


@dataclass(frozen=True)
class ParamBounds:
    """Box bounds for (delta, d_min, shape_power) plus a floor for each
    segment fraction."""

    delta: tuple[float, float] = (0.1, 0.9)
    d_min: tuple[float, float] = (6.5, 12.0)
    shape_power: tuple[float, float] = (0.6, 2.0)
    fraction_floor: float = 0.05

    def collapsed(self) -> bool:
        return (self.delta[0] == self.delta[1] and self.d_min[0] == self.d_min[1]
                and self.shape_power[0] == self.shape_power[1]
                and abs(self.fraction_floor - 1.0 / 3.0) < 1e-15)


def project(x: np.ndarray, bounds: ParamBounds) -> np.ndarray:
    """Clip to the boxes and renormalize the fractions onto the simplex
    (iterating, since renormalization can push a clipped fraction back out)."""
    y = x.copy()
    for _ in range(64):
        y[:3] = np.clip(y[:3], bounds.fraction_floor, 1.0 - 2 * bounds.fraction_floor)
        s = y[:3].sum()
        if abs(s - 1.0) < 1e-14:
            break
        y[:3] /= s
    # final exact normalization within the floor
    y[:3] = np.maximum(y[:3], bounds.fraction_floor)
    y[:3] /= y[:3].sum()
    y[3] = np.clip(y[3], *bounds.delta)
    y[4] = np.clip(y[4], *bounds.d_min)
    y[5] = np.clip(y[5], *bounds.shape_power)
    return y


@dataclass
class Evaluation:
    index: int
    params: ScheduleParamVector
    objective: float
    feasible: bool
    tier: str
    restart: int


@dataclass
class OptimizeResult:
    best: ScheduleParamVector
    best_objective: float
    history: list[Evaluation] = field(default_factory=list)
    converged: bool = False
    evaluations: int = 0


def optimize_schedule(objective: Callable[[ScheduleParamVector], float],
                      init: ScheduleParamVector,
                      bounds: ParamBounds,
                      budget: int = 200,
                      seed: int = 0,
                      restarts: int = 3,
                      tier: str = "surrogate",
                      xatol: float = 1e-3,
                      fatol: float = 1e-7) -> OptimizeResult:
    """Minimize the objective within the bounds, never returning anything
    worse than the best point seen (elitism). Deterministic for a fixed
    seed and budget."""
    rng = np.random.default_rng(seed)
    history: list[Evaluation] = []
    state = {"count": 0, "best_x": None, "best_f": np.inf, "restart": 0}

    def evaluate(x: np.ndarray) -> float:
        if state["count"] >= budget:
            raise _BudgetExhausted
        x = project(x, bounds)
        pv = ScheduleParamVector.from_array(x)
        state["count"] += 1
        try:
            f = float(objective(pv))
            feasible = np.isfinite(f)
        except Exception:
            f, feasible = np.inf, False
        history.append(Evaluation(index=state["count"] - 1, params=pv, objective=f,
                                  feasible=feasible, tier=tier,
                                  restart=state["restart"]))
        if f < state["best_f"]:
            state["best_f"], state["best_x"] = f, x
        return f

    x0 = project(init.as_array(), bounds)
    if bounds.collapsed():
        try:
            evaluate(x0)
        except _BudgetExhausted:
            pass
        return OptimizeResult(best=ScheduleParamVector.from_array(state["best_x"]),
                              best_objective=state["best_f"], history=history,
                              converged=True, evaluations=state["count"])

    try:
        for r in range(restarts):
            state["restart"] = r
            start = x0 if r == 0 else project(
                x0 + rng.normal(scale=0.08, size=x0.shape) * _scale(bounds), bounds)
            _nelder_mead(evaluate, start, _scale(bounds), xatol, fatol)
        converged = True
    except _BudgetExhausted:
        converged = False

    return OptimizeResult(best=ScheduleParamVector.from_array(state["best_x"]),
                          best_objective=state["best_f"], history=history,
                          converged=converged, evaluations=state["count"])


class _BudgetExhausted(Exception):
    pass


def _scale(bounds: ParamBounds) -> np.ndarray:
    return np.array([
        0.25, 0.25, 0.25,
        bounds.delta[1] - bounds.delta[0],
        bounds.d_min[1] - bounds.d_min[0],
        bounds.shape_power[1] - bounds.shape_power[0],
    ])


def _nelder_mead(evaluate, x0: np.ndarray, scale: np.ndarray,
                 xatol: float, fatol: float, max_iter: int = 500):
    """Standard reflection/expansion/contraction/shrink simplex."""
    n = len(x0)
    simplex = [x0]
    for i in range(n):
        step = np.zeros(n)
        step[i] = 0.15 * scale[i] if scale[i] > 0 else 0.0
        simplex.append(x0 + step)
    fs = [evaluate(x) for x in simplex]

    for _ in range(max_iter):
        order = np.argsort(fs)
        simplex = [simplex[i] for i in order]
        fs = [fs[i] for i in order]
        spread_x = max(np.max(np.abs(s - simplex[0])) for s in simplex[1:])
        finite = [f for f in fs if np.isfinite(f)]
        spread_f = (max(finite) - min(finite)) if len(finite) > 1 else np.inf
        if spread_x < xatol and spread_f < fatol:
            return
        centroid = np.mean(simplex[:-1], axis=0)
        xr = centroid + (centroid - simplex[-1])
        fr = evaluate(xr)
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - simplex[-1])
            fe = evaluate(xe)
            simplex[-1], fs[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fs[-2]:
            simplex[-1], fs[-1] = xr, fr
        else:
            xc = centroid + 0.5 * (simplex[-1] - centroid)
            fc = evaluate(xc)
            if fc < fs[-1]:
                simplex[-1], fs[-1] = xc, fc
            else:
                best = simplex[0]
                for i in range(1, n + 1):
                    simplex[i] = best + 0.5 * (simplex[i] - best)
                    fs[i] = evaluate(simplex[i])
