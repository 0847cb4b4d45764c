"""Time-dependent control schedules for the auxiliary tweezer.

A schedule maps t in [0, tau] to the pair (delta_alpha, center): the depth
offset added to the auxiliary trap and the position of its center (x_c in
1D, z_c for the longitudinal 3D protocol). Controls are C^1 so the drive
contains no kicks.

Two kinds exist:

* ``CosineLoopSchedule`` -- the default three-segment loop: approach at
  +delta, depth ramp +delta -> -delta at closest approach, retreat at
  -delta, each segment a raised-cosine ramp (optionally warped by a shape
  exponent).
* ``KnotSchedule`` -- monotone-cubic (PCHIP) interpolation through explicit
  control knots, for user-supplied paths.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator


def _ramp(u, power: float):
    """Raised-cosine ramp 0 -> 1 on u in [0,1]; C^1 with zero slope at both
    ends for power > 0.5 (the warp keeps endpoints flat)."""
    u = np.clip(u, 0.0, 1.0)
    if power != 1.0:
        up = u**power
        u = up / (up + (1.0 - np.clip(u, 0.0, 1.0)) ** power)
    return 0.5 * (1.0 - np.cos(np.pi * u))


@dataclass(frozen=True)
class CosineLoopSchedule:
    """Default extraction loop (move in at +delta, ramp depth, move out at
    -delta). Segment durations are ``fractions * tau``."""

    tau: float
    delta: float
    d_min: float
    d_max: float
    fractions: tuple[float, float, float] = (0.35, 0.30, 0.35)
    shape_power: float = 1.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not (0.0 < self.d_min < self.d_max):
            raise ValueError(
                f"need 0 < d_min < d_max, got d_min={self.d_min}, d_max={self.d_max}"
            )
        f = np.asarray(self.fractions, dtype=float)
        if f.shape != (3,) or np.any(f <= 0) or abs(f.sum() - 1.0) > 1e-12:
            raise ValueError(f"fractions must be 3 positive numbers summing to 1, got {self.fractions}")
        if not (0.5 < self.shape_power <= 4.0):
            raise ValueError(f"shape_power must lie in (0.5, 4], got {self.shape_power}")

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12) or np.any(t > self.tau * (1.0 + 1e-12)):
            raise ValueError(f"t outside [0, tau={self.tau}]")
        f1, f2, _ = self.fractions
        t1, t2 = f1 * self.tau, (f1 + f2) * self.tau
        u1 = t / t1
        u2 = (t - t1) / (t2 - t1)
        u3 = (t - t2) / (self.tau - t2)
        p = self.shape_power
        center = np.where(
            t < t1,
            self.d_max + (self.d_min - self.d_max) * _ramp(u1, p),
            np.where(t < t2, self.d_min,
                     self.d_min + (self.d_max - self.d_min) * _ramp(u3, p)),
        )
        dalpha = np.where(
            t < t1, self.delta,
            np.where(t < t2, self.delta * (1.0 - 2.0 * _ramp(u2, p)), -self.delta),
        )
        if dalpha.ndim == 0:
            return float(dalpha), float(center)
        return dalpha, center

    @property
    def duration(self) -> float:
        return self.tau

    def knots(self) -> list[tuple[float, float, float]]:
        """Segment-boundary control knots (t, delta_alpha, center)."""
        f1, f2, _ = self.fractions
        return [
            (0.0, self.delta, self.d_max),
            (f1 * self.tau, self.delta, self.d_min),
            ((f1 + f2) * self.tau, -self.delta, self.d_min),
            (self.tau, -self.delta, self.d_max),
        ]

    def to_dict(self) -> dict:
        return {
            "kind": "cosine_loop",
            "tau": self.tau,
            "delta_Er": self.delta,
            "d_min": self.d_min,
            "d_max": self.d_max,
            "fractions": list(self.fractions),
            "shape_power": self.shape_power,
        }


@dataclass(frozen=True)
class KnotSchedule:
    """C^1 (PCHIP) interpolation through explicit (t, delta_alpha, center)
    knots. First and last knot must sit at distance >= d_max."""

    tau: float
    t_knots: tuple[float, ...]
    dalpha_knots: tuple[float, ...]
    center_knots: tuple[float, ...]
    d_max: float
    _interp: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.t_knots, dtype=float)
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("t_knots must be strictly increasing, length >= 2")
        if abs(t[0]) > 1e-12 or abs(t[-1] - self.tau) > 1e-12:
            raise ValueError("knots must span [0, tau]")
        da = np.asarray(self.dalpha_knots, dtype=float)
        ce = np.asarray(self.center_knots, dtype=float)
        if da.shape != t.shape or ce.shape != t.shape:
            raise ValueError("knot arrays must share the time grid")
        if abs(ce[0]) < self.d_max or abs(ce[-1]) < self.d_max:
            raise ValueError("schedule must start and end at separation >= d_max")
        object.__setattr__(
            self, "_interp",
            (PchipInterpolator(t, da), PchipInterpolator(t, ce)),
        )

    def eval(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < -1e-12) or np.any(t_arr > self.tau * (1.0 + 1e-12)):
            raise ValueError(f"t outside [0, tau={self.tau}]")
        da = self._interp[0](t_arr)
        ce = self._interp[1](t_arr)
        if da.ndim == 0:
            return float(da), float(ce)
        return da, ce

    @property
    def duration(self) -> float:
        return self.tau

    def knots(self) -> list[tuple[float, float, float]]:
        return list(zip(self.t_knots, self.dalpha_knots, self.center_knots))

    def to_dict(self) -> dict:
        return {
            "kind": "knots",
            "tau": self.tau,
            "t_knots": list(self.t_knots),
            "dalpha_knots": list(self.dalpha_knots),
            "center_knots": list(self.center_knots),
            "d_max": self.d_max,
        }


AdiabaticSchedule = CosineLoopSchedule | KnotSchedule


def schedule_eval(s: AdiabaticSchedule, t):
    """Controls (delta_alpha, center) at time t; errors outside [0, tau]."""
    return s.eval(t)


def with_tau(s: AdiabaticSchedule, tau: float) -> AdiabaticSchedule:
    """Same control path traversed over a different duration."""
    import dataclasses
    if isinstance(s, CosineLoopSchedule):
        return dataclasses.replace(s, tau=float(tau))
    scale = float(tau) / s.tau
    return KnotSchedule(tau=float(tau),
                        t_knots=tuple(t * scale for t in s.t_knots),
                        dalpha_knots=s.dalpha_knots,
                        center_knots=s.center_knots, d_max=s.d_max)


def schedule_from_dict(d: dict) -> AdiabaticSchedule:
    kind = d.get("kind")
    if kind == "cosine_loop":
        return CosineLoopSchedule(
            tau=float(d["tau"]),
            delta=float(d["delta_Er"]),
            d_min=float(d["d_min"]),
            d_max=float(d["d_max"]),
            fractions=tuple(float(x) for x in d.get("fractions", (0.35, 0.30, 0.35))),
            shape_power=float(d.get("shape_power", 1.0)),
        )
    if kind == "knots":
        return KnotSchedule(
            tau=float(d["tau"]),
            t_knots=tuple(float(x) for x in d["t_knots"]),
            dalpha_knots=tuple(float(x) for x in d["dalpha_knots"]),
            center_knots=tuple(float(x) for x in d["center_knots"]),
            d_max=float(d["d_max"]),
        )
    raise ValueError(f"unknown schedule kind {kind!r}")


def schedule_digest(s: AdiabaticSchedule) -> str:
    """Stable content hash of a schedule (canonical JSON, exact floats)."""
    payload = json.dumps(s.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
