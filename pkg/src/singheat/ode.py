"""Adaptive integration of second-order scalar ODEs, with events.

A thin, opinionated layer over scipy's Dormand-Prince RK45 (optionally
Radau for stiff tails): second-order problems y'' = rhs(t, y, y') are
integrated as first-order systems, trajectories carry dense output, and
events are scalar functionals of (t, y, y') located by root refinement on
the dense output.  Everything here is deterministic: identical inputs
produce identical trajectories bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError

DEFAULT_BLOWUP_CEILING = 1e12


@dataclass(frozen=True)
class OdeSystem:
    """y'' = rhs(t, y, y'), undefined at the listed singular points."""

    rhs: Callable[[float, float, float], float]
    singular_points: tuple[float, ...] = ()


@dataclass(frozen=True)
class EventSpec:
    """Scalar functional of (t, y, y') whose zero crossings are recorded.

    direction: +1 only rising crossings, -1 only falling, 0 both.
    """

    kind: str
    fn: Callable[[float, float, float], float]
    direction: int = 0
    terminal: bool = False


@dataclass(frozen=True)
class Event:
    kind: str
    t: float
    y: float
    yprime: float


class TrajStatus(Enum):
    COMPLETED = "Completed"
    BLOWUP = "Blowup"
    STEP_FAILURE = "StepFailure"

    def __str__(self):
        return self.value


class Trajectory:
    """An integrated trajectory: nodes, dense interpolant, events, status."""

    def __init__(self, ts, ys, yps, dense, events, status, t0, t_end):
        self.ts = np.asarray(ts)
        self.ys = np.asarray(ys)
        self.yps = np.asarray(yps)
        self._dense = dense
        self.events: list[Event] = list(events)
        self.status = status
        self.t0 = float(t0)
        self.t_end = float(t_end)

    @property
    def nodes(self):
        return list(zip(self.ts, self.ys, self.yps))

    @property
    def span(self):
        return (min(self.t0, self.t_end), max(self.t0, self.t_end))

    def eval(self, t):
        """Dense (y, y') at scalar or array t inside the integrated span."""
        v = self._dense(t)
        return v[0], v[1]

    def events_of(self, kind):
        return [e for e in self.events if e.kind == kind]


class CombinedTrajectory:
    """Two or more trajectories glued along the independent variable."""

    def __init__(self, segments: Sequence[Trajectory]):
        segs = sorted(segments, key=lambda s: s.span[0])
        self.segments = segs
        self.t0 = segs[0].span[0]
        self.t_end = segs[-1].span[1]
        self.status = next(
            (s.status for s in segs if s.status is not TrajStatus.COMPLETED),
            TrajStatus.COMPLETED,
        )
        self.events = sorted(
            (e for s in segs for e in s.events), key=lambda e: e.t
        )
        ts, ys, yps = [], [], []
        for s in segs:
            order = np.argsort(s.ts)
            ts.append(np.asarray(s.ts)[order])
            ys.append(np.asarray(s.ys)[order])
            yps.append(np.asarray(s.yps)[order])
        self.ts = np.concatenate(ts)
        self.ys = np.concatenate(ys)
        self.yps = np.concatenate(yps)

    @property
    def span(self):
        return (self.t0, self.t_end)

    @property
    def nodes(self):
        return list(zip(self.ts, self.ys, self.yps))

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t).astype(float)
        lo_all, hi_all = self.span
        if np.any(tt < lo_all - 1e-12) or np.any(tt > hi_all + 1e-12):
            bad = tt[(tt < lo_all - 1e-12) | (tt > hi_all + 1e-12)][0]
            raise DomainError(f"t={bad} outside combined span {self.span}")
        # assign each point to a segment by the segment upper bounds
        uppers = np.array([s.span[1] for s in self.segments])
        which = np.minimum(
            np.searchsorted(uppers, tt, side="left"), len(self.segments) - 1
        )
        y = np.empty_like(tt)
        yp = np.empty_like(tt)
        for k, seg in enumerate(self.segments):
            mask = which == k
            if not np.any(mask):
                continue
            lo, hi = seg.span
            pts = np.clip(tt[mask], lo, hi)
            yk, ypk = seg.eval(pts)
            y[mask], yp[mask] = yk, ypk
        if scalar:
            return float(y[0]), float(yp[0])
        return y, yp

    def events_of(self, kind):
        return [e for e in self.events if e.kind == kind]


def array_trajectory(ts, ys, yps, events=(), status=TrajStatus.COMPLETED):
    """Trajectory built from sampled values, dense via cubic Hermite."""
    ts = np.asarray(ts, dtype=float)
    spline = CubicHermiteSpline(ts, np.asarray(ys, float), np.asarray(yps, float))
    dspline = spline.derivative()

    def dense(t):
        return np.array([spline(t), dspline(t)])

    return Trajectory(ts, ys, yps, dense, events, status, ts[0], ts[-1])


def integrate(
    sys: OdeSystem,
    t0: float,
    y0: float,
    yp0: float,
    t_end: float,
    tol: tuple[float, float] = (1e-12, 1e-10),
    events: Sequence[EventSpec] = (),
    blowup_ceiling: float = DEFAULT_BLOWUP_CEILING,
    max_step: float = math.inf,
    method: str = "RK45",
) -> Trajectory:
    """Integrate y'' = rhs(t, y, y') from t0 to t_end (either direction).

    tol is (absolute, relative); events are located on the dense output.
    The trajectory status reports blow-up (|y| above the ceiling) and
    step-size failure instead of raising, so callers can record outcomes.
    """
    if t0 == t_end:
        raise DomainError("integration span is empty (t0 == t_end)")
    lo, hi = min(t0, t_end), max(t0, t_end)
    for sp in sys.singular_points:
        if lo < sp < hi:
            raise DomainError(
                f"singular point t={sp} lies inside the span ({lo}, {hi})"
            )

    def f(t, y):
        return (y[1], sys.rhs(t, y[0], y[1]))

    scipy_events = []
    for spec in events:
        def ev(t, y, _fn=spec.fn):
            return _fn(t, y[0], y[1])
        ev.terminal = spec.terminal
        ev.direction = spec.direction
        scipy_events.append(ev)

    def ceiling(t, y):
        return blowup_ceiling - abs(y[0])
    ceiling.terminal = True
    ceiling.direction = -1
    scipy_events.append(ceiling)

    atol, rtol = tol
    sol = solve_ivp(
        f, (t0, t_end), (y0, yp0), method=method, dense_output=True,
        events=scipy_events, atol=atol, rtol=rtol, max_step=max_step,
    )

    recorded = []
    for spec, t_ev, y_ev in zip(events, sol.t_events, sol.y_events):
        for te, ye in zip(t_ev, y_ev):
            recorded.append(Event(spec.kind, float(te), float(ye[0]), float(ye[1])))
    recorded.sort(key=lambda e: (e.t - t0) * math.copysign(1.0, t_end - t0))

    if sol.status == 1 and len(sol.t_events[-1]) > 0:
        status = TrajStatus.BLOWUP
    elif sol.status == -1:
        status = (
            TrajStatus.BLOWUP
            if abs(sol.y[0, -1]) > 0.5 * blowup_ceiling
            else TrajStatus.STEP_FAILURE
        )
    else:
        status = TrajStatus.COMPLETED

    return Trajectory(
        sol.t, sol.y[0], sol.y[1], sol.sol, recorded, status, t0, sol.t[-1]
    )


def bisect_parameter(
    predicate: Callable[[float], bool], lo: float, hi: float, tol: float
) -> float:
    """Locate a flip of a boolean predicate by bisection.

    Returns the midpoint of the final bracket, whose width is <= tol.
    """
    if not (tol > 0):
        raise DomainError("tol must be positive")
    if lo == hi:
        raise DomainError("degenerate bracket (lo == hi)")
    plo, phi = bool(predicate(lo)), bool(predicate(hi))
    if plo == phi:
        raise DomainError(
            f"predicate({lo}) == predicate({hi}); no flip bracketed"
        )
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if bool(predicate(mid)) == plo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
