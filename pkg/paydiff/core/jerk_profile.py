"""Jerk-limited point-to-point profiles and path time parameterization.

A scalar profile moves from ``(x0, v0, a0)`` to rest at ``x1`` with piecewise
constant jerk: a velocity change to a peak velocity ``vp``, an optional
cruise at ``vp``, and a velocity change back to zero. Each velocity change
ramps the acceleration up (or down) to a peak, holds it if the peak hits
``a_max``, then ramps it back to zero. ``vp`` is found by root finding on the
covered distance, or pinned to ``+/- v_max`` when a cruise phase is needed.

Multi-joint motions are synchronized to a common duration by lowering the
peak velocity of the faster joints, falling back to resting at the target
when that is not possible.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from ..utils.error_handler import DegeneratePathError, DimensionError, InfeasibleDurationError
from ..utils.logger import get_logger
from .trajectory import Trajectory

logger = get_logger(__name__)

Segment = Tuple[float, float]  # (jerk, duration)

_EPS = 1e-12


@dataclass(frozen=True)
class KinematicLimits:
    """Per-joint velocity, acceleration and jerk bounds."""

    v_max: np.ndarray
    a_max: np.ndarray
    j_max: np.ndarray

    @classmethod
    def from_model(cls, model) -> "KinematicLimits":
        return cls(v_max=model.v_max, a_max=model.a_max, j_max=model.j_max)

    @property
    def n_dof(self) -> int:
        return int(np.asarray(self.v_max).shape[0])


def _integrate(x: float, v: float, a: float, segments: Sequence[Segment]) -> Tuple[float, float, float]:
    for j, tau in segments:
        x = x + v * tau + a * tau ** 2 / 2.0 + j * tau ** 3 / 6.0
        v = v + a * tau + j * tau ** 2 / 2.0
        a = a + j * tau
    return x, v, a


def _velocity_change(v0: float, a0: float, v1: float, a_max: float, j_max: float) -> List[Segment]:
    """Fastest jerk-limited change from ``(v0, a0)`` to ``(v1, 0)``."""
    v_stop = v0 + a0 * abs(a0) / (2.0 * j_max)
    dv_stop = v1 - v_stop
    if abs(dv_stop) <= _EPS * max(1.0, abs(v1)):
        return [(-np.sign(a0) * j_max, abs(a0) / j_max)] if a0 != 0 else []

    d = np.sign(dv_stop)
    a0p = d * a0
    dvp = d * (v1 - v0)
    a_peak = np.sqrt(max((2.0 * j_max * dvp + a0p ** 2) / 2.0, 0.0))
    hold = 0.0
    if a_peak > a_max:
        a_peak = a_max
        hold = max((dvp - (2.0 * a_max ** 2 - a0p ** 2) / (2.0 * j_max)) / a_max, 0.0)
    return [
        (d * j_max, max((a_peak - a0p) / j_max, 0.0)),
        (0.0, hold),
        (-d * j_max, a_peak / j_max),
    ]


class ScalarProfile:
    """Piecewise constant-jerk motion of one coordinate ending at rest.

    Parameters
    ----------
    x0, v0, a0 : float
        Initial state.
    x1 : float
        Target position (reached with zero velocity and acceleration).
    segments : list of (jerk, duration)
        Constant-jerk pieces.
    """

    def __init__(self, x0: float, v0: float, a0: float, x1: float, segments: Sequence[Segment]) -> None:
        self.x0, self.v0, self.a0, self.x1 = float(x0), float(v0), float(a0), float(x1)
        segments = [(float(j), float(t)) for j, t in segments if t > 0.0]
        self.jerks = np.array([s[0] for s in segments])
        self.durations = np.array([s[1] for s in segments])
        self.starts = np.concatenate([[0.0], np.cumsum(self.durations)])

        states = [(self.x0, self.v0, self.a0)]
        for seg in segments:
            states.append(_integrate(*states[-1], [seg]))
        self._start_states = np.array(states)

    @property
    def duration(self) -> float:
        return float(self.starts[-1])

    @property
    def segments(self) -> List[Segment]:
        return list(zip(self.jerks.tolist(), self.durations.tolist()))

    @property
    def end_error(self) -> float:
        """Distance between the integrated end state and ``(x1, 0, 0)``."""
        x, v, a = self._start_states[-1]
        return float(max(abs(x - self.x1), abs(v), abs(a)))

    def evaluate(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Position, velocity and acceleration at times ``t`` (held at rest after the end)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.full(t.shape, self.x1)
        v = np.zeros(t.shape)
        a = np.zeros(t.shape)
        if self.jerks.size == 0:
            return x, v, a
        active = t < self.duration
        ta = np.maximum(t[active], 0.0)
        k = np.clip(np.searchsorted(self.starts, ta, side="right") - 1, 0, self.jerks.size - 1)
        tau = ta - self.starts[k]
        x0, v0, a0 = self._start_states[k].T
        j = self.jerks[k]
        x[active] = x0 + v0 * tau + a0 * tau ** 2 / 2.0 + j * tau ** 3 / 6.0
        v[active] = v0 + a0 * tau + j * tau ** 2 / 2.0
        a[active] = a0 + j * tau
        return x, v, a

    def padded(self, duration: float) -> "ScalarProfile":
        """Same motion followed by rest at the target until ``duration``."""
        extra = duration - self.duration
        return ScalarProfile(self.x0, self.v0, self.a0, self.x1, self.segments + [(0.0, max(extra, 0.0))])


class _ScalarPlanner:
    """Builds scalar profiles for one coordinate and one set of limits."""

    def __init__(self, x0: float, v0: float, a0: float, x1: float,
                 v_max: float, a_max: float, j_max: float) -> None:
        self.x0, self.v0, self.a0, self.x1 = float(x0), float(v0), float(a0), float(x1)
        self.dx = self.x1 - self.x0
        self.V, self.A, self.J = float(v_max), float(a_max), float(j_max)

    def _changes(self, vp: float) -> Tuple[List[Segment], List[Segment]]:
        up = _velocity_change(self.v0, self.a0, vp, self.A, self.J)
        down = _velocity_change(vp, 0.0, 0.0, self.A, self.J)
        return up, down

    def _distance(self, vp: float) -> float:
        up, down = self._changes(vp)
        return _integrate(0.0, self.v0, self.a0, up + down)[0]

    def _segments(self, vp: float, cruise: float) -> List[Segment]:
        up, down = self._changes(vp)
        return up + [(0.0, max(cruise, 0.0))] + down

    def _time(self, vp: float) -> Tuple[float, float]:
        up, down = self._changes(vp)
        cruise = (self.dx - self._distance(vp)) / vp
        return sum(t for _, t in up + down) + cruise, cruise

    def fastest(self) -> Tuple[List[Segment], float]:
        """Segments of the fastest profile found and its peak velocity."""
        if abs(self.dx) < _EPS and abs(self.v0) < _EPS and abs(self.a0) < _EPS:
            return [], 0.0
        d_hi = self._distance(self.V)
        d_lo = self._distance(-self.V)
        if self.dx >= d_hi:
            return self._segments(self.V, (self.dx - d_hi) / self.V), self.V
        if self.dx <= d_lo:
            return self._segments(-self.V, (self.dx - d_lo) / -self.V), -self.V
        vp = brentq(lambda v: self._distance(v) - self.dx, -self.V, self.V, xtol=1e-15, rtol=1e-15, maxiter=200)
        return self._segments(vp, 0.0), vp

    def with_duration(self, duration: float) -> ScalarProfile:
        """Profile lasting exactly ``duration`` (not shorter than the fastest one)."""
        segments, vp = self.fastest()
        fastest = ScalarProfile(self.x0, self.v0, self.a0, self.x1, segments)
        if duration <= fastest.duration + _EPS or abs(vp) < 1e-9:
            return fastest.padded(duration)

        def excess(v: float) -> float:
            return self._time(v)[0] - duration

        lo = vp
        for _ in range(60):
            lo *= 0.5
            total, cruise = self._time(lo)
            if cruise < -1e-12:
                return fastest.padded(duration)
            if total > duration:
                break
        else:
            return fastest.padded(duration)

        v_sync = brentq(excess, min(lo, vp), max(lo, vp), xtol=1e-15, rtol=1e-15, maxiter=200)
        total, cruise = self._time(v_sync)
        if cruise < -1e-12:
            return fastest.padded(duration)
        profile = ScalarProfile(self.x0, self.v0, self.a0, self.x1, self._segments(v_sync, cruise))
        if profile.end_error > 1e-9:
            return fastest.padded(duration)
        return profile.padded(duration)


class JerkProfile:
    """Synchronized per-joint scalar profiles sharing one duration."""

    def __init__(self, profiles: Sequence[ScalarProfile], duration: float) -> None:
        self.profiles = list(profiles)
        self.duration = float(duration)

    @property
    def n_dof(self) -> int:
        return len(self.profiles)

    @property
    def target(self) -> np.ndarray:
        return np.array([p.x1 for p in self.profiles])

    def evaluate(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Positions, velocities, accelerations at times ``t``, each shape (len(t), n_dof)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = [p.evaluate(t) for p in self.profiles]
        return tuple(np.stack([o[i] for o in out], axis=1) for i in range(3))

    def sample(self, dt: float, horizon: Optional[int] = None) -> Trajectory:
        """Sample at ``k * dt``; the last sample is the exact rest target."""
        if horizon is None:
            horizon = int(np.ceil(self.duration / dt - 1e-9)) + 1
        horizon = max(horizon, 2)
        q, qd, qdd = self.evaluate(np.arange(horizon) * dt)
        return Trajectory.from_components(q, qd, qdd, dt)


def jerk_limited_profile(x0: np.ndarray, v0: np.ndarray, a0: np.ndarray, x1: np.ndarray,
                         limits: KinematicLimits, duration: Optional[float] = None) -> JerkProfile:
    """Per-joint jerk-limited motion to rest at ``x1``, synchronized in time.

    Parameters
    ----------
    x0, v0, a0 : array-like, shape (n_dof,)
        Initial positions, velocities, accelerations (within limits).
    x1 : array-like, shape (n_dof,)
        Target positions, reached with zero velocity and acceleration.
    limits : KinematicLimits
        Per-joint bounds.
    duration : float, optional
        Common duration. Defaults to that of the slowest joint.

    Returns
    -------
    JerkProfile

    Raises
    ------
    InfeasibleDurationError
        If ``duration`` is shorter than the slowest joint's fastest profile.
    """
    x0, v0, a0, x1 = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (x0, v0, a0, x1))
    n = x0.shape[0]
    if any(arr.shape != (n,) for arr in (v0, a0, x1)) or limits.n_dof != n:
        raise DimensionError("x0, v0, a0, x1 and limits must share the joint dimension")

    planners = [
        _ScalarPlanner(x0[i], v0[i], a0[i], x1[i], limits.v_max[i], limits.a_max[i], limits.j_max[i])
        for i in range(n)
    ]
    fastest = [ScalarProfile(x0[i], v0[i], a0[i], x1[i], planners[i].fastest()[0]) for i in range(n)]
    t_min = max(p.duration for p in fastest)
    if duration is None:
        duration = t_min
    elif duration < t_min - 1e-9:
        raise InfeasibleDurationError(f"duration {duration:.4f} s is shorter than the minimum {t_min:.4f} s")

    profiles = [planners[i].with_duration(duration) for i in range(n)]
    return JerkProfile(profiles, duration)


class PathProfile:
    """Rest-to-rest jerk-limited motion along straight joint-space segments.

    Each segment ``w_k -> w_{k+1}`` is driven by a scalar profile of the path
    parameter ``u`` from 0 to 1 whose limits are the tightest joint limits
    divided by the segment extent. Time is then scaled uniformly by
    ``time_scale >= 1``.
    """

    def __init__(self, waypoints: np.ndarray, segment_profiles: Sequence[ScalarProfile],
                 time_scale: float = 1.0) -> None:
        self.waypoints = waypoints
        self.segment_profiles = list(segment_profiles)
        self.time_scale = float(time_scale)
        self._starts = np.concatenate([[0.0], np.cumsum([p.duration for p in self.segment_profiles])])

    @property
    def duration(self) -> float:
        return float(self._starts[-1] * self.time_scale)

    @property
    def via_times(self) -> np.ndarray:
        """Times at which every waypoint is visited."""
        return self._starts * self.time_scale

    def evaluate(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s = self.time_scale
        tau = t / s
        n = self.waypoints.shape[1]
        q = np.empty((t.size, n))
        qd = np.zeros((t.size, n))
        qdd = np.zeros((t.size, n))
        k = np.clip(np.searchsorted(self._starts, tau, side="right") - 1, 0, len(self.segment_profiles) - 1)
        for seg, profile in enumerate(self.segment_profiles):
            mask = k == seg
            if not np.any(mask):
                continue
            u, ud, udd = profile.evaluate(tau[mask] - self._starts[seg])
            delta = self.waypoints[seg + 1] - self.waypoints[seg]
            q[mask] = self.waypoints[seg] + u[:, None] * delta
            qd[mask] = ud[:, None] * delta / s
            qdd[mask] = udd[:, None] * delta / s ** 2
        return q, qd, qdd


def _dedupe(path: Sequence[np.ndarray], tol: float = 1e-9) -> np.ndarray:
    points = [np.asarray(path[0], dtype=float)]
    for w in path[1:]:
        w = np.asarray(w, dtype=float)
        if np.max(np.abs(w - points[-1])) > tol:
            points.append(w)
    return np.array(points)


def parameterize_path(path: Sequence[np.ndarray], limits: KinematicLimits,
                      duration: Optional[float] = None) -> PathProfile:
    """Jerk-limited rest-to-rest timing of a piecewise-linear joint path.

    Raises
    ------
    DegeneratePathError
        If fewer than two distinct waypoints remain after merging repeats.
    InfeasibleDurationError
        If ``duration`` is shorter than the limits allow.
    """
    if len(path) < 2:
        raise DegeneratePathError("path needs at least two waypoints")
    waypoints = _dedupe(path)
    if waypoints.shape[0] < 2:
        raise DegeneratePathError("path collapses to a single configuration")
    if waypoints.shape[1] != limits.n_dof:
        raise DimensionError(f"path has {waypoints.shape[1]} joints, limits have {limits.n_dof}")

    profiles = []
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        extent = np.abs(b - a)
        moving = extent > 0
        v_u = np.min(limits.v_max[moving] / extent[moving])
        a_u = np.min(limits.a_max[moving] / extent[moving])
        j_u = np.min(limits.j_max[moving] / extent[moving])
        segments, _ = _ScalarPlanner(0.0, 0.0, 0.0, 1.0, v_u, a_u, j_u).fastest()
        profiles.append(ScalarProfile(0.0, 0.0, 0.0, 1.0, segments))

    profile = PathProfile(waypoints, profiles)
    if duration is not None:
        if duration < profile.duration - 1e-9:
            raise InfeasibleDurationError(
                f"duration {duration:.4f} s is shorter than the minimum {profile.duration:.4f} s")
        profile.time_scale = duration / profile._starts[-1]
    return profile


def time_parameterize(path: Sequence[np.ndarray], limits: KinematicLimits, dt: float,
                      duration: Optional[float] = None, horizon: Optional[int] = None) -> Trajectory:
    """Turn a geometric joint path into a sampled rest-to-rest trajectory.

    Parameters
    ----------
    path : sequence of array-like
        Joint-space waypoints, at least two distinct.
    limits : KinematicLimits
        Per-joint velocity, acceleration and jerk bounds.
    dt : float
        Sample period, s.
    duration : float, optional
        Fixed total duration; time is stretched uniformly to reach it.
    horizon : int, optional
        Number of samples. Defaults to ``duration / dt + 1`` (rounded).

    Returns
    -------
    Trajectory
        Samples at ``k * dt`` with exact rest endpoints.
    """
    profile = parameterize_path(path, limits, duration)
    if horizon is None:
        horizon = int(np.ceil(profile.duration / dt - 1e-9)) + 1
    times = np.arange(horizon) * dt
    if times[-1] < profile.duration - 1e-9:
        raise InfeasibleDurationError(
            f"{horizon} samples at dt={dt} cover {times[-1]:.4f} s, motion needs {profile.duration:.4f} s")
    q, qd, qdd = profile.evaluate(times)
    q[0], qd[0], qdd[0] = profile.waypoints[0], 0.0, 0.0
    q[-1], qd[-1], qdd[-1] = profile.waypoints[-1], 0.0, 0.0
    return Trajectory.from_components(q, qd, qdd, dt)
