"""Time integration of the lattice system on ``n = -N..N``.

Reflecting boundaries copy the end value into the ghost site, which keeps
both constant equilibria exact. Integration is classical fixed-step RK4.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import linregress

from .exceptions import (
    BadWidth,
    FrontHitBoundary,
    FrontNotFound,
    NonPositiveParameter,
    PositivityLost,
    StepTooLarge,
    ValidationError,
)
from .model import ModelParams, endemic_state

TOL_POS = 1e-12
STABILITY_FACTOR = 0.2


@dataclass
class LatticeState:
    t: float
    s: np.ndarray
    i: np.ndarray
    N: int
    r: Optional[np.ndarray] = None

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def copy(self) -> "LatticeState":
        return LatticeState(self.t, self.s.copy(), self.i.copy(), self.N,
                            None if self.r is None else self.r.copy())


def max_stable_dt(p: ModelParams) -> float:
    return STABILITY_FACTOR / (2.0 + 2.0 * p.d + p.beta)


@dataclass
class SimConfig:
    """Integration settings. ``level=None`` means ``e*/2``; ``record_stride=None`` means one record per time unit."""

    dt: float = 0.01
    T: float = 300.0
    record_stride: Optional[int] = None
    level: Optional[float] = None
    fit_window_fraction: float = 0.5
    track_recovered: bool = False
    params: Optional[ModelParams] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise StepTooLarge(f"dt must be positive, got {self.dt}")
        if not self.T > 0:
            raise ValidationError(f"T must be positive, got {self.T}")
        if self.record_stride is None:
            self.record_stride = max(1, int(round(1.0 / self.dt)))
        if int(self.record_stride) < 1:
            raise ValidationError("record_stride must be >= 1")
        self.record_stride = int(self.record_stride)
        if not 0.0 < self.fit_window_fraction <= 1.0:
            raise ValidationError("fit_window_fraction must lie in (0, 1]")
        if self.level is not None and not self.level > 0:
            raise ValidationError("level must be positive")
        if self.params is not None:
            self.validate(self.params)

    def validate(self, p: ModelParams) -> None:
        limit = max_stable_dt(p)
        if self.dt > limit:
            raise StepTooLarge(f"dt={self.dt} exceeds the stability limit {limit:.6g}")

    @property
    def steps(self) -> int:
        return int(math.ceil(self.T / self.dt - 1e-9))

    def front_level(self, p: ModelParams) -> float:
        return self.level if self.level is not None else 0.5 * endemic_state(p)[1]


def init_state(N: int, kind: str = "left_block", i0: float = 0.1, width: int = 10,
               profile=None, track_recovered: bool = False) -> LatticeState:
    """Initial data.

    ``left_block``: ``i = i0`` for ``n <= -N + width``; ``bump``: ``i = i0`` for
    ``|n| < width``; ``from_profile``: ``(s, i)_n = (phi, psi)(n)`` from a wave
    profile (a :class:`WaveProfile` or a bare ``Profile``). ``s = 1`` otherwise.
    """
    if int(N) != N or N < 10:
        raise ValidationError(f"N must be an integer >= 10, got {N}")
    N = int(N)
    n = np.arange(-N, N + 1)
    s = np.ones(n.size)
    i = np.zeros(n.size)
    if kind == "from_profile":
        if profile is None:
            raise ValidationError("from_profile needs a profile")
        prof = getattr(profile, "profile", profile)
        s, i = prof.sample(n.astype(float))
    elif kind in ("left_block", "bump"):
        if not i0 > 0:
            raise NonPositiveParameter(f"i0 must be > 0, got {i0}")
        if int(width) != width or not 0 < width < N:
            raise BadWidth(f"width must be an integer in (0, N={N}), got {width}")
        mask = n <= -N + width if kind == "left_block" else np.abs(n) < width
        i[mask] = i0
    else:
        raise ValidationError(f"unknown initial data kind {kind!r}")
    r = np.zeros(n.size) if track_recovered else None
    return LatticeState(0.0, s, i, N, r)


def _lap(u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    out[1:-1] = u[2:] + u[:-2] - 2.0 * u[1:-1]
    # reflecting ghosts: u_{-N-1} = u_{-N}, u_{N+1} = u_N
    out[0] = u[1] - u[0]
    out[-1] = u[-2] - u[-1]
    return out


def _rhs_arrays(p: ModelParams, s, i, r=None):
    inf = p.beta * s * i
    ds = _lap(s) + p.mu - p.mu * s - inf
    di = p.d * _lap(i) - (p.mu + p.gamma) * i + inf
    dr = None if r is None else p.gamma * i - p.mu * r
    return ds, di, dr


def rhs(p: ModelParams, state: LatticeState):
    """Right-hand side ``(ds, di, dr)``; ``dr`` is None unless recovered are tracked."""
    return _rhs_arrays(p, state.s, state.i, state.r)


def _check_positivity(state: LatticeState) -> None:
    bad_s = (state.s < -TOL_POS) | (state.s > 1.0 + TOL_POS)
    bad_i = state.i < -TOL_POS
    if np.any(bad_s) or np.any(bad_i):
        j = int(np.argmax(bad_s | bad_i))
        site = j - state.N
        raise PositivityLost(
            f"positivity lost at t={state.t:.6g}, site n={site} "
            f"(s={state.s[j]:.6g}, i={state.i[j]:.6g})", t=state.t, site=site)


def integrate(p: ModelParams, state: LatticeState, config: SimConfig) -> list:
    """Fixed-step RK4 from ``state`` to ``state.t + T``; returns recorded snapshots.

    The first snapshot is the initial state and the last one is the final state.
    """
    config.validate(p)
    _check_positivity(state)
    s, i = state.s.copy(), state.i.copy()
    r = None if state.r is None else state.r.copy()
    if config.track_recovered and r is None:
        r = np.zeros_like(s)
    dt, t0 = config.dt, state.t
    steps = config.steps
    out = [LatticeState(t0, s.copy(), i.copy(), state.N, None if r is None else r.copy())]
    track = r is not None
    for k in range(1, steps + 1):
        k1 = _rhs_arrays(p, s, i, r)
        k2 = _rhs_arrays(p, s + 0.5 * dt * k1[0], i + 0.5 * dt * k1[1],
                         r + 0.5 * dt * k1[2] if track else None)
        k3 = _rhs_arrays(p, s + 0.5 * dt * k2[0], i + 0.5 * dt * k2[1],
                         r + 0.5 * dt * k2[2] if track else None)
        k4 = _rhs_arrays(p, s + dt * k3[0], i + dt * k3[1], r + dt * k3[2] if track else None)
        s = s + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        i = i + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        if track:
            r = r + (dt / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        t = t0 + k * dt
        snap = LatticeState(t, s, i, state.N, r)
        _check_positivity(snap)
        if k % config.record_stride == 0 or k == steps:
            out.append(snap.copy())
    return out


@dataclass
class FrontTrace:
    times: np.ndarray
    positions: np.ndarray
    fitted_speed: float
    fit_stderr: float
    intercept: float = 0.0
    level: float = float("nan")
    fit_start: float = float("nan")
    monotone_after_transient: bool = True

    def as_dict(self) -> dict:
        return {
            "fitted_speed": self.fitted_speed,
            "fit_stderr": self.fit_stderr,
            "intercept": self.intercept,
            "level": self.level,
            "fit_start": self.fit_start,
            "monotone_after_transient": self.monotone_after_transient,
            "records": int(self.times.size),
        }

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "position"])
            for t, x in zip(self.times, self.positions):
                w.writerow([f"{t:.17g}", "" if np.isnan(x) else f"{x:.17g}"])
        return path


def front_positions(recordings, level: float) -> np.ndarray:
    """``max{n : i_n >= level}`` per snapshot, NaN where no site reaches ``level``."""
    pos = np.full(len(recordings), np.nan)
    for k, st in enumerate(recordings):
        hit = np.nonzero(st.i >= level)[0]
        if hit.size:
            pos[k] = hit[-1] - st.N
    return pos


def fit_speed(times, positions):
    """Least-squares slope and its standard error."""
    fit = linregress(np.asarray(times, dtype=float), np.asarray(positions, dtype=float))
    return float(fit.slope), float(fit.stderr), float(fit.intercept)


def track_front(recordings, level: float, fit_window_fraction: float = 0.5) -> FrontTrace:
    """Track the rightmost site above ``level`` and fit its speed over the trailing window."""
    if len(recordings) < 10:
        raise ValidationError(f"need at least 10 recordings, got {len(recordings)}")
    if not level > 0:
        raise ValidationError("level must be positive")
    times = np.array([st.t for st in recordings])
    pos = front_positions(recordings, level)
    if np.all(np.isnan(pos)):
        raise FrontNotFound(f"no site reaches level {level:.6g}")
    start = int(math.floor((1.0 - fit_window_fraction) * len(recordings)))
    tw, xw = times[start:], pos[start:]
    valid = ~np.isnan(xw)
    if valid.sum() < 2:
        raise FrontNotFound("front not present in the fit window")
    N = recordings[0].N
    if np.any(xw[valid] >= N - 2):
        raise FrontHitBoundary(f"front reached n >= N-2 = {N - 2} inside the fit window")
    speed, stderr, icpt = fit_speed(tw[valid], xw[valid])
    monotone = bool(np.all(np.diff(xw[valid]) >= 0))
    return FrontTrace(times, pos, speed, stderr, icpt, float(level), float(tw[0]), monotone)


def write_trajectory_csv(recordings, path) -> Path:
    """Long-format ``t,n,s,i[,r]`` export."""
    path = Path(path)
    with_r = recordings[0].r is not None
    header = "t,n,s,i,r" if with_r else "t,n,s,i"
    blocks = []
    for st in recordings:
        cols = [np.full(st.s.size, st.t), st.sites, st.s, st.i]
        if with_r:
            cols.append(st.r)
        blocks.append(np.column_stack(cols))
    data = np.vstack(blocks)
    fmt = ["%.17g", "%d", "%.17g", "%.17g"] + (["%.17g"] if with_r else [])
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=header, comments="")
    return path


@dataclass
class ShapeCheck:
    c: float
    times: np.ndarray
    shifts: np.ndarray
    distances: np.ndarray
    drift_rate: float
    drift_stderr: float
    e_star: float
    c_star: float

    @property
    def relative_drift_error(self) -> float:
        return abs(self.drift_rate - self.c) / self.c

    @property
    def max_distance(self) -> float:
        return float(self.distances.max())

    @property
    def shape_preserved(self) -> bool:
        return self.max_distance <= 0.05 * self.e_star

    @property
    def slower_wave_observed(self) -> bool:
        """Shape-preserving drift clearly below ``c*`` (would contradict non-existence)."""
        return bool(self.shape_preserved and self.drift_rate < 0.95 * self.c_star)

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "drift_rate": self.drift_rate,
            "drift_stderr": self.drift_stderr,
            "relative_drift_error": self.relative_drift_error,
            "initial_distance": float(self.distances[0]),
            "max_distance": self.max_distance,
            "distance_bound": 0.05 * self.e_star,
            "shape_preserved": self.shape_preserved,
            "c_star": self.c_star,
            "slower_wave_observed": self.slower_wave_observed,
            "records": int(self.times.size),
        }


def shape_distance(state: LatticeState, prof, shift: float) -> float:
    """Sup distance between the lattice state and the profile sampled at ``n + shift``."""
    phi, psi = prof.sample(state.sites + shift)
    return float(max(np.abs(state.s - phi).max(), np.abs(state.i - psi).max()))


def best_shift(state: LatticeState, prof, guess: float, radius: float,
               step: float = 0.05) -> tuple[float, float]:
    """Coarse scan of ``[guess - radius, guess + radius]`` then a bounded refinement."""
    grid = guess + np.arange(-radius, radius + 0.5 * step, step)
    vals = np.array([shape_distance(state, prof, x) for x in grid])
    k = int(np.argmin(vals))
    res = minimize_scalar(lambda x: shape_distance(state, prof, x),
                          bounds=(grid[k] - step, grid[k] + step), method="bounded",
                          options={"xatol": 1e-8})
    if res.fun < vals[k]:
        return float(res.x), float(res.fun)
    return float(grid[k]), float(vals[k])


def wave_shape_check(p: ModelParams, wp, c: float, config: SimConfig, N: int = 1200,
                     c_star: Optional[float] = None) -> ShapeCheck:
    """Start the lattice on a wave profile and measure how it is transported.

    ``sigma(t)`` minimises the sup distance between the state and the profile
    sampled at ``n + sigma``; ``sigma(0) = 0``. The drift rate is the
    least-squares slope of ``sigma`` against ``t``.
    """
    from .model import minimal_speed

    if c_star is None:
        c_star, _ = minimal_speed(p)
    prof = getattr(wp, "profile", wp)
    state = init_state(N, "from_profile", profile=prof)
    recs = integrate(p, state, config)
    times = np.array([st.t for st in recs])
    shifts = np.zeros(times.size)
    dists = np.zeros(times.size)
    dists[0] = shape_distance(recs[0], prof, 0.0)
    step_prev = 0.0
    for k in range(1, len(recs)):
        # the first window is sized (not centred) by the nominal speed
        lead = abs(c) * (times[1] - times[0]) if k == 1 else abs(step_prev)
        radius = max(5.0, 2.0 * lead + 2.0)
        shifts[k], dists[k] = best_shift(recs[k], prof, shifts[k - 1] + step_prev, radius)
        step_prev = shifts[k] - shifts[k - 1]
    rate, stderr, _ = fit_speed(times, shifts)
    _, e_star = endemic_state(p)
    return ShapeCheck(float(c), times, shifts, dists, rate, stderr, e_star, float(c_star))
