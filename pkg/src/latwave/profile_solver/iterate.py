"""Coupled upper/lower monotone iteration and the solve pipelines."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..exceptions import (
    MaxIterExceeded,
    MonotonicityBroken,
    SequenceNotCauchy,
    SpeedNotSupercritical,
    ToleranceNotReached,
)
from ..model import ModelParams, endemic_state, minimal_speed
from ..sandwich import SandwichParams, select_parameters
from .grid import Profile
from .operators import (
    SweepMaps,
    TruncatedProblem,
    apply_F,
    build_problem,
    check_sandwich,
    ode_residual,
    resolvent,
)

EPS = float(np.finfo(float).eps)
ORDER_ULPS = 10.0
SCHEMES = ("sweep", "resolvent")
DEFAULT_DELTAS = (0.1, 0.05, 0.025, 0.0125)


@dataclass
class SolveReport:
    iterations: int
    final_gap: float
    fixed_point_residual: float
    ode_residual: float
    converged: bool
    seconds: float
    scheme: str = "sweep"
    map_residual: float = float("nan")
    alpha: float = float("nan")
    gap_history: list = field(default_factory=list, repr=False)

    def as_dict(self, timing: bool = True) -> dict:
        out = {
            "iterations": self.iterations,
            "final_gap": self.final_gap,
            "fixed_point_residual": self.fixed_point_residual,
            "ode_residual": self.ode_residual,
            "converged": self.converged,
            "scheme": self.scheme,
            "map_residual": self.map_residual,
            "alpha": self.alpha,
        }
        if timing:
            out["seconds"] = self.seconds
        return out


@dataclass
class MinimalSequence:
    """Record of the decreasing-speed sequence used to reach ``c*``."""

    c_star: float
    deltas: list
    speeds: list
    eps_hat: float
    shifts: list
    distances: list
    window: float
    decreasing: bool
    waves: list = field(default_factory=list, repr=False)

    @property
    def final_distance(self) -> float:
        return self.distances[-1] if self.distances else float("nan")

    def as_dict(self) -> dict:
        return {
            "c_star": self.c_star,
            "deltas": list(self.deltas),
            "speeds": list(self.speeds),
            "eps_hat": self.eps_hat,
            "shifts": list(self.shifts),
            "distances": list(self.distances),
            "window": self.window,
            "decreasing": self.decreasing,
            "final_distance": self.final_distance,
            "iterations": [w.report.iterations for w in self.waves],
        }


@dataclass
class WaveProfile:
    profile: Profile
    c: float
    report: SolveReport
    params: ModelParams
    sandwich: SandwichParams
    diagnostics: dict = field(default_factory=dict)
    sequence: Optional[MinimalSequence] = None

    @property
    def converged(self) -> bool:
        return self.report.converged

    @property
    def failed(self) -> bool:
        return not self.report.converged

    def problem(self) -> TruncatedProblem:
        g = self.profile.grid
        return build_problem(self.params, self.c, self.sandwich, g.l, g.m)

    def as_dict(self, timing: bool = True) -> dict:
        g = self.profile.grid
        out = {
            "c": self.c,
            "params": self.params.as_dict(),
            "l": g.l,
            "m": g.m,
            "lambda1": self.profile.lambda1,
            "report": self.report.as_dict(timing),
            "sandwich": self.sandwich.as_dict(),
            "diagnostics": self.diagnostics,
        }
        if self.sequence is not None:
            out["sequence"] = self.sequence.as_dict()
        return out


def _maps(problem: TruncatedProblem, scheme: str):
    if scheme == "sweep":
        sweeps = SweepMaps(problem)
        return sweeps.sweep_phi, sweeps.sweep_psi
    if scheme == "resolvent":
        return (lambda phi, psi: resolvent(problem, phi, psi)[0],
                lambda phi, psi: resolvent(problem, phi, psi)[1])
    raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")


def _check_order(k, pairs, names):
    # pairs of (smaller, larger) arrays that must be ordered nodewise; the slack is
    # 10 ulp of the larger sup norm of the pair
    for (lo, hi), name in zip(pairs, names):
        scale = max(np.abs(lo).max(), np.abs(hi).max())
        excess = lo - hi
        j = int(np.argmax(excess))
        if excess[j] > ORDER_ULPS * EPS * scale:
            raise MonotonicityBroken(
                f"iteration {k}: {name} violated by {excess[j]:.3g} at node {j} "
                f"(scale {scale:.3g})")


def monotone_iterate(problem: TruncatedProblem, tol: float = 1e-6, max_iter: int = 5000,
                     scheme: str = "sweep", check_order: bool = True):
    """Run the coupled upper/lower iteration from the sandwich bounds.

    Upper pair: ``phi <- G1(phi_up, psi_low)``, ``psi <- G2(phi_up, psi_up)``;
    lower pair: ``phi <- G1(phi_low, psi_up)``, ``psi <- G2(phi_low, psi_low)``.
    ``G`` is the marching map (``scheme="sweep"``) or the integral operator
    itself (``scheme="resolvent"``, practical only when ``alpha`` is modest).
    Returns the midpoint profile and a :class:`SolveReport`.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if int(max_iter) < 1:
        raise ValueError("max_iter must be >= 1")
    g1, g2 = _maps(problem, scheme)
    t0 = time.perf_counter()
    up, lo = problem.upper(), problem.lower()
    pu, su, pl, sl = up.phi, up.psi, lo.phi, lo.psi
    gap = float(max(np.abs(pu - pl).max(), np.abs(su - sl).max()))
    history = [gap]
    names = ("phi_up nonincreasing", "psi_up nonincreasing", "phi_low nondecreasing",
             "psi_low nondecreasing", "phi_low <= phi_up", "psi_low <= psi_up")
    k = 0
    while gap > tol:
        if k >= max_iter:
            raise MaxIterExceeded(f"gap {gap:.3g} > tol {tol:.3g} after {k} iterations",
                                  gap=gap, iterations=k)
        k += 1
        pu2, su2 = g1(pu, sl), g2(pu, su)
        pl2, sl2 = g1(pl, su), g2(pl, sl)
        if check_order:
            _check_order(k, ((pu2, pu), (su2, su), (pl, pl2), (sl, sl2),
                             (pl2, pu2), (sl2, su2)), names)
        pu, su, pl, sl = pu2, su2, pl2, sl2
        gap = float(max(np.abs(pu - pl).max(), np.abs(su - sl).max()))
        history.append(gap)

    mid = Profile(problem.grid, 0.5 * (pu + pl), 0.5 * (su + sl), problem.lambda1)
    check_sandwich(problem, mid, "monotone_iterate")
    f = apply_F(problem, mid, check=False)
    fp_res = float(max(np.abs(f.phi - mid.phi).max(), np.abs(f.psi - mid.psi).max()))
    m_res = float(max(np.abs(g1(mid.phi, mid.psi) - mid.phi).max(),
                      np.abs(g2(mid.phi, mid.psi) - mid.psi).max()))
    report = SolveReport(
        iterations=k,
        final_gap=gap,
        fixed_point_residual=fp_res,
        ode_residual=ode_residual(problem, mid),
        converged=bool(gap <= tol and fp_res <= tol),
        seconds=time.perf_counter() - t0,
        scheme=scheme,
        map_residual=m_res,
        alpha=problem.alpha,
        gap_history=history,
    )
    return mid, report


def solve_wave(p: ModelParams, c: float, l: float = 40.0, m: int = 20, tol: float = 1e-6,
               max_iter: int = 5000, margin: float = 1.01, alpha_margin: float = 1.01,
               scheme: str = "sweep", diagnostics: bool = True, window: float = 10.0,
               c_star: float | None = None, lambda_star: float | None = None) -> WaveProfile:
    """Sandwich selection, truncated problem, monotone iteration and diagnostics at speed ``c``."""
    if c_star is None or lambda_star is None:
        c_star, lambda_star = minimal_speed(p)
    if not c > c_star:
        raise SpeedNotSupercritical(f"speed not supercritical: c={c} <= c*={c_star}")
    sp = select_parameters(p, c, margin, c_star, lambda_star)
    problem = build_problem(p, c, sp, l, m, alpha_margin)
    prof, report = monotone_iterate(problem, tol, max_iter, scheme)
    if not report.converged:
        raise ToleranceNotReached(
            f"gap {report.final_gap:.3g} but fixed-point residual "
            f"{report.fixed_point_residual:.3g} exceeds tol {tol:.3g}")
    wp = WaveProfile(prof, float(c), report, p, sp)
    if diagnostics:
        from .diagnostics import endpoint_diagnostics, tail_diagnostics

        wp.diagnostics = {
            "tail": tail_diagnostics(wp, sp),
            "endpoint": endpoint_diagnostics(wp, p, min(window, 0.5 * l)),
        }
    return wp


def normalisation_shift(prof: Profile, level: float) -> float:
    """First point where ``psi`` rises through ``level``, linearly interpolated."""
    psi, xi = prof.psi, prof.xi
    above = np.nonzero(psi >= level)[0]
    if above.size == 0:
        raise ToleranceNotReached(f"psi never reaches {level:.6g}")
    j = int(above[0])
    if j == 0:
        return float(xi[0])
    t = (level - psi[j - 1]) / (psi[j] - psi[j - 1])
    return float(xi[j - 1] + t * (xi[j] - xi[j - 1]))


def shifted_samples(prof: Profile, shift: float, window: float, h: float):
    x = np.linspace(-window, window, int(round(2 * window / h)) + 1)
    phi, psi = prof.sample(x + shift)
    return x, phi, psi


def solve_minimal_wave(p: ModelParams, l: float = 40.0, m: int = 20, tol: float = 1e-6,
                       delta_sequence: Sequence[float] = DEFAULT_DELTAS, window: float = 20.0,
                       max_iter: int = 5000, margin: float = 1.01,
                       diagnostics: bool = True, strict: bool = True) -> WaveProfile:
    """Approach ``c*`` through ``c_k = c*(1 + delta_k)`` with shift normalisation.

    Each profile is translated so that ``psi(0) = eps_hat`` with
    ``eps_hat = min(e*/2, min_k sup psi_k / 2)``. The returned wave is the last
    (unshifted) solve; its ``sequence`` attribute holds speeds, shifts and the
    sup distances between successive shifted profiles on ``[-window, window]``.
    With ``strict`` a non-decreasing distance record raises
    :class:`SequenceNotCauchy` instead of being returned with ``decreasing=False``.
    """
    deltas = [float(x) for x in delta_sequence]
    if not deltas or any(x <= 0 for x in deltas):
        raise ValueError("delta_sequence must be positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta_sequence must be strictly decreasing")
    c_star, lam_star = minimal_speed(p)
    _, e_star = endemic_state(p)
    waves = []
    for dlt in deltas:
        c = c_star * (1.0 + dlt)
        waves.append(solve_wave(p, c, l, m, tol, max_iter, margin, diagnostics=False,
                                c_star=c_star, lambda_star=lam_star))
    eps_hat = min(0.5 * e_star, 0.5 * min(float(w.profile.psi.max()) for w in waves))
    shifts = [normalisation_shift(w.profile, eps_hat) for w in waves]
    h = waves[0].profile.grid.h
    samples = [shifted_samples(w.profile, s, window, h) for w, s in zip(waves, shifts)]
    dists = []
    for (_, a1, b1), (_, a2, b2) in zip(samples, samples[1:]):
        dists.append(float(max(np.abs(a1 - a2).max(), np.abs(b1 - b2).max())))
    # distances must not grow beyond the solve tolerance
    decreasing = all(b <= a + 10.0 * tol for a, b in zip(dists, dists[1:]))
    seq = MinimalSequence(c_star, deltas, [w.c for w in waves], eps_hat, shifts, dists,
                          float(window), decreasing, waves)
    if strict and not decreasing:
        raise SequenceNotCauchy(f"shifted distances do not decrease: {dists}")
    last = waves[-1]
    last.sequence = seq
    if diagnostics:
        from .diagnostics import endpoint_diagnostics, tail_diagnostics

        last.diagnostics = {
            "tail": tail_diagnostics(last, last.sandwich),
            "endpoint": endpoint_diagnostics(last, p, min(10.0, 0.5 * l)),
        }
    return last
