"""The truncated wave problem and the operators acting on profiles.

Two maps share one fixed-point set on ``[-l, l]``:

* ``apply_F``, the exponentially weighted integral operator built from
  ``H1``/``H2`` with a single constant ``alpha``. Its kernel is extremely
  stiff (``alpha`` carries ``beta exp(lambda1 l)``), so it is evaluated by a
  product-integration recurrence that is exact for piecewise-linear data.
* The marching maps ``sweep_phi``/``sweep_psi``, which keep the local
  coefficient ``a(xi)`` on the left-hand side and feed the freshly computed
  backward shift straight back in. They are monotone in the same sense and
  contract far faster than ``apply_F`` does for realistic ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ..exceptions import SandwichViolation, SpeedNotSupercritical, TruncationTooSmall
from ..model import ModelParams
from ..sandwich import SandwichParams, eval_lower, eval_upper
from ._kernels import cell_weights, march
from .grid import Grid, Profile, left_history, shift_values


@dataclass
class TruncatedProblem:
    params: ModelParams
    c: float
    sp: SandwichParams
    grid: Grid
    alpha: float

    @property
    def lambda1(self) -> float:
        return self.sp.lambda1

    @property
    def xi(self) -> np.ndarray:
        return self.grid.nodes

    def upper(self) -> Profile:
        phi, psi = eval_upper(self.sp, self.xi)
        return Profile(self.grid, phi, psi, self.lambda1)

    def lower(self) -> Profile:
        phi, psi = eval_lower(self.sp, self.xi)
        return Profile(self.grid, phi, psi, self.lambda1)

    def alpha_floor(self) -> float:
        p = self.params
        return max(2.0 + p.mu + p.beta * math.exp(self.lambda1 * self.grid.l),
                   2.0 * p.d + p.mu + p.gamma)


def build_problem(p: ModelParams, c: float, sp: SandwichParams, l: float, m: int,
                  alpha_margin: float = 1.01) -> TruncatedProblem:
    """Set up the truncated problem on ``[-l, l]`` with step ``1/m``."""
    if not alpha_margin > 1.0:
        raise ValueError(f"alpha_margin must be > 1, got {alpha_margin}")
    if not c > 0 or abs(c - sp.c) > 1e-14 * max(1.0, abs(c)):
        raise SpeedNotSupercritical(f"sandwich was selected for c={sp.c}, not {c}")
    grid = Grid(l, m)
    if not grid.l > -sp.xi2:
        raise TruncationTooSmall(f"l={l} must exceed -xi2={-sp.xi2:.6g}")
    prob = TruncatedProblem(p, float(c), sp, grid, 0.0)
    prob.alpha = alpha_margin * prob.alpha_floor()
    return prob


def apply_H(problem: TruncatedProblem, prof: Profile):
    """Node values of ``H1`` and ``H2``; shifts past ``+-l`` use the extension rules."""
    p, a = problem.params, problem.alpha
    phi, psi = prof.phi, prof.psi
    lap_phi = prof.shifted("phi", 1) + prof.shifted("phi", -1) - 2.0 * phi
    lap_psi = prof.shifted("psi", 1) + prof.shifted("psi", -1) - 2.0 * psi
    inf = p.beta * phi * psi
    h1 = a * phi + lap_phi + p.mu * (1.0 - phi) - inf
    h2 = a * psi + p.d * lap_psi - (p.mu + p.gamma) * psi + inf
    return h1, h2


def _weighted_integral(src: np.ndarray, start: float, kappa: float, lam: float,
                       h: float, c: float) -> np.ndarray:
    # u_j = e^{-kappa h} u_{j-1} + e^{lam h} w0 src_{j-1} + w1 src_j, a constant-coefficient
    # first-order recurrence, so it is one IIR filter pass
    ez, w0, w1 = cell_weights(kappa + lam, h, c)
    decay = ez * math.exp(lam * h)
    drive = np.empty_like(src)
    drive[0] = start
    drive[1:] = math.exp(lam * h) * w0 * src[:-1] + w1 * src[1:]
    return lfilter([1.0], [1.0, -decay], drive)


def resolvent(problem: TruncatedProblem, phi: np.ndarray, psi: np.ndarray):
    """``(F1, F2)`` evaluated at the pair ``(phi, psi)`` given as node arrays."""
    prof = Profile(problem.grid, phi, psi, problem.lambda1)
    h1, h2 = apply_H(problem, prof)
    c, h, l = problem.c, problem.grid.h, problem.grid.l
    kappa = problem.alpha / c
    # the second component is interpolated exponentially-linearly with rate lambda1,
    # which is exact on the upper solution exp(lambda1 xi)
    f1 = _weighted_integral(h1, 1.0, kappa, 0.0, h, c)
    f2 = _weighted_integral(h2, math.exp(-problem.lambda1 * l), kappa,
                            problem.lambda1, h, c)
    return f1, f2


def apply_F(problem: TruncatedProblem, prof: Profile, check: bool = True) -> Profile:
    """The integral operator on a profile.

    The output is only checked, never clamped: leaving the sandwich by more
    than ``10 h^2`` per unit value raises :class:`SandwichViolation`.
    """
    f1, f2 = resolvent(problem, prof.phi, prof.psi)
    out = Profile(problem.grid, f1, f2, problem.lambda1)
    if check:
        check_sandwich(problem, out, "apply_F")
    return out


def check_sandwich(problem: TruncatedProblem, prof: Profile, where: str = "") -> None:
    h = problem.grid.h
    up_phi, up_psi = eval_upper(problem.sp, problem.xi)
    lo_phi, lo_psi = eval_lower(problem.sp, problem.xi)
    slack_phi = 10.0 * h * h * up_phi
    slack_psi = 10.0 * h * h * up_psi
    bad = ((prof.phi > up_phi + slack_phi) | (prof.phi < lo_phi - slack_phi)
           | (prof.psi > up_psi + slack_psi) | (prof.psi < lo_psi - slack_psi))
    if np.any(bad):
        j = int(np.argmax(bad))
        raise SandwichViolation(
            f"{where}: output leaves the sandwich at xi={problem.xi[j]:.6g} "
            f"(phi={prof.phi[j]:.6g}, psi={prof.psi[j]:.6g}); step too coarse?")


class SweepMaps:
    """Monotone marching maps for the two components.

    ``phi_new = sweep_phi(phi_lag, psi)`` solves
    ``c u' + (2 + mu + beta psi) u = phi_lag(xi + 1) + u(xi - 1) + mu`` and
    ``psi_new = sweep_psi(phi, psi_lag)`` solves
    ``c u' + (2d + mu + gamma - beta phi) u = d (psi_lag(xi + 1) + u(xi - 1))``,
    both from the clamped left end with the upper solution as history.
    """

    def __init__(self, problem: TruncatedProblem):
        self.problem = problem
        g = problem.grid
        lam = problem.lambda1
        self._hist_phi = left_history(g, lam, "phi")
        # psi is marched as v = psi exp(-lambda1 xi), on which the upper solution is
        # the constant 1 and rounding errors are damped instead of compounding
        self._growth = np.exp(lam * g.nodes)
        self._hist_v = np.ones(g.size)

    def sweep_phi(self, phi_lag: np.ndarray, psi: np.ndarray) -> np.ndarray:
        pr, g = self.problem, self.problem.grid
        p = pr.params
        a = 2.0 + p.mu + p.beta * psi
        adv = shift_values(phi_lag, g, 1, pr.lambda1, "phi") + p.mu
        return march(a, adv, 1.0, self._hist_phi, g.h, pr.c, g.m, 1.0)

    def sweep_psi(self, phi: np.ndarray, psi_lag: np.ndarray) -> np.ndarray:
        pr, g = self.problem, self.problem.grid
        p, lam = pr.params, pr.lambda1
        a = 2.0 * p.d + p.mu + p.gamma - p.beta * phi + pr.c * lam
        adv = p.d * shift_values(psi_lag, g, 1, lam, "psi") / self._growth
        v = march(a, adv, 1.0, self._hist_v, g.h, pr.c, g.m, p.d * math.exp(-lam))
        return v * self._growth

    def __call__(self, phi: np.ndarray, psi: np.ndarray):
        return self.sweep_phi(phi, psi), self.sweep_psi(phi, psi)


def ode_residual(problem: TruncatedProblem, prof: Profile) -> float:
    """Sup norm of the wave equations with centered differences and exact shifts."""
    p, c, h = problem.params, problem.c, problem.grid.h
    phi, psi = prof.phi, prof.psi
    lap_phi = prof.shifted("phi", 1) + prof.shifted("phi", -1) - 2.0 * phi
    lap_psi = prof.shifted("psi", 1) + prof.shifted("psi", -1) - 2.0 * psi
    dphi = (phi[2:] - phi[:-2]) / (2.0 * h)
    dpsi = (psi[2:] - psi[:-2]) / (2.0 * h)
    s = slice(1, -1)
    inf = p.beta * phi[s] * psi[s]
    r1 = -c * dphi + lap_phi[s] + p.mu * (1.0 - phi[s]) - inf
    r2 = -c * dpsi + p.d * lap_psi[s] - (p.mu + p.gamma) * psi[s] + inf
    return float(max(np.abs(r1).max(), np.abs(r2).max()))
