"""Model parameters, endemic equilibrium and dispersion analysis.

The lattice system couples susceptible densities ``s_n`` (migration rate 1)
and infective densities ``i_n`` (migration rate ``d``)::

    s_n' = (s_{n+1} + s_{n-1} - 2 s_n) + mu - mu s_n - beta s_n i_n
    i_n' = d (i_{n+1} + i_{n-1} - 2 i_n) - (mu + gamma) i_n + beta s_n i_n

Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import (
    NonPositiveParameter,
    SpeedNotSupercritical,
    SubcriticalTransmission,
    ToleranceNotReached,
)

ROOT_TOL = 1e-10
SPEED_TOL = 1e-8

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ModelParams:
    """Epidemic and migration constants. Construction validates them."""

    mu: float
    beta: float
    gamma: float
    d: float

    def __post_init__(self):
        for name in ("mu", "beta", "gamma", "d"):
            value = float(getattr(self, name))
            if not value > 0.0:
                raise NonPositiveParameter(f"{name} must be > 0, got {value!r}")
            object.__setattr__(self, name, value)
        if not self.beta > self.mu + self.gamma:
            raise SubcriticalTransmission(
                f"sigma <= 1: beta={self.beta} must exceed mu + gamma={self.mu + self.gamma}"
            )

    @property
    def sigma(self) -> float:
        return self.beta / (self.mu + self.gamma)

    @property
    def growth(self) -> float:
        """Net linear growth rate ``beta - mu - gamma`` of infectives at (1, 0)."""
        return self.beta - self.mu - self.gamma

    def scaled(self, k: float) -> "ModelParams":
        return ModelParams(k * self.mu, k * self.beta, k * self.gamma, k * self.d)

    def as_dict(self) -> dict:
        return {"mu": self.mu, "beta": self.beta, "gamma": self.gamma, "d": self.d}


def validate_params(mu, beta, gamma, d) -> ModelParams:
    """Validate four raw rates and return a :class:`ModelParams`."""
    return ModelParams(mu, beta, gamma, d)


@dataclass(frozen=True)
class Dispersion:
    sigma: float
    s_star: float
    e_star: float
    c_star: float
    lambda_star: float
    c: Optional[float] = None
    lambda1: Optional[float] = None
    lambda2: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "s_star": self.s_star,
            "e_star": self.e_star,
            "c_star": self.c_star,
            "lambda_star": self.lambda_star,
            "c": self.c,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
        }


@dataclass(frozen=True)
class NonexistenceCertificate:
    c: float
    min_char_value: float
    argmin_lambda: float
    c_star: float
    certified: bool

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "min_char_value": self.min_char_value,
            "argmin_lambda": self.argmin_lambda,
            "c_star": self.c_star,
            "certified": self.certified,
        }


def endemic_state(p: ModelParams) -> tuple[float, float]:
    """Coexistence equilibrium ``(1/sigma, (mu/beta)(sigma - 1))``."""
    sigma = p.sigma
    return 1.0 / sigma, (p.mu / p.beta) * (sigma - 1.0)


def _hop(lam):
    # e^x + e^-x - 2 without cancellation near 0
    return 4.0 * np.sinh(0.5 * np.asarray(lam, dtype=float)) ** 2


def char_psi(p: ModelParams, c: float, lam):
    """Characteristic function ``d(e^l + e^-l - 2) - c l + beta - mu - gamma``.

    Vectorised over ``lam``; negative exponents are allowed.
    """
    lam = np.asarray(lam, dtype=float)
    out = p.d * _hop(lam) - c * lam + p.growth
    return out if out.ndim else float(out)


def speed_quotient(p: ModelParams, lam):
    """Dispersion quotient whose infimum over ``lam > 0`` is the minimal speed."""
    lam = np.asarray(lam, dtype=float)
    out = (p.d * _hop(lam) + p.growth) / lam
    return out if out.ndim else float(out)


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float,
                   max_iter: int = 500) -> tuple[float, float]:
    """Minimise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - _INV_PHI * (b - a)
    e = a + _INV_PHI * (b - a)
    fc, fe = f(c), f(e)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + _INV_PHI * (b - a)
            fe = f(e)
    else:
        raise ToleranceNotReached(f"golden section did not reach width {tol} in {max_iter} steps")
    return (c, fc) if fc <= fe else (e, fe)


def bisect_sign(f: Callable[[float], float], lo: float, hi: float,
                keep: str = "negative", max_iter: int = 200) -> float:
    """Bisect a sign change of ``f`` on ``[lo, hi]`` down to adjacent floats.

    Returns the final bracket endpoint on which ``f`` has the sign named by
    ``keep`` ("negative" means ``f <= 0``), so the caller controls which side
    of the root the answer sits on.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0 and keep == "negative":
        return lo
    if fhi == 0.0 and keep == "negative":
        return hi
    if (flo > 0) == (fhi > 0):
        raise ToleranceNotReached(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    if keep == "negative":
        return lo if flo <= 0 else hi
    return lo if flo > 0 else hi


def minimal_speed(p: ModelParams, tol: float = SPEED_TOL) -> tuple[float, float]:
    """Minimal wave speed ``c*`` and its minimiser ``lambda*``.

    The minimiser is bracketed by doubling the right end until the quotient
    turns upward, then refined by golden section.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    q = lambda x: speed_quotient(p, x)
    lo = 1e-6
    # the quotient blows up like growth/lambda; pull lo down if needed
    while q(0.5 * lo) <= q(lo):
        lo *= 0.5
        if lo < 1e-300:
            raise ToleranceNotReached("quotient did not increase toward lambda -> 0")
    hi = 1.0
    k = 0
    while q(2.0 * hi) <= q(hi):
        hi *= 2.0
        k += 1
        if k > 60:
            raise ToleranceNotReached("could not bracket the minimiser from above")
    hi *= 2.0
    lam, c_star = golden_section(q, lo, hi, tol * min(1.0, lo * 1e6))
    floor = c_star - 8.0 * np.finfo(float).eps * abs(c_star)
    if not (q(lam * (1 - 10 * tol)) >= floor and q(lam * (1 + 10 * tol)) >= floor):
        raise ToleranceNotReached("minimiser not isolated")
    return float(c_star), float(lam)


def lambda_roots(p: ModelParams, c: float, tol: float = ROOT_TOL,
                 c_star: Optional[float] = None, lambda_star: Optional[float] = None
                 ) -> tuple[float, float]:
    """The two positive roots ``lambda1 < lambda2`` of the characteristic function.

    Both roots are returned from the inside of ``(lambda1, lambda2)``, where the
    characteristic function is negative, so ``char_psi`` is ``<= 0`` at each.
    """
    if c_star is None or lambda_star is None:
        c_star, lambda_star = minimal_speed(p)
    if not c > c_star + tol:
        raise SpeedNotSupercritical(f"speed not supercritical: c={c} <= c*={c_star}")
    f = lambda x: char_psi(p, c, x)
    lam1 = bisect_sign(f, 0.0, lambda_star, keep="negative")
    hi = 2.0 * lambda_star
    while f(hi) <= 0:
        hi *= 2.0
    lam2 = bisect_sign(f, lambda_star, hi, keep="negative")
    scale = tol * (1.0 + abs(c))
    if abs(f(lam1)) > scale or abs(f(lam2)) > scale:
        raise ToleranceNotReached("characteristic roots not resolved to tolerance")
    return float(lam1), float(lam2)


def omega_roots(p: ModelParams, c: float, tol: float = ROOT_TOL) -> tuple[float, float]:
    """Roots of ``d(e^w + e^-w - 2) = c w + mu + gamma``: one negative, one positive."""
    if not c > 0:
        raise ValueError("omega_roots needs a positive speed")
    f = lambda w: float(p.d * _hop(w) - c * w - p.mu - p.gamma)
    hi = 1.0
    while f(hi) <= 0:
        hi *= 2.0
    lo = -1.0
    while f(lo) <= 0:
        lo *= 2.0
    w_plus = bisect_sign(f, 0.0, hi, keep="positive")
    w_minus = bisect_sign(f, lo, 0.0, keep="positive")
    scale = tol * (1.0 + abs(c))
    if abs(f(w_plus)) > scale * max(1.0, hi) or abs(f(w_minus)) > scale * max(1.0, -lo):
        raise ToleranceNotReached("omega roots not resolved to tolerance")
    return float(w_minus), float(w_plus)


def certify_nonexistence(p: ModelParams, c: float,
                         c_star: Optional[float] = None) -> NonexistenceCertificate:
    """Certify that no wave with speed ``c`` exists.

    The characteristic function is strictly convex in ``lambda``, so its
    minimum on ``(0, cap]`` sits at ``asinh(c / 2d)`` clipped to the interval
    (or at the ``lambda -> 0`` limit when ``c <= 0``).
    """
    if c_star is None:
        c_star, _ = minimal_speed(p)
    cap = max(10.0, 3.0 * (abs(c) + p.beta) / p.d)
    if c > 0:
        lam = min(math.asinh(c / (2.0 * p.d)), cap)
        value = float(char_psi(p, c, lam))
    else:
        lam = 0.0
        value = p.growth
    certified = bool(value > 0.0 and c < c_star)
    return NonexistenceCertificate(float(c), value, lam, float(c_star), certified)


def dispersion(p: ModelParams, c: Optional[float] = None, tol: float = SPEED_TOL,
               root_tol: float = ROOT_TOL) -> Dispersion:
    """Bundle sigma, the endemic state, ``c*``, ``lambda*`` and optionally the roots at ``c``."""
    s_star, e_star = endemic_state(p)
    c_star, lam_star = minimal_speed(p, tol)
    lam1 = lam2 = None
    if c is not None:
        lam1, lam2 = lambda_roots(p, c, root_tol, c_star, lam_star)
    return Dispersion(p.sigma, s_star, e_star, c_star, lam_star,
                      None if c is None else float(c), lam1, lam2)
