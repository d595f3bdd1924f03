"""Structural diagnostics of a converged wave profile.

All functions only measure; none of them raise on a failed check.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import linregress

from ..model import ModelParams, endemic_state, omega_roots
from ..sandwich import SandwichParams

BRACKET_SLACK = 0.05
ENDPOINT_RTOL = 0.02


def harnack_constant(p: ModelParams, c: float) -> tuple[float, float]:
    """``(M, C(M))`` with ``C(M) = max(e^M, 2M(2M e^M - 1))``."""
    M = max(c / p.d, (2.0 * p.d + p.mu + p.gamma) / c, p.d / c)
    C = max(math.exp(M), 2.0 * M * (2.0 * M * math.exp(M) - 1.0))
    return M, C


def harnack_ratios(prof) -> np.ndarray:
    """``psi(xi + 1) / psi(xi)`` at the interior nodes."""
    fwd = prof.shifted("psi", 1)
    return fwd[1:-1] / prof.psi[1:-1]


def fit_left_exponent(xi: np.ndarray, psi: np.ndarray, upto: float):
    """Least-squares slope of ``ln psi`` over nodes with ``xi <= upto``."""
    mask = (xi <= upto) & (psi > 0)
    if mask.sum() < 3:
        return None, int(mask.sum())
    fit = linregress(xi[mask], np.log(psi[mask]))
    return float(fit.slope), int(mask.sum())


def tail_diagnostics(wp, sp: SandwichParams) -> dict:
    """Harnack ratios, left decay exponent and log-derivative at both ends."""
    p, c, prof = wp.params, wp.c, wp.profile
    xi, psi = prof.xi, prof.psi
    M, C = harnack_constant(p, c)
    ratios = harnack_ratios(prof)
    slope, npts = fit_left_exponent(xi, psi, sp.xi2 - 2.0)
    h = prof.grid.h
    z = (np.log(psi[2:]) - np.log(psi[:-2])) / (2.0 * h)
    _, w_plus = omega_roots(p, c)
    _, e_star = endemic_state(p)
    sup_psi = float(psi.max())
    return {
        "harnack": {
            "M": M,
            "C": C,
            "max_ratio": float(ratios.max()),
            "min_ratio": float(ratios.min()),
            "passed": bool(ratios.max() <= C),
        },
        "left_exponent": {
            "fitted": slope,
            "lambda1": sp.lambda1,
            "relative_error": None if slope is None else abs(slope - sp.lambda1) / sp.lambda1,
            "fit_upper_end": sp.xi2 - 2.0,
            "points": npts,
        },
        "log_derivative": {
            "left": float(z[0]),
            "right": float(z[-1]),
            "omega_plus": w_plus,
            "right_below_omega_plus": bool(z[-1] < w_plus),
        },
        "sup_psi": sup_psi,
        "psi_bound": 10.0 * e_star,
        "psi_below_bound": bool(sup_psi < 10.0 * e_star),
    }


def increasing_threshold(xi: np.ndarray, psi: np.ndarray) -> float:
    """Largest ``eps`` with ``psi' > 0`` (centered) wherever ``psi <= eps``.

    Equals the smallest ``psi`` at an interior node where the centered
    derivative is not positive, or ``sup psi`` if there is none.
    """
    h = xi[1] - xi[0]
    dpsi = (psi[2:] - psi[:-2]) / (2.0 * h)
    inner = psi[1:-1]
    bad = dpsi <= 0.0
    return float(inner[bad].min()) if np.any(bad) else float(psi.max())


def endpoint_diagnostics(wp, p: ModelParams, window: float = 10.0,
                         flat_tol: float = 1e-3) -> dict:
    """Trailing-window behaviour of the profile on ``[l - window, l]``."""
    prof = wp.profile
    l = prof.grid.l
    if not 0.0 < window < 2.0 * l:
        raise ValueError(f"window must lie in (0, {2 * l}), got {window}")
    s_star, e_star = endemic_state(p)
    mask = prof.xi >= l - window
    phi, psi = prof.phi[mask], prof.psi[mask]
    lo_phi, hi_phi = float(phi.min()), float(phi.max())
    lo_psi, hi_psi = float(psi.min()), float(psi.max())
    k = BRACKET_SLACK
    bracket_phi = lo_phi <= s_star * (1 + k) and hi_phi >= s_star * (1 - k)
    bracket_psi = lo_psi <= e_star * (1 + k) and hi_psi >= e_star * (1 - k)
    var_phi, var_psi = hi_phi - lo_phi, hi_psi - lo_psi
    flat = var_phi < flat_tol and var_psi < flat_tol
    end_phi, end_psi = float(prof.phi[-1]), float(prof.psi[-1])
    err_phi = abs(end_phi - s_star) / s_star
    err_psi = abs(end_psi - e_star) / e_star
    eps_hat = increasing_threshold(prof.xi, prof.psi)
    return {
        "window": float(window),
        "phi_min": lo_phi,
        "phi_max": hi_phi,
        "psi_min": lo_psi,
        "psi_max": hi_psi,
        "s_star": s_star,
        "e_star": e_star,
        "bracket_phi": bool(bracket_phi),
        "bracket_psi": bool(bracket_psi),
        "bracket_slack": k,
        "phi_variation": var_phi,
        "psi_variation": var_psi,
        "flat": bool(flat),
        "endpoint": [end_phi, end_psi],
        "endpoint_relative_error": [err_phi, err_psi],
        "endpoint_near_equilibrium": None if not flat else bool(
            max(err_phi, err_psi) <= ENDPOINT_RTOL),
        "eps_hat": eps_hat,
        "eps_hat_positive": bool(eps_hat > 0.0),
    }
