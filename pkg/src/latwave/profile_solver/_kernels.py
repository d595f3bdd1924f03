"""Compiled inner loops for the profile solver."""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def cell_weights(k, h, c):
    """Product-integration weights for ``c u' + c k u = g`` over one cell.

    With ``z = k h``, returns ``(exp(-z), w0, w1)`` such that the exact
    solution for a linearly interpolated ``g`` is
    ``u1 = exp(-z) u0 + w0 g0 + w1 g1``. Both weights are positive for every
    real ``z``.
    """
    z = k * h
    ez = math.exp(-z)
    if abs(z) < 1e-4:
        w1 = (h / c) * (0.5 - z / 6.0 + z * z / 24.0)
        w0 = (h / c) * (0.5 - z / 3.0 + z * z / 8.0)
    else:
        p1 = -math.expm1(-z) / z
        w1 = (h / c) * (1.0 - p1) / z
        w0 = (h / c) * p1 - w1
    return ez, w0, w1


@numba.njit(cache=True)
def march(a, g_adv, clamp, history, h, c, m, back_coef):
    """Solve ``c u' + a u = g_adv + back_coef * u(xi - 1)`` left to right.

    ``a`` and ``g_adv`` live on the nodes. ``u(xi - 1)`` is read from the
    freshly computed values once available and from ``history`` for the
    first ``m`` nodes. The source is linear on each cell and ``a`` is the
    cell average.
    """
    n = a.shape[0]
    u = np.empty(n)
    u[0] = clamp
    g_prev = g_adv[0] + back_coef * history[0]
    for j in range(1, n):
        back = history[j] if j < m else u[j - m]
        g = g_adv[j] + back_coef * back
        k = 0.5 * (a[j - 1] + a[j]) / c
        ez, w0, w1 = cell_weights(k, h, c)
        u[j] = ez * u[j - 1] + w0 * g_prev + w1 * g
        g_prev = g
    return u
