"""scikit-learn style wrappers around the functional pipeline.

The solvers have no training data in the usual sense: ``fit`` runs the
computation defined by the constructor arguments and ``predict`` evaluates
the fitted object (a wave profile or a front line) at new inputs.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ValidationError
from .lds import SimConfig, fit_speed, init_state, integrate, track_front
from .model import ModelParams, dispersion
from .profile_solver import DEFAULT_DELTAS, solve_minimal_wave, solve_wave


def _as_points(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValidationError(f"expected one column of points, got shape {X.shape}")
        X = X[:, 0]
    return X


class _ParamsMixin:
    def _model_params(self) -> ModelParams:
        return ModelParams(self.mu, self.beta, self.gamma, self.d)


class TravelingWaveSolver(_ParamsMixin, BaseEstimator):
    """Wave profile at a fixed supercritical speed.

    After ``fit``: ``profile_``, ``report_``, ``sandwich_``, ``diagnostics_``,
    ``dispersion_`` and ``wave_`` (the full :class:`WaveProfile`).
    ``predict(xi)`` returns an ``(n, 2)`` array of ``(phi, psi)``.
    """

    def __init__(self, mu=0.5, beta=3.0, gamma=0.5, d=1.0, speed=3.5, l=40.0, m=20,
                 tol=1e-6, max_iter=5000, margin=1.01, alpha_margin=1.01):
        self.mu = mu
        self.beta = beta
        self.gamma = gamma
        self.d = d
        self.speed = speed
        self.l = l
        self.m = m
        self.tol = tol
        self.max_iter = max_iter
        self.margin = margin
        self.alpha_margin = alpha_margin

    def _solve(self, p):
        return solve_wave(p, self.speed, self.l, self.m, self.tol, self.max_iter,
                          self.margin, self.alpha_margin)

    def fit(self, X=None, y=None):
        p = self._model_params()
        wave = self._solve(p)
        self.wave_ = wave
        self.c_ = wave.c
        self.profile_ = wave.profile
        self.report_ = wave.report
        self.sandwich_ = wave.sandwich
        self.diagnostics_ = wave.diagnostics
        self.dispersion_ = dispersion(p, wave.c)
        return self

    def predict(self, X):
        check_is_fitted(self, "profile_")
        phi, psi = self.profile_.sample(_as_points(X))
        return np.column_stack([phi, psi])


class MinimalWaveSolver(TravelingWaveSolver):
    """Wave at the minimal speed through a decreasing-speed sequence.

    Adds ``sequence_`` (speeds, shifts, Cauchy distances). ``predict`` uses the
    shift-normalised profile, so ``psi(0)`` equals the normalisation level.
    """

    def __init__(self, mu=0.5, beta=3.0, gamma=0.5, d=1.0, l=40.0, m=20, tol=1e-6,
                 max_iter=5000, margin=1.01, delta_sequence=DEFAULT_DELTAS, window=20.0):
        self.mu = mu
        self.beta = beta
        self.gamma = gamma
        self.d = d
        self.l = l
        self.m = m
        self.tol = tol
        self.max_iter = max_iter
        self.margin = margin
        self.delta_sequence = delta_sequence
        self.window = window

    def _solve(self, p):
        return solve_minimal_wave(p, self.l, self.m, self.tol, tuple(self.delta_sequence),
                                  self.window, self.max_iter, self.margin)

    def fit(self, X=None, y=None):
        super().fit(X, y)
        self.sequence_ = self.wave_.sequence
        self.shift_ = self.sequence_.shifts[-1]
        return self

    def predict(self, X):
        check_is_fitted(self, "profile_")
        phi, psi = self.profile_.sample(_as_points(X) + self.shift_)
        return np.column_stack([phi, psi])


class FrontSpeedEstimator(BaseEstimator):
    """Least-squares front speed.

    ``fit`` accepts either a list of lattice snapshots (the front is tracked
    at ``level``) or times ``X`` with positions ``y``.
    """

    def __init__(self, level=None, fit_window_fraction=0.5):
        self.level = level
        self.fit_window_fraction = fit_window_fraction

    def fit(self, X, y=None):
        if y is None:
            if self.level is None:
                raise ValidationError("level is required when fitting on snapshots")
            trace = track_front(list(X), self.level, self.fit_window_fraction)
            self.trace_ = trace
            self.speed_, self.stderr_, self.intercept_ = (
                trace.fitted_speed, trace.fit_stderr, trace.intercept)
            return self
        t = _as_points(X)
        x = check_array(y, ensure_2d=False, dtype=float)
        if x.shape != t.shape:
            raise ValidationError("X and y must have the same length")
        self.speed_, self.stderr_, self.intercept_ = fit_speed(t, x)
        return self

    def predict(self, X):
        check_is_fitted(self, "speed_")
        return self.intercept_ + self.speed_ * _as_points(X)


class LatticeSimulator(_ParamsMixin, BaseEstimator):
    """Lattice run followed by front tracking.

    ``fit(X=None)`` integrates from ``init`` data (pass a wave profile as ``X``
    for ``init="from_profile"``). Fitted: ``recordings_``, ``trace_``,
    ``speed_``, ``stderr_``. ``predict(t)`` gives fitted front positions.
    """

    def __init__(self, mu=0.5, beta=3.0, gamma=0.5, d=1.0, N=1500, dt=0.01, T=300.0,
                 init="left_block", i0=0.1, width=10, level=None, fit_window_fraction=0.5,
                 record_stride=None):
        self.mu = mu
        self.beta = beta
        self.gamma = gamma
        self.d = d
        self.N = N
        self.dt = dt
        self.T = T
        self.init = init
        self.i0 = i0
        self.width = width
        self.level = level
        self.fit_window_fraction = fit_window_fraction
        self.record_stride = record_stride

    def fit(self, X=None, y=None):
        p = self._model_params()
        cfg = SimConfig(self.dt, self.T, self.record_stride, self.level,
                        self.fit_window_fraction, params=p)
        state = init_state(self.N, self.init, self.i0, self.width, profile=X)
        self.recordings_ = integrate(p, state, cfg)
        self.level_ = cfg.front_level(p)
        est = FrontSpeedEstimator(self.level_, self.fit_window_fraction).fit(self.recordings_)
        self.trace_ = est.trace_
        self.speed_, self.stderr_, self.intercept_ = est.speed_, est.stderr_, est.intercept_
        return self

    def predict(self, X):
        check_is_fitted(self, "speed_")
        return self.intercept_ + self.speed_ * _as_points(X)
