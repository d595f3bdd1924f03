"""One test per acceptance criterion, each printing a single PASS/FAIL line.

The lines are also collected and repeated in the terminal summary.
"""

import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from conftest import ACCEPTANCE, random_param_sets
from latwave.lds import SimConfig, init_state, integrate, track_front, wave_shape_check
from latwave.model import (
    ModelParams,
    certify_nonexistence,
    char_psi,
    endemic_state,
    lambda_roots,
    minimal_speed,
)
from latwave.profile_solver import solve_minimal_wave, solve_wave
from latwave.sandwich import GridSpec, inequality_residuals, select_parameters, verify_inequalities

PARAM_SETS = [ModelParams(0.5, 3.0, 0.5, 1.0)] + random_param_sets(5)


def report(n, passed, seconds, detail):
    ACCEPTANCE[n] = {"passed": bool(passed), "seconds": seconds, "detail": detail}
    print(f"criterion {n}: {'PASS' if passed else 'FAIL'} [{seconds:.2f}s] {detail}")


def oracle_c_star(p):
    """Dense geometric grid, then scipy's golden section around the best node."""
    lam = np.geomspace(1e-3, 60.0, 200001)
    q = (p.d * (np.exp(lam) + np.exp(-lam) - 2.0) + p.beta - p.mu - p.gamma) / lam
    k = int(np.argmin(q))
    f = lambda x: (p.d * (np.exp(x) + np.exp(-x) - 2.0) + p.beta - p.mu - p.gamma) / x
    res = minimize_scalar(f, bracket=(lam[k - 1], lam[k], lam[k + 1]), method="golden",
                          tol=1e-12)
    return res.fun


def test_criterion_1_dispersion():
    t0 = time.perf_counter()
    worst = 0.0
    for p in PARAM_SETS:
        c, _ = minimal_speed(p)
        worst = max(worst, abs(c - oracle_c_star(p)) / c)
    c_std, _ = minimal_speed(PARAM_SETS[0])
    dt = time.perf_counter() - t0
    # the oracle's dense grid is part of the measured time only for reference
    t1 = time.perf_counter()
    for p in PARAM_SETS:
        minimal_speed(p)
    own = time.perf_counter() - t1
    ok = worst <= 1e-8 and abs(c_std - 3.0178) <= 1e-3 and own < 1.0
    report(1, ok, own, f"max rel. diff vs oracle {worst:.2e}, c*={c_std:.10f} "
                       f"(oracle run {dt:.2f}s)")
    assert ok


def test_criterion_2_roots():
    t0 = time.perf_counter()
    worst, worst_mid = 0.0, -np.inf
    for p in PARAM_SETS:
        c_star, lam_star = minimal_speed(p)
        for f in (1.1, 1.5, 2.0):
            c = f * c_star
            l1, l2 = lambda_roots(p, c, c_star=c_star, lambda_star=lam_star)
            worst = max(worst, abs(char_psi(p, c, l1)) / (1 + c),
                        abs(char_psi(p, c, l2)) / (1 + c))
            worst_mid = max(worst_mid, char_psi(p, c, 0.5 * (l1 + l2)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and worst_mid < 0 and dt < 1.0
    report(2, ok, dt, f"max |char|/(1+c) {worst:.2e}, max char(mid) {worst_mid:.3g}")
    assert ok


def test_criterion_3_sandwich_signs():
    t0 = time.perf_counter()
    n_cases, failures, worst_i3 = 0, [], 0.0
    cases = [(PARAM_SETS[0], 3.5)]
    for p in PARAM_SETS:
        c_star, _ = minimal_speed(p)
        cases += [(p, f * c_star) for f in (1.1, 1.5, 2.0)]
    for p, c in cases:
        sp = select_parameters(p, c)
        rep = verify_inequalities(p, c, sp, GridSpec(-50.0, 50.0, 0.01))
        xi = GridSpec(-50.0, 50.0, 0.01).points((sp.xi1, sp.xi2))
        worst_i3 = max(worst_i3, float(np.abs(inequality_residuals(p, sp, xi)["i3"]).max()))
        n_cases += 1
        if not rep.passed:
            failures.append((p, c))
    dt = time.perf_counter() - t0
    ok = not failures and worst_i3 <= 1e-12 and dt < 5.0
    report(3, ok, dt, f"{n_cases} (params, c) cases, failures={len(failures)}, "
                      f"max |i3| (per unit exp(lambda1 xi)) {worst_i3:.1e}")
    assert ok


@pytest.mark.slow
def test_criterion_4_solver_convergence(std_params, std_wave):
    wp, dt = std_wave
    t0 = time.perf_counter()
    fine = solve_wave(std_params, 3.5, l=40, m=40, tol=1e-6, diagnostics=False)
    dt_fine = time.perf_counter() - t0
    r = wp.report
    ratio = r.ode_residual / fine.report.ode_residual
    ok = (r.converged and r.iterations <= 5000 and r.ode_residual <= 5e-3 and ratio >= 2.8
          and dt < 60.0)
    report(4, ok, dt, f"{r.iterations} iterations (ordering checked every step), "
                      f"gap {r.final_gap:.2e}, ode_residual {r.ode_residual:.3e}, "
                      f"h-halving ratio {ratio:.2f} (m=40 solve {dt_fine:.2f}s)")
    assert ok


@pytest.mark.slow
def test_criterion_5_profile_structure(std_params, std_wave):
    wp, dt = std_wave
    phi, psi = wp.profile.phi[1:-1], wp.profile.psi[1:-1]
    tail = wp.diagnostics["tail"]
    end = wp.diagnostics["endpoint"]
    pos = bool(np.all(phi > 0) and np.all(phi < 1) and np.all(psi > 0))
    tail_err = tail["left_exponent"]["relative_error"]
    harn = tail["harnack"]
    ok = (pos and tail_err <= 0.02 and harn["max_ratio"] <= harn["C"]
          and end["bracket_phi"] and end["bracket_psi"])
    report(5, ok, dt, f"interior positivity {pos}, tail exponent rel. err {tail_err:.1e}, "
                      f"Harnack max {harn['max_ratio']:.3f} <= C(M)={harn['C']:.1f}, "
                      f"brackets phi [{end['phi_min']:.4f}, {end['phi_max']:.4f}] "
                      f"psi [{end['psi_min']:.4f}, {end['psi_max']:.4f}]")
    assert ok


@pytest.mark.slow
def test_criterion_6_minimal_wave(std_params):
    t0 = time.perf_counter()
    wp = solve_minimal_wave(std_params, l=40, m=20, tol=1e-6,
                            delta_sequence=(0.1, 0.05, 0.025, 0.0125), strict=False)
    dt = time.perf_counter() - t0
    seq = wp.sequence
    _, e_star = endemic_state(std_params)
    d = seq.distances
    decreasing = all(b < a for a, b in zip(d, d[1:]))
    ok = decreasing and d[-1] <= 0.05 * e_star and dt < 300.0
    report(6, ok, dt, "shifted sup-distances on [-20, 20]: "
                      + ", ".join(f"{x:.5f}" for x in d)
                      + f" (bound {0.05 * e_star:.5f})")
    assert ok


@pytest.mark.slow
def test_criterion_7_simulation_speed(std_params):
    p = std_params
    t0 = time.perf_counter()
    c_star, _ = minimal_speed(p)
    cfg = SimConfig(dt=0.01, T=300.0, params=p)
    recs = integrate(p, init_state(1500, "left_block"), cfg)
    trace = track_front(recs, cfg.front_level(p))
    rel = abs(trace.fitted_speed - c_star) / c_star
    s_star, e_star = endemic_state(p)
    drift = 0.0
    for s0, i0 in ((1.0, 0.0), (s_star, e_star)):
        st = init_state(1500, "left_block")
        st.s[:] = s0
        st.i[:] = i0
        last = integrate(p, st, SimConfig(dt=0.01, T=100.0, record_stride=10000))[-1]
        drift = max(drift, np.abs(last.s - s0).max(), np.abs(last.i - i0).max())
    dt = time.perf_counter() - t0
    ok = rel <= 0.05 and drift <= 1e-12 and dt < 180.0
    report(7, ok, dt, f"front speed {trace.fitted_speed:.5f} vs c* {c_star:.5f} "
                      f"(rel. err {rel:.2%}), equilibrium drift {drift:.1e}")
    assert ok


@pytest.mark.slow
def test_criterion_8_wave_transport(std_params, std_wave):
    wp, _ = std_wave
    _, e_star = endemic_state(std_params)
    t0 = time.perf_counter()
    chk = wave_shape_check(std_params, wp, 3.5, SimConfig(dt=0.01, T=50.0), N=1200)
    dt = time.perf_counter() - t0
    ok = (chk.relative_drift_error <= 0.05 and chk.max_distance <= 0.05 * e_star
          and chk.distances[0] == 0.0 and dt < 120.0)
    report(8, ok, dt, f"drift {chk.drift_rate:.6f} vs c=3.5 "
                      f"(rel. err {chk.relative_drift_error:.1e}), max shape distance "
                      f"{chk.max_distance:.2e} (bound {0.05 * e_star:.4f})")
    assert ok


def test_criterion_9_certificate(std_params):
    t0 = time.perf_counter()
    c_star, _ = minimal_speed(std_params)
    yes = [certify_nonexistence(std_params, f * c_star, c_star).certified
           for f in (0.5, 0.8, 0.95)]
    no = [certify_nonexistence(std_params, f * c_star, c_star).certified for f in (1.0, 1.05)]
    grid = c_star * (0.5 + 0.01 * np.arange(101))
    flags = [certify_nonexistence(std_params, c, c_star).certified for c in grid]
    flips = [k for k in range(1, len(flags)) if flags[k] != flags[k - 1]]
    near = len(flips) == 1 and abs(grid[flips[0]] - c_star) <= 0.01 * c_star + 1e-12
    dt = time.perf_counter() - t0
    ok = all(yes) and not any(no) and near and dt < 2.0
    where = f"{grid[flips[0] - 1]:.4f} -> {grid[flips[0]]:.4f}" if flips else "none"
    report(9, ok, dt, f"certified at 0.5/0.8/0.95 c*: {yes}, at 1.0/1.05 c*: {no}, "
                      f"single flip {where}")
    assert ok
