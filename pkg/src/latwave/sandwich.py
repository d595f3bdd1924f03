"""Explicit upper/lower comparison functions and their verification.

Upper pair: ``phi_bar = 1``, ``psi_bar = exp(lambda1 xi)``.
Lower pair: ``phi_low = max(0, 1 - rho exp(theta xi))`` and
``psi_low = max(0, exp(lambda1 xi) - q exp(eta lambda1 xi))``, with kinks at
``xi1 = -ln(rho)/theta`` and ``xi2 = -ln(q)/((eta - 1) lambda1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .exceptions import KinkTooClose, SelectionFailed, SpeedNotSupercritical
from .model import ModelParams, bisect_sign, char_psi, lambda_roots, minimal_speed

WIDE_SANDWICH_XI2 = -100.0


@dataclass(frozen=True)
class SandwichParams:
    c: float
    theta: float
    rho: float
    eta: float
    q: float
    xi1: float
    xi2: float
    lambda1: float
    lambda2: float
    margin: float

    @property
    def wide(self) -> bool:
        """True when the lower solution only becomes positive very far left."""
        return self.xi2 < WIDE_SANDWICH_XI2

    def as_dict(self) -> dict:
        out = asdict(self)
        out["wide"] = self.wide
        return out


def _phi_blocker(p: ModelParams, c: float, theta):
    # e^t + e^-t - 2 - c t - mu, which rules A1 and A2 need negative
    return 4.0 * np.sinh(0.5 * np.asarray(theta, dtype=float)) ** 2 - c * theta - p.mu


def check_assumptions(p: ModelParams, sp: SandwichParams) -> list[str]:
    """Re-evaluate every selection rule; returns the list of violated ones."""
    bad = []
    c, l1 = sp.c, sp.lambda1
    a1 = float(_phi_blocker(p, c, sp.theta))
    if not (0.0 < sp.theta < l1 and a1 < 0.0):
        bad.append("A1")
    if not (a1 < 0.0 and sp.rho > max(1.0, p.beta / -a1)):
        bad.append("A2")
    g_eta = float(char_psi(p, c, sp.eta * l1))
    if not (1.0 < sp.eta < min(1.0 + sp.theta / l1, sp.lambda2 / l1) and g_eta < 0.0):
        bad.append("A3")
    if not (g_eta < 0.0 and sp.q > max(math.exp((1.0 - sp.eta) * l1 * sp.xi1),
                                       p.beta * sp.rho / -g_eta)):
        bad.append("A4")
    if not (sp.theta > 0.0 and sp.rho > 0.0 and sp.q > 0.0 and sp.eta > 1.0):
        bad.append("kinks")
        return bad
    xi1 = -math.log(sp.rho) / sp.theta
    xi2 = -math.log(sp.q) / ((sp.eta - 1.0) * l1)
    if not (math.isclose(xi1, sp.xi1, rel_tol=1e-12) and math.isclose(xi2, sp.xi2, rel_tol=1e-12)
            and sp.xi2 < sp.xi1 < 0.0):
        bad.append("kinks")
    return bad


def select_parameters(p: ModelParams, c: float, margin: float = 1.01,
                      c_star: float | None = None, lambda_star: float | None = None
                      ) -> SandwichParams:
    """Pick ``theta, rho, eta, q`` in sequence so the four assumptions hold.

    Deterministic: ``theta`` is half the smaller of ``lambda1`` and the first
    positive root of that quantity, ``eta`` sits mid-interval, and ``rho``,
    ``q`` exceed their lower bounds by the factor ``margin``.
    """
    if not margin > 1.0:
        raise ValueError("margin must be > 1")
    if c_star is None or lambda_star is None:
        c_star, lambda_star = minimal_speed(p)
    if not c > c_star:
        raise SpeedNotSupercritical(f"speed not supercritical: c={c} <= c*={c_star}")
    l1, l2 = lambda_roots(p, c, c_star=c_star, lambda_star=lambda_star)

    f = lambda t: float(_phi_blocker(p, c, t))
    hi = max(1.0, l1)
    while f(hi) < 0:
        hi *= 2.0
    theta_hat = bisect_sign(f, 0.0, hi, keep="negative")
    theta = 0.5 * min(l1, theta_hat)
    blocker = f(theta)
    rho = margin * max(1.0, p.beta / -blocker)
    eta = 1.0 + 0.5 * min(theta / l1, l2 / l1 - 1.0)
    g_eta = float(char_psi(p, c, eta * l1))
    xi1 = -math.log(rho) / theta
    q = margin * max(math.exp((1.0 - eta) * l1 * xi1), p.beta * rho / -g_eta)
    xi2 = -math.log(q) / ((eta - 1.0) * l1)
    sp = SandwichParams(float(c), theta, rho, eta, q, xi1, xi2, l1, l2, float(margin))
    bad = check_assumptions(p, sp)
    if bad:
        raise SelectionFailed(f"selection violates {', '.join(bad)}: {sp}")
    return sp


def eval_upper(sp: SandwichParams, xi):
    xi = np.asarray(xi, dtype=float)
    return np.ones_like(xi), np.exp(sp.lambda1 * xi)


def _g_phi(sp: SandwichParams, xi):
    # 1 - phi_low, computed without cancellation against 1
    return np.minimum(sp.rho * np.exp(sp.theta * xi), 1.0)


def eval_lower(sp: SandwichParams, xi):
    xi = np.asarray(xi, dtype=float)
    phi = np.where(xi < sp.xi1, 1.0 - _g_phi(sp, xi), 0.0)
    raw = np.exp(sp.lambda1 * xi) - sp.q * np.exp(sp.eta * sp.lambda1 * xi)
    psi = np.where(xi < sp.xi2, np.maximum(raw, 0.0), 0.0)
    return phi, psi


@dataclass(frozen=True)
class GridSpec:
    """Uniform verification grid with open exclusion windows around the kinks."""

    lo: float = -50.0
    hi: float = 50.0
    step: float = 0.01
    exclusion: float | None = None

    def points(self, kinks) -> np.ndarray:
        radius = self.step if self.exclusion is None else self.exclusion
        if radius < self.step * (1 - 1e-12):
            raise KinkTooClose(f"exclusion radius {radius} is below one grid step {self.step}")
        n = int(round((self.hi - self.lo) / self.step))
        xi = self.lo + self.step * np.arange(n + 1)
        keep = np.ones_like(xi, dtype=bool)
        for k in kinks:
            keep &= np.abs(xi - k) >= radius
        return xi[keep]


@dataclass
class InequalityCheck:
    name: str
    sense: str
    worst: float
    where: float
    checked: int
    passed: bool


@dataclass
class InequalityReport:
    checks: dict = field(default_factory=dict)
    excluded: tuple = ()
    scaling: str = "phi rows unscaled; psi rows divided by exp(lambda1*xi)"

    @property
    def passed(self) -> bool:
        return all(ch.passed for ch in self.checks.values())

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "excluded_kinks": list(self.excluded),
            "scaling": self.scaling,
            "inequalities": {k: asdict(v) for k, v in self.checks.items()},
        }


def inequality_residuals(p: ModelParams, sp: SandwichParams, xi) -> dict:
    """Residuals of the four comparison inequalities at points off the kinks.

    Exact shifts and closed-form derivatives are used, and each residual is
    assembled from its exponential pieces so nothing cancels against an
    O(1) constant. The two infective rows are divided by ``exp(lambda1 xi)``;
    positive weights leave the sign conditions unchanged.
    """
    xi = np.asarray(xi, dtype=float)
    c, l1, el = sp.c, sp.lambda1, sp.eta * sp.lambda1
    e1 = np.exp(l1 * xi)
    _, psi_low = eval_lower(sp, xi)

    # i1: phi_bar = 1 is flat, only the infection term survives
    r1 = -p.beta * psi_low

    # i3: pure exponential, D and d/dxi act as multipliers
    r3 = np.full_like(xi, float(char_psi(p, c, l1)))

    # i2 for xi < xi1, with g = 1 - phi_low = min(rho e^{theta x}, 1)
    g = sp.rho * np.exp(sp.theta * xi)
    hop_t = 4.0 * math.sinh(0.5 * sp.theta) ** 2
    kink_fix = np.maximum(sp.rho * np.exp(sp.theta * (xi + 1.0)) - 1.0, 0.0)
    r2_left = (-g * hop_t + kink_fix + c * sp.theta * g + p.mu * g
               - p.beta * (1.0 - g) * e1)
    phi_low_back, _ = eval_lower(sp, xi - 1.0)
    r2_right = phi_low_back + p.mu
    r2 = np.where(xi < sp.xi1, r2_left, r2_right)

    # i4 for xi < xi2, per unit of e1:
    #   char(l1) - q char(eta l1) e^{(eta-1) l1 xi} - beta g psi_low/e1 + d * kink correction
    ratio = sp.q * np.exp((el - l1) * xi)
    fwd = np.exp(l1 * (xi + 1.0)) - sp.q * np.exp(el * (xi + 1.0))
    kink4 = p.d * np.maximum(-fwd, 0.0) / e1
    g_cap = np.minimum(g, 1.0)
    r4_left = (float(char_psi(p, c, l1)) - ratio * float(char_psi(p, c, el))
               - p.beta * g_cap * (1.0 - ratio) + kink4)
    _, psi_low_back = eval_lower(sp, xi - 1.0)
    r4_right = p.d * psi_low_back / e1
    r4 = np.where(xi < sp.xi2, r4_left, r4_right)
    return {"i1": r1, "i2": r2, "i3": r3, "i4": r4}


def verify_inequalities(p: ModelParams, c: float, sp: SandwichParams,
                        grid_spec: GridSpec = GridSpec()) -> InequalityReport:
    """Check the four inequalities on a grid that skips the kink neighbourhoods."""
    if not math.isclose(c, sp.c, rel_tol=0, abs_tol=1e-14 * max(1.0, abs(c))):
        raise ValueError(f"sandwich parameters were selected for c={sp.c}, not {c}")
    xi = grid_spec.points((sp.xi1, sp.xi2))
    res = inequality_residuals(p, sp, xi)
    report = InequalityReport(excluded=(sp.xi1, sp.xi2))
    for name, sense in (("i1", "<=0"), ("i2", ">=0"), ("i3", "<=0"), ("i4", ">=0")):
        r = res[name]
        j = int(np.argmax(r)) if sense == "<=0" else int(np.argmin(r))
        worst = float(r[j])
        ok = bool(np.all(r <= 0.0)) if sense == "<=0" else bool(np.all(r >= 0.0))
        report.checks[name] = InequalityCheck(name, sense, worst, float(xi[j]), int(xi.size), ok)
    return report
