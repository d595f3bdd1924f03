"""Uniform grids on ``[-l, l]`` and profiles with their extension rules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..exceptions import BadGrid


@dataclass(frozen=True)
class Grid:
    """Nodes ``-l + j/m`` for ``j = 0..2lm``; a unit shift is exactly ``m`` nodes."""

    l: float
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise BadGrid(f"m must be an integer >= 2, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        if not self.l > 0:
            raise BadGrid(f"l must be positive, got {self.l!r}")
        lm = self.l * self.m
        if abs(lm - round(lm)) > 1e-9 * max(1.0, lm):
            raise BadGrid(f"l*m must be an integer, got l={self.l}, m={self.m}")

    @property
    def h(self) -> float:
        return 1.0 / self.m

    @property
    def size(self) -> int:
        return int(round(2 * self.l * self.m)) + 1

    @property
    def nodes(self) -> np.ndarray:
        return -self.l + np.arange(self.size) / self.m


@dataclass
class Profile:
    """Nodal values of ``(phi, psi)`` on a :class:`Grid`.

    Left of ``-l`` the profile is the upper solution ``(1, exp(lambda1 xi))``;
    right of ``l`` it is continued by its end values.
    """

    grid: Grid
    phi: np.ndarray
    psi: np.ndarray
    lambda1: float

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.psi = np.asarray(self.psi, dtype=float)
        if self.phi.shape != (self.grid.size,) or self.psi.shape != (self.grid.size,):
            raise BadGrid("profile arrays do not match the grid")

    @property
    def xi(self) -> np.ndarray:
        return self.grid.nodes

    def left_values(self, x):
        x = np.asarray(x, dtype=float)
        return np.ones_like(x), np.exp(self.lambda1 * x)

    def shifted(self, which: str, k: int) -> np.ndarray:
        """Node values of ``phi(xi + k)`` or ``psi(xi + k)`` for ``k = +-1``."""
        u = self.phi if which == "phi" else self.psi
        return shift_values(u, self.grid, k, self.lambda1, which)

    def sample(self, x):
        """Evaluate ``(phi, psi)`` anywhere, interpolating linearly between nodes."""
        x = np.asarray(x, dtype=float)
        xi = self.grid.nodes
        phi = np.interp(x, xi, self.phi)
        psi = np.interp(x, xi, self.psi)
        left = x < -self.grid.l
        if np.any(left):
            lp, ls = self.left_values(x[left])
            phi[left] = lp
            psi[left] = ls
        return phi, psi

    def copy(self) -> "Profile":
        return Profile(self.grid, self.phi.copy(), self.psi.copy(), self.lambda1)

    def to_csv(self, path) -> Path:
        path = Path(path)
        data = np.column_stack([self.xi, self.phi, self.psi])
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header="xi,phi,psi", comments="")
        return path

    @classmethod
    def from_csv(cls, path, lambda1: float) -> "Profile":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        xi = data[:, 0]
        if xi.size < 3:
            raise BadGrid(f"{path}: too few rows")
        h = xi[1] - xi[0]
        m = int(round(1.0 / h))
        l = -xi[0]
        grid = Grid(round(l * m) / m, m)
        if grid.size != xi.size or not np.allclose(grid.nodes, xi, rtol=0, atol=1e-9):
            raise BadGrid(f"{path}: nodes are not a symmetric grid with step 1/m")
        return cls(grid, data[:, 1], data[:, 2], lambda1)


def shift_values(u: np.ndarray, grid: Grid, k: int, lambda1: float, which: str) -> np.ndarray:
    m = grid.m
    out = np.empty_like(u)
    if k == 1:
        out[:-m] = u[m:]
        out[-m:] = u[-1]
    elif k == -1:
        out[m:] = u[:-m]
        back = grid.nodes[:m] - 1.0
        out[:m] = 1.0 if which == "phi" else np.exp(lambda1 * back)
    else:
        raise ValueError("only unit shifts are supported")
    return out


def left_history(grid: Grid, lambda1: float, which: str) -> np.ndarray:
    """Upper-solution values at ``xi_j - 1`` for the first ``m`` nodes (rest unused)."""
    x = grid.nodes - 1.0
    if which == "phi":
        return np.ones_like(x)
    return np.exp(lambda1 * np.minimum(x, -grid.l))


def snap_half_width(l: float, m: int) -> float:
    """Round ``l`` up to the next multiple of ``1/m``."""
    return math.ceil(l * m - 1e-9) / m
