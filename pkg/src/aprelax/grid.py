"""Uniform 1-D cell grid and ghost-cell boundary handling."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Boundary(str, enum.Enum):
    ZEROFLUX = "zeroflux"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh of ``N`` cells on ``(a, b)``; centers at ``a + (i + 1/2) dx``."""

    a: float
    b: float
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise ValueError(f"grid needs at least 3 cells, got N={self.N}")
        if not self.b > self.a:
            raise ValueError(f"empty domain ({self.a}, {self.b})")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def centers(self) -> np.ndarray:
        return self.a + (np.arange(self.N) + 0.5) * self.dx


def pad(q: np.ndarray, boundary: Boundary, width: int = 1) -> np.ndarray:
    """Extend ``q`` (last axis = cells) with ``width`` ghost cells per side.

    Zero-flux copies the adjacent interior state (homogeneous Neumann);
    periodic wraps around.
    """
    boundary = Boundary(boundary)
    spec = [(0, 0)] * (q.ndim - 1) + [(width, width)]
    mode = "wrap" if boundary is Boundary.PERIODIC else "edge"
    return np.pad(q, spec, mode=mode)


def centered_difference(g: np.ndarray, dx: float, boundary: Boundary) -> np.ndarray:
    """``(g[i+1] - g[i-1]) / (2 dx)`` on every cell, ghosts supplied by ``boundary``."""
    gp = pad(g, boundary)
    return (gp[..., 2:] - gp[..., :-2]) / (2.0 * dx)


def second_difference(g: np.ndarray, boundary: Boundary) -> np.ndarray:
    """Undivided ``g[i+1] - 2 g[i] + g[i-1]``."""
    gp = pad(g, boundary)
    return gp[..., 2:] - 2.0 * gp[..., 1:-1] + gp[..., :-2]
