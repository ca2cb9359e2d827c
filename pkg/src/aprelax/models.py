"""Constitutive laws, the four relaxation models and their initial data.

Every model is written in the reformulated (convective + stiff relaxation)
form ``d_t q + d_x f(q) = e_r * S(q) / eps^2`` where exactly one component
``q[r]`` relaxes towards the algebraic limit value ``-D g(q[k]) / sigma``.
The scheme module only needs the pieces exposed here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .grid import Boundary, Grid1D, centered_difference

ADMISSIBLE_RANGE = (1e-6, 1e6)


class DomainError(ValueError):
    """A state left the region where the constitutive law is defined."""


class LawKind(str, enum.Enum):
    PSYSTEM = "psystem"  # p(tau) = tau^-gamma
    EULER = "euler"  # p(rho) = rho^gamma
    LINEAR = "linear"  # p(rho) = rho
    VISCO = "visco"  # gamma(u) = u + u^3


@dataclass(frozen=True)
class ConstitutiveLaw:
    kind: LawKind = LawKind.PSYSTEM
    gamma: float = 1.4
    tau_star: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        if self.kind in (LawKind.PSYSTEM, LawKind.EULER):
            if not self.gamma > 0 or self.gamma == 1:
                raise ValueError(f"gamma must be positive and != 1, got {self.gamma}")
        if self.kind is LawKind.PSYSTEM and not self.tau_star > 0:
            raise ValueError(f"tau_star must be positive, got {self.tau_star}")

    @property
    def positive(self) -> bool:
        """Whether the law's argument must stay positive (power laws only)."""
        return self.kind in (LawKind.PSYSTEM, LawKind.EULER)

    @property
    def increasing(self) -> bool:
        return self.kind is not LawKind.PSYSTEM

    def check(self, x):
        x = np.asarray(x, dtype=float)
        if self.positive:
            bad = np.flatnonzero(~(x > 0))
            if bad.size:
                i = int(bad[0])
                raise DomainError(
                    f"{self.kind.value} law needs a positive argument; "
                    f"cell {i} holds {x.flat[i]!r}"
                )
        return x

    def pressure(self, x):
        x = self.check(x)
        if self.kind is LawKind.PSYSTEM:
            return x ** (-self.gamma)
        if self.kind is LawKind.EULER:
            return x**self.gamma
        if self.kind is LawKind.LINEAR:
            return x.copy()
        return x + x**3

    def dpressure(self, x):
        x = self.check(x)
        g = self.gamma
        if self.kind is LawKind.PSYSTEM:
            return -g * x ** (-g - 1.0)
        if self.kind is LawKind.EULER:
            return g * x ** (g - 1.0)
        if self.kind is LawKind.LINEAR:
            return np.ones_like(x)
        return 1.0 + 3.0 * x**2

    def d2pressure(self, x):
        x = self.check(x)
        g = self.gamma
        if self.kind is LawKind.PSYSTEM:
            return g * (g + 1.0) * x ** (-g - 2.0)
        if self.kind is LawKind.EULER:
            return g * (g - 1.0) * x ** (g - 2.0)
        if self.kind is LawKind.LINEAR:
            return np.zeros_like(x)
        return 6.0 * x

    def antiderivative(self, x):
        """Closed form of the integral of the law from ``tau_star`` to ``x``."""
        x = self.check(x)
        g, s = self.gamma, self.tau_star
        if self.kind is LawKind.PSYSTEM:
            return (x ** (1.0 - g) - s ** (1.0 - g)) / (1.0 - g)
        if self.kind is LawKind.EULER:
            return (x ** (g + 1.0) - s ** (g + 1.0)) / (g + 1.0)
        if self.kind is LawKind.LINEAR:
            return 0.5 * (x**2 - s**2)
        return 0.5 * (x**2 - s**2) + 0.25 * (x**4 - s**4)


def pressure(law: ConstitutiveLaw, tau):
    return law.pressure(tau)


def pressure_derivative(law: ConstitutiveLaw, tau):
    return law.dpressure(tau)


def internal_energy_P(law: ConstitutiveLaw, tau):
    return law.antiderivative(tau)


class ModelName(str, enum.Enum):
    PSYSTEM = "psystem"
    GT = "gt"
    EULER = "euler"
    VISCO = "visco"


_STATE_DIM = {ModelName.PSYSTEM: 2, ModelName.GT: 2, ModelName.EULER: 2, ModelName.VISCO: 3}
_LAW_KIND = {
    ModelName.PSYSTEM: LawKind.PSYSTEM,
    ModelName.GT: LawKind.LINEAR,
    ModelName.EULER: LawKind.EULER,
    ModelName.VISCO: LawKind.VISCO,
}
COMPONENTS = {
    ModelName.PSYSTEM: ("tau", "u"),
    ModelName.GT: ("rho", "j"),
    ModelName.EULER: ("rho", "m"),
    ModelName.VISCO: ("u", "v", "z"),
}


@dataclass(frozen=True)
class ModelSpec:
    """One of the four relaxation models.

    Fields are arrays of shape ``(state_dim, N)`` with components ordered as
    in ``COMPONENTS``.
    """

    name: ModelName
    law: ConstitutiveLaw = field(default_factory=ConstitutiveLaw)
    mu: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "name", ModelName(self.name))
        if self.law.kind is not _LAW_KIND[self.name]:
            raise ValueError(f"{self.name.value} model needs a {_LAW_KIND[self.name].value} law")
        if self.name is ModelName.VISCO and not self.mu > 0:
            raise ValueError(f"memory coefficient mu must be positive, got {self.mu}")

    @property
    def state_dim(self) -> int:
        return _STATE_DIM[self.name]

    @property
    def components(self) -> tuple:
        return COMPONENTS[self.name]

    # component relaxed by the stiff source, and the component whose
    # gradient drives it
    @property
    def relax_index(self) -> int:
        return 2 if self.name is ModelName.VISCO else 1

    @property
    def drive_index(self) -> int:
        return 1 if self.name is ModelName.VISCO else 0

    @property
    def positive_index(self):
        """Component held inside ``ADMISSIBLE_RANGE`` (power-law models)."""
        return 0 if self.law.positive else None

    def drive(self, x):
        """Potential ``g`` with limit relation ``sigma q[r] = -D g(q[k])``."""
        if self.name is ModelName.VISCO:
            return -self.mu * np.asarray(x, dtype=float)
        return self.law.pressure(x)

    def drive_prime(self, x):
        if self.name is ModelName.VISCO:
            return np.full_like(np.asarray(x, dtype=float), -self.mu)
        return self.law.dpressure(x)

    def check(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.ndim != 2 or q.shape[0] != self.state_dim:
            raise ValueError(
                f"{self.name.value} field must have shape ({self.state_dim}, N), got {q.shape}"
            )
        if not np.all(np.isfinite(q)):
            i = int(np.flatnonzero(~np.isfinite(q).all(axis=0))[0])
            raise DomainError(f"non-finite state in cell {i}")
        k = self.positive_index
        if k is not None:
            lo, hi = ADMISSIBLE_RANGE
            bad = np.flatnonzero((q[k] <= lo) | (q[k] >= hi))
            if bad.size:
                i = int(bad[0])
                raise DomainError(
                    f"{self.components[k]} left the admissible range {ADMISSIBLE_RANGE} "
                    f"in cell {i}: {q[k, i]!r}"
                )
        return q

    def flux(self, q: np.ndarray) -> np.ndarray:
        """Convective flux of the non-stiff part."""
        f = np.empty_like(q)
        if self.name is ModelName.PSYSTEM:
            f[0] = -q[1]
            f[1] = self.law.pressure(q[0])
        elif self.name is ModelName.GT:
            f[0] = q[1]
            f[1] = q[0]
        elif self.name is ModelName.EULER:
            f[0] = q[1]
            f[1] = q[1] ** 2 / q[0] + self.law.pressure(q[0])
        else:
            f[0] = -q[1]
            f[1] = -self.law.pressure(q[0]) - q[2]
            f[2] = -self.mu * q[1]
        return f

    def wave_speed(self, q: np.ndarray) -> float:
        """Bound on the convective wave speeds over all cells."""
        if self.name is ModelName.PSYSTEM:
            return float(np.max(np.sqrt(-self.law.dpressure(q[0]))))
        if self.name is ModelName.GT:
            return 1.0
        if self.name is ModelName.EULER:
            return float(np.max(np.abs(q[1] / q[0]) + np.sqrt(self.law.dpressure(q[0]))))
        return float(np.max(np.sqrt(self.law.dpressure(q[0]) + self.mu)))


def make_model(name, gamma: float = 1.4, mu: float = 1.0, tau_star=None) -> ModelSpec:
    name = ModelName(name)
    kind = _LAW_KIND[name]
    if tau_star is None:
        tau_star = 1.0 if kind in (LawKind.PSYSTEM, LawKind.EULER) else 0.0
    return ModelSpec(name, ConstitutiveLaw(kind, gamma, tau_star), mu)


class ICKind(str, enum.Enum):
    DISCONTINUOUS = "discontinuous"
    SMOOTH = "smooth"
    CONSTANT = "constant"


@dataclass(frozen=True)
class InitialData:
    kind: ICKind = ICKind.SMOOTH
    value: float = 1.0  # CONSTANT only

    def __post_init__(self):
        object.__setattr__(self, "kind", ICKind(self.kind))

    def profile(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind is ICKind.DISCONTINUOUS:
            return np.where(x < 0.0, 2.0, 1.0)
        if self.kind is ICKind.SMOOTH:
            return np.exp(-100.0 * x**2) + 1.0
        return np.full_like(x, self.value)


def limit_relation(model: ModelSpec, qbar: np.ndarray, grid: Grid1D, sigma: float,
                   boundary=Boundary.ZEROFLUX) -> np.ndarray:
    """Return ``qbar`` with its algebraic component set from the limit relation."""
    out = np.array(qbar, dtype=float, copy=True)
    g = model.drive(out[model.drive_index])
    out[model.relax_index] = -centered_difference(g, grid.dx, boundary) / sigma
    return out


def initial_state(model: ModelSpec, ic: InitialData, grid: Grid1D, sigma: float,
                  boundary=Boundary.ZEROFLUX) -> np.ndarray:
    """Well-prepared initial field: primary variable from ``ic``, the relaxing
    component on its discrete equilibrium so no initial layer forms."""
    q = np.zeros((model.state_dim, grid.N))
    q[0] = ic.profile(grid.centers)
    # visco: v = 0, so the equilibrium z is 0 as well
    return model.check(limit_relation(model, q, grid, sigma, boundary))
