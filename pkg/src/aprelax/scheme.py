"""Two-step splitting scheme: explicit HLL convection, implicit relaxation.

At ``eps = 0`` the relaxation step collapses to the algebraic limit relation
and the pair becomes an explicit scheme for the parabolic limit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import Boundary, Grid1D, centered_difference, pad
from .models import DomainError, ModelSpec, limit_relation

log = logging.getLogger(__name__)

MAX_CFL = 0.5


class CFLError(ValueError):
    pass


class SolverError(RuntimeError):
    """Time loop aborted; ``step`` is the index of the failing step."""

    def __init__(self, msg: str, step: int):
        super().__init__(msg)
        self.step = step


@dataclass(frozen=True)
class SchemeParams:
    eps: float
    sigma: float = 1.0
    cfl: float = 0.5
    boundary: Boundary = Boundary.ZEROFLUX
    T: float = 1e-2
    # optional cap on dt * max|g'| / (sigma dx^2); None keeps the pure
    # hyperbolic CFL rule
    diffusion_number: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if not self.eps >= 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.cfl <= MAX_CFL:
            raise ValueError(f"cfl must lie in (0, {MAX_CFL}], got {self.cfl}")
        if not self.T >= 0:
            raise ValueError(f"final time must be >= 0, got {self.T}")
        if self.diffusion_number is not None and not self.diffusion_number > 0:
            raise ValueError(f"diffusion_number must be positive, got {self.diffusion_number}")


def compute_lambda(model: ModelSpec, q: np.ndarray) -> float:
    return model.wave_speed(model.check(q))


def time_step(model: ModelSpec, q: np.ndarray, lam: float, params: SchemeParams,
              grid: Grid1D, t: float = 0.0) -> float:
    """``min(cfl dx / lam, T - t)``, further capped by the diffusive bound.

    Near ``eps = 0`` the scheme is an explicit scheme for a nonlinear heat
    equation with diffusivity ``|g'| / sigma``; with ``cfl <= 1/2`` the cap
    ``diffusion_number <= 1`` keeps the limit update positivity preserving.
    """
    dt = params.cfl * grid.dx / lam
    if params.diffusion_number is not None:
        k = model.drive_index
        diff = float(np.max(np.abs(model.drive_prime(q[k])))) / params.sigma
        if diff > 0:
            dt = min(dt, params.diffusion_number * grid.dx**2 / diff)
    return min(dt, params.T - t)


def _check_cfl(dt, lam, dx):
    # tiny slack: dt = cfl*dx/lam may round one ulp above the bound
    if dt * lam / dx > MAX_CFL * (1 + 1e-14):
        raise CFLError(f"CFL violated: dt={dt!r}, lambda={lam!r}, dx={dx!r} "
                       f"give dt*lambda/dx={dt * lam / dx:.6g} > {MAX_CFL}")


def interface_flux(model: ModelSpec, q: np.ndarray, lam: float, boundary) -> np.ndarray:
    """HLL flux ``(f_i + f_{i+1})/2 - lam/2 (q_{i+1} - q_i)`` on the ``N+1`` faces."""
    qp = pad(q, boundary)
    fp = model.flux(qp)
    return 0.5 * (fp[:, :-1] + fp[:, 1:]) - 0.5 * lam * (qp[:, 1:] - qp[:, :-1])


def convection_step(model: ModelSpec, q: np.ndarray, dt: float, lam: float,
                    grid: Grid1D, boundary=Boundary.ZEROFLUX) -> np.ndarray:
    _check_cfl(dt, lam, grid.dx)
    F = interface_flux(model, q, lam, boundary)
    return q - (dt / grid.dx) * (F[:, 1:] - F[:, :-1])


def relaxation_coefficients(dt: float, eps: float, sigma: float):
    """``(a, b)`` in ``q_r <- a q_r - dt * b * D g``."""
    e2 = eps * eps
    return e2 / (e2 + sigma * dt), (1.0 - e2) / (sigma * dt + e2)


def relaxation_step(model: ModelSpec, q: np.ndarray, dt: float, eps: float, sigma: float,
                    grid: Grid1D, boundary=Boundary.ZEROFLUX) -> np.ndarray:
    """Implicit (unconditionally stable) update of the relaxing component."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    a, b = relaxation_coefficients(dt, eps, sigma)
    r = model.relax_index
    dg = centered_difference(model.drive(q[model.drive_index]), grid.dx, boundary)
    out = q.copy()
    out[r] = a * q[r] - dt * b * dg
    return out


def limit_step(model: ModelSpec, qbar: np.ndarray, dt: float, lam: float, sigma: float,
               grid: Grid1D, boundary=Boundary.ZEROFLUX) -> np.ndarray:
    """One step of the discrete parabolic limit scheme.

    The dynamic components take the HLL update; the algebraic one is then
    rebuilt from the limit relation.
    """
    out = convection_step(model, qbar, dt, lam, grid, boundary)
    return limit_relation(model, out, grid, sigma, boundary)


def advance(model: ModelSpec, q: np.ndarray, dt: float, lam: float, params: SchemeParams,
            grid: Grid1D) -> np.ndarray:
    """One full step: convection then relaxation, or the limit step at ``eps = 0``."""
    if params.eps == 0:
        return limit_step(model, q, dt, lam, params.sigma, grid, params.boundary)
    q = convection_step(model, q, dt, lam, grid, params.boundary)
    return relaxation_step(model, q, dt, params.eps, params.sigma, grid, params.boundary)


@dataclass
class RunResult:
    field: np.ndarray
    steps: int
    lambda_max: float
    lambda0: float
    t: float
    dts: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)


def run(model: ModelSpec, params: SchemeParams, q0: np.ndarray, grid: Grid1D,
        record: bool = False) -> RunResult:
    """March ``q0`` to ``params.T``; ``eps = 0`` selects the limit scheme.

    With ``record`` the field after every step is kept (initial included).
    """
    q = model.check(np.array(q0, dtype=float))
    lam0 = compute_lambda(model, q)
    res = RunResult(q, 0, lam0, lam0, 0.0)
    if record:
        res.trajectory.append(q)
    t, n = 0.0, 0
    while t < params.T:
        try:
            lam = compute_lambda(model, q)
            dt = time_step(model, q, lam, params, grid, t)
            q = model.check(advance(model, q, dt, lam, params, grid))
        except DomainError as exc:
            raise SolverError(f"{model.name.value}: step {n} aborted: {exc}", n) from exc
        n += 1
        t = params.T if dt == params.T - t else t + dt
        res.lambda_max = max(res.lambda_max, lam)
        res.dts.append(dt)
        if record:
            res.trajectory.append(q)
    res.field, res.steps, res.t = q, n, t
    return res


def semidiscrete_rhs_hyperbolic(model: ModelSpec, q: np.ndarray, eps: float, sigma: float,
                                grid: Grid1D, boundary=Boundary.ZEROFLUX,
                                lam: float | None = None) -> np.ndarray:
    """Time derivative of the space-discrete relaxation system.

    For the p-system this is ``dtau/dt = D u + lam/(2dx) D2 tau`` and
    ``du/dt = lam/(2dx) D2 u - D p / eps^2 - sigma u / eps^2``.
    """
    if not eps > 0:
        raise ValueError("eps = 0 has no hyperbolic right-hand side; "
                         "use semidiscrete_rhs_parabolic")
    q = model.check(q)
    if lam is None:
        lam = compute_lambda(model, q)
    F = interface_flux(model, q, lam, boundary)
    rhs = -(F[:, 1:] - F[:, :-1]) / grid.dx
    r = model.relax_index
    dg = centered_difference(model.drive(q[model.drive_index]), grid.dx, boundary)
    e2 = eps * eps
    rhs[r] -= (sigma * q[r] + (1.0 - e2) * dg) / e2
    return rhs


def semidiscrete_rhs_parabolic(model: ModelSpec, qbar: np.ndarray, sigma: float, lam: float,
                               grid: Grid1D, boundary=Boundary.ZEROFLUX) -> np.ndarray:
    """Time derivative of the space-discrete limit system.

    The algebraic component is refreshed from the limit relation first; its
    derivative follows by the chain rule through the dynamic components.
    """
    qbar = limit_relation(model, model.check(qbar), grid, sigma, boundary)
    F = interface_flux(model, qbar, lam, boundary)
    rhs = -(F[:, 1:] - F[:, :-1]) / grid.dx
    k, r = model.drive_index, model.relax_index
    dg_dt = model.drive_prime(qbar[k]) * rhs[k]
    rhs[r] = -centered_difference(dg_dt, grid.dx, boundary) / sigma
    return rhs
