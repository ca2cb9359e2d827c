"""Relative entropy between a relaxation field and its parabolic-limit partner.

Besides the densities and the space integral ``phi``, this module carries
the discrete balance law of the p-system relative entropy (flux, residuals,
per-cell defect), the discrete norms bounding the limit solution, and the
viscous-residual bound check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Boundary, Grid1D, centered_difference, pad, second_difference
from .models import ConstitutiveLaw, LawKind, ModelName, ModelSpec, limit_relation
from .scheme import semidiscrete_rhs_hyperbolic, semidiscrete_rhs_parabolic

# Gauss-Legendre rule on [0, 1] for the integral form of Taylor remainders
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS
# below this |a - b| / |b| the remainder is integrated instead of subtracted
_SMALL_GAP = 0.25


def taylor_remainder(f, df, d2f, a, b, positive=True):
    """``f(a) - f(b) - f'(b) (a - b)`` without cancellation for ``a`` near ``b``.

    Close pairs use ``(a-b)^2 * int_0^1 (1-s) f''(b + s(a-b)) ds``; far pairs
    the direct formula, whose rounding error is then harmless.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    d = a - b
    out = np.empty(a.shape)
    close = np.abs(d) <= _SMALL_GAP * np.abs(b) if positive else np.ones(a.shape, bool)
    if np.any(~close):
        af, bf = a[~close], b[~close]
        out[~close] = f(af) - f(bf) - df(bf) * (af - bf)
    if np.any(close):
        bc, dc = b[close], d[close]
        s = _GL_NODES[:, None]
        integrand = (1.0 - s) * d2f(bc[None, :] + s * dc[None, :])
        out[close] = dc**2 * (_GL_WEIGHTS @ integrand)
    return out if out.ndim else float(out)


def relative_P(law: ConstitutiveLaw, tau, tau_bar):
    """``P(tau | tau_bar) = P(tau) - P(tau_bar) - p(tau_bar)(tau - tau_bar)``.

    Nonpositive for a decreasing law; independent of ``tau_star``.
    """
    law.check(tau), law.check(tau_bar)
    return taylor_remainder(law.antiderivative, law.pressure, law.dpressure,
                            tau, tau_bar, law.positive)


def relative_p(law: ConstitutiveLaw, tau, tau_bar):
    """``p(tau | tau_bar) = p(tau) - p(tau_bar) - p'(tau_bar)(tau - tau_bar)``."""
    law.check(tau), law.check(tau_bar)
    return taylor_remainder(law.pressure, law.dpressure, law.d2pressure,
                            tau, tau_bar, law.positive)


def _euler_h(law: ConstitutiveLaw):
    # internal energy density h with h'' = p'/rho, for p = rho^gamma
    g = law.gamma
    return (lambda r: r**g / (g - 1.0),
            lambda r: g / (g - 1.0) * r ** (g - 1.0),
            lambda r: g * r ** (g - 2.0))


def eta_cell(model: ModelSpec, w, wbar, eps: float):
    """Per-cell relative entropy density; ``w``, ``wbar`` are ``(d, N)`` or ``(d,)``."""
    w, wbar = np.asarray(w, dtype=float), np.asarray(wbar, dtype=float)
    e2 = eps * eps
    law = model.law
    if model.name is ModelName.PSYSTEM:
        return 0.5 * e2 * (w[1] - wbar[1]) ** 2 - relative_P(law, w[0], wbar[0])
    if model.name is ModelName.GT:
        return 0.5 * e2 * (w[1] - wbar[1]) ** 2 + relative_P(law, w[0], wbar[0])
    if model.name is ModelName.EULER:
        rho, rhob = law.check(w[0]), law.check(wbar[0])
        du = w[1] / rho - wbar[1] / rhob
        return 0.5 * e2 * rho * du**2 + taylor_remainder(*_euler_h(law), rho, rhob)
    return (0.5 * (w[1] - wbar[1]) ** 2 + relative_P(law, w[0], wbar[0])
            + 0.5 * e2 * (w[2] - wbar[2]) ** 2 / model.mu)


def phi_total(model: ModelSpec, q, qbar, eps: float, dx: float) -> float:
    """Discrete space integral ``sum_i dx * eta_i``."""
    return math.fsum(np.ravel(dx * eta_cell(model, q, qbar, eps)))


# -- p-system balance law ---------------------------------------------------

def psi_interface(law: ConstitutiveLaw, q, qbar, i: int) -> float:
    """Relative entropy flux between cells ``i`` and ``i+1``."""
    N = np.shape(q)[1]
    if not 0 <= i < N - 1:
        raise IndexError(f"interface {i}+1/2 needs 0 <= i < {N - 1}")
    tau, u = q[0], q[1]
    taub, ub = qbar[0], qbar[1]
    p = law.pressure
    return float(0.5 * (u[i] - ub[i]) * (p(tau[i + 1]) - p(taub[i + 1]))
                 + 0.5 * (u[i + 1] - ub[i + 1]) * (p(tau[i]) - p(taub[i])))


def psi_half(law: ConstitutiveLaw, q, qbar, boundary=Boundary.PERIODIC) -> np.ndarray:
    """Fluxes on all ``N+1`` faces, ghost states from ``boundary``."""
    qp, qbp = pad(q, boundary), pad(qbar, boundary)
    du = qp[1] - qbp[1]
    dp = law.pressure(qp[0]) - law.pressure(qbp[0])
    return 0.5 * du[:-1] * dp[1:] + 0.5 * du[1:] * dp[:-1]


def residuals(law: ConstitutiveLaw, q, qbar, eps: float, lam: float, dx: float,
              boundary=Boundary.PERIODIC):
    """Numerical-viscosity residuals ``(R^u, R^tau)`` per cell."""
    tau, u = q[0], q[1]
    taub, ub = qbar[0], qbar[1]
    c = lam / (2.0 * dx)
    Ru = c * eps**2 * (u - ub) * second_difference(u, boundary)
    Rtau = -c * ((law.pressure(tau) - law.pressure(taub)) * second_difference(tau, boundary)
                 - (tau - taub) * law.dpressure(taub) * second_difference(taub, boundary))
    return Ru, Rtau


@dataclass
class BalanceTerms:
    """Every term of the per-cell relative entropy balance, moved to one side."""

    deta_dt: np.ndarray
    flux: np.ndarray
    damping: np.ndarray
    curvature: np.ndarray
    time_gradient: np.ndarray
    Ru: np.ndarray
    Rtau: np.ndarray

    @property
    def defect(self) -> np.ndarray:
        return (self.deta_dt + self.flux + self.damping - self.curvature
                - self.time_gradient - self.Ru - self.Rtau)

    @property
    def scale(self) -> float:
        """Largest single-term magnitude (for relative tolerances)."""
        return max(float(np.max(np.abs(t))) for t in
                   (self.deta_dt, self.flux, self.damping, self.curvature,
                    self.time_gradient, self.Ru, self.Rtau))


def entropy_balance_terms(model: ModelSpec, q, tau_bar, eps: float, sigma: float, lam: float,
                          grid: Grid1D, boundary=Boundary.PERIODIC,
                          psi_sign: float = 1.0) -> BalanceTerms:
    """Evaluate both sides of the semi-discrete relative entropy balance.

    ``q`` evolves by the space-discrete relaxation system, ``tau_bar`` by the
    space-discrete limit system (its velocity rebuilt algebraically); all
    time derivatives come from the chain rule through the two right-hand
    sides, so the defect is pure rounding. Only the periodic setting closes
    the stencils exactly; ``psi_sign`` exists for mutation checks.
    """
    if model.name is not ModelName.PSYSTEM:
        raise ValueError("the balance identity is implemented for the p-system only")
    if grid.N < 5:
        raise ValueError(f"balance stencil reaches i+-2; need N >= 5, got {grid.N}")
    law, dx = model.law, grid.dx
    q = model.check(q)
    qbar = np.vstack([tau_bar, np.zeros_like(tau_bar)])
    qbar = limit_relation(model, qbar, grid, sigma, boundary)
    dq = semidiscrete_rhs_hyperbolic(model, q, eps, sigma, grid, boundary, lam)
    dqb = semidiscrete_rhs_parabolic(model, qbar, sigma, lam, grid, boundary)

    tau, u = q
    taub, ub = qbar
    gap = u - ub
    p, dp = law.pressure, law.dpressure
    deta = (eps**2 * gap * (dq[1] - dqb[1]) - (p(tau) - p(taub)) * dq[0]
            + (tau - taub) * dp(taub) * dqb[0])

    psi = psi_sign * psi_half(law, q, qbar, boundary)
    flux = (psi[1:] - psi[:-1]) / dx
    damping = sigma * gap**2
    pb = pad(p(taub), boundary, 2)
    curvature = (pb[4:] - 2.0 * pb[2:-2] + pb[:-4]) / (2.0 * dx) ** 2 / sigma \
        * relative_p(law, tau, taub)
    dDp_dt = centered_difference(dp(taub) * dqb[0], dx, boundary)
    time_gradient = eps**2 / sigma * gap * dDp_dt
    Ru, Rtau = residuals(law, q, qbar, eps, lam, dx, boundary)
    return BalanceTerms(deta, flux, damping, curvature, time_gradient, Ru, Rtau)


def entropy_balance_residual(model: ModelSpec, q, tau_bar, eps, sigma, lam, grid,
                             boundary=Boundary.PERIODIC) -> np.ndarray:
    """Per-cell defect of the balance law; vanishes up to rounding."""
    return entropy_balance_terms(model, q, tau_bar, eps, sigma, lam, grid, boundary).defect


# -- discrete norms ---------------------------------------------------------

def _dx_inf(v, dx):
    return float(np.max(np.abs(np.diff(v, axis=-1)))) / dx


def _wide_dxx_inf(v, dx):
    return float(np.max(np.abs(v[..., 4:] - 2 * v[..., 2:-2] + v[..., :-4]))) / (2 * dx) ** 2


def _dxx(v, dx):
    return (v[..., 2:] - 2 * v[..., 1:-1] + v[..., :-2]) / dx**2


@dataclass(frozen=True)
class LimitNorms:
    """Bounds on the limit solution entering the rate estimate."""

    dtx_p_L2: float  # ||D~_tx p(tau_bar)||_L2
    wide_dxx_p_Linf: float  # ||D~_xx p(tau_bar)||_Linf
    dxx_tau_Linf: float  # ||D_xx tau_bar||_Linf
    dx_tau_Linf: float  # ||D_x tau_bar||_Linf
    dxx_u_L2: float  # ||D_xx u_bar||_L2

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def discrete_norms(model: ModelSpec, tau_bar_traj, dts, sigma: float, grid: Grid1D,
                   boundary=Boundary.ZEROFLUX) -> LimitNorms:
    """Norms of a sampled limit trajectory.

    ``tau_bar_traj`` has one row per sample (``len(dts) + 1`` rows). Spatial
    sups and sums run over cells whose stencil lies inside the grid; time
    integrals use left-endpoint weights ``dts[n]``.
    """
    T = np.asarray(tau_bar_traj, dtype=float)
    dts = np.asarray(dts, dtype=float)
    if T.ndim != 2 or T.shape[0] < 2:
        raise ValueError("the time-derivative norm needs at least 2 samples")
    if T.shape[0] != dts.size + 1:
        raise ValueError(f"{T.shape[0]} samples need {T.shape[0] - 1} step sizes, got {dts.size}")
    dx, law = grid.dx, model.law
    P = law.pressure(T)
    ubar = np.array([limit_relation(model, np.vstack([row, 0 * row]), grid, sigma, boundary)[1]
                     for row in T])
    w = dts[:, None]
    Dp = (P[:, 2:] - P[:, :-2]) / (2 * dx)
    dtx = np.diff(Dp, axis=0) / w
    dxx_u = _dxx(ubar, dx)
    return LimitNorms(
        dtx_p_L2=math.sqrt(math.fsum(np.ravel(w * dx * dtx**2))),
        wide_dxx_p_Linf=_wide_dxx_inf(P, dx),
        dxx_tau_Linf=float(np.max(np.abs(_dxx(T, dx)))),
        dx_tau_Linf=_dx_inf(T, dx),
        dxx_u_L2=math.sqrt(math.fsum(np.ravel(w * dx * dxx_u[:-1] ** 2))),
    )


# -- viscous residual bound -------------------------------------------------

def viscous_bound_pointwise(u, ubar, eps: float, lam: float, theta: float, dx: float):
    """Instantaneous form of the ``R^u`` bound for finitely supported data.

    Arrays are taken as zero outside their extent. Returns ``(lhs, rhs)``
    with ``lhs = sum dx R^u`` and
    ``rhs = lam theta/2 sum dx (u-ubar)^2 + eps^4 lam dx/(2 theta) sum dx (D_xx ubar)^2``.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    u = np.pad(np.asarray(u, dtype=float), 1)
    ub = np.pad(np.asarray(ubar, dtype=float), 1)
    gap = u - ub
    d2u = u[2:] - 2 * u[1:-1] + u[:-2]
    lhs = math.fsum(dx * lam * eps**2 / (2 * dx) * gap[1:-1] * d2u)
    ub2 = np.pad(ub, 1)
    dxx_ub = (ub2[2:] - 2 * ub2[1:-1] + ub2[:-2]) / dx**2
    rhs = (lam * theta / 2 * math.fsum(dx * gap**2)
           + eps**4 * lam * dx / (2 * theta) * math.fsum(dx * dxx_ub**2))
    return lhs, rhs


def viscous_bound_check(u_traj, ubar_traj, dts, eps, lam, theta, dx):
    """Time-integrated ``R^u`` bound; returns ``(passed, slack)``.

    Left-endpoint weights: sample ``n`` is weighted by ``dts[n]``.
    """
    lhs = rhs = 0.0
    for u, ub, dt in zip(u_traj, ubar_traj, dts):
        l, r = viscous_bound_pointwise(u, ub, eps, lam, theta, dx)
        lhs += dt * l
        rhs += dt * r
    slack = rhs - lhs
    return slack >= 0, slack


def sandwich_constants(law: ConstitutiveLaw, lo: float, hi: float):
    """``(C', C)`` for ``|p(t|tb)| <= C'(t-tb)^2 <= -C P(t|tb)`` on ``[lo, hi]``.

    Power law only: ``|p''|`` peaks and ``|p'|`` bottoms out at the ends.
    """
    if law.kind is not LawKind.PSYSTEM:
        raise ValueError("explicit constants are available for the p-system law only")
    ends = np.array([lo, hi])
    c_prime = float(np.max(np.abs(law.d2pressure(ends)))) / 2
    m = float(np.min(np.abs(law.dpressure(ends)))) / 2
    return c_prime, c_prime / m


@dataclass
class RelativeEntropyReport:
    eta: np.ndarray
    phi: float
    psi_half: np.ndarray
    Ru: np.ndarray
    Rtau: np.ndarray
    norms: LimitNorms | None = None


def relative_entropy_report(model: ModelSpec, q, qbar, eps, lam, grid,
                            boundary=Boundary.ZEROFLUX, norms=None) -> RelativeEntropyReport:
    eta = eta_cell(model, q, qbar, eps)
    if model.name is ModelName.PSYSTEM:
        psi = psi_half(model.law, q, qbar, boundary)
        Ru, Rtau = residuals(model.law, q, qbar, eps, lam, grid.dx, boundary)
    else:
        psi = Ru = Rtau = np.array([])
    return RelativeEntropyReport(eta, math.fsum(grid.dx * eta), psi, Ru, Rtau, norms)
