"""Seeded property suites behind ``aprelax check``.

Each suite draws random inputs from one ``numpy`` generator and reports the
worst defect seen together with the first failing case, if any.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import (entropy_balance_terms, sandwich_constants, viscous_bound_pointwise,
                      relative_P, relative_p)
from .grid import Boundary, Grid1D
from .models import make_model
from .scheme import compute_lambda, convection_step, limit_step, relaxation_step

BALANCE_TOL = 1e-12
SPLIT_TOL = 1e-14
TAU_RANGE = (0.5, 4.0)


@dataclass
class CheckOutcome:
    name: str
    cases: int
    worst: float  # largest defect (relative where the tolerance is relative)
    tolerance: float
    failure: str | None = None

    @property
    def passed(self) -> bool:
        return self.failure is None


def _fmt(a) -> str:
    return np.array2string(np.asarray(a), precision=17, separator=", ", max_line_width=10**6)


def balance_identity(rng, cases: int, psi_sign: float = 1.0) -> CheckOutcome:
    """Per-cell entropy balance on random periodic states of 8 to 64 cells."""
    model = make_model("psystem")
    out = CheckOutcome("balance identity", cases, 0.0, BALANCE_TOL)
    for c in range(cases):
        N = int(rng.integers(8, 65))
        grid = Grid1D(0.0, 1.0, N)
        q = np.vstack([rng.uniform(*TAU_RANGE, N), rng.normal(0.0, 1.0, N)])
        tau_bar = rng.uniform(*TAU_RANGE, N)
        eps = float(10 ** rng.uniform(-3, 0))
        sigma = float(rng.uniform(0.5, 2.0))
        lam = max(compute_lambda(model, q),
                  compute_lambda(model, np.vstack([tau_bar, 0 * tau_bar])))
        terms = entropy_balance_terms(model, q, tau_bar, eps, sigma, lam, grid,
                                      Boundary.PERIODIC, psi_sign=psi_sign)
        rel = float(np.max(np.abs(terms.defect))) / terms.scale
        out.worst = max(out.worst, rel)
        if rel > BALANCE_TOL and out.failure is None:
            out.failure = (f"case {c}: N={N} eps={eps!r} sigma={sigma!r} lambda={lam!r} "
                           f"relative defect {rel:.3e}\n  tau={_fmt(q[0])}\n  u={_fmt(q[1])}\n"
                           f"  tau_bar={_fmt(tau_bar)}")
    return out


def pressure_sandwich(rng, cases: int) -> CheckOutcome:
    """``|p(t|tb)| <= C'(t-tb)^2 <= -C P(t|tb)`` on random pairs in the range."""
    law = make_model("psystem").law
    c1, c2 = sandwich_constants(law, *TAU_RANGE)
    t, tb = rng.uniform(*TAU_RANGE, (2, cases))
    mid = c1 * (t - tb) ** 2
    left = np.abs(relative_p(law, t, tb)) - mid
    right = mid + c2 * relative_P(law, t, tb)
    # a positive excess is a violation
    excess = np.maximum(left, right)
    out = CheckOutcome("relative pressure sandwich", cases, float(max(excess.max(), 0.0)), 0.0)
    bad = np.flatnonzero(excess > 0)
    if bad.size:
        i = int(bad[0])
        out.failure = f"case {i}: tau={t[i]!r} tau_bar={tb[i]!r} excess {excess[i]:.3e}"
    return out


def viscous_residual_bound(rng, cases: int) -> CheckOutcome:
    """Pointwise ``R^u`` bound on finitely supported states, three thetas each."""
    out = CheckOutcome("viscous residual bound", cases, 0.0, 0.0)
    for c in range(cases):
        N = int(rng.integers(3, 65))
        dx = float(10 ** rng.uniform(-3, 0))
        eps = float(10 ** rng.uniform(-4, 0))
        lam = float(rng.uniform(0.1, 5.0))
        sigma = float(rng.uniform(0.5, 2.0))
        u = rng.normal(0.0, 1.0, N)
        # occasionally an extreme gradient in the limit velocity
        ubar = rng.normal(0.0, 1.0, N) * (10 ** rng.uniform(0, 4) if c % 10 == 0 else 1.0)
        for theta in (0.1, sigma / lam, 10.0):
            lhs, rhs = viscous_bound_pointwise(u, ubar, eps, lam, theta, dx)
            excess = lhs - rhs
            out.worst = max(out.worst, excess)
            if excess > 0 and out.failure is None:
                out.failure = (f"case {c}: theta={theta!r} eps={eps!r} lambda={lam!r} dx={dx!r} "
                               f"lhs={lhs!r} rhs={rhs!r}\n  u={_fmt(u)}\n  u_bar={_fmt(ubar)}")
    out.worst = max(out.worst, 0.0)
    return out


def splitting_limit(rng, cases: int) -> CheckOutcome:
    """At ``eps = 0`` convection then relaxation reproduces the limit step."""
    model = make_model("psystem")
    out = CheckOutcome("splitting limit identity", cases, 0.0, SPLIT_TOL)
    for c in range(cases):
        N = int(rng.integers(5, 65))
        grid = Grid1D(-4.0, 4.0, N)
        sigma = float(rng.uniform(0.5, 2.0))
        q = np.vstack([rng.uniform(*TAU_RANGE, N), rng.normal(0.0, 1.0, N)])
        lam = compute_lambda(model, q)
        dt = float(rng.uniform(0.05, 0.5)) * grid.dx / lam
        split = relaxation_step(model, convection_step(model, q, dt, lam, grid), dt, 0.0,
                                sigma, grid)
        lim = limit_step(model, q, dt, lam, sigma, grid)
        tau_same = np.array_equal(split[0], lim[0])
        rel = float(np.max(np.abs(split[1] - lim[1]))) / max(float(np.max(np.abs(lim[1]))),
                                                             np.finfo(float).tiny)
        out.worst = max(out.worst, rel if tau_same else np.inf)
        if (not tau_same or rel > SPLIT_TOL) and out.failure is None:
            out.failure = (f"case {c}: N={N} sigma={sigma!r} dt={dt!r} tau bit-identical="
                           f"{tau_same} u relative gap {rel:.3e}\n  tau={_fmt(q[0])}\n"
                           f"  u={_fmt(q[1])}")
    return out


def run_checks(seed: int = 0, cases: int = 1000, flip_psi: bool = False) -> list:
    """All four suites; ``cases`` scales them as 1 : 10 : 1 : 1/10."""
    rng = np.random.default_rng(seed)
    return [
        balance_identity(rng, cases, -1.0 if flip_psi else 1.0),
        pressure_sandwich(rng, 10 * cases),
        viscous_residual_bound(rng, cases),
        splitting_limit(rng, max(1, cases // 10)),
    ]
