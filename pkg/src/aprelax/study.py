"""Experiment harness: epsilon/N sweeps of the relative entropy gap.

For each (model, initial data, N, eps) the relaxation scheme and the limit
scheme start from the same well-prepared field and march to ``T`` with a
shared time-step sequence; the relative entropy ``phi`` between the two is
recorded at both ends. Rates are least-squares slopes in log-log scale.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .entropy import LimitNorms, discrete_norms, phi_total
from .grid import Boundary, Grid1D
from .models import DomainError, ICKind, InitialData, ModelName, initial_state, make_model
from .scheme import SchemeParams, SolverError, advance, compute_lambda, time_step

log = logging.getLogger(__name__)

DEFAULT_N = (100, 200, 400, 1600)
DEFAULT_EPS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
# phi values below this sit at the rounding floor and are left out of fits
PHI_FLOOR = 1e-28
CSV_HEADER = ("model,ic,N,eps,sigma,gamma,mu,T,cfl,phi0,phiT,steps,lambda_max,rate_group")
THREADS_ENV = "APRELAX_THREADS"


@dataclass(frozen=True)
class StudyConfig:
    """Parameters of a sweep; ``model`` and ``ic`` hold one or more names."""

    model: tuple = ("psystem",)
    ic: tuple = ("discontinuous", "smooth")
    N_list: tuple = DEFAULT_N
    eps_list: tuple = DEFAULT_EPS
    T: float = 1e-2
    sigma: float = 1.0
    gamma: float = 1.4
    mu: float = 1.0
    cfl: float = 0.5
    domain: tuple = (-4.0, 4.0)
    boundary: str = "zeroflux"
    tau_star: float = 1.0
    # explicit-diffusion cap on dt; None keeps the pure hyperbolic CFL rule
    diffusion_number: float | None = 1.0

    def __post_init__(self):
        as_tuple = lambda v: tuple(v) if isinstance(v, (list, tuple)) else (v,)
        object.__setattr__(self, "model", tuple(ModelName(m).value for m in as_tuple(self.model)))
        object.__setattr__(self, "ic", tuple(ICKind(i).value for i in as_tuple(self.ic)))
        object.__setattr__(self, "N_list", tuple(int(n) for n in as_tuple(self.N_list)))
        object.__setattr__(self, "eps_list", tuple(float(e) for e in as_tuple(self.eps_list)))
        object.__setattr__(self, "domain", tuple(float(x) for x in self.domain))
        object.__setattr__(self, "boundary", Boundary(self.boundary).value)
        if not self.model or not self.ic:
            raise ValueError("at least one model and one initial datum are required")
        if not self.N_list or any(n < 3 for n in self.N_list):
            raise ValueError(f"N_list entries must be >= 3, got {self.N_list}")
        eps = self.eps_list
        if not eps or any(e <= 0 for e in eps):
            raise ValueError(f"eps_list entries must be > 0, got {eps}")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ValueError(f"eps_list must be strictly decreasing, got {eps}")
        if len(self.domain) != 2 or not self.domain[1] > self.domain[0]:
            raise ValueError(f"domain must be (a, b) with a < b, got {self.domain}")
        # let the scheme validate the remaining numbers
        self.scheme_params(eps[0])

    def scheme_params(self, eps: float) -> SchemeParams:
        return SchemeParams(eps, self.sigma, self.cfl, Boundary(self.boundary), self.T,
                            self.diffusion_number)

    def grid(self, N: int) -> Grid1D:
        return Grid1D(self.domain[0], self.domain[1], N)

    def make_model(self, name):
        return make_model(name, self.gamma, self.mu,
                          self.tau_star if name in ("psystem", "euler") else None)

    def jobs(self):
        """The sweep cross product in canonical order."""
        return [(m, i, n, e) for m in self.model for i in self.ic
                for n in self.N_list for e in self.eps_list]


@dataclass
class PairResult:
    """Outcome of one hyperbolic/limit pair of runs."""

    phi0: float
    phiT: float
    steps: int
    lambda_max: float
    lambda0: float
    distance: float  # discrete L2 distance of the two final fields
    q: np.ndarray
    qbar: np.ndarray
    dts: list
    norms: LimitNorms | None = None


def run_pair(model_name, ic, N: int, eps: float, cfg: StudyConfig = StudyConfig(),
             with_norms: bool = False, allow_limit: bool = False) -> PairResult:
    """March both schemes from the same well-prepared data to ``cfg.T``.

    Each step takes ``lambda`` and ``dt`` from the hyperbolic field and
    applies them to both fields, so the two are compared at identical times.
    ``allow_limit`` admits ``eps = 0``, in which case both fields follow the
    very same update.
    """
    if not (eps > 0 or (allow_limit and eps == 0)):
        raise ValueError(f"eps must be > 0, got {eps}")
    model = cfg.make_model(model_name)
    grid = cfg.grid(N)
    params = cfg.scheme_params(eps)
    limit = replace(params, eps=0.0)
    q = initial_state(model, InitialData(ic), grid, cfg.sigma, params.boundary)
    qbar = q.copy()
    phi0 = phi_total(model, q, qbar, eps, grid.dx)
    lam0 = compute_lambda(model, q)
    lam_max, t, n, dts = lam0, 0.0, 0, []
    traj = [qbar[0]] if with_norms else None
    context = f"{model.name.value}/{InitialData(ic).kind.value} N={N} eps={eps!r}"
    while t < params.T:
        try:
            lam = compute_lambda(model, q)
            dt = time_step(model, q, lam, params, grid, t)
            q = model.check(advance(model, q, dt, lam, params, grid))
            qbar = model.check(advance(model, qbar, dt, lam, limit, grid))
        except DomainError as exc:
            raise SolverError(f"{context}: step {n} aborted: {exc}", n) from exc
        n += 1
        t = params.T if dt == params.T - t else t + dt
        lam_max = max(lam_max, lam)
        dts.append(dt)
        if traj is not None:
            traj.append(qbar[0])
    norms = None
    if with_norms and model.name is ModelName.PSYSTEM and n >= 1:
        norms = discrete_norms(model, np.array(traj), dts, cfg.sigma, grid, params.boundary)
    diff = np.ravel((q - qbar) ** 2 * grid.dx)
    return PairResult(phi0, phi_total(model, q, qbar, eps, grid.dx), n, lam_max, lam0,
                      math.sqrt(math.fsum(diff)), q, qbar, dts, norms)


@dataclass(frozen=True)
class StudyRow:
    model: str
    ic: str
    N: int
    eps: float
    sigma: float
    gamma: float
    mu: float
    T: float
    cfl: float
    phi0: float
    phiT: float
    steps: int
    lambda_max: float
    lambda0: float = float("nan")

    @property
    def rate_group(self) -> str:
        return f"{self.model}:{self.ic}:N{self.N}"

    def csv_line(self) -> str:
        r = lambda v: f"{v:.16e}"
        return ",".join([self.model, self.ic, str(self.N), r(self.eps), r(self.sigma),
                         r(self.gamma), r(self.mu), r(self.T), r(self.cfl), r(self.phi0),
                         r(self.phiT), str(self.steps), r(self.lambda_max), self.rate_group])


@dataclass(frozen=True)
class RateFit:
    slope: float
    residual: float  # largest |log phi - fitted line|
    used: tuple  # eps values entering the fit
    excluded: tuple  # eps values dropped at the rounding floor


def fit_rate(points, floor: float = PHI_FLOOR) -> RateFit:
    """Least-squares slope of ``log phi`` against ``log eps``.

    Points with ``phi < floor`` (zero included) are dropped and logged; at
    least 3 must remain.
    """
    pts = [(float(e), float(p)) for e, p in points]
    used = [(e, p) for e, p in pts if p >= floor and p > 0 and e > 0]
    excluded = tuple(e for e, p in pts if (e, p) not in used)
    if excluded:
        log.info("rate fit excludes eps=%s (phi below %.0e)", list(excluded), floor)
    if len(used) < 3:
        raise ValueError(f"rate fit needs >= 3 points with phi >= {floor:g}, got {len(used)}")
    x = np.log([e for e, _ in used])
    y = np.log([p for _, p in used])
    slope, icept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + icept))))
    return RateFit(float(slope), resid, tuple(e for e, _ in used), excluded)


@dataclass
class StudyResult:
    config: StudyConfig
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (job, message)

    def groups(self) -> dict:
        out = {}
        for row in self.rows:
            out.setdefault(row.rate_group, []).append(row)
        return out

    def fit(self, group: str, eps_max=math.inf, eps_min=0.0) -> RateFit:
        pts = [(r.eps, r.phiT) for r in self.groups()[group] if eps_min <= r.eps <= eps_max]
        return fit_rate(pts)

    @property
    def fitted_rates(self) -> dict:
        """Slope per group over every row; ``None`` where a fit is impossible."""
        rates = {}
        for g in self.groups():
            try:
                rates[g] = self.fit(g)
            except ValueError as exc:
                log.warning("%s: %s", g, exc)
                rates[g] = None
        return rates


def _job(args):
    cfg, (m, ic, n, eps) = args
    try:
        pr = run_pair(m, ic, n, eps, cfg)
    except SolverError as exc:
        return None, str(exc)
    row = StudyRow(m, ic, n, eps, cfg.sigma, cfg.gamma, cfg.mu, cfg.T, cfg.cfl,
                   pr.phi0, pr.phiT, pr.steps, pr.lambda_max, pr.lambda0)
    return row, None


def worker_count(n_jobs: int) -> int:
    env = os.environ.get(THREADS_ENV)
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, env)
    return max(1, min(cap, n_jobs))


def sweep(cfg: StudyConfig, workers: int | None = None) -> StudyResult:
    """Run every job of ``cfg``; rows come back in config order.

    Failing jobs are recorded in ``failures`` and leave no row behind.
    """
    jobs = cfg.jobs()
    workers = worker_count(len(jobs)) if workers is None else workers
    payload = [(cfg, j) for j in jobs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_job, payload, chunksize=1))
    else:
        outcomes = [_job(p) for p in payload]
    result = StudyResult(cfg)
    for job, (row, err) in zip(jobs, outcomes):
        if row is None:
            log.error("%s", err)
            result.failures.append((job, err))
        else:
            result.rows.append(row)
    return result


@dataclass(frozen=True)
class APTable:
    eps: tuple
    distances: tuple
    strictly_decreasing: bool
    exponent: float | None


def ap_consistency(model, ic, N: int, eps_small=(1e-3, 1e-4, 1e-5),
                   cfg: StudyConfig = StudyConfig()) -> APTable:
    """L2 distance at ``T`` between the relaxation and limit runs per eps.

    A zero eps is allowed and yields exactly zero. The exponent is fitted
    on the positive distances.
    """
    eps_small = tuple(float(e) for e in eps_small)
    if any(a <= b for a, b in zip(eps_small, eps_small[1:])):
        raise ValueError(f"eps list must be strictly decreasing, got {eps_small}")
    dist = tuple(run_pair(model, ic, N, e, cfg, allow_limit=True).distance for e in eps_small)
    decreasing = all(a > b for a, b in zip(dist, dist[1:]))
    pos = [(e, d) for e, d in zip(eps_small, dist) if d > 0 and e > 0]
    exponent = fit_rate(pos, floor=0.0).slope if len(pos) >= 3 else None
    return APTable(eps_small, dist, decreasing, exponent)


def emit_csv(result: StudyResult, path) -> Path:
    """Write the rows in the fixed schema (LF endings, 17 significant digits)."""
    path = Path(path)
    text = "".join(line + "\n" for line in [CSV_HEADER] + [r.csv_line() for r in result.rows])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_csv(path) -> list:
    """Parse a CSV written by ``emit_csv`` back into ``StudyRow`` objects."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header")
    names = [f.name for f in fields(StudyRow)][:13]
    rows = []
    for line in lines[1:]:
        parts = line.split(",")[:13]
        vals = {}
        for name, raw in zip(names, parts):
            vals[name] = raw if name in ("model", "ic") else (
                int(raw) if name in ("N", "steps") else float(raw))
        rows.append(StudyRow(**vals))
    return rows


def emit_plot(result: StudyResult, path) -> Path:
    """Log-log scatter of ``phi(T)`` against eps, one series per N.

    One panel per (model, ic); every panel carries a slope-4 guide line.
    The SVG output is byte-stable for a given result.
    """
    rows = [r for r in result.rows if r.phiT > 0]
    if not rows:
        raise ValueError("no row with positive phi to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels = []
    for r in rows:
        if (r.model, r.ic) not in panels:
            panels.append((r.model, r.ic))
    with matplotlib.rc_context({"svg.hashsalt": "aprelax", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4), squeeze=False)
        for ax, (m, ic) in zip(axes[0], panels):
            sel = [r for r in rows if (r.model, r.ic) == (m, ic)]
            for n in sorted({r.N for r in sel}):
                pts = sorted((r.eps, r.phiT) for r in sel if r.N == n)
                ax.plot([e for e, _ in pts], [p for _, p in pts], "o-", label=f"N={n}")
            e = np.array(sorted({r.eps for r in sel}))
            anchor = max(sel, key=lambda r: (r.eps, r.phiT))
            ax.plot(e, anchor.phiT * (e / anchor.eps) ** 4, "k--", label="slope 4")
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel("eps")
            ax.set_ylabel("phi(T)")
            ax.set_title(f"{m}, {ic}")
            ax.legend(fontsize="small")
        fig.tight_layout()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
