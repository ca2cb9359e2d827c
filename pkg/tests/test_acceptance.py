"""Acceptance suite: one printed PASS/FAIL line per criterion.

Tolerances are fixed here and never adjusted to make a run pass.
"""

import math

import numpy as np
import pytest

from aprelax.checks import (balance_identity, pressure_sandwich, splitting_limit,
                            viscous_residual_bound)
from aprelax.grid import Boundary, Grid1D
from aprelax.models import InitialData, initial_state, make_model
from aprelax.scheme import SchemeParams, run
from aprelax.study import StudyConfig, ap_consistency, emit_csv, sweep

SLOPE_WINDOW = (3.5, 4.5)
FIT_EPS = (1e-3, 1e-1)  # fit range, both ends included
BALANCE_TOL = 1e-12
SPLIT_TOL = 1e-14
AP_EXPONENT_MIN = 1.5
MASS_DRIFT_TOL = 1e-13
SEED = 20240601


@pytest.fixture
def report(capsys):
    def emit(number, ok, text):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {text}")
    return emit


@pytest.fixture(scope="module")
def psystem_sweep():
    return sweep(StudyConfig(model=("psystem",)), workers=1)


@pytest.fixture(scope="module")
def extension_sweep():
    return sweep(StudyConfig(model=("gt", "euler", "visco"), N_list=(400,)))


def _slopes(result):
    out = {}
    for group in result.groups():
        try:
            out[group] = result.fit(group, eps_max=FIT_EPS[1], eps_min=FIT_EPS[0]).slope
        except ValueError:
            out[group] = float("nan")
    return out


def _in_window(slope):
    return SLOPE_WINDOW[0] <= slope <= SLOPE_WINDOW[1]


def test_1_quartic_decay_psystem(psystem_sweep, report):
    slopes = _slopes(psystem_sweep)
    ok = (not psystem_sweep.failures and len(slopes) == 8
          and all(_in_window(s) for s in slopes.values()))
    detail = ", ".join(f"{g.split(':', 1)[1]}={s:.3f}" for g, s in slopes.items())
    report(1, ok, f"p-system slopes in {SLOPE_WINDOW}: {detail}")
    assert ok, (slopes, psystem_sweep.failures)


def test_2_quartic_decay_extensions(extension_sweep, report):
    slopes = _slopes(extension_sweep)
    ok = (not extension_sweep.failures and len(slopes) == 6
          and all(_in_window(s) for s in slopes.values()))
    detail = ", ".join(f"{g}={s:.3f}" for g, s in slopes.items())
    report(2, ok, f"extension slopes at N=400 in {SLOPE_WINDOW}: {detail}")
    assert ok, (slopes, extension_sweep.failures)


def test_3_entropy_balance_identity(report):
    out = balance_identity(np.random.default_rng(SEED), 1000)
    ok = out.passed and out.cases >= 1000
    report(3, ok, f"balance identity on {out.cases} periodic states (8-64 cells): "
                  f"max defect / largest term = {out.worst:.2e} <= {BALANCE_TOL:g}")
    assert ok, out.failure


def test_4_relative_pressure_sandwich(report):
    out = pressure_sandwich(np.random.default_rng(SEED), 10_000)
    report(4, out.passed, f"sandwich on {out.cases} pairs in [0.5, 4]^2, zero violations "
                          f"(worst excess {out.worst:.2e})")
    assert out.passed, out.failure


def test_5_viscous_residual_bound(report):
    out = viscous_residual_bound(np.random.default_rng(SEED), 1000)
    report(5, out.passed, f"viscous residual bound on {out.cases} finite-support states x "
                          f"theta in {{0.1, sigma/lambda, 10}}, zero violations")
    assert out.passed, out.failure


def test_6_splitting_limit_identity(report):
    out = splitting_limit(np.random.default_rng(SEED), 100)
    report(6, out.passed, f"eps=0 split equals limit step on {out.cases} states: "
                          f"max relative gap {out.worst:.2e} <= {SPLIT_TOL:g}")
    assert out.passed, out.failure


def test_7_ap_consistency(report):
    tab = ap_consistency("psystem", "smooth", 400, (1e-3, 1e-4, 1e-5))
    ok = tab.strictly_decreasing and tab.exponent is not None and tab.exponent >= AP_EXPONENT_MIN
    dist = ", ".join(f"{d:.3e}" for d in tab.distances)
    report(7, ok, f"L2 distances {dist} strictly decreasing, fitted exponent "
                  f"{tab.exponent:.3f} >= {AP_EXPONENT_MIN}")
    assert ok, tab


def test_8_conservation_and_determinism(psystem_sweep, report, tmp_path, monkeypatch):
    worst = 0.0
    for name in ("psystem", "gt", "euler", "visco"):
        model = make_model(name)
        grid = Grid1D(-4.0, 4.0, 200)
        q0 = initial_state(model, InitialData("smooth"), grid, 1.0, Boundary.PERIODIC)
        for eps in (1e-1, 1e-2, 0.0):
            params = SchemeParams(eps, boundary=Boundary.PERIODIC, diffusion_number=1.0)
            res = run(model, params, q0, grid, record=True)
            mass = [math.fsum(grid.dx * q[0]) for q in res.trajectory]
            drift = max(abs(b - a) / abs(a) for a, b in zip(mass, mass[1:]))
            worst = max(worst, drift)
    monkeypatch.setenv("APRELAX_THREADS", "4")
    again = sweep(StudyConfig(model=("psystem",)))
    a = emit_csv(psystem_sweep, tmp_path / "first.csv").read_bytes()
    b = emit_csv(again, tmp_path / "second.csv").read_bytes()
    ok = worst <= MASS_DRIFT_TOL and a == b
    report(8, ok, f"periodic mass drift per step {worst:.2e} <= {MASS_DRIFT_TOL:g} for all "
                  f"models; repeated sweep CSV byte-identical: {a == b}")
    assert ok


def test_9_well_prepared_start(psystem_sweep, extension_sweep, report):
    rows = psystem_sweep.rows + extension_sweep.rows
    nonzero = [r for r in rows if r.phi0 != 0.0]
    ok = bool(rows) and not nonzero
    report(9, ok, f"phi(0) == 0 exactly on all {len(rows)} sweep rows")
    assert ok, nonzero
