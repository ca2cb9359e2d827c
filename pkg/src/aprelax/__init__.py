"""Asymptotic-preserving finite volumes for hyperbolic systems with stiff
diffusive relaxation, plus relative entropy diagnostics and a study harness."""

from .grid import Boundary, Grid1D
from .models import ConstitutiveLaw, InitialData, ModelSpec, initial_state, make_model
from .scheme import SchemeParams, SolverError, run
from .entropy import phi_total
from .study import StudyConfig, fit_rate, run_pair, sweep

__version__ = "0.1.0"

__all__ = ["Boundary", "Grid1D", "ConstitutiveLaw", "InitialData", "ModelSpec",
           "initial_state", "make_model", "SchemeParams", "SolverError", "run",
           "phi_total", "StudyConfig", "fit_rate", "run_pair", "sweep"]
