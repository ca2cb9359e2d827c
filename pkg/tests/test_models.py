import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from aprelax.grid import Boundary, Grid1D, centered_difference
from aprelax.models import (ADMISSIBLE_RANGE, COMPONENTS, ConstitutiveLaw, DomainError,
                            InitialData, LawKind, ModelName, initial_state, internal_energy_P,
                            limit_relation, make_model, pressure, pressure_derivative)

PSYS = ConstitutiveLaw(LawKind.PSYSTEM, 1.4, 1.0)
GT = make_model("gt").law


class TestLaws:
    def test_unit_state(self):
        assert pressure(PSYS, 1.0) == 1.0
        assert pressure_derivative(PSYS, 1.0) == pytest.approx(-1.4, rel=1e-15)
        assert internal_energy_P(PSYS, 1.0) == 0.0

    def test_pressure_at_two(self):
        # oracle: exp/log evaluation, independent of the power operator
        assert pressure(PSYS, 2.0) == pytest.approx(math.exp(-1.4 * math.log(2.0)), rel=1e-14)
        assert pressure(PSYS, 2.0) == pytest.approx(0.3789291, abs=5e-8)

    def test_derivative_matches_central_difference(self):
        h = 1e-6
        fd = (pressure(PSYS, 2.0 + h) - pressure(PSYS, 2.0 - h)) / (2 * h)
        assert pressure_derivative(PSYS, 2.0) == pytest.approx(fd, abs=1e-7)
        assert pressure_derivative(PSYS, 2.0) == pytest.approx(-1.4 * 2.0**-2.4, rel=1e-15)

    def test_antiderivative_against_quadrature(self):
        ref, _ = quad(lambda s: s ** -1.4, 1.0, 2.0, epsabs=1e-13)
        assert internal_energy_P(PSYS, 2.0) == pytest.approx(ref, abs=1e-9)

    @pytest.mark.parametrize("kind", [LawKind.EULER, LawKind.VISCO])
    def test_other_antiderivatives_against_quadrature(self, kind):
        law = ConstitutiveLaw(kind, 1.4, 0.5)
        ref, _ = quad(lambda s: float(law.pressure(s)), 0.5, 1.7)
        assert float(law.antiderivative(1.7)) == pytest.approx(ref, rel=1e-12)

    def test_gt_law(self):
        assert pressure(GT, 3.5) == 3.5
        assert np.all(pressure_derivative(GT, np.array([-2.0, 0.1, 7.0])) == 1.0)
        assert internal_energy_P(GT, 2.0) == 2.0

    def test_sign_invariants_on_sampled_range(self):
        x = np.linspace(1e-3, 1e3, 2001)
        assert np.all(pressure(PSYS, x) > 0) and np.all(pressure_derivative(PSYS, x) < 0)
        euler = make_model("euler").law
        assert np.all(euler.dpressure(x) > 0)
        visco = make_model("visco").law
        assert np.all(visco.dpressure(np.linspace(-50, 50, 2001)) > 0)

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_nonpositive_argument_names_the_cell(self, bad):
        with pytest.raises(DomainError, match="cell 2"):
            pressure(PSYS, np.array([1.0, 2.0, bad]))

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            ConstitutiveLaw(LawKind.PSYSTEM, 1.0)
        with pytest.raises(ValueError):
            ConstitutiveLaw(LawKind.PSYSTEM, 1.4, tau_star=0.0)
        with pytest.raises(ValueError):
            make_model("visco", mu=0.0)


class TestModelSpec:
    def test_dimensions(self):
        dims = {m.value: make_model(m).state_dim for m in ModelName}
        assert dims == {"psystem": 2, "gt": 2, "euler": 2, "visco": 3}
        for m in ModelName:
            assert len(COMPONENTS[m]) == make_model(m).state_dim

    def test_admissible_range_guard(self):
        m = make_model("psystem")
        q = np.ones((2, 5))
        q[0, 3] = ADMISSIBLE_RANGE[1] * 2
        with pytest.raises(DomainError, match="cell 3"):
            m.check(q)
        q[0, 3] = np.nan
        with pytest.raises(DomainError, match="non-finite"):
            m.check(q)

    def test_wrong_shape(self):
        with pytest.raises(ValueError, match="shape"):
            make_model("visco").check(np.ones((2, 4)))

    @pytest.mark.parametrize("name", [m.value for m in ModelName])
    def test_stiff_source_vanishes_at_equilibrium(self, name):
        model = make_model(name)
        grid = Grid1D(-4, 4, 64)
        rng = np.random.default_rng(1)
        q = np.vstack([rng.uniform(0.5, 2, 64)] + [rng.normal(size=64)
                                                  for _ in range(model.state_dim - 1)])
        q = limit_relation(model, q, grid, 1.3)
        k, r = model.drive_index, model.relax_index
        src = 1.3 * q[r] + centered_difference(model.drive(q[k]), grid.dx, Boundary.ZEROFLUX)
        assert np.max(np.abs(src)) <= 1e-12 * np.max(np.abs(q[r]))


class TestInitialData:
    def test_profiles(self):
        x = np.array([-1.0, -1e-9, 0.0, 0.5])
        assert list(InitialData("discontinuous").profile(x)) == [2.0, 2.0, 1.0, 1.0]
        assert InitialData("smooth").profile(np.array([0.0]))[0] == 2.0
        xs = np.linspace(-4, 4, 17)
        assert np.array_equal(InitialData("smooth").profile(xs), np.exp(-100 * xs**2) + 1)

    def test_initial_state_samples_centres(self):
        grid = Grid1D(-2.0, 2.0, 4)  # centres -1.5, -0.5, 0.5, 1.5
        q = initial_state(make_model("psystem"), InitialData("discontinuous"), grid, 1.0)
        assert q[0, 1] == 2.0 and q[0, 2] == 1.0
        grid = Grid1D(-1.5, 1.5, 3)  # centre cell at x = 0
        q = initial_state(make_model("psystem"), InitialData("smooth"), grid, 1.0)
        assert q[0, 1] == 2.0

    def test_constant_state_is_at_rest(self):
        q = initial_state(make_model("psystem"), InitialData("constant", 1.0), Grid1D(0, 1, 10), 1.0)
        assert np.all(q[1] == 0.0)

    def test_visco_starts_with_zero_v_and_z(self):
        q = initial_state(make_model("visco"), InitialData("smooth"), Grid1D(-4, 4, 50), 1.0)
        assert np.all(q[1] == 0) and np.all(q[2] == 0)

    def test_well_prepared_velocity_formula(self):
        grid = Grid1D(-4, 4, 40)
        q = initial_state(make_model("euler"), InitialData("smooth"), grid, 2.0)
        p = q[0] ** 1.4
        i = np.arange(1, 39)
        assert np.allclose(q[1, i], -(p[i + 1] - p[i - 1]) / (2 * 2.0 * grid.dx), rtol=1e-14)


class TestLimitRelation:
    def test_constant_gives_zero(self):
        q = limit_relation(make_model("psystem"), np.vstack([np.full(6, 1.7), np.ones(6)]),
                           Grid1D(0, 0.12, 6), 1.0)
        assert np.all(q[1] == 0)

    def test_step_example(self):
        grid = Grid1D(0.0, 0.08, 4)  # dx = 0.02
        q = limit_relation(make_model("psystem"), np.vstack([[2.0, 2.0, 1.0, 1.0], np.zeros(4)]),
                           grid, 1.0)
        oracle = -(1.0 - math.exp(-1.4 * math.log(2.0))) / 0.04
        assert q[1, 1] == pytest.approx(oracle, rel=1e-14)
        assert q[1, 1] == pytest.approx(-15.5268, abs=5e-5)

    def test_gt_unit_gradient(self):
        grid = Grid1D(0.0, 1.0, 10)
        q = limit_relation(make_model("gt"), np.vstack([grid.centers, np.zeros(10)]), grid, 2.0)
        assert np.allclose(q[1, 1:-1], -0.5, rtol=1e-12)

    def test_visco_relation(self):
        grid = Grid1D(0.0, 1.0, 10)
        model = make_model("visco", mu=3.0)
        q = np.vstack([np.ones(10), 2 * grid.centers, np.zeros(10)])
        assert np.allclose(limit_relation(model, q, grid, 1.5)[2, 1:-1], 3.0 / 1.5 * 2, rtol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 20), st.floats(0.05, 20), st.floats(0.2, 5), st.floats(0.2, 5))
def test_relative_energy_independent_of_reference(tau, tau_bar, s1, s2):
    from aprelax.entropy import relative_P

    a = relative_P(ConstitutiveLaw(LawKind.PSYSTEM, 1.4, s1), tau, tau_bar)
    b = relative_P(ConstitutiveLaw(LawKind.PSYSTEM, 1.4, s2), tau, tau_bar)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)
