import math

import numpy as np
import pytest

from conftest import poisson_profile
from hardyheat.errors import DomainError, UnsupportedDatumError
from hardyheat.exponents import ProblemParams, exponent_profile
from hardyheat.fracop import Field, UniformGrid
from hardyheat.constructions import (SupersolutionParams, TestFunctionParams,
                                     choose_supersolution,
                                     critical_case_constants,
                                     energy_blowup_criterion, energy_gap,
                                     psi_differential_inequality,
                                     psi_eta_mass, psi_eta_value,
                                     psi_mass_constant, smooth_bump,
                                     supersolution_mixed_remainder,
                                     supersolution_residual,
                                     supersolution_value,
                                     y_ode_blowup_predictor)

PARAMS = ProblemParams(3, 0.5, 0.5, 2.0)
MU = 0.5


class TestPsiEta:
    def test_mass_law_ratio(self, prof_3_05):
        # int psi_eta = C eta^{-mu/(2s)}: quadruple eta -> factor 4^{-mu/(2s)}
        m1 = psi_eta_mass(TestFunctionParams(0.1, MU), prof_3_05)
        m4 = psi_eta_mass(TestFunctionParams(0.4, MU), prof_3_05)
        assert m4 / m1 == pytest.approx(4.0 ** (-MU / 1.0), rel=1e-4)

    def test_degenerate_weight_is_kernel(self, prof_3_05):
        params = TestFunctionParams(1.0, 0.0)
        x = 1.3
        assert psi_eta_value(x, params, prof_3_05) == pytest.approx(
            poisson_profile(3, x), rel=1e-6)
        assert psi_eta_mass(params, prof_3_05) == pytest.approx(1.0, abs=1e-6)

    def test_mass_law_slope_regression(self, prof_3_05):
        etas = np.geomspace(1e-2, 1.0, 9)
        masses = [psi_eta_mass(TestFunctionParams(float(e), MU), prof_3_05)
                  for e in etas]
        slope = np.polyfit(np.log(etas), np.log(masses), 1)[0]
        assert slope == pytest.approx(-MU / 1.0, abs=1e-2)

    def test_mass_constant_poisson_oracle(self, prof_3_05):
        # C_psi = omega int sigma^{3/2} H = sqrt(2)/2 for the 3-d Poisson
        # kernel (Beta-function evaluation)
        assert psi_mass_constant(prof_3_05, MU) == pytest.approx(
            math.sqrt(2.0) / 2.0, rel=1e-6)

    def test_differential_inequality(self, prof_3_05):
        slack = psi_differential_inequality(
            TestFunctionParams(0.05, MU), prof_3_05, 0.5,
            np.geomspace(0.05, 20.0, 20))
        assert slack >= 0.0


class TestPredictor:
    def C(self, prof, p):
        return psi_mass_constant(prof, MU) ** (1.0 - p)

    def test_zero_mass_never_fires(self, prof_3_05):
        p = ProblemParams(3, 0.5, 0.5, 1.2)
        assert y_ode_blowup_predictor(0.0, None, p, self.C(prof_3_05, 1.2)) is None

    def test_below_fujita_every_mass_fires(self, prof_3_05):
        p = ProblemParams(3, 0.5, 0.5, 1.2)
        C = self.C(prof_3_05, 1.2)
        for y0 in (1e-6, 1e-3, 1.0, 1e3):
            T = y_ode_blowup_predictor(y0, None, p, C)
            assert T is not None and 0.0 < T < math.inf

    def test_above_fujita_small_mass_never_fires(self, prof_3_05):
        p = ProblemParams(3, 0.5, 0.5, 2.0)
        C = self.C(prof_3_05, 2.0)
        assert y_ode_blowup_predictor(1e-6, None, p, C) is None

    def test_fixed_eta_matches_closed_form(self, prof_3_05):
        p = ProblemParams(3, 0.5, 0.5, 1.2)
        C = self.C(prof_3_05, 1.2)
        prof = exponent_profile(3, 0.5, 0.5)
        eta, Y0 = 0.05, 2.0
        cap = C * (2 * 0.5 / 3) * eta ** ((p.p - 1) * prof.mu / 1.0 - 1.0)
        ratio = Y0 ** (1 - p.p) / cap
        expected = -math.log1p(-ratio) / ((p.p - 1) * 3.0 * eta)
        assert y_ode_blowup_predictor(Y0, eta, p, C) == pytest.approx(expected)

    def test_horizon_decreases_with_mass(self, prof_3_05):
        p = ProblemParams(3, 0.5, 0.5, 1.2)
        C = self.C(prof_3_05, 1.2)
        horizons = [y_ode_blowup_predictor(y0, None, p, C)
                    for y0 in (0.01, 0.1, 1.0)]
        assert horizons[0] > horizons[1] > horizons[2]


class TestSupersolution:
    def test_choice_canonical_instance(self, prof_3_05):
        sp = choose_supersolution(PARAMS, prof_3_05)
        assert sp.gamma == pytest.approx(0.75, abs=1e-12)
        assert sp.A > 0.0
        assert sp.theta * (PARAMS.p - 1.0) == pytest.approx(2 * PARAMS.s,
                                                            rel=1e-15)
        assert sp.beta * 2.0 * PARAMS.s == pytest.approx(1.0, rel=1e-15)

    def test_regime_errors(self, prof_3_05):
        with pytest.raises(DomainError):
            choose_supersolution(ProblemParams(3, 0.5, 0.5, 3.0), prof_3_05)
        with pytest.raises(DomainError):
            choose_supersolution(ProblemParams(3, 0.5, 0.5, 1.4), prof_3_05)

    def test_residual_certifies(self, prof_3_05):
        sp = choose_supersolution(PARAMS, prof_3_05)
        res = supersolution_residual(sp, PARAMS, prof_3_05)
        assert res >= -1e-6

    def test_inflated_amplitude_fails(self, prof_3_05):
        sp = choose_supersolution(PARAMS, prof_3_05)
        radii = np.geomspace(0.05, 4.0, 8)
        times = [0.0, 4.0]
        failed = False
        A = sp.A
        for _ in range(5):
            A *= 2.0
            trial = SupersolutionParams(A=A, gamma=sp.gamma, T=sp.T,
                                        theta=sp.theta, beta=sp.beta)
            if supersolution_residual(trial, PARAMS, prof_3_05,
                                      radii=radii, times=times) < -1e-6:
                failed = True
                break
        assert failed

    def test_mixed_remainder_nonnegative(self, prof_3_05):
        sp = choose_supersolution(PARAMS, prof_3_05)
        worst = supersolution_mixed_remainder(sp, prof_3_05,
                                              np.geomspace(0.1, 5.0, 6))
        assert worst >= 0.0

    def test_self_similar_identity(self, prof_3_05):
        # w = A (T+t)^{-theta + gamma/(2s) + N/(2s)} |x|^{-gamma} h(x, t+T)
        from hardyheat.kernel import h_value
        sp = choose_supersolution(PARAMS, prof_3_05)
        for (r, t) in [(0.5, 0.0), (1.5, 2.0), (3.0, 7.5)]:
            tau = sp.T + t
            direct = float(supersolution_value(sp, prof_3_05, r, t))
            alt = (sp.A * tau ** (-sp.theta + sp.gamma / 1.0 + 3.0 / 1.0)
                   * r ** (-sp.gamma) * h_value(prof_3_05, r, tau))
            assert direct == pytest.approx(alt, rel=1e-10)


class TestEnergyCriterion:
    def grid_and_bump(self):
        g = UniformGrid(3, 8.0, 32)
        return g, Field.from_radial(g, smooth_bump(2.0))

    def test_zero_datum_false(self):
        g, _ = self.grid_and_bump()
        zero = Field(g, np.zeros((32,) * 3))
        assert not energy_blowup_criterion(zero, PARAMS, 2.0)

    def test_amplitude_threshold_by_bisection(self):
        from hardyheat.quadrature import bisect_root
        g, base = self.grid_and_bump()
        lhs1, rhs1 = energy_gap(base, PARAMS, 2.0, epsilon=1.0)
        a_star = (rhs1 / lhs1) ** (1.0 / (PARAMS.p - 1.0))

        def gap(a):
            return a ** (PARAMS.p + 1.0) * lhs1 - a ** 2 * rhs1

        root = bisect_root(gap, 1e-3 * a_star, 1e3 * a_star)
        assert root == pytest.approx(a_star, rel=1e-10)
        assert energy_blowup_criterion(
            Field(g, 1.5 * a_star * base.values), PARAMS, 2.0)
        assert not energy_blowup_criterion(
            Field(g, 0.5 * a_star * base.values), PARAMS, 2.0)

    def test_unsupported_datum(self):
        g, base = self.grid_and_bump()
        with pytest.raises(UnsupportedDatumError):
            energy_gap(base, PARAMS, 0.5)
        with pytest.raises(UnsupportedDatumError):
            energy_gap(Field(g, -base.values), PARAMS, 2.0)


class TestCriticalConstants:
    PC = ProblemParams(3, 0.5, 0.5, 1.4)

    def test_finite_and_stable(self):
        c1, c3 = critical_case_constants(self.PC, m=3.4, kappa=0.05)
        assert math.isfinite(c1) and c1 > 0.0
        assert math.isfinite(c3) and c3 > 0.0

    def test_kappa_zero_reduces_to_unweighted(self):
        c1a, c3a = critical_case_constants(self.PC, m=3.4, kappa=0.0,
                                           check_refinement=False)
        c1b, c3b = critical_case_constants(self.PC, m=3.4, kappa=0.05,
                                           check_refinement=False)
        assert c1a == c1b                 # kappa only enters C3
        assert c3a < c3b                  # the weight is >= 1

    def test_m_at_p_prime_probe(self):
        # boundary probe: with the C^2 bump both integrals stay finite at
        # m = p' (the phi-exponent margin is not what controls finiteness)
        c1, c3 = critical_case_constants(self.PC, m=3.5, kappa=0.05,
                                         check_refinement=False)
        assert math.isfinite(c1) and math.isfinite(c3)

    def test_requires_critical_power(self):
        with pytest.raises(DomainError):
            critical_case_constants(ProblemParams(3, 0.5, 0.5, 1.5),
                                    m=3.4, kappa=0.05)
        with pytest.raises(DomainError):
            critical_case_constants(self.PC, m=0.9, kappa=0.05)
