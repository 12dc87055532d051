import math

import numpy as np
import pytest

from resodyn import (
    AnalyticityReport,
    CorrelationSet,
    DivergentIntegralError,
    FormFactor,
    ThermalConfig,
    analyticity_check,
    g_omega_inverse,
    line_density,
    pv_coth,
    sokhotski,
    thermal_form_factor,
    xi,
    xi_lorentzian,
    xi_lorentzian_richardson,
)
from resodyn.spectral import coth_line_density, pv_line_density


class TestThermalFormFactor:
    def test_magnitude_identity_random_u(self, ohmic3d):
        beta = 1.7
        rng = np.random.default_rng(11)
        for u in rng.uniform(-6, 6, 100):
            if abs(u) < 1e-3:
                continue
            gb = thermal_form_factor(ohmic3d, beta, float(u))
            expected = u**2 * float(ohmic3d.radial_sq(abs(u))) / abs(-math.expm1(-beta * u))
            assert abs(gb) ** 2 == pytest.approx(expected, rel=1e-12)

    def test_vanishes_at_origin_above_threshold(self, ohmic3d):
        assert thermal_form_factor(ohmic3d, beta=2.0, u=0.0) == 0.0

    def test_finite_at_origin_on_threshold(self):
        g = FormFactor.power_exp(p=-0.5, m=2, amplitude=1.3)
        beta = 2.0
        val = thermal_form_factor(g, beta, 0.0)
        assert abs(val) == pytest.approx(1.3 / math.sqrt(beta), rel=1e-12)

    def test_coth_identity(self, ohmic3d):
        beta = 0.9
        for u in (0.3, 1.1, 2.7):
            lhs = abs(thermal_form_factor(ohmic3d, beta, u)) ** 2 \
                + abs(thermal_form_factor(ohmic3d, beta, -u)) ** 2
            rhs = u**2 * float(ohmic3d.radial_sq(u)) / math.tanh(beta * u / 2)
            assert lhs == pytest.approx(rhs, rel=1e-12)


class TestXi:
    def test_reference_value_d3(self, ohmic3d):
        # eta = 1, beta = 1: 4 pi e^{-2} coth(1/2)
        expected = 4 * math.pi * math.exp(-2) / math.tanh(0.5)
        assert xi(ohmic3d, 1.0, 1.0) == pytest.approx(expected, rel=1e-14)

    def test_zero_above_threshold(self, ohmic3d):
        assert xi(ohmic3d, 1.0, 0.0) == 0.0

    def test_thermal_value_on_threshold(self):
        g = FormFactor.power_exp(p=-0.5, m=2, amplitude=0.7, dimension=3)
        beta = 1.9
        assert xi(g, beta, 0.0) == pytest.approx(8 * math.pi * 0.7**2 / beta, rel=1e-14)
        # and it is the continuous limit
        assert xi(g, beta, 1e-7) == pytest.approx(xi(g, beta, 0.0), rel=1e-5)

    def test_infinite_below_threshold(self):
        g = FormFactor.power_exp(p=-0.5, m=2, dimension=1)
        assert math.isinf(xi(g, 1.0, 0.0))

    def test_monotone_in_temperature(self, ohmic3d):
        for eta in (0.4, 1.0, 3.0):
            assert xi(ohmic3d, 0.5, eta) >= xi(ohmic3d, 1.0, eta)

    def test_nonnegative(self, ohmic3d):
        for eta in np.linspace(0, 5, 20):
            assert xi(ohmic3d, 1.3, float(eta)) >= 0.0


class TestXiLorentzian:
    def test_converges_to_delta_limit(self, ohmic3d):
        target = xi(ohmic3d, 1.0, 1.0)
        val = xi_lorentzian(ohmic3d, 1.0, 1.0, 1e-3)
        assert abs(val - target) / target < 1e-2

    def test_quadratic_in_amplitude(self, ohmic3d):
        v1 = xi_lorentzian(ohmic3d, 1.0, 1.0, 1e-2)
        v2 = xi_lorentzian(ohmic3d.scaled(3.0), 1.0, 1.0, 1e-2)
        assert v2 == pytest.approx(9 * v1, rel=1e-10)

    def test_origin_sequence_decreases_to_zero(self, ohmic3d):
        vals = [xi_lorentzian(ohmic3d, 1.0, 0.0, eps) for eps in (1e-1, 1e-2, 1e-3)]
        assert vals[0] > vals[1] > vals[2] > 0

    def test_richardson_extrapolation(self, ohmic3d):
        target = xi(ohmic3d, 1.0, 1.0)
        val = xi_lorentzian_richardson(ohmic3d, 1.0, 1.0, 1e-3)
        assert abs(val - target) / target < 1e-4


class TestGOmegaInverse:
    def test_reference_value_pi(self, ohmic3d):
        assert g_omega_inverse(ohmic3d) == pytest.approx(math.pi, rel=1e-12)

    def test_scaling(self, ohmic3d):
        assert g_omega_inverse(ohmic3d.scaled(2.0)) == pytest.approx(4 * math.pi, rel=1e-12)

    def test_self_convergence(self, line1d):
        v1 = g_omega_inverse(line1d, rtol=1e-8)
        v2 = g_omega_inverse(line1d, rtol=1e-12)
        assert abs(v1 - v2) / abs(v2) < 1e-8

    def test_divergent_profile_raises(self):
        g = FormFactor.power_exp(p=-0.5, m=2, dimension=1)
        with pytest.raises(DivergentIntegralError):
            g_omega_inverse(g)


class TestPrincipalValue:
    def test_odd_kernel_vanishes(self, ohmic3d):
        assert pv_coth(ohmic3d, 1.0, 0.0) == 0.0

    def test_continuity_in_delta(self, ohmic3d):
        base = pv_coth(ohmic3d, 1.0, 1.0)
        d1 = abs(pv_coth(ohmic3d, 1.0, 1.0 + 1e-2) - base)
        d2 = abs(pv_coth(ohmic3d, 1.0, 1.0 + 1e-3) - base)
        assert d2 < d1 < 0.1

    def test_assembled_from_sokhotski_real_parts(self, ohmic3d):
        beta, delta = 1.3, 0.8
        direct = pv_coth(ohmic3d, beta, delta)
        assembled = sokhotski(ohmic3d, beta, -delta).real - sokhotski(ohmic3d, beta, delta).real
        assert assembled == pytest.approx(direct, abs=1e-8 * max(1, abs(direct)))

    def test_scaling(self, ohmic3d):
        v1 = pv_coth(ohmic3d, 1.0, 0.7)
        v2 = pv_coth(ohmic3d.scaled(2.0), 1.0, 0.7)
        assert v2 == pytest.approx(4 * v1, rel=1e-10)


class TestSokhotski:
    def test_imaginary_part_is_density(self, ohmic3d):
        beta = 1.1
        rng = np.random.default_rng(5)
        for theta in rng.uniform(-4, 4, 50):
            val = sokhotski(ohmic3d, beta, float(theta))
            assert val.imag == pytest.approx(
                -math.pi * float(line_density(ohmic3d, beta, -theta)), rel=1e-12)
            assert val.imag <= 0.0

    def test_outside_support(self, ohmic3d):
        val = sokhotski(ohmic3d, 1.0, 60.0)
        assert abs(val.imag) < 1e-10

    def test_combined_thetas_give_xi(self, ohmic3d):
        # Im[sok(theta)] + Im[sok(-theta)] = -pi (sigma(-theta) + sigma(theta))
        beta, theta = 0.8, 1.4
        total = sokhotski(ohmic3d, beta, theta).imag + sokhotski(ohmic3d, beta, -theta).imag
        assert total == pytest.approx(-math.pi * xi(ohmic3d, beta, abs(theta)), rel=1e-12)

    def test_scaling(self, ohmic3d):
        v1 = sokhotski(ohmic3d, 1.0, 0.9)
        v2 = sokhotski(ohmic3d.scaled(1.5), 1.0, 0.9)
        assert v2 == pytest.approx(2.25 * v1, rel=1e-10)


class TestLineDensities:
    def test_density_sum_is_coth_density(self, ohmic3d):
        beta = 1.2
        for u in (0.3, 1.0, 4.2):
            total = line_density(ohmic3d, beta, u) + line_density(ohmic3d, beta, -u)
            assert total == pytest.approx(float(coth_line_density(ohmic3d, beta, u)), rel=1e-12)

    def test_pv_line_self_convergence(self, ohmic3d):
        v1 = pv_line_density(ohmic3d, 1.0, 0.9, rtol=1e-8)
        v2 = pv_line_density(ohmic3d, 1.0, 0.9, rtol=1e-12)
        assert abs(v1 - v2) <= 1e-8 * max(1.0, abs(v2))


class TestAnalyticityCheck:
    def test_admissible_passes(self):
        g = FormFactor.power_exp(p=0.5, m=2)
        cfg = ThermalConfig(beta=1.0, coupling_constant=0.0, omega_prime=1.0)
        assert analyticity_check(g, cfg).status == "pass"

    def test_strip_violation_fails(self):
        # the report re-verifies the strip bound even for raw parameter bags
        # (ThermalConfig would reject omega_prime = 7 at construction)
        from types import SimpleNamespace

        g = FormFactor.power_exp(p=0.5, m=2)
        bad = SimpleNamespace(beta=1.0, omega_prime=7.0)
        report = analyticity_check(g, bad)
        assert report.status == "fail" and any("omega_prime" in r for r in report.reasons)

    def test_inadmissible_exponent_fails(self):
        cfg = ThermalConfig(beta=1.0, coupling_constant=0.0, omega_prime=1.0)
        report = analyticity_check(FormFactor.power_exp(p=0.3, m=1), cfg)
        assert report.status == "fail" and any("exponent" in r for r in report.reasons)

    def test_tabulated_unverified(self):
        g = FormFactor.tabulated([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])
        cfg = ThermalConfig(beta=1.0, coupling_constant=0.0, omega_prime=1.0)
        report = analyticity_check(g, cfg)
        assert report.status == "unverified"
        assert isinstance(report, AnalyticityReport)


class TestCorrelationSet:
    def test_memoization_consistency(self, ohmic3d):
        corr = CorrelationSet(ohmic3d, 1.0)
        assert corr.xi(1.0) == xi(ohmic3d, 1.0, 1.0)
        assert corr.pv_coth(0.7) == pytest.approx(pv_coth(ohmic3d, 1.0, 0.7), rel=1e-12)
        assert corr.sokhotski(0.4) == corr.sokhotski(0.4)

    def test_coth_delta_zero_relation(self, infrared3d):
        corr = CorrelationSet(infrared3d, 2.0)
        assert corr.coth_delta_zero() == pytest.approx(
            0.5 * math.pi * xi(infrared3d, 2.0, 0.0), rel=1e-14)

    def test_coth_delta_zero_limit_numerically(self, infrared3d):
        # Lorentzian evaluation of the same limit agrees with (pi/2) xi(0)
        corr = CorrelationSet(infrared3d, 2.0)
        eps = 1e-4
        from resodyn.spectral import _quad
        g, beta = infrared3d, 2.0

        def f(r):
            return float(coth_line_density(g, beta, r)) * eps / (r * r + eps * eps)

        approx = _quad(f, 0.0, g.support_radius, points=[eps])
        assert approx == pytest.approx(corr.coth_delta_zero(), rel=2e-3)
