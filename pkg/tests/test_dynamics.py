import math

import numpy as np
import pytest
from scipy.linalg import expm

from resodyn import (
    DensityMatrix,
    FormFactor,
    Observable,
    ResonanceDynamics,
    SystemSpec,
    SystemVector,
    ThermalConfig,
    gibbs_weights,
)

from conftest import random_density


@pytest.fixture
def engine(qubit, ohmic3d, thermal):
    return ResonanceDynamics(qubit, ohmic3d, thermal)


def coherent_qubit():
    return DensityMatrix(np.full((2, 2), 0.5, dtype=complex))


class TestAmplitudes:
    def test_pure_logic_states(self, engine, qubit, thermal):
        beta, gap = thermal.beta, 1.0
        for j, expected_c0 in ((0, 1.0 / (1.0 + math.exp(beta * gap))),
                               (1, -1.0 / (1.0 + math.exp(-beta * gap)))):
            rho = DensityMatrix(np.diag([1.0 - j, float(j)]).astype(complex))
            exp = engine.expansion(Observable.matrix_unit(0, 0, 2), rho0=rho)
            by_e = {}
            for eps, amp in exp.terms:
                by_e.setdefault(round(eps.real, 9), 0j)
                by_e[round(eps.real, 9)] += amp
            # no contribution at the gap frequencies (C_Delta = 0)
            assert abs(by_e.get(1.0, 0)) < 1e-14
            assert abs(by_e.get(-1.0, 0)) < 1e-14
            moving = [a for eps, a in exp.terms if eps != 0]
            assert sum(moving) == pytest.approx(expected_c0, abs=1e-12)

    def test_identity_observable_sums_to_one(self, engine):
        rng = np.random.default_rng(2)
        rho = DensityMatrix(random_density(rng, 2))
        exp = engine.expansion(Observable(np.eye(2, dtype=complex)), rho0=rho)
        assert exp.ergodic_mean == pytest.approx(1.0, abs=1e-12)
        total = exp.ergodic_mean + sum(a for e, a in exp.terms if e != 0)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_illustration_population_amplitude(self, engine, thermal):
        exp = engine.expansion(Observable.matrix_unit(0, 0, 2), rho0=coherent_qubit())
        moving = [a for eps, a in exp.terms if eps != 0 and abs(eps.real) < 1e-9]
        assert sum(moving) == pytest.approx(-0.5 * math.tanh(thermal.beta / 2), abs=1e-12)

    def test_illustration_coherence_amplitudes(self, engine):
        # [rho]_{1,2} = <p_{2,1}> rotates with eps_{+Delta}; its conjugate
        # entry with eps_{-Delta}; both with amplitude 1/2
        exp_12 = engine.expansion(Observable.matrix_unit(1, 0, 2), rho0=coherent_qubit())
        amps = [(eps, a) for eps, a in exp_12.terms if abs(a) > 1e-13]
        assert len(amps) == 1
        eps, a = amps[0]
        assert eps.real == pytest.approx(1.0, abs=1e-3) and a == pytest.approx(0.5, abs=1e-12)
        exp_21 = engine.expansion(Observable.matrix_unit(0, 1, 2), rho0=coherent_qubit())
        amps = [(eps, a) for eps, a in exp_21.terms if abs(a) > 1e-13]
        assert amps[0][0].real == pytest.approx(-1.0, abs=1e-3)

    def test_representation_independence(self, engine):
        # the paper's alternative vector for the coherent state gives the
        # same expansion as the canonical square-root representative
        alt = np.zeros(4, dtype=complex)
        alt[0 * 2 + 1] = alt[1 * 2 + 1] = 1 / math.sqrt(2)
        exp_rho = engine.expansion(Observable.matrix_unit(0, 0, 2), rho0=coherent_qubit())
        exp_vec = engine.expansion(Observable.matrix_unit(0, 0, 2), psi0=SystemVector(alt))
        for (e1, a1), (e2, a2) in zip(exp_rho.terms, exp_vec.terms):
            assert e1 == e2 and a1 == pytest.approx(a2, abs=1e-12)


class TestEvolveObservable:
    def test_free_evolution_matches_matrix_exponential(self, ohmic3d):
        rng = np.random.default_rng(8)
        n = 3
        sys = SystemSpec((0.0, 0.7, 1.9), np.zeros((n, n)))
        free = ResonanceDynamics(sys, ohmic3d, ThermalConfig(beta=1.0, coupling_constant=0.0))
        rho = DensityMatrix(random_density(rng, n))
        times = np.linspace(0, 12, 25)
        traj = free.reduced_density_trajectory(rho, times)
        h = sys.hamiltonian
        for i, t in enumerate(times):
            u = expm(-1j * t * h)
            assert np.max(np.abs(traj.rho[i] - u @ rho.entries @ u.conj().T)) < 1e-12

    def test_populations_constant_at_lambda_zero(self, qubit, ohmic3d):
        free = ResonanceDynamics(qubit, ohmic3d, ThermalConfig(beta=1.0, coupling_constant=0.0))
        ev = free.evolve_observable(Observable.matrix_unit(0, 0, 2),
                                    np.linspace(0, 30, 40), rho0=coherent_qubit())
        assert np.max(np.abs(ev.values - ev.values[0])) < 1e-12

    def test_boundedness(self, engine):
        ev = engine.evolve_observable(Observable.matrix_unit(1, 0, 2),
                                      np.linspace(0, 200, 60), rho0=coherent_qubit())
        assert np.all(np.abs(ev.values) <= ev.expansion.amplitude_bound + 1e-9)

    def test_remainder_envelope_forms(self, engine):
        exp = engine.expansion(Observable.matrix_unit(0, 0, 2), rho0=coherent_qubit())
        assert exp.remainder_bound_exponent == pytest.approx(engine.thermal.omega_prime / 2)
        env = exp.remainder_envelope(np.array([0.0, 1.0]), engine.thermal.lam)
        assert env[0] == pytest.approx(engine.thermal.lam**2)
        assert env[1] < env[0]


class TestTrajectory:
    def test_t0_reproduces_initial_state(self, engine):
        rng = np.random.default_rng(12)
        rho = DensityMatrix(random_density(rng, 2))
        traj = engine.reduced_density_trajectory(rho, [0.0])
        deviation = np.max(np.abs(traj.rho[0] - rho.entries))
        assert deviation <= 1e-12  # leading-order sum is exact at t = 0

    def test_trace_and_hermiticity(self, engine):
        traj = engine.reduced_density_trajectory(coherent_qubit(), np.linspace(0, 80, 50))
        assert np.max(np.abs(np.trace(traj.rho, axis1=1, axis2=2) - 1)) < 1e-10
        assert np.max(np.abs(traj.rho - np.conj(np.swapaxes(traj.rho, 1, 2)))) < 1e-10

    def test_thermalizing_qubit_reaches_gibbs(self, engine, qubit, thermal):
        horizon = 25.0 * engine.rates().tau_thermalization
        traj = engine.reduced_density_trajectory(coherent_qubit(), [horizon])
        target = np.diag(gibbs_weights(qubit, thermal.beta))
        assert np.max(np.abs(traj.rho[0] - target)) < 10 * thermal.lam**2

    def test_populations_constant_for_diagonal_coupling(self, ohmic3d, thermal):
        sys = SystemSpec((0.0, 1.0), np.diag([0.2, 0.9]).astype(complex))
        eng = ResonanceDynamics(sys, ohmic3d, thermal)
        traj = eng.reduced_density_trajectory(coherent_qubit(), np.linspace(0, 300, 60))
        pops = traj.populations
        assert np.max(np.abs(pops - pops[0])) < 1e-12


class TestErgodicAverage:
    def test_thermalizing_average_is_gibbs(self, engine, qubit, thermal):
        rng = np.random.default_rng(4)
        rho = DensityMatrix(random_density(rng, 2))
        w = gibbs_weights(qubit, thermal.beta)
        for m in range(2):
            for n in range(2):
                avg = engine.ergodic_average(Observable.matrix_unit(n, m, 2), rho0=rho)
                expected = w[m] if m == n else 0.0
                assert avg == pytest.approx(expected, abs=1e-12)

    def test_diagonal_coupling_keeps_initial_populations(self, ohmic3d, thermal):
        sys = SystemSpec((0.0, 1.0), np.diag([0.2, 0.9]).astype(complex))
        eng = ResonanceDynamics(sys, ohmic3d, thermal)
        rho = coherent_qubit()
        for m in range(2):
            for n in range(2):
                avg = eng.ergodic_average(Observable.matrix_unit(n, m, 2), rho0=rho)
                expected = rho.entries[m, m] if m == n else 0.0
                assert avg == pytest.approx(expected, abs=1e-12)

    def test_identity(self, engine):
        assert engine.ergodic_average(Observable(np.eye(2, dtype=complex)),
                                      rho0=coherent_qubit()) == pytest.approx(1.0, abs=1e-12)


class TestRates:
    def test_equal_diagonal_gives_half(self, ohmic3d, thermal):
        sys = SystemSpec((0.0, 1.0), np.array([[0.5, 0.4], [0.4, 0.5]], dtype=complex))
        eng = ResonanceDynamics(sys, ohmic3d, thermal)
        assert eng.rates().ratio == pytest.approx(0.5, rel=1e-8)

    def test_diagonal_coupling_infinite_marker(self, ohmic3d, thermal):
        sys = SystemSpec((0.0, 1.0), np.diag([0.3, 0.8]).astype(complex))
        eng = ResonanceDynamics(sys, ohmic3d, thermal)
        assert math.isinf(eng.rates().ratio)

    def test_second_order_ratio_formula(self, infrared3d, thermal):
        # with xi(0) > 0 the ratio picks up the dephasing channel:
        # ratio = (1/2) [1 + ((b-a)/|c|)^2 * xi(0) / (2 xi(Delta))]
        from resodyn import xi

        rng = np.random.default_rng(33)
        for _ in range(5):
            a, b = rng.uniform(-1, 1, 2)
            c = rng.uniform(0.2, 1.0)
            gap = rng.uniform(0.5, 3.0)
            beta = rng.uniform(0.3, 3.0)
            sys = SystemSpec((0.0, gap), np.array([[a, c], [c, b]], dtype=complex))
            eng = ResonanceDynamics(sys, infrared3d,
                                    ThermalConfig(beta=beta, coupling_constant=1e-2))
            formula = 0.5 * (1.0 + ((b - a) / c) ** 2
                             * xi(infrared3d, beta, 0.0) / (2 * xi(infrared3d, beta, gap)))
            assert eng.rates().ratio == pytest.approx(formula, rel=1e-6)

    def test_per_frequency_decay_times(self, engine):
        summary = engine.rates()
        per = dict(summary.per_frequency)
        assert math.isinf(per[0.0])  # the pinned zero mode never decays
        assert per[1.0] == pytest.approx(summary.tau_decoherence)
