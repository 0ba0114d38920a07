"""Density-operator measures: thermal states, dephasing, entropies,
coherence and athermality, and the free-energy identity tying them all."""

import math

import numpy as np
import pytest

from cthermo.linalg import IDENTITY_2, SIGMA_X, SIGMA_Z, dagger, eig_hermitian
from cthermo.states import (
    DensityOperator,
    athermality,
    dephase,
    equilibrium_free_energy,
    generalized_free_energy,
    relative_entropy,
    relative_entropy_of_coherence,
    thermal_state,
    von_neumann_entropy,
)


def random_state(rng, dim) -> DensityOperator:
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = m @ dagger(m)
    return DensityOperator(rho / np.trace(rho))


def random_hamiltonian(rng, dim):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (m + dagger(m))


PLUS = DensityOperator(0.5 * (IDENTITY_2 + SIGMA_X))
GROUND = DensityOperator(np.diag([0.0, 1.0]).astype(complex))
EXCITED = DensityOperator(np.diag([1.0, 0.0]).astype(complex))
MIXED = DensityOperator(IDENTITY_2 / 2)


class TestDensityOperator:
    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            DensityOperator(np.eye(2))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            DensityOperator(np.array([[0.5, 0.1], [0.3, 0.5]]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            DensityOperator(np.diag([1.2, -0.2]))


class TestThermalState:
    def test_infinite_temperature(self):
        assert np.allclose(thermal_state(SIGMA_Z, 0.0).matrix, IDENTITY_2 / 2)

    def test_zero_temperature_limit(self):
        rho = thermal_state(0.995 * SIGMA_Z / 2, 1e4)
        assert np.max(np.abs(rho.matrix - GROUND.matrix)) < 1e-10

    def test_qubit_populations(self):
        rho = thermal_state(SIGMA_Z / 2, 0.5)
        z = np.exp(0.25) + np.exp(-0.25)
        assert rho.matrix[0, 0].real == pytest.approx(np.exp(-0.25) / z, abs=1e-14)
        assert rho.matrix[1, 1].real == pytest.approx(np.exp(0.25) / z, abs=1e-14)

    def test_commutes_with_hamiltonian(self):
        rng = np.random.default_rng(10)
        h = random_hamiltonian(rng, 3)
        rho = thermal_state(h, 0.7)
        assert np.max(np.abs(h @ rho.matrix - rho.matrix @ h)) < 1e-12


class TestDephase:
    def test_diagonal_unchanged(self):
        basis = eig_hermitian(SIGMA_Z)
        rho = DensityOperator(np.diag([0.3, 0.7]))
        assert np.allclose(dephase(rho, basis).matrix, rho.matrix)

    def test_plus_state(self):
        assert np.allclose(dephase(PLUS, eig_hermitian(SIGMA_Z)).matrix, IDENTITY_2 / 2)

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            rho = random_state(rng, 3)
            basis = eig_hermitian(random_hamiltonian(rng, 3))
            once = dephase(rho, basis)
            assert np.max(np.abs(dephase(once, basis).matrix - once.matrix)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dephase(PLUS, eig_hermitian(np.eye(3)))


class TestRelativeEntropy:
    def test_self_is_zero(self):
        rng = np.random.default_rng(12)
        rho = random_state(rng, 2)
        assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)

    def test_pure_versus_mixed(self):
        assert relative_entropy(EXCITED, MIXED) == pytest.approx(math.log(2), abs=1e-12)

    def test_non_negative(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            assert relative_entropy(random_state(rng, 2), random_state(rng, 2)) >= 0.0

    def test_support_violation_is_infinite(self):
        assert relative_entropy(PLUS, GROUND) == math.inf


class TestVonNeumannEntropy:
    def test_pure(self):
        assert von_neumann_entropy(EXCITED) == 0.0

    def test_maximally_mixed(self):
        assert von_neumann_entropy(MIXED) == pytest.approx(math.log(2), abs=1e-12)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(14)
        from cthermo.linalg import unitary_step

        for _ in range(10):
            rho = random_state(rng, 3)
            u = unitary_step(random_hamiltonian(rng, 3), 0.9)
            rotated = DensityOperator(u @ rho.matrix @ dagger(u))
            assert von_neumann_entropy(rotated) == pytest.approx(
                von_neumann_entropy(rho), abs=1e-10
            )


class TestCoherence:
    def test_energy_diagonal_state(self):
        assert relative_entropy_of_coherence(GROUND, SIGMA_Z) == 0.0

    def test_maximally_coherent(self):
        assert relative_entropy_of_coherence(PLUS, SIGMA_Z) == pytest.approx(
            math.log(2), abs=1e-12
        )

    def test_two_route_on_model_initial_state(self):
        # S(rho || rho^d) must equal S(rho^d) - S(rho) computed from spectra
        from cthermo.driven_qubit import DrivenQubitParams, hamiltonian_at, initial_state

        p = DrivenQubitParams(omega0=0.995, omega=1.0, g=0.005, beta=0.5, a=0.3)
        rho = initial_state(p)
        h = hamiltonian_at(p, 0.0)
        direct = relative_entropy(rho, dephase(rho, eig_hermitian(h)))
        via_entropies = relative_entropy_of_coherence(rho, h)
        assert direct == pytest.approx(via_entropies, abs=1e-12)

    def test_phase_invariance(self):
        rng = np.random.default_rng(15)
        rho = random_state(rng, 2)
        phase = np.diag([1.0, np.exp(1.3j)])
        rotated = DensityOperator(phase @ rho.matrix @ dagger(phase))
        assert relative_entropy_of_coherence(rotated, SIGMA_Z) == pytest.approx(
            relative_entropy_of_coherence(rho, SIGMA_Z), abs=1e-12
        )


class TestAthermality:
    def test_thermal_input(self):
        h = 0.8 * SIGMA_Z
        assert athermality(thermal_state(h, 0.5), h, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_pure_excited_analytic(self):
        h = SIGMA_Z / 2
        beta = 0.5
        z = np.exp(0.25) + np.exp(-0.25)
        expected = beta * 0.5 + math.log(z)
        assert athermality(EXCITED, h, beta) == pytest.approx(expected, abs=1e-12)

    def test_model_initial_state_is_population_thermal(self):
        from cthermo.driven_qubit import DrivenQubitParams, hamiltonian_at, initial_state

        for a in (0.0, 0.3, 1.0):
            p = DrivenQubitParams(omega0=0.995, omega=1.0, g=0.005, beta=0.5, a=a)
            assert athermality(initial_state(p), hamiltonian_at(p, 0.0), 0.5) < 1e-12


class TestGeneralizedFreeEnergy:
    def test_thermal_reduces_to_equilibrium(self):
        h = 0.6 * SIGMA_Z + 0.2 * SIGMA_X
        beta = 0.9
        assert generalized_free_energy(thermal_state(h, beta), h, beta) == pytest.approx(
            equilibrium_free_energy(h, beta), abs=1e-12
        )

    def test_energy_entropy_identity(self):
        # F + (C + D)/beta = <H> - S/beta for every state
        rng = np.random.default_rng(16)
        beta = 0.5
        for dim in (2, 4):
            h = random_hamiltonian(rng, dim)
            for _ in range(20):
                rho = random_state(rng, dim)
                lhs = generalized_free_energy(rho, h, beta)
                rhs = rho.expectation(h) - von_neumann_entropy(rho) / beta
                assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_ground_state_composition(self):
        # for the pure ground state the coherence vanishes and
        # F_eq + D/beta collapses to the ground energy
        h = 0.7 * SIGMA_Z
        beta = 0.5
        rho = DensityOperator(np.diag([0.0, 1.0]))
        expected = equilibrium_free_energy(h, beta) + athermality(rho, h, beta) / beta
        assert expected == pytest.approx(-0.7, abs=1e-12)
        assert generalized_free_energy(rho, h, beta) == pytest.approx(expected, abs=1e-12)


class TestCoherencePlusAthermalityIdentity:
    def test_identity_on_random_states(self):
        # C + D = beta(<H> - F) - S, the algebraic backbone of the
        # closed-dynamics saturation
        rng = np.random.default_rng(17)
        beta = 0.5
        cases = [(2, 100), (4, 20)]
        for dim, count in cases:
            for _ in range(count):
                h = random_hamiltonian(rng, dim)
                rho = random_state(rng, dim)
                lhs = relative_entropy_of_coherence(rho, h) + athermality(rho, h, beta)
                rhs = (
                    beta * (rho.expectation(h) - equilibrium_free_energy(h, beta))
                    - von_neumann_entropy(rho)
                )
                assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_measures_non_negative(self):
        rng = np.random.default_rng(18)
        for _ in range(50):
            h = random_hamiltonian(rng, 2)
            rho = random_state(rng, 2)
            assert relative_entropy_of_coherence(rho, h) >= 0.0
            assert athermality(rho, h, 0.5) >= 0.0
