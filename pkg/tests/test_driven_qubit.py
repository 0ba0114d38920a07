"""Closed-form model checks: every analytic expression is validated against
an independent numeric route (direct propagation, finite differences,
quadrature, or 1-D minimization)."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from cthermo.driven_qubit import (
    DrivenQubitParams,
    adiabatic_time,
    analytic_work,
    averaged_work,
    energy_basis_rotation,
    extraction_condition,
    hamiltonian_at,
    initial_state,
    optimal_frequency,
    propagator_at,
    rotating_frame_state,
)
from cthermo.linalg import IDENTITY_2, SIGMA_X, SIGMA_Z, dagger, eig_hermitian
from cthermo.states import (
    DensityOperator,
    athermality,
    relative_entropy_of_coherence,
    thermal_state,
    von_neumann_entropy,
)

FIG2 = DrivenQubitParams(omega0=0.995, omega=1.0, g=0.005, beta=0.5, a=0.3)


def propagate(p: DrivenQubitParams, rho0: DensityOperator, t: float) -> DensityOperator:
    u = propagator_at(p, t)
    return DensityOperator(u @ rho0.matrix @ dagger(u))


class TestParams:
    def test_derived_quantities(self):
        p = FIG2
        assert p.detuning == pytest.approx(-0.005)
        assert p.energy_gap == pytest.approx(math.hypot(0.005, 0.995))
        assert p.rabi_frequency == pytest.approx(math.hypot(0.005, 0.005))
        assert p.protocol_period == pytest.approx(2 * math.pi)
        assert p.rabi_period == pytest.approx(2 * math.pi / p.rabi_frequency)

    @pytest.mark.parametrize(
        "kw",
        [
            dict(omega=0.0),
            dict(omega=-1.0),
            dict(g=-0.1),
            dict(beta=-0.5),
            dict(a=1.5),
            dict(a=-0.1),
        ],
    )
    def test_invalid_parameters(self, kw):
        base = dict(omega0=1.0, omega=1.0, g=0.1, beta=1.0, a=0.0)
        base.update(kw)
        with pytest.raises(ValueError):
            DrivenQubitParams(**base)


class TestHamiltonian:
    def test_initial_form(self):
        assert np.allclose(
            hamiltonian_at(FIG2, 0.0), 0.5 * (0.995 * SIGMA_Z + 0.005 * SIGMA_X)
        )

    def test_constant_spectrum(self):
        t = 0.37 * FIG2.protocol_period
        values = eig_hermitian(hamiltonian_at(FIG2, t)).values
        assert np.allclose(values, [-FIG2.energy_gap / 2, FIG2.energy_gap / 2], atol=1e-14)

    def test_periodicity(self):
        t = 2.31
        h1 = hamiltonian_at(FIG2, t)
        h2 = hamiltonian_at(FIG2, t + FIG2.protocol_period)
        assert np.max(np.abs(h1 - h2)) < 1e-12


class TestPropagator:
    def test_identity_at_zero(self):
        assert np.allclose(propagator_at(FIG2, 0.0), IDENTITY_2)

    def test_unitarity(self):
        for t in (0.0, 1.7, 55.0, FIG2.rabi_period):
            u = propagator_at(FIG2, t)
            assert np.max(np.abs(dagger(u) @ u - IDENTITY_2)) < 1e-12

    def test_schrodinger_residual(self):
        # central finite difference of U against -i H U
        rng = np.random.default_rng(20)
        h = 1e-5
        for t in rng.uniform(0.5, 80.0, size=10):
            du = (propagator_at(FIG2, t + h) - propagator_at(FIG2, t - h)) / (2 * h)
            residual = du + 1j * hamiltonian_at(FIG2, t) @ propagator_at(FIG2, t)
            assert np.max(np.abs(residual)) < 1e-6

    def test_matches_stepped_propagator_second_order(self):
        # midpoint-exponential stepping converges to the closed form at
        # order dt^2; the absolute level at tau_R/1e4 is ~4e-4
        from cthermo.dynamics import evolve_unitary

        rho0 = initial_state(FIG2)
        t_end = FIG2.rabi_period
        errs = []
        for n in (1e4, 2e4):
            _, u = evolve_unitary(lambda t: hamiltonian_at(FIG2, t), rho0, t_end, t_end / n)
            errs.append(np.max(np.abs(u - propagator_at(FIG2, t_end))))
        assert errs[0] < 5e-4
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)


class TestEnergyBasisRotation:
    def test_identity_for_untilted_field(self):
        p = DrivenQubitParams(omega0=1.0, omega=1.0, g=0.0, beta=0.5)
        assert np.allclose(energy_basis_rotation(p, 3.3), IDENTITY_2)

    def test_diagonalizes(self):
        for t in (0.0, 7.7, 301.0):
            r = energy_basis_rotation(FIG2, t)
            d = r @ hamiltonian_at(FIG2, t) @ dagger(r)
            assert abs(d[0, 1]) + abs(d[1, 0]) < 1e-12
            # excited level first by convention
            assert d[0, 0].real == pytest.approx(FIG2.energy_gap / 2, abs=1e-14)

    def test_protocol_periodicity(self):
        t = 1.234
        assert np.allclose(
            energy_basis_rotation(FIG2, t),
            energy_basis_rotation(FIG2, t + FIG2.protocol_period),
            atol=1e-12,
        )


class TestInitialState:
    def test_incoherent_is_thermal(self):
        p = DrivenQubitParams(omega0=0.995, omega=1.0, g=0.005, beta=0.5, a=0.0)
        expected = thermal_state(hamiltonian_at(p, 0.0), 0.5)
        assert np.max(np.abs(initial_state(p).matrix - expected.matrix)) < 1e-12

    def test_maximal_coherence_is_pure(self):
        p = DrivenQubitParams(omega0=0.995, omega=1.0, g=0.005, beta=0.5, a=1.0)
        assert initial_state(p).purity() == pytest.approx(1.0, abs=1e-12)

    def test_off_diagonal_amplitude(self):
        rho = initial_state(FIG2)
        basis = eig_hermitian(hamiltonian_at(FIG2, 0.0))
        in_basis = dagger(basis.vectors) @ rho.matrix @ basis.vectors
        p_g = in_basis[0, 0].real
        assert abs(in_basis[0, 1]) == pytest.approx(
            FIG2.a * math.sqrt(p_g * (1 - p_g)), abs=1e-12
        )


class TestRotatingFrameState:
    def frame_transform(self, p, t, rho):
        phase = np.exp(-0.5j * p.omega * t)
        rz = np.diag([phase, np.conj(phase)])
        v = dagger(rz) @ energy_basis_rotation(p, t)
        return v @ rho.matrix @ dagger(v)

    def test_initial_form(self):
        x = 0.5 * FIG2.beta * FIG2.energy_gap
        expected = 0.5 * (
            IDENTITY_2 - math.tanh(x) * SIGMA_Z + FIG2.a / math.cosh(x) * SIGMA_X
        )
        assert np.max(np.abs(rotating_frame_state(FIG2, 0.0).matrix - expected)) < 1e-12

    def test_matches_transformed_lab_state(self):
        rho0 = initial_state(FIG2)
        for t in np.linspace(0.0, 2 * FIG2.rabi_period, 17):
            direct = self.frame_transform(FIG2, t, propagate(FIG2, rho0, t))
            closed = rotating_frame_state(FIG2, t).matrix
            assert np.max(np.abs(direct - closed)) < 1e-10

    def test_adiabatic_limit_preserves_coherence_magnitude(self):
        p = DrivenQubitParams(omega0=0.995, omega=1e-4 * 0.995, g=0.005, beta=0.5, a=0.3)
        start = abs(rotating_frame_state(p, 0.0).matrix[0, 1])
        for frac in (0.25, 0.5, 1.0):
            now = abs(rotating_frame_state(p, frac * p.rabi_period).matrix[0, 1])
            assert now == pytest.approx(start, abs=1e-4)


class TestAnalyticWork:
    def test_zero_at_rabi_period(self):
        assert analytic_work(FIG2, FIG2.rabi_period) == pytest.approx(0.0, abs=1e-15)

    def test_incoherent_work_non_negative(self):
        p = DrivenQubitParams(omega0=0.995, omega=1.0, g=0.005, beta=0.5, a=0.0)
        for t in np.linspace(0.0, p.rabi_period, 50):
            assert analytic_work(p, t) >= 0.0

    def test_against_numeric_propagation(self):
        # gamma=0 master-equation propagation as the independent route
        from cthermo.dynamics import evolve_lindblad, qubit_bath_model

        rho0 = initial_state(FIG2)
        t_end = FIG2.extraction_time
        series = evolve_lindblad(
            qubit_bath_model(FIG2, 0.0), rho0, t_end, FIG2.rabi_period * 1e-5, records=5
        )
        assert series.work[-1] == pytest.approx(analytic_work(FIG2, t_end), abs=1e-8)

    def test_closed_form_tracks_exact_propagator(self):
        rho0 = initial_state(FIG2)
        h0 = hamiltonian_at(FIG2, 0.0)
        for t in np.linspace(0.0, FIG2.rabi_period, 13):
            rho_t = propagate(FIG2, rho0, t)
            direct = rho_t.expectation(hamiltonian_at(FIG2, t)) - rho0.expectation(h0)
            assert analytic_work(FIG2, t) == pytest.approx(direct, abs=1e-13)


class TestExtractionCondition:
    def test_thermal_state_cannot_deliver_work(self):
        p = DrivenQubitParams(omega0=0.995, omega=1.0, g=0.005, beta=0.5, a=0.0)
        assert extraction_condition(p) is False

    def test_fig2_coherent_case(self):
        assert extraction_condition(FIG2) is True

    def test_matches_work_minimum_sign_on_grid(self):
        for a in np.linspace(0.0, 1.0, 10):
            for omega in np.linspace(0.3, 1.9, 10):
                p = DrivenQubitParams(omega0=0.995, omega=omega, g=0.005, beta=0.5, a=a)
                w_min = analytic_work(p, p.extraction_time)
                assert extraction_condition(p) == (w_min < 0)


class TestOptimalFrequency:
    def test_weak_drive_limit(self):
        p = DrivenQubitParams(omega0=0.995, omega=1.0, g=1e-8, beta=0.5, a=1.0)
        assert optimal_frequency(p) == pytest.approx(0.995, rel=1e-6)

    def test_against_golden_section(self):
        # the formula minimizes the work extremum over omega at full
        # initial coherence
        def extremal_work(omega: float) -> float:
            q = DrivenQubitParams(omega0=0.995, omega=omega, g=0.005, beta=0.5, a=1.0)
            return analytic_work(q, q.extraction_time)

        result = minimize_scalar(
            extremal_work, bracket=(0.99, 1.0, 1.01), method="golden",
            options={"xtol": 1e-12},
        )
        assert optimal_frequency(FIG2) == pytest.approx(result.x, rel=1e-6)

    def test_reaches_ground_state(self):
        w_opt = optimal_frequency(FIG2)
        p = DrivenQubitParams(omega0=0.995, omega=w_opt, g=0.005, beta=0.5, a=1.0)
        rho = propagate(p, initial_state(p), p.extraction_time)
        ground = eig_hermitian(hamiltonian_at(p, p.extraction_time)).vectors[:, 0]
        fidelity = float(np.real(np.conj(ground) @ rho.matrix @ ground))
        assert fidelity > 1 - 1e-6

    def test_out_of_regime(self):
        p = DrivenQubitParams(omega0=0.5, omega=1.0, g=0.45, beta=8.0, a=1.0)
        with pytest.raises(ValueError):
            optimal_frequency(p)


class TestAveragedWork:
    def test_protocol_equals_rabi_at_integer_ratio(self):
        # arrange Omega / omega = 2 exactly
        omega, g, k = 0.2, 0.005, 2
        delta = math.sqrt((k * omega) ** 2 - g * g)
        p = DrivenQubitParams(omega0=omega + delta, omega=omega, g=g, beta=0.5, a=0.3)
        assert p.rabi_frequency / p.omega == pytest.approx(k, abs=1e-12)
        assert averaged_work(p, "protocol") == pytest.approx(
            averaged_work(p, "rabi"), abs=1e-14
        )

    @pytest.mark.parametrize("window", ["rabi", "protocol"])
    def test_against_quadrature(self, window):
        p = FIG2
        period = p.rabi_period if window == "rabi" else p.protocol_period
        integral, _ = quad(lambda t: analytic_work(p, t), 0.0, period, limit=400)
        assert averaged_work(p, window) == pytest.approx(integral / period, abs=1e-8)

    def test_unknown_window(self):
        with pytest.raises(ValueError):
            averaged_work(FIG2, "day")


class TestAdiabaticTime:
    def test_vanishes_without_drive(self):
        p = DrivenQubitParams(omega0=1.0, omega=0.5, g=0.0, beta=0.5)
        assert adiabatic_time(p) == 0.0

    def test_grid_refinement_stable(self):
        coarse = adiabatic_time(FIG2, samples=512)
        fine = adiabatic_time(FIG2, samples=1024)
        assert abs(fine - coarse) <= 1e-3 * abs(coarse)

    def test_rotating_drive_closed_form(self):
        # |<e_+| dH/dr |e_->| = g omega tau_P / 2 and the gap is E, so
        # tau_A = pi g / E^2 for this protocol
        expected = math.pi * FIG2.g / FIG2.energy_gap**2
        assert adiabatic_time(FIG2, samples=512) == pytest.approx(expected, rel=1e-12)


class TestModelInvariants:
    def test_work_vanishes_in_adiabatic_limit(self):
        p = DrivenQubitParams(omega0=0.995, omega=1e-5 * 0.995, g=0.005, beta=0.5, a=0.3)
        peak = abs(analytic_work(p, p.extraction_time))
        assert peak < 1e-6

    def test_coherence_change_vanishes_in_adiabatic_limit(self):
        p = DrivenQubitParams(omega0=0.995, omega=1e-4 * 0.995, g=0.005, beta=0.5, a=0.3)
        rho0 = initial_state(p)
        rho_t = propagate(p, rho0, p.protocol_period)
        dc = relative_entropy_of_coherence(
            rho_t, hamiltonian_at(p, p.protocol_period)
        ) - relative_entropy_of_coherence(rho0, hamiltonian_at(p, 0.0))
        assert abs(dc) < 1e-3

    def test_closed_dynamics_saturates_work_bound(self):
        # beta(W - dF) = dC + dD exactly under unitary evolution
        rho0 = initial_state(FIG2)
        h0 = hamiltonian_at(FIG2, 0.0)
        c0 = relative_entropy_of_coherence(rho0, h0)
        d0 = athermality(rho0, h0, FIG2.beta)
        for t in np.linspace(0.0, FIG2.rabi_period, 41):
            ht = hamiltonian_at(FIG2, t)
            rho_t = propagate(FIG2, rho0, t)
            lhs = FIG2.beta * analytic_work(FIG2, t)  # dF = 0 for this drive
            rhs = (
                relative_entropy_of_coherence(rho_t, ht)
                - c0
                + athermality(rho_t, ht, FIG2.beta)
                - d0
            )
            assert lhs == pytest.approx(rhs, abs=1e-8)
            # unitarity keeps the spectrum, hence the entropy
            assert von_neumann_entropy(rho_t) == pytest.approx(
                von_neumann_entropy(rho0), abs=1e-10
            )
