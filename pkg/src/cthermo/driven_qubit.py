"""Closed-form model of a spin-1/2 in a circularly rotating drive field.

The Hamiltonian is H_t = (omega0/2) sigma_z + (g/2)(cos(omega t) sigma_x +
sin(omega t) sigma_y).  Its spectrum is time independent (+-E/2 with
E = sqrt(g^2 + omega0^2)), the propagator factorizes into a frame rotation
times a constant-generator rotation, and the work done on a coherent-thermal
initial state has a closed form.  Everything in this module is an exact
function of (params, t); no integration happens here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z, dagger
from .states import DensityOperator, thermal_state


@dataclass(frozen=True)
class DrivenQubitParams:
    """Model parameters: splitting, drive frequency/amplitude, bath beta,
    initial coherence amplitude a in [0, 1]."""

    omega0: float
    omega: float
    g: float
    beta: float
    a: float = 0.0

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("drive frequency omega must be positive")
        if self.g < 0:
            raise ValueError("drive amplitude g must be non-negative")
        if self.beta < 0:
            raise ValueError("inverse temperature beta must be non-negative")
        if not 0.0 <= self.a <= 1.0:
            raise ValueError("coherence parameter a must lie in [0, 1]")

    # Derived quantities are always recomputed, never stored.
    @property
    def detuning(self) -> float:
        return self.omega0 - self.omega

    @property
    def energy_gap(self) -> float:
        """E: gap of H_t, constant in time."""
        return math.hypot(self.g, self.omega0)

    @property
    def rabi_frequency(self) -> float:
        return math.hypot(self.g, self.detuning)

    @property
    def mixing_angle(self) -> float:
        """Angle between the z axis and the H_0 field direction."""
        return math.atan2(self.g, self.omega0)

    @property
    def protocol_period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def rabi_period(self) -> float:
        return 2.0 * math.pi / self.rabi_frequency

    @property
    def extraction_time(self) -> float:
        """Half the Rabi period, where the work extremum sits."""
        return math.pi / self.rabi_frequency


def _su2_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i angle (axis . sigma)/2) for a unit 3-vector axis."""
    nx, ny, nz = axis
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    gen = nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z
    return c * IDENTITY_2 - 1j * s * gen


def hamiltonian_at(p: DrivenQubitParams, t: float) -> np.ndarray:
    wt = p.omega * t
    return 0.5 * (
        p.omega0 * SIGMA_Z + p.g * (math.cos(wt) * SIGMA_X + math.sin(wt) * SIGMA_Y)
    )


def propagator_at(p: DrivenQubitParams, t: float) -> np.ndarray:
    """Exact propagator: z rotation by omega*t times the rotating-frame
    rotation generated by (detuning sigma_z + g sigma_x)/2."""
    uz = _su2_rotation(np.array([0.0, 0.0, 1.0]), p.omega * t)
    om = p.rabi_frequency
    if om == 0.0:
        return uz
    axis = np.array([p.g, 0.0, p.detuning]) / om
    return uz @ _su2_rotation(axis, om * t)


def energy_basis_rotation(p: DrivenQubitParams, t: float) -> np.ndarray:
    """Rotation to the instantaneous energy basis of H_t.

    Returns R with R H_t R^dagger = (E/2) sigma_z, i.e. the excited level
    maps to the first basis vector.  (Ascending/ground-first orderings used
    elsewhere come from eig_hermitian; this fixed closed form keeps the
    rotating-frame algebra free of row swaps.)  The (1,1) entry cos(theta/2)
    is real positive.
    """
    half = 0.5 * p.mixing_angle
    phase = np.exp(-1j * p.omega * t)
    return np.array(
        [
            [math.cos(half), math.sin(half) * phase],
            [-math.sin(half) * np.conj(phase), math.cos(half)],
        ],
        dtype=complex,
    )


def initial_state(p: DrivenQubitParams) -> DensityOperator:
    """Thermal populations in the H_0 eigenbasis plus real coherences of
    relative amplitude a between the two energy levels."""
    x = 0.5 * p.beta * p.energy_gap
    r0 = energy_basis_rotation(p, 0.0)
    sz = dagger(r0) @ SIGMA_Z @ r0
    sx = dagger(r0) @ SIGMA_X @ r0
    rho = 0.5 * (IDENTITY_2 - math.tanh(x) * sz + p.a / math.cosh(x) * sx)
    return DensityOperator(rho)


def _precession(p: DrivenQubitParams, t: float) -> tuple[float, float, float]:
    """Half-angle sine s, and the mu/nu amplitudes of the doubly rotated
    frame; mu, nu -> 0 at multiples of the Rabi period."""
    e = p.energy_gap
    om = p.rabi_frequency
    s = math.sin(0.5 * om * t)
    sin_alpha = p.g * p.omega / (e * om)
    cos_alpha = (e * e - p.omega * p.omega0) / (e * om)
    return s, sin_alpha * s, -cos_alpha * s


def rotating_frame_state(p: DrivenQubitParams, t: float) -> DensityOperator:
    """State in the doubly rotated frame where H_t maps to E sigma_z / 2.

    Closed form: the Bloch vector (a sech(x), 0, -tanh(x)) of the t = 0
    frame state precesses about the tilted axis n = (nu, cos(Omega t/2), mu)
    via r_z -> z_hat - 2 mu n and r_x -> x_hat - 2 nu n, with
    mu = (g omega / E Omega) sin(Omega t / 2) and
    nu = -((E^2 + Omega^2 - omega^2) / 2 E Omega) sin(Omega t / 2).
    """
    x = 0.5 * p.beta * p.energy_gap
    s, mu, nu = _precession(p, t)
    c = math.cos(0.5 * p.rabi_frequency * t)
    axis = np.array([nu, c, mu])
    vz = np.array([0.0, 0.0, 1.0]) - 2.0 * mu * axis
    vx = np.array([1.0, 0.0, 0.0]) - 2.0 * nu * axis
    bloch = -math.tanh(x) * vz + (p.a / math.cosh(x)) * vx
    rho = 0.5 * (
        IDENTITY_2 + bloch[0] * SIGMA_X + bloch[1] * SIGMA_Y + bloch[2] * SIGMA_Z
    )
    return DensityOperator(rho)


def _work_prefactor(p: DrivenQubitParams) -> float:
    """Coefficient of sin^2(Omega t/2) in the work; negative iff coherent
    extraction is possible."""
    e = p.energy_gap
    om = p.rabi_frequency
    x = 0.5 * p.beta * e
    bracket = math.tanh(x) + p.a * (e * e + om * om - p.omega**2) / (
        2.0 * p.g * p.omega
    ) / math.cosh(x)
    return bracket * (p.g**2 * p.omega**2) / (e * om * om)


def analytic_work(p: DrivenQubitParams, t: float) -> float:
    """Closed-form average work tr(H_t rho_t) - tr(H_0 rho_0).

    W_t = (tanh(x) + a (E^2+Omega^2-omega^2)/(2 g omega) sech(x))
          * g^2 omega^2 / (E Omega^2) * sin^2(Omega t / 2),  x = beta E / 2.
    Zero at t = 0, periodic with the Rabi period; vanishes identically in
    the g -> 0 or omega -> 0 limits.
    """
    if p.g == 0.0:
        return 0.0
    s = math.sin(0.5 * p.rabi_frequency * t)
    return _work_prefactor(p) * s * s


def extraction_condition(p: DrivenQubitParams) -> bool:
    """True iff min_t W_t < 0, i.e. sinh(beta E/2) <
    a (omega^2 - E^2 - Omega^2) / (2 g omega)."""
    if p.g == 0.0:
        return False
    e = p.energy_gap
    om = p.rabi_frequency
    rhs = p.a * (p.omega**2 - (e * e + om * om)) / (2.0 * p.g * p.omega)
    return math.sinh(0.5 * p.beta * e) < rhs


def optimal_frequency(p: DrivenQubitParams) -> float:
    """Drive frequency minimizing the work extremum over omega (for a = 1,
    where the half-Rabi-period state reaches the instantaneous ground
    state):  omega_opt = E^2 (omega0 + g e^{-beta E/2})
                         / (E^2 - 2 g (omega0 sinh(beta E/2) + g))."""
    e = p.energy_gap
    x = 0.5 * p.beta * e
    denom = e * e - 2.0 * p.g * (p.omega0 * math.sinh(x) + p.g)
    if denom <= 0.0:
        raise ValueError(
            f"optimal_frequency out of regime: denominator {denom:g} is not positive"
        )
    return e * e * (p.omega0 + p.g * math.exp(-x)) / denom


def averaged_work(p: DrivenQubitParams, window: str) -> float:
    """Time average of the work over one Rabi period or one protocol period.

    window='rabi': half the sin^2 prefactor.  window='protocol':
    (1 - sinc(2 pi Omega / omega)) times the Rabi average, sinc x = sin x / x.
    """
    if p.g == 0.0:
        return 0.0
    w_rabi = 0.5 * _work_prefactor(p)
    if window == "rabi":
        return w_rabi
    if window == "protocol":
        arg = 2.0 * math.pi * p.rabi_frequency / p.omega
        return (1.0 - math.sin(arg) / arg) * w_rabi
    raise ValueError(f"window must be 'rabi' or 'protocol', got {window!r}")


def adiabatic_time(p: DrivenQubitParams, samples: int = 512) -> float:
    """Inverse-square-gap timescale of the drive protocol.

    Maximizes |<e_+|dH/dr|e_->| / gap^2 over a uniform grid of the scaled
    protocol time r = t / tau_P in [0, 1], with dH/dr evaluated analytically.
    """
    if samples < 2:
        raise ValueError("samples must be at least 2")
    gap = p.energy_gap
    if gap < 1e-12:
        raise ValueError("adiabatic time undefined for a degenerate spectrum")
    if p.g == 0.0:
        return 0.0
    tau_p = p.protocol_period
    best = 0.0
    for r in np.linspace(0.0, 1.0, samples):
        t = r * tau_p
        wt = p.omega * t
        dh_dr = 0.5 * p.g * p.omega * tau_p * (
            -math.sin(wt) * SIGMA_X + math.cos(wt) * SIGMA_Y
        )
        rot = energy_basis_rotation(p, t)
        elem = abs((rot @ dh_dr @ dagger(rot))[0, 1])
        best = max(best, elem / gap**2)
    return best


def initial_coherence_part(p: DrivenQubitParams) -> np.ndarray:
    """Traceless off-diagonal block of the initial state in the H_0 basis."""
    x = 0.5 * p.beta * p.energy_gap
    r0 = energy_basis_rotation(p, 0.0)
    return 0.5 * p.a / math.cosh(x) * (dagger(r0) @ SIGMA_X @ r0)


def thermal_initial_state(p: DrivenQubitParams) -> DensityOperator:
    """The a = 0 reference: Gibbs state of H_0 at the model beta."""
    return thermal_state(hamiltonian_at(p, 0.0), p.beta)
