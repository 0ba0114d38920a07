"""Coherence thermodynamics of driven qubits.

Library layers:

- linalg: dense complex-matrix kernel (tensor products, partial trace,
  deterministic Hermitian eigensystems).
- states: density operators, coherence/athermality measures, free energies.
- driven_qubit: exact closed forms for the rotating-drive two-level model.
- dynamics: unitary and Lindblad propagation with first-law bookkeeping,
  decoherence timescales.
- trajectories: exact enumeration of forward/backward path ensembles and
  fluctuation-relation checks.
- response: skew information and the linear-response work prediction.
- scenarios / cli: deterministic data-file generation for the study cases.
"""

from .linalg import (
    SpectralDecomposition,
    commutator_norm,
    eig_hermitian,
    kron,
    matrix_function,
    partial_trace,
    unitary_step,
)
from .states import (
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
from .driven_qubit import (
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

__version__ = "0.1.0"

__all__ = [
    "SpectralDecomposition",
    "DensityOperator",
    "DrivenQubitParams",
    "adiabatic_time",
    "analytic_work",
    "athermality",
    "averaged_work",
    "commutator_norm",
    "dephase",
    "eig_hermitian",
    "energy_basis_rotation",
    "equilibrium_free_energy",
    "extraction_condition",
    "generalized_free_energy",
    "hamiltonian_at",
    "initial_state",
    "kron",
    "matrix_function",
    "optimal_frequency",
    "partial_trace",
    "propagator_at",
    "relative_entropy",
    "relative_entropy_of_coherence",
    "rotating_frame_state",
    "thermal_state",
    "unitary_step",
    "von_neumann_entropy",
]
