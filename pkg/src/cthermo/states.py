"""Density operators and information measures in the energy representation.

All entropic quantities are in nats; inverse temperatures multiply energies
directly (natural units, so k*T*(coherence + athermality) appears here as
(coherence + athermality)/beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .linalg import (
    SpectralDecomposition,
    as_complex_matrix,
    dagger,
    eig_hermitian,
    hermitian_part,
    is_hermitian,
)

# Eigenvalues below this are treated as exactly zero in entropy sums.
ZERO_EIGENVALUE = 1e-14
# Probability mass allowed outside the support of sigma before S(rho||sigma)
# is reported as infinite.
SUPPORT_SLACK = 1e-12


@dataclass(frozen=True)
class DensityOperator:
    """Positive unit-trace Hermitian state with a cached eigensystem."""

    matrix: np.ndarray = field()

    def __post_init__(self):
        m = as_complex_matrix(self.matrix)
        if not is_hermitian(m):
            raise ValueError("density operator must be Hermitian within 1e-10")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density operator trace {tr} is not 1 within 1e-10")
        if np.min(np.linalg.eigvalsh(hermitian_part(m))) < -1e-10:
            raise ValueError("density operator has eigenvalue below -1e-10")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectral(self) -> SpectralDecomposition:
        return eig_hermitian(self.matrix)

    @cached_property
    def probabilities(self) -> np.ndarray:
        """Eigenvalues clipped to [0, 1] for use as probabilities."""
        return np.clip(self.spectral.values, 0.0, 1.0)

    def expectation(self, op: np.ndarray) -> float:
        return float(np.trace(op @ self.matrix).real)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


def thermal_state(h: np.ndarray, beta: float) -> DensityOperator:
    """Gibbs state exp(-beta h)/Z.

    Computed with a spectral shift so that beta up to ~1e4 stays finite even
    for sizeable gaps (the largest Boltzmann weight is normalized to 1 before
    dividing by Z).
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    dec = eig_hermitian(h)
    w = np.exp(-beta * (dec.values - dec.values[0]))
    p = w / np.sum(w)
    rho = (dec.vectors * p) @ dagger(dec.vectors)
    return DensityOperator(hermitian_part(rho))


def log_partition(h: np.ndarray, beta: float) -> float:
    """ln Z for the Gibbs state of h at inverse temperature beta."""
    values = eig_hermitian(h).values
    shift = values[0]
    return float(np.log(np.sum(np.exp(-beta * (values - shift)))) - beta * shift)


def equilibrium_free_energy(h: np.ndarray, beta: float) -> float:
    """F = -(1/beta) ln Z."""
    if beta <= 0:
        raise ValueError("equilibrium free energy needs beta > 0")
    return -log_partition(h, beta) / beta


def dephase(rho: DensityOperator, basis: SpectralDecomposition) -> DensityOperator:
    """Remove off-diagonal elements in the given eigenbasis.

    Returns sum_n |e_n><e_n| rho |e_n><e_n|; trace is preserved and the map
    is idempotent.
    """
    if basis.dim != rho.dim:
        raise ValueError(f"basis dim {basis.dim} does not match state dim {rho.dim}")
    v = basis.vectors
    populations = np.real(np.einsum("ij,jk,ki->i", dagger(v), rho.matrix, v))
    out = (v * populations) @ dagger(v)
    return DensityOperator(hermitian_part(out))


def basis_populations(rho: DensityOperator, basis: SpectralDecomposition) -> np.ndarray:
    """Diagonal of rho in the given eigenbasis, clipped to [0, 1]."""
    v = basis.vectors
    p = np.real(np.einsum("ij,jk,ki->i", dagger(v), rho.matrix, v))
    return np.clip(p, 0.0, 1.0)


def von_neumann_entropy(rho: DensityOperator) -> float:
    """-sum p ln p over the spectrum, with 0 ln 0 = 0."""
    p = rho.probabilities
    p = p[p > ZERO_EIGENVALUE]
    return float(-np.sum(p * np.log(p)))


def relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Quantum relative entropy tr rho (ln rho - ln sigma), in nats.

    Returns math.inf when rho carries more than 1e-12 probability mass on
    the kernel of sigma; genuine divergences are surfaced instead of being
    flattened into a large clamped number.
    """
    if rho.dim != sigma.dim:
        raise ValueError("relative_entropy requires equal dimensions")
    sig = sigma.spectral
    q = np.clip(sig.values, 0.0, None)
    # rho's mass on the null space of sigma decides finiteness.
    null = q <= ZERO_EIGENVALUE
    if np.any(null):
        vnull = sig.vectors[:, null]
        mass = float(np.real(np.trace(dagger(vnull) @ rho.matrix @ vnull)))
        if mass > SUPPORT_SLACK:
            return math.inf
    # tr rho ln rho = -S(rho)
    tr_rho_ln_rho = -von_neumann_entropy(rho)
    keep = ~null
    diag = np.real(np.einsum("ij,jk,ki->i", dagger(sig.vectors), rho.matrix, sig.vectors))
    tr_rho_ln_sigma = float(np.sum(diag[keep] * np.log(q[keep])))
    return max(tr_rho_ln_rho - tr_rho_ln_sigma, 0.0)


def relative_entropy_of_coherence(rho: DensityOperator, h: np.ndarray) -> float:
    """Distance S(rho || rho_dephased) from the energy-diagonal state.

    Evaluated as S(rho^d) - S(rho), which is the same quantity without the
    support bookkeeping of the general relative entropy.
    """
    rho_d = dephase(rho, eig_hermitian(h))
    return max(von_neumann_entropy(rho_d) - von_neumann_entropy(rho), 0.0)


def athermality(rho: DensityOperator, h: np.ndarray, beta: float) -> float:
    """Distance S(rho^d || rho^eq) of the populations from the Gibbs state."""
    basis = eig_hermitian(h)
    rho_d = dephase(rho, basis)
    return relative_entropy(rho_d, thermal_state(h, beta))


def generalized_free_energy(rho: DensityOperator, h: np.ndarray, beta: float) -> float:
    """Nonequilibrium free energy F_eq + (coherence + athermality)/beta."""
    if beta <= 0:
        raise ValueError("generalized free energy needs beta > 0")
    c = relative_entropy_of_coherence(rho, h)
    d = athermality(rho, h, beta)
    return equilibrium_free_energy(h, beta) + (c + d) / beta
