"""Dense complex-matrix kernel for small Hilbert spaces (dim 2..16).

Everything here operates on plain ``numpy`` arrays of complex dtype and is
pure: no function mutates its arguments.  Eigendecompositions come with a
deterministic phase and degenerate-subspace convention so that downstream
conditional probabilities are reproducible across runs and platforms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

HERMITICITY_TOL = 1e-10
DEGENERACY_GAP = 1e-10

# Pauli matrices and the 2x2 identity, used all over the model modules.
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)   # |e><g|
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |g><e|
IDENTITY_2 = np.eye(2, dtype=complex)


class EigenvalueClampWarning(UserWarning):
    """Raised when matrix_function clamped eigenvalues at the floor."""


def as_complex_matrix(m) -> np.ndarray:
    """Coerce input to a square complex ndarray."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m.T)


def is_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    m = as_complex_matrix(m)
    return bool(np.max(np.abs(m - dagger(m))) <= tol)


def hermitian_part(m: np.ndarray) -> np.ndarray:
    """(m + m^dagger)/2; absorbs integrator round-off before eigh."""
    m = as_complex_matrix(m)
    return 0.5 * (m + dagger(m))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product of two operators (composite-space builder)."""
    return np.kron(as_complex_matrix(a), as_complex_matrix(b))


def partial_trace(m: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    Args:
        m: operator on the composite space, dim = dims[0]*dims[1].
        dims: (dA, dB) subsystem dimensions.
        keep: 0 to keep the first factor, 1 to keep the second.

    The result has the kept subsystem's dimension and the same trace.
    """
    m = as_complex_matrix(m)
    da, db = dims
    if da < 1 or db < 1 or m.shape[0] != da * db:
        raise ValueError(f"dims {dims} incompatible with matrix of dim {m.shape[0]}")
    if keep not in (0, 1):
        raise ValueError("keep must be 0 (first factor) or 1 (second factor)")
    t = m.reshape(da, db, da, db)
    if keep == 0:
        return np.einsum("ikjk->ij", t)
    return np.einsum("kikj->ij", t)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Hermitian eigensystem: ascending eigenvalues, orthonormal columns."""

    values: np.ndarray   # real, ascending
    vectors: np.ndarray  # column k is the eigenvector of values[k]

    @property
    def dim(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        """Sum_k values[k] |v_k><v_k|."""
        return (self.vectors * self.values) @ dagger(self.vectors)

    def projector(self, k: int) -> np.ndarray:
        v = self.vectors[:, k]
        return np.outer(v, np.conj(v))


def _fix_phases(vectors: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Scale each column so its first significant entry is real positive."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.argmax(np.abs(col) > tol)
        pivot = col[idx]
        if np.abs(pivot) > 0:
            out[:, k] = col * (np.abs(pivot) / pivot)
    return out


def _degenerate_clusters(values: np.ndarray, gap: float) -> list[tuple[int, int]]:
    """Contiguous index ranges [lo, hi) of numerically equal eigenvalues."""
    clusters = []
    lo = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > gap:
            clusters.append((lo, k))
            lo = k
    return clusters


def eig_hermitian(
    h: np.ndarray,
    *,
    degenerate_index_order: tuple[int, ...] | None = None,
) -> SpectralDecomposition:
    """Deterministic Hermitian eigendecomposition, eigenvalues ascending.

    Within a degenerate cluster (gap < 1e-10) the canonical basis vectors are
    projected onto the eigenspace and Gram-Schmidt orthonormalized in index
    order, so the returned basis does not depend on LAPACK internals.
    ``degenerate_index_order`` overrides that projection order; it exists so
    tests can assert that ensemble-level results are convention independent.
    """
    h = as_complex_matrix(h)
    if not is_hermitian(h):
        raise ValueError("eig_hermitian requires a Hermitian matrix (tol 1e-10)")
    values, vectors = np.linalg.eigh(hermitian_part(h))
    dim = h.shape[0]
    order = degenerate_index_order if degenerate_index_order is not None else tuple(range(dim))
    for lo, hi in _degenerate_clusters(values, DEGENERACY_GAP):
        if hi - lo < 2:
            continue
        # Projector onto the cluster subspace, then deterministic re-basis.
        sub = vectors[:, lo:hi]
        proj = sub @ dagger(sub)
        basis = []
        for idx in order:
            cand = proj[:, idx].copy()
            for b in basis:
                cand -= b * np.vdot(b, cand)
            norm = np.linalg.norm(cand)
            if norm > 1e-6:
                basis.append(cand / norm)
            if len(basis) == hi - lo:
                break
        vectors[:, lo:hi] = np.column_stack(basis)
    return SpectralDecomposition(values=values, vectors=_fix_phases(vectors))


def matrix_function(
    h: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    floor: float | None = None,
) -> np.ndarray:
    """Apply a scalar map to the eigenvalues of a Hermitian matrix.

    When ``floor`` is given (use a 1e-300-scale value for ln or fractional
    powers of near-singular density operators), eigenvalues below it are
    clamped up to it before applying ``f`` and a counted
    EigenvalueClampWarning is emitted.
    """
    dec = eig_hermitian(h)
    values = dec.values
    if floor is not None:
        clamped = int(np.sum(values < floor))
        if clamped:
            warnings.warn(
                f"matrix_function clamped {clamped} eigenvalue(s) below {floor:g}",
                EigenvalueClampWarning,
                stacklevel=2,
            )
            values = np.maximum(values, floor)
    fv = np.asarray(f(values), dtype=complex)
    return (dec.vectors * fv) @ dagger(dec.vectors)


def unitary_step(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) for Hermitian h, via the eigendecomposition."""
    dec = eig_hermitian(h)
    phases = np.exp(-1j * dec.values * dt)
    return (dec.vectors * phases) @ dagger(dec.vectors)


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of the commutator ab - ba."""
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a @ b - b @ a))
