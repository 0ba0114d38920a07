"""Exact enumeration of conditional path ensembles for closed and
weakly-coupled composite systems.

A trajectory is the index tuple (i, m, mu, j, nu, n): eigenstate labels of
the system state at times 0 and t (i, j), energy labels of the system
Hamiltonian at times 0 and t (m, n), and bath energy labels (mu, nu).  The
forward weight factorizes through conditional probabilities of the local
eigenbases given the global unitary evolution; the backward weight reuses
the same bases with the adjoint propagator, which makes the joint
transition term microreversible.  All per-trajectory entropic records close
the detailed fluctuation identity algebraically, so residuals test only
floating-point noise, while the ensemble sums and averages test the
enumeration itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .driven_qubit import DrivenQubitParams, hamiltonian_at, propagator_at
from .linalg import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    SpectralDecomposition,
    commutator_norm,
    dagger,
    eig_hermitian,
    kron,
    partial_trace,
    unitary_step,
)
from .states import (
    DensityOperator,
    equilibrium_free_energy,
    thermal_state,
)
from .dynamics import thermal_populations

# Labels with probability at or below this carry no weight and are excluded
# from records (their log-entropies are undefined).
PROBABILITY_CUTOFF = 1e-14


class DegenerateSpectrumWarning(UserWarning):
    """Eigenstate labels are convention dependent for this ensemble."""


@dataclass(frozen=True)
class CompositeModel:
    """System protocol + finite bath + interaction, with the total
    propagator; a closed system is the special case of a one-dimensional
    bath."""

    system_hamiltonian: Callable[[float], np.ndarray]
    bath_hamiltonian: np.ndarray
    interaction: np.ndarray
    beta: float
    propagator: Callable[[float], np.ndarray]

    @property
    def system_dim(self) -> int:
        return self.system_hamiltonian(0.0).shape[0]

    @property
    def bath_dim(self) -> int:
        return self.bath_hamiltonian.shape[0]

    @property
    def closed(self) -> bool:
        return self.bath_dim == 1

    def energy_conservation_defect(self, t: float) -> float:
        """Frobenius norm of [H_S(t) + H_R, H_SR]; zero for strict-coupling
        models (and trivially for closed ones)."""
        hs = self.system_hamiltonian(t)
        total = kron(hs, np.eye(self.bath_dim)) + kron(
            np.eye(self.system_dim), self.bath_hamiltonian
        )
        return commutator_norm(total, self.interaction)


def closed_qubit_model(p: DrivenQubitParams) -> CompositeModel:
    """Driven qubit with no bath (unitary dynamics)."""
    return CompositeModel(
        system_hamiltonian=lambda t: hamiltonian_at(p, t),
        bath_hamiltonian=np.zeros((1, 1), dtype=complex),
        interaction=np.zeros((2, 2), dtype=complex),
        beta=p.beta,
        propagator=lambda t: propagator_at(p, t),
    )


def build_exchange_model(j_coupling: float, omega0: float, beta: float) -> CompositeModel:
    """Undriven qubit resonantly exchanging quanta with a single bath qubit.

    H_SR = J (sigma_+ sigma_- + sigma_- sigma_+) commutes with H_S + H_R,
    so bath energy changes are unambiguous heat.
    """
    if j_coupling < 0:
        raise ValueError("exchange coupling must be non-negative")
    hs = 0.5 * omega0 * SIGMA_Z
    hr = 0.5 * omega0 * SIGMA_Z
    hsr = j_coupling * (kron(SIGMA_PLUS, SIGMA_MINUS) + kron(SIGMA_MINUS, SIGMA_PLUS))
    h_total = kron(hs, np.eye(2)) + kron(np.eye(2), hr) + hsr

    return CompositeModel(
        system_hamiltonian=lambda t: hs,
        bath_hamiltonian=hr,
        interaction=hsr,
        beta=beta,
        propagator=lambda t: unitary_step(h_total, t),
    )


@dataclass(frozen=True)
class Trajectory:
    """One index tuple with its attached eigenvalues and probabilities."""

    i: int
    m: int
    mu: int
    j: int
    nu: int
    n: int
    energy_initial: float       # omega_m at time 0
    energy_final: float         # omega_n at time t
    bath_energy_initial: float  # e_mu
    bath_energy_final: float    # e_nu
    p_state_initial: float      # p_i
    p_state_final: float        # p_j
    p_bath_initial: float       # p_mu
    p_bath_final: float         # p_nu

    @property
    def indices(self) -> tuple[int, int, int, int, int, int]:
        return (self.i, self.m, self.mu, self.j, self.nu, self.n)


@dataclass(frozen=True)
class StochasticRecord:
    """Per-trajectory thermodynamic bookkeeping (entropies in nats).

    heat is positive when delivered to the reservoir; work is positive when
    performed on the composite.  For excluded tuples (some label's
    probability at or below the cutoff) the log-derived fields are NaN and
    the weights are still valid.
    """

    entropy_change: float
    bath_entropy_change: float
    heat: float
    work: float
    coherence_initial: float
    coherence_final: float
    athermality_initial: float
    athermality_final: float
    p_forward: float
    p_backward: float
    excluded: bool = False

    @property
    def log_ratio(self) -> float:
        """ln(P/P*), defined for included tuples."""
        return self.entropy_change + self.bath_entropy_change

    def exponent(self, beta: float, delta_f: float) -> float:
        """beta (w - Delta F) - Delta c - Delta d; equals ln(P/P*)."""
        delta_c = self.coherence_final - self.coherence_initial
        delta_d = self.athermality_final - self.athermality_initial
        return beta * (self.work - delta_f) - delta_c - delta_d


@dataclass(frozen=True)
class EnsembleContext:
    """Shared eigensystems and populations behind one (model, rho0, t) pair."""

    beta: float
    delta_f: float
    time: float
    state_initial: SpectralDecomposition
    state_final: SpectralDecomposition
    energy_initial: SpectralDecomposition
    energy_final: SpectralDecomposition
    bath: SpectralDecomposition
    bath_populations: np.ndarray
    cond_initial: np.ndarray    # p(m|i), shape (dim, dim)
    cond_final: np.ndarray      # p(n|j)
    joint: np.ndarray           # p(j,nu | i,mu), shape (dS*dR, dS*dR)
    populations_initial: np.ndarray  # <e_m|rho_0|e_m>
    populations_final: np.ndarray    # <e_n|rho_t|e_n>
    gibbs_initial: np.ndarray
    gibbs_final: np.ndarray
    rho_final: DensityOperator


@dataclass(frozen=True)
class PathEnsemble:
    """All trajectories of one protocol with their records.

    direction selects which of the two path weights normalizes the
    ensemble; forward and backward ensembles of the same scenario share
    tuples and records.
    """

    entries: tuple[tuple[Trajectory, StochasticRecord], ...]
    beta: float
    delta_f: float
    time: float
    direction: str = "forward"

    @property
    def weights(self) -> np.ndarray:
        if self.direction == "forward":
            return np.array([r.p_forward for _, r in self.entries])
        return np.array([r.p_backward for _, r in self.entries])

    def total_probability(self) -> float:
        return float(np.sum(self.weights))

    def average(self, field: Callable[[StochasticRecord], float]) -> float:
        """Forward-weighted ensemble mean of a record field, excluded tuples
        carrying no weight."""
        total = 0.0
        for _, rec in self.entries:
            if not rec.excluded:
                total += rec.p_forward * field(rec)
        return total

    def mean_work(self) -> float:
        return self.average(lambda r: r.work)

    def work_variance(self) -> float:
        mean = self.mean_work()
        second = self.average(lambda r: r.work**2)
        return max(second - mean * mean, 0.0)

    def coherence_change(self) -> float:
        return self.average(lambda r: r.coherence_final - r.coherence_initial)

    def athermality_change(self) -> float:
        return self.average(lambda r: r.athermality_final - r.athermality_initial)


def conditional_probability(
    state_basis: SpectralDecomposition,
    energy_basis: SpectralDecomposition,
    i: int,
    m: int,
) -> float:
    """|<e_m|s_i>|^2."""
    if state_basis.dim != energy_basis.dim:
        raise ValueError("bases must share a dimension")
    return float(np.abs(np.vdot(energy_basis.vectors[:, m], state_basis.vectors[:, i])) ** 2)


def overlap_matrix(a: SpectralDecomposition, b: SpectralDecomposition) -> np.ndarray:
    """Doubly stochastic matrix |<a_k|b_l>|^2."""
    return np.abs(dagger(a.vectors) @ b.vectors) ** 2


def _context(
    model: CompositeModel,
    rho0: DensityOperator,
    t: float,
    degenerate_basis_order: tuple[int, ...] | None = None,
) -> EnsembleContext:
    ds, dr = model.system_dim, model.bath_dim
    h0 = model.system_hamiltonian(0.0)
    ht = model.system_hamiltonian(t)
    u = model.propagator(t)

    bath = eig_hermitian(model.bath_hamiltonian)
    bath_p = thermal_populations(bath.values, model.beta)
    rho_bath = (bath.vectors * bath_p) @ dagger(bath.vectors)

    composite0 = kron(rho0.matrix, rho_bath)
    composite_t = u @ composite0 @ dagger(u)
    rho_t = DensityOperator(
        0.5 * (lambda m: m + dagger(m))(partial_trace(composite_t, (ds, dr), keep=0))
    )

    state0 = eig_hermitian(rho0.matrix, degenerate_index_order=degenerate_basis_order)
    state_t = eig_hermitian(rho_t.matrix, degenerate_index_order=degenerate_basis_order)
    if state_t.dim > 1 and np.min(np.diff(state_t.values)) < 1e-10:
        warnings.warn(
            "final state spectrum is degenerate; eigenstate labels follow the "
            "deterministic basis convention",
            DegenerateSpectrumWarning,
            stacklevel=3,
        )
    energy0 = eig_hermitian(h0)
    energy_t = eig_hermitian(ht)

    # p(j, nu | i, mu) = |<s_j, e_nu| U |s_i, e_mu>|^2
    basis0 = kron(state0.vectors, bath.vectors)
    basis_t = kron(state_t.vectors, bath.vectors)
    joint = np.abs(dagger(basis_t) @ u @ basis0) ** 2

    pop0 = np.clip(
        np.real(np.einsum("ij,jk,ki->i", dagger(energy0.vectors), rho0.matrix, energy0.vectors)),
        0.0,
        1.0,
    )
    pop_t = np.clip(
        np.real(np.einsum("ij,jk,ki->i", dagger(energy_t.vectors), rho_t.matrix, energy_t.vectors)),
        0.0,
        1.0,
    )

    f0 = equilibrium_free_energy(h0, model.beta)
    ft = equilibrium_free_energy(ht, model.beta)

    return EnsembleContext(
        beta=model.beta,
        delta_f=ft - f0,
        time=t,
        state_initial=state0,
        state_final=state_t,
        energy_initial=energy0,
        energy_final=energy_t,
        bath=bath,
        bath_populations=bath_p,
        cond_initial=overlap_matrix(energy0, state0),
        cond_final=overlap_matrix(energy_t, state_t),
        joint=joint,
        populations_initial=pop0,
        populations_final=pop_t,
        gibbs_initial=thermal_populations(energy0.values, model.beta),
        gibbs_final=thermal_populations(energy_t.values, model.beta),
        rho_final=rho_t,
    )


def stochastic_record(traj: Trajectory, ctx: EnsembleContext) -> StochasticRecord:
    """Thermodynamic record of one trajectory.

    Stochastic system entropies come from the state eigenvalues, bath
    entropy from the thermal bath labels (beta q = Delta s_R), work from the
    sampled energy eigenvalues of system plus bath, and the coherence /
    athermality terms from the dephased and Gibbs populations at the
    sampled energy labels.
    """
    p_i, p_j = traj.p_state_initial, traj.p_state_final
    p_mu, p_nu = traj.p_bath_initial, traj.p_bath_final
    q0m = ctx.populations_initial[traj.m]
    qtn = ctx.populations_final[traj.n]
    eq0m = ctx.gibbs_initial[traj.m]
    eqtn = ctx.gibbs_final[traj.n]

    work = (traj.energy_final - traj.energy_initial) + (
        traj.bath_energy_final - traj.bath_energy_initial
    )
    joint_fw = ctx.joint[
        traj.j * ctx.bath.dim + traj.nu, traj.i * ctx.bath.dim + traj.mu
    ]
    p_forward = (
        p_i * p_mu * ctx.cond_initial[traj.m, traj.i] * joint_fw
        * ctx.cond_final[traj.n, traj.j]
    )
    p_backward = (
        p_j * p_nu * ctx.cond_final[traj.n, traj.j] * joint_fw
        * ctx.cond_initial[traj.m, traj.i]
    )

    needed = (p_i, p_j, p_mu, p_nu, q0m, qtn)
    if min(needed) <= PROBABILITY_CUTOFF:
        nan = math.nan
        return StochasticRecord(
            entropy_change=nan,
            bath_entropy_change=nan,
            heat=nan,
            work=work,
            coherence_initial=nan,
            coherence_final=nan,
            athermality_initial=nan,
            athermality_final=nan,
            p_forward=p_forward,
            p_backward=p_backward,
            excluded=True,
        )

    delta_s = math.log(p_i) - math.log(p_j)
    delta_s_bath = math.log(p_mu) - math.log(p_nu)
    return StochasticRecord(
        entropy_change=delta_s,
        bath_entropy_change=delta_s_bath,
        heat=delta_s_bath / ctx.beta if ctx.beta > 0 else 0.0,
        work=work,
        coherence_initial=math.log(p_i) - math.log(q0m),
        coherence_final=math.log(p_j) - math.log(qtn),
        athermality_initial=math.log(q0m) - math.log(eq0m),
        athermality_final=math.log(qtn) - math.log(eqtn),
        p_forward=p_forward,
        p_backward=p_backward,
    )


def _enumerate(ctx: EnsembleContext) -> tuple[tuple[Trajectory, StochasticRecord], ...]:
    ds = ctx.state_initial.dim
    dr = ctx.bath.dim
    entries = []
    for i in range(ds):
        for m in range(ds):
            for mu in range(dr):
                for j in range(ds):
                    for nu in range(dr):
                        for n in range(ds):
                            traj = Trajectory(
                                i=i, m=m, mu=mu, j=j, nu=nu, n=n,
                                energy_initial=float(ctx.energy_initial.values[m]),
                                energy_final=float(ctx.energy_final.values[n]),
                                bath_energy_initial=float(ctx.bath.values[mu]),
                                bath_energy_final=float(ctx.bath.values[nu]),
                                p_state_initial=float(np.clip(ctx.state_initial.values[i], 0.0, 1.0)),
                                p_state_final=float(np.clip(ctx.state_final.values[j], 0.0, 1.0)),
                                p_bath_initial=float(ctx.bath_populations[mu]),
                                p_bath_final=float(ctx.bath_populations[nu]),
                            )
                            entries.append((traj, stochastic_record(traj, ctx)))
    return tuple(entries)


def forward_ensemble(
    model: CompositeModel,
    rho0: DensityOperator,
    t: float,
    *,
    degenerate_basis_order: tuple[int, ...] | None = None,
) -> PathEnsemble:
    """Full enumeration of the forward path probabilities at time t."""
    ctx = _context(model, rho0, t, degenerate_basis_order)
    return PathEnsemble(
        entries=_enumerate(ctx),
        beta=ctx.beta,
        delta_f=ctx.delta_f,
        time=t,
        direction="forward",
    )


def backward_ensemble(
    model: CompositeModel,
    rho_t: DensityOperator,
    t: float,
    *,
    rho0: DensityOperator | None = None,
    degenerate_basis_order: tuple[int, ...] | None = None,
) -> PathEnsemble:
    """Time-reversed ensemble: weights start from (rho_t, thermal bath) and
    transitions use the adjoint propagator, which equals the forward joint
    term by microreversibility.

    The time-0 labels refer to the forward initial state's eigenbasis; for a
    closed model that state is reconstructed exactly as U^+ rho_t U, for a
    composite model pass it via rho0.
    """
    if rho0 is None:
        if not model.closed:
            raise ValueError(
                "composite backward ensemble needs the forward initial state rho0"
            )
        u = model.propagator(t)
        m = dagger(u) @ rho_t.matrix @ u
        rho0 = DensityOperator(0.5 * (m + dagger(m)))
    ctx = _context(model, rho0, t, degenerate_basis_order)
    if not np.allclose(ctx.rho_final.matrix, rho_t.matrix, atol=1e-9):
        raise ValueError(
            "rho_t is not the forward-evolved state of this model; the backward "
            "ensemble would not share its trajectory labels"
        )
    return PathEnsemble(
        entries=_enumerate(ctx),
        beta=ctx.beta,
        delta_f=ctx.delta_f,
        time=t,
        direction="backward",
    )


def detailed_ft_residuals(fw: PathEnsemble, bw: PathEnsemble) -> list[float]:
    """Per-tuple |ln(P/P*) - [beta(w - dF) - dc - dd]| over tuples with both
    weights positive."""
    if len(fw.entries) != len(bw.entries):
        raise ValueError("ensembles do not share a tuple set")
    residuals = []
    for (traj_f, rec_f), (traj_b, _) in zip(fw.entries, bw.entries):
        if traj_f.indices != traj_b.indices:
            raise ValueError("ensembles do not share a tuple set")
        if rec_f.excluded or rec_f.p_forward <= 0.0 or rec_f.p_backward <= 0.0:
            continue
        lhs = math.log(rec_f.p_forward) - math.log(rec_f.p_backward)
        residuals.append(abs(lhs - rec_f.exponent(fw.beta, fw.delta_f)))
    return residuals


def integral_ft(fw: PathEnsemble) -> float:
    """<exp(-[beta(w - dF) - dc - dd])> over the forward ensemble; equals 1
    for every unitary composite evolution with a thermal bath."""
    total = 0.0
    for _, rec in fw.entries:
        if rec.excluded or rec.p_forward <= 0.0:
            continue
        total += rec.p_forward * math.exp(-rec.exponent(fw.beta, fw.delta_f))
    return total


@dataclass(frozen=True)
class JensenReport:
    """Mean-work bound bookkeeping: lhs = beta(W - dF) >= rhs = dC + dD."""

    lhs: float
    rhs: float
    slack: float
    max_work: float
    coherence_change: float
    athermality_change: float
    extraction_possible: bool  # dC + dD < 0, necessary for W < -dF


def jensen_bound_report(fw: PathEnsemble) -> JensenReport:
    """Evaluate the mean-work inequality on a forward ensemble.

    slack = lhs - rhs is the nonequilibrium entropy production; it vanishes
    for closed dynamics and is non-negative always.  max_work is the bound
    -dF - (dC + dD)/beta on the extractable work -W.
    """
    dc = float(fw.coherence_change())
    dd = float(fw.athermality_change())
    lhs = float(fw.beta * (fw.mean_work() - fw.delta_f))
    rhs = dc + dd
    return JensenReport(
        lhs=lhs,
        rhs=rhs,
        slack=lhs - rhs,
        max_work=-fw.delta_f - rhs / fw.beta,
        coherence_change=dc,
        athermality_change=dd,
        extraction_possible=bool(rhs < 0.0),
    )
