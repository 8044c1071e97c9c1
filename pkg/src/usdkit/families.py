"""Families of state sets discriminated by one fixed operator.

Given ``K = sum s_i |u_i><v_i|`` and a set it discriminates, three moves
produce further discriminated sets:

* phase transforms ``W = sum e^{i phi_i} |v_i><v_i|`` (outputs pick up the
  matching phases on ``|u_i>``),
* unitaries mixing right singular vectors inside a degenerate cluster,
* ``G~ = K^-1 U0`` for any unitary ``U0``.

All constructions read the operator's cached SVD; recomputing it could
permute degenerate vectors and break the pairing between the two sides.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import numkernel as nk
from .errors import (
    BlockSizeMismatch,
    LengthMismatch,
    NonInvertible,
    NotDensityMatrix,
    NotDiscriminated,
    NotPassive,
    NotUnitary,
)
from .usd import (
    ORTHOGONALITY_TOL,
    LossyOperator,
    StateSet,
    _as_operator,
    _as_states,
    discrimination_residual,
)

RANK_TOL = 1e-10


@dataclass(frozen=True)
class PhaseTransform:
    phases: np.ndarray
    input_transform: np.ndarray
    output_transform: np.ndarray


@dataclass(frozen=True)
class DegeneracyStructure:
    groups: tuple
    tolerance_used: float


@dataclass(frozen=True)
class InconclusiveAnalysis:
    m_question: np.ndarray
    e_question: np.ndarray
    rho_question: np.ndarray
    rank: int

    @property
    def probability(self) -> float:
        """Trace of the unnormalized inconclusive state."""
        return float(np.trace(self.rho_question).real)


@dataclass(frozen=True)
class FamilyMember:
    """A transformed state set plus how well ``K`` still separates it."""

    states: StateSet
    residual: float
    gram: np.ndarray
    reference_gram: np.ndarray


def _check_discriminated(op: LossyOperator, st: StateSet, tol: float) -> None:
    if discrimination_residual(op, st) > tol:
        raise NotDiscriminated("operator does not map the states to orthogonal outputs")


def phase_transform(k, phases) -> PhaseTransform:
    op = _as_operator(k)
    phi = np.asarray(phases, dtype=float).ravel()
    if phi.size != op.dim:
        raise LengthMismatch(f"{phi.size} phases for dimension {op.dim}")
    e = np.exp(1j * phi)
    v = op.svd.right_vectors
    u = op.svd.left_vectors
    return PhaseTransform(phi, (v * e) @ v.conj().T, (u * e) @ u.conj().T)


def apply_phase_family(k, states, phases, tol: float = ORTHOGONALITY_TOL) -> StateSet:
    """Return ``{W g_i}``; ``K`` still discriminates it with the same output Gram matrix."""
    op = _as_operator(k)
    st = _as_states(states)
    pt = phase_transform(op, phases)
    _check_discriminated(op, st, tol)
    return StateSet(pt.input_transform @ st.states, st.priors)


def degeneracy_structure(k, tol: Optional[float] = None) -> DegeneracyStructure:
    """Cluster singular-value indices whose consecutive gaps are within ``tol``.

    ``tol`` defaults to ``1e-8 * s_max``.
    """
    op = _as_operator(k)
    s = op.singular_values
    t = nk.DEGENERACY_RTOL * s[0] if tol is None else float(tol)
    groups = [[0]]
    for i in range(1, len(s)):
        if s[i - 1] - s[i] <= t:
            groups[-1].append(i)
        else:
            groups.append([i])
    return DegeneracyStructure(tuple(tuple(g) for g in groups), t)


def degenerate_mixer(k, block_unitaries: Sequence, tol: Optional[float] = None) -> np.ndarray:
    """Block-diagonal unitary in the right-singular-vector basis of ``k``."""
    op = _as_operator(k)
    ds = degeneracy_structure(op, tol)
    if len(block_unitaries) != len(ds.groups):
        raise BlockSizeMismatch(f"{len(block_unitaries)} blocks for {len(ds.groups)} degeneracy groups")
    v = op.svd.right_vectors
    mix = np.zeros((op.dim, op.dim), dtype=complex)
    for idx, block in zip(ds.groups, block_unitaries):
        b = nk.as_matrix(block, "block")
        if b.shape != (len(idx), len(idx)):
            raise BlockSizeMismatch(f"block of shape {b.shape} for a group of size {len(idx)}")
        if not nk.is_unitary(b):
            raise NotUnitary("mixer block is not unitary")
        vg = v[:, list(idx)]
        mix += vg @ b @ vg.conj().T
    return mix


def apply_degenerate_mixer(k, states, block_unitaries: Sequence, tol: Optional[float] = None,
                           check_tol: float = ORTHOGONALITY_TOL) -> FamilyMember:
    """Mix right singular vectors within each degeneracy group.

    ``block_unitaries`` has one unitary per group, sized to the group. For
    near-degenerate clusters the outputs are only approximately orthogonal;
    the achieved residual is reported on the result.
    """
    op = _as_operator(k)
    st = _as_states(states)
    mix = degenerate_mixer(op, block_unitaries, tol)
    _check_discriminated(op, st, check_tol)
    new = StateSet(mix @ st.states, st.priors)
    return FamilyMember(new, discrimination_residual(op, new), nk.gram(new.states), nk.gram(st.states))


def distillation_family(k, u0) -> FamilyMember:
    """Columns of ``K^-1 U0``: mapped by ``K`` exactly onto the orthonormal columns of ``U0``.

    ``reference_gram`` is the Gram matrix of ``K^-1`` itself, for comparison
    of the pairwise input angles.
    """
    op = _as_operator(k)
    if not op.invertible:
        raise NonInvertible("distillation family needs an invertible operator")
    u = nk.as_matrix(u0, "u0")
    if u.shape != (op.dim, op.dim) or not nk.is_unitary(u):
        raise NotUnitary("u0 must be an N x N unitary")
    g_tilde = op.inverse @ u
    st = StateSet(g_tilde)
    return FamilyMember(st, discrimination_residual(op, st), nk.gram(g_tilde), nk.gram(op.inverse))


def _check_density(rho: np.ndarray, tol: float = 1e-9) -> None:
    if rho.shape[0] != rho.shape[1]:
        raise NotDensityMatrix("density matrix must be square")
    if np.linalg.norm(rho - rho.conj().T) > tol:
        raise NotDensityMatrix("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise NotDensityMatrix("density matrix trace is not 1")
    if nk.hermitian_eig(rho).eigenvalues[-1] < -tol:
        raise NotDensityMatrix("density matrix is not positive semidefinite")


def inconclusive_analysis(k, rho, rank_tol: float = RANK_TOL) -> InconclusiveAnalysis:
    """Unnormalized post-measurement state of the inconclusive branch.

    ``M? = sqrt(I - K^H K)`` and ``rho? = M? rho M?^H``; its trace is the
    inconclusive probability. With N-1 unit singular values ``M?`` has rank
    one, so ``rho?`` does too whatever the input.
    """
    op = _as_operator(k)
    if not op.passive:
        raise NotPassive(f"operator norm {op.spectral_norm:.12g} > 1")
    r = nk.as_matrix(rho, "rho")
    if r.shape[0] != op.dim:
        raise NotDensityMatrix("density matrix dimension does not match operator")
    _check_density(r)
    kk = op.matrix
    e_q = np.eye(op.dim) - kk.conj().T @ kk
    e_q = 0.5 * (e_q + e_q.conj().T)
    m_q = nk.psd_sqrt(e_q, zero_floor=8 * op.dim * nk.EPS)
    rho_q = m_q @ r @ m_q.conj().T
    rho_q = 0.5 * (rho_q + rho_q.conj().T)
    lam = nk.hermitian_eig(rho_q).eigenvalues
    return InconclusiveAnalysis(m_q, e_q, rho_q, int(np.count_nonzero(lam > rank_tol)))
