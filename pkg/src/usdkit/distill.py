"""Entanglement distillation of pure bipartite states by local filtering on side A.

A state ``sum_{k,i} C[k, i] |k>_A |i>_B`` is stored as its coefficient matrix
``C``. Column ``i`` of ``C`` is the (non-normalized) A-side state ``|g_i>``
paired with ``|i>_B``, so filtering with ``K_A`` on side A is the matrix
product ``K_A @ C``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numkernel as nk
from .errors import MissingPriors, NotNormalized, RankDeficient, ZeroState
from .usd import LossyOperator, StateSet, _as_states

NORM_TOL = 1e-9
SCHMIDT_RANK_TOL = 1e-12
#: relative spread of Schmidt coefficients accepted as maximally entangled
MAX_ENTANGLED_RTOL = 1e-9


@dataclass(frozen=True)
class BipartiteState:
    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coefficients", nk.as_matrix(self.coefficients, "coefficients"))

    @classmethod
    def from_vector(cls, psi, dim_a: int, dim_b: int) -> "BipartiteState":
        """From an amplitude vector ordered as ``|k>_A (x) |i>_B`` (B index fastest)."""
        return cls(np.asarray(psi, dtype=complex).reshape(dim_a, dim_b))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    @property
    def shape(self):
        return self.coefficients.shape

    def to_vector(self) -> np.ndarray:
        return self.coefficients.reshape(-1)


@dataclass(frozen=True)
class SchmidtData:
    """``coefficients = basis_a[:, :k] @ diag(lambdas) @ basis_b[:, :k].T``."""

    coefficients_lambda: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray
    rank: int

    @property
    def spread(self) -> float:
        """(max - min) / max over the nonzero coefficients."""
        lam = self.coefficients_lambda[: self.rank]
        return float((lam[0] - lam[-1]) / lam[0])


def schmidt(state: BipartiteState) -> SchmidtData:
    c = state.coefficients if isinstance(state, BipartiteState) else nk.as_matrix(state)
    dec = nk.svd(c)
    if dec.s_max == 0.0:
        raise ZeroState("zero bipartite state has no Schmidt decomposition")
    lam = dec.singular_values
    return SchmidtData(
        coefficients_lambda=lam,
        basis_a=dec.left_vectors,
        basis_b=dec.right_vectors.conj(),
        rank=int(np.count_nonzero(lam > SCHMIDT_RANK_TOL)),
    )


@dataclass(frozen=True)
class DistillationPlan:
    filter: LossyOperator
    success_probability: float
    output_state: BipartiteState
    local_states: np.ndarray
    input_state: BipartiteState

    @property
    def output_norm(self) -> float:
        """Amplitude of the filtered state; each Schmidt coefficient equals this / sqrt(N)."""
        return self.output_state.norm


def plan_distillation(state: BipartiteState, norm_tol: float = NORM_TOL) -> DistillationPlan:
    """Local filter ``K_A = G^-1 / ||G^-1||`` turning ``state`` maximally entangled.

    ``G`` holds the A-side states paired with an orthonormal B basis. For a
    square coefficient matrix that basis is the computational one (``G = C``);
    otherwise the B-side Schmidt vectors are used so that ``G`` is N x N.
    The success probability is the squared norm of the filtered state,
    ``N / ||G^-1||^2``.
    """
    if not isinstance(state, BipartiteState):
        state = BipartiteState(state)
    c = state.coefficients
    if abs(state.norm - 1.0) > norm_tol:
        raise NotNormalized(f"state norm is {state.norm:.12g}, expected 1")
    n, m = c.shape
    sd = schmidt(state)
    if sd.rank < n:
        raise RankDeficient(f"Schmidt rank {sd.rank} < {n}: cannot reach rank-{n} maximal entanglement")
    g = c if n == m else c @ sd.basis_b[:, :n].conj()
    g_inv = nk.inverse(g)
    g_inv_norm = nk.spectral_norm(g_inv)
    k_a = LossyOperator(g_inv / g_inv_norm)
    out = BipartiteState(k_a.matrix @ c)
    return DistillationPlan(
        filter=k_a,
        success_probability=float(n / g_inv_norm**2),
        output_state=out,
        local_states=g,
        input_state=state,
    )


def usd_density_matrix(states, norm_tol: float = NORM_TOL) -> np.ndarray:
    """``rho = sum_i p_i |h_i><h_i|`` for normalized states with priors."""
    st = _as_states(states)
    if st.priors is None:
        raise MissingPriors("state set has no priors")
    norms = np.linalg.norm(st.states, axis=0)
    if np.any(np.abs(norms - 1.0) > norm_tol):
        raise NotNormalized("density matrix needs normalized states")
    g = st.states
    rho = (g * st.priors) @ g.conj().T
    return 0.5 * (rho + rho.conj().T)


def density_spectrum(states) -> np.ndarray:
    """Eigenvalues of the USD density matrix, descending.

    They play the role of squared Schmidt coefficients of the matching
    bipartite state.
    """
    return nk.hermitian_eig(usd_density_matrix(states)).eigenvalues


def uniform_priors(states) -> StateSet:
    """Normalized copy of a state set with equal priors."""
    st = _as_states(states)
    m = len(st)
    return StateSet(st.normalized(), np.full(m, 1.0 / m))


def is_maximally_entangled(state: BipartiteState, rtol: float = MAX_ENTANGLED_RTOL,
                           rank: Optional[int] = None) -> bool:
    sd = schmidt(state)
    r = rank if rank is not None else min(state.shape)
    lam = sd.coefficients_lambda[:r]
    return bool(lam[-1] > 0 and (lam[0] - lam[-1]) <= rtol * lam[0])
