"""Monte Carlo oracle: realize a passive operator as a unitary and sample it.

The operator ``K`` is embedded as the top-left block of

    U = [[K, sqrt(I - K K^H)], [sqrt(I - K^H K), -K^H]]

acting on system (+) ancilla. An input ``|g>`` enters as ``|g> (+) 0``;
finding the result in the system block is the conclusive branch, which is
then projected onto the orthonormal output basis. The ancilla block is the
inconclusive outcome.

Random numbers come from numpy's PCG64 generator. Each input state gets its
own child stream, ``SeedSequence(seed).spawn(M)[i]``, and every shot
consumes exactly two uniforms from it, in order: one for the branch and one
for the projection (drawn even when the shot is inconclusive). Distillation
shots consume one uniform each from ``SeedSequence(seed)``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .distill import DistillationPlan
from .numkernel import EPS
from .errors import NotDiscriminated, NotNormalized, NotPassive, PreconditionError
from .usd import ORTHOGONALITY_TOL, _as_operator, _as_states, discrimination_residual

INCONCLUSIVE = "inconclusive"
SUCCESS = "success"
FAILURE = "failure"
SEED_ENV = "USDKIT_SEED"


@dataclass(frozen=True)
class Dilation:
    unitary: np.ndarray
    system_dim: int

    @property
    def system_block(self) -> np.ndarray:
        n = self.system_dim
        return self.unitary[:n, :n]


@dataclass
class ShotResult:
    shots: int
    seed: int
    counts: dict = field(default_factory=dict)

    def frequency(self, label) -> float:
        return self.counts.get(label, 0) / self.shots if self.shots else 0.0

    def standard_error(self, p: float) -> float:
        p = min(max(p, 0.0), 1.0)
        return float(np.sqrt(p * (1.0 - p) / self.shots)) if self.shots else float("inf")


def dilate(k) -> Dilation:
    """Unitary 2N x 2N dilation of a passive ``k``.

    The defect blocks are built from the cached SVD, ``sqrt(I - K^H K) = V d V^H``
    and ``sqrt(I - K K^H) = U d U^H`` with ``d = sqrt(1 - s^2)``, which makes
    the off-diagonal unitarity conditions hold to rounding.
    """
    op = _as_operator(k)
    if not op.passive:
        raise NotPassive(f"operator norm {op.spectral_norm:.12g} > 1 cannot be dilated")
    dec = op.svd
    # 1 - s^2 below rounding level is an exact zero; its sqrt would otherwise be ~1e-8
    defect = 1.0 - dec.singular_values**2
    defect[defect <= 8 * op.dim * EPS] = 0.0
    d = np.sqrt(defect)
    u, v = dec.left_vectors, dec.right_vectors
    d_col = (v * d) @ v.conj().T
    d_row = (u * d) @ u.conj().T
    kk = op.matrix
    top = np.hstack([kk, d_row])
    bottom = np.hstack([d_col, -kk.conj().T])
    return Dilation(np.vstack([top, bottom]), op.dim)


def _resolve_seed(seed) -> int:
    if seed is None:
        seed = os.environ.get(SEED_ENV, 0)
    return int(seed)


def outcome_probabilities(k, states) -> np.ndarray:
    """Analytic ``P[i, j] = |<psi_j|K g_i>|^2`` (normalized inputs); last column is inconclusive."""
    op = _as_operator(k)
    st = _as_states(states)
    g = st.normalized()
    h = op.matrix @ g
    psi = h / np.linalg.norm(h, axis=0)
    conc = np.abs(psi.conj().T @ h).T ** 2
    inc = 1.0 - np.linalg.norm(h, axis=0) ** 2
    return np.column_stack([conc, inc])


def measure_usd(k, states, shots: int, seed=None, tol: float = ORTHOGONALITY_TOL,
                norm_tol: float = 1e-9) -> list:
    """Sample the discrimination measurement for each input state.

    Returns one :class:`ShotResult` per input state. Counts are keyed by the
    conclusive outcome index ``j`` (int) or ``"inconclusive"``; only observed
    outcomes appear.
    """
    op = _as_operator(k)
    st = _as_states(states)
    if shots < 0:
        raise PreconditionError("shots must be non-negative")
    seed = _resolve_seed(seed)
    dil = dilate(op)
    norms = np.linalg.norm(st.states, axis=0)
    if np.any(np.abs(norms - 1.0) > norm_tol):
        raise NotNormalized("measurement inputs must be normalized")
    if discrimination_residual(op, st) > tol:
        raise NotDiscriminated("operator does not map the states to orthogonal outputs")

    n, m = st.dim, len(st)
    embedded = np.vstack([st.states, np.zeros((n, m), dtype=complex)])
    evolved = dil.unitary @ embedded
    system, ancilla = evolved[:n], evolved[n:]
    basis = system / np.linalg.norm(system, axis=0)

    streams = np.random.SeedSequence(seed).spawn(m)
    results = []
    for i in range(m):
        p_sys = np.linalg.norm(system[:, i]) ** 2
        p_anc = np.linalg.norm(ancilla[:, i]) ** 2
        p_conclusive = p_sys / (p_sys + p_anc)
        amp = np.abs(basis.conj().T @ system[:, i]) ** 2
        cum = np.cumsum(amp / amp.sum())
        rng = np.random.Generator(np.random.PCG64(streams[i]))
        draws = rng.random((shots, 2))
        conclusive = draws[:, 0] < p_conclusive
        outcome = np.minimum(np.searchsorted(cum, draws[conclusive, 1], side="right"), m - 1)
        counts = {}
        for j, c in zip(*np.unique(outcome, return_counts=True)):
            counts[int(j)] = int(c)
        n_inc = int(shots - conclusive.sum())
        if n_inc:
            counts[INCONCLUSIVE] = n_inc
        results.append(ShotResult(shots, seed, counts))
    return results


def filter_success_probability(plan: DistillationPlan) -> float:
    """Weight left in the system block after the dilated filter acts on side A.

    Computed from the dilation, not from the closed-form ``N / ||G^-1||^2``.
    """
    dil = dilate(plan.filter)
    n = dil.system_dim
    c = plan.input_state.coefficients
    evolved = dil.unitary @ np.vstack([c, np.zeros_like(c)])
    p_sys = np.linalg.norm(evolved[:n]) ** 2
    return float(p_sys / (p_sys + np.linalg.norm(evolved[n:]) ** 2))


def measure_distillation(plan: DistillationPlan, shots: int, seed=None) -> ShotResult:
    """Sample success/failure of the plan's local filter applied to its input state."""
    if shots < 0:
        raise PreconditionError("shots must be non-negative")
    seed = _resolve_seed(seed)
    p = filter_success_probability(plan)
    if abs(p - 1.0) <= 1e-12:
        p = 1.0
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    ok = int(np.count_nonzero(rng.random(shots) < p))
    counts = {}
    if ok:
        counts[SUCCESS] = ok
    if shots - ok:
        counts[FAILURE] = shots - ok
    return ShotResult(shots, seed, counts)


def unitarity_defect(d: Dilation) -> float:
    u = d.unitary
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))
