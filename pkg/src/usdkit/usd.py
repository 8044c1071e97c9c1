"""Discrimination power of a lossy operator and synthesis of discriminators.

A lossy operator ``K`` unambiguously discriminates a set of states when it
maps them to mutually orthogonal outputs. Everything that does not depend on
the inputs is a function of the singular values of ``K``; the smallest pair
angle ``K`` can separate is ``2 arctan(s_min / s_max)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import numkernel as nk
from .errors import (
    DimensionMismatch,
    LengthMismatch,
    LinearlyDependent,
    NonInvertible,
    NotDiscriminated,
    NotUnitary,
    PreconditionError,
    ZeroState,
)

PASSIVE_TOL = 1e-12
PRIORS_TOL = 1e-12
#: normalized output overlap above which a set is not considered discriminated
ORTHOGONALITY_TOL = 1e-8
POPULATION_TOL = 1e-9


class LossyOperator:
    """A square operator with its SVD computed once and cached.

    Downstream code (phase families, mixers, dilation) always reuses
    ``self.svd`` so that the singular-vector gauge stays consistent.
    """

    def __init__(self, matrix):
        m = nk.as_matrix(matrix, "operator")
        nk._require_square(m, "operator")
        m.setflags(write=False)
        self.matrix = m
        self.svd = nk.svd(m)

    def __repr__(self):
        return f"LossyOperator(dim={self.dim}, s={np.array2string(self.singular_values, precision=6)})"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def singular_values(self) -> np.ndarray:
        return self.svd.singular_values

    @property
    def spectral_norm(self) -> float:
        return self.svd.s_max

    @property
    def passive(self) -> bool:
        return self.spectral_norm <= 1.0 + PASSIVE_TOL

    @property
    def invertible(self) -> bool:
        return self.svd.s_max > 0.0 and self.svd.s_min > nk.SINGULAR_RTOL * self.svd.s_max

    @cached_property
    def inverse(self) -> np.ndarray:
        if not self.invertible:
            raise NonInvertible("operator is not invertible")
        return nk.inverse(self.matrix)

    def __matmul__(self, other):
        return self.matrix @ other


@dataclass(frozen=True)
class StateSet:
    """Column matrix of input states (N x M, M <= N) with optional priors."""

    states: np.ndarray
    priors: Optional[np.ndarray] = None

    def __post_init__(self):
        g = nk.as_matrix(self.states, "states")
        n, m = g.shape
        if m > n:
            raise DimensionMismatch(f"{m} states in dimension {n}: at most {n} allowed")
        object.__setattr__(self, "states", g)
        if self.priors is not None:
            p = np.asarray(self.priors, dtype=float).ravel()
            if p.size != m:
                raise LengthMismatch(f"{p.size} priors for {m} states")
            if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > PRIORS_TOL:
                raise PreconditionError("priors must lie in [0, 1] and sum to 1")
            object.__setattr__(self, "priors", p)

    @classmethod
    def from_vectors(cls, vectors: Sequence, priors=None) -> "StateSet":
        return cls(np.column_stack([np.asarray(v, dtype=complex) for v in vectors]), priors)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def __len__(self) -> int:
        return self.states.shape[1]

    def normalized(self) -> np.ndarray:
        norms = np.linalg.norm(self.states, axis=0)
        if np.any(norms == 0.0):
            raise ZeroState("state set contains a zero vector")
        return self.states / norms


def _as_operator(k) -> LossyOperator:
    return k if isinstance(k, LossyOperator) else LossyOperator(k)


def _as_states(states) -> StateSet:
    return states if isinstance(states, StateSet) else StateSet(states)


def pair_angle(a, b) -> float:
    """Angle in [0, pi/2] between the rays spanned by ``a`` and ``b``.

    Uses ``2 atan2(|a - b'|, |a + b'|)`` with ``b'`` rephased onto ``a``,
    which stays accurate for nearly parallel vectors where arccos does not.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroState("angle with a zero vector is undefined")
    a = a / na
    b = b / nb
    ov = np.vdot(b, a)
    if abs(ov) > 0.0:
        b = b * (ov / abs(ov))
    return float(2.0 * np.arctan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def min_pairwise_angle(states) -> float:
    st = _as_states(states)
    if len(st) < 2:
        raise PreconditionError("need at least two states")
    g = st.normalized()
    m = g.shape[1]
    return min(pair_angle(g[:, i], g[:, j]) for i in range(m) for j in range(i + 1, m))


def discrimination_residual(k, states) -> float:
    """Largest normalized overlap between distinct outputs ``K g_i``.

    Zero means the set is perfectly discriminated; ``inf`` if ``K`` annihilates
    one of the states.
    """
    op = _as_operator(k)
    st = _as_states(states)
    h = op.matrix @ st.states
    norms = np.linalg.norm(h, axis=0)
    if np.any(norms == 0.0):
        return float("inf")
    hn = h / norms
    ov = np.abs(hn.conj().T @ hn)
    np.fill_diagonal(ov, 0.0)
    return float(ov.max()) if ov.size > 1 else 0.0


def _best_angle_from_svd(dec: nk.SvdResult) -> float:
    if dec.s_max == 0.0:
        return 0.0
    return float(2.0 * np.arctan(dec.s_min / dec.s_max))


@dataclass(frozen=True)
class AnalysisReport:
    singular_values: np.ndarray
    spectral_norm: float
    passive: bool
    invertible: bool
    best_angle_rad: float
    condition_product: Optional[float]
    angle_lower_bound: Optional[float]
    angle_upper_bound: Optional[float]

    @property
    def non_discriminating(self) -> bool:
        return not self.invertible

    @property
    def best_angle_deg(self) -> float:
        return float(np.degrees(self.best_angle_rad))


def analyze(k) -> AnalysisReport:
    """Summarize what ``k`` can discriminate.

    For a singular ``k`` the best angle is reported as 0 and the bounds are
    omitted (``non_discriminating`` is then true).
    """
    op = _as_operator(k)
    dec = op.svd
    if not op.invertible:
        return AnalysisReport(dec.singular_values, dec.s_max, op.passive, False, 0.0, None, None, None)
    cond = dec.s_max / dec.s_min
    x = 1.0 / cond
    return AnalysisReport(
        singular_values=dec.singular_values,
        spectral_norm=dec.s_max,
        passive=op.passive,
        invertible=True,
        best_angle_rad=_best_angle_from_svd(dec),
        condition_product=float(cond),
        angle_lower_bound=1.5 * x,
        angle_upper_bound=2.0 * x,
    )


def best_angle(k) -> float:
    """Smallest angle between two inputs that ``k`` maps to orthogonal outputs."""
    op = _as_operator(k)
    if not op.invertible:
        raise NonInvertible("best angle needs an invertible operator")
    return _best_angle_from_svd(op.svd)


def angle_bounds(k) -> tuple:
    """``(1.5 x, 2 x)`` with ``x = 1 / (||K|| ||K^-1||)``; they bracket the best angle."""
    op = _as_operator(k)
    if not op.invertible:
        raise NonInvertible("angle bounds need an invertible operator")
    x = op.svd.s_min / op.svd.s_max
    return 1.5 * x, 2.0 * x


@dataclass(frozen=True)
class OptimalPair:
    g_plus: np.ndarray
    g_minus: np.ndarray
    out_plus: np.ndarray
    out_minus: np.ndarray
    angle_rad: float
    detection_probability: float
    # probability that K itself yields a conclusive result on the normalized inputs;
    # equals detection_probability when s_max = 1
    conclusive_probability: float
    degenerate: bool = False

    @property
    def states(self) -> StateSet:
        return StateSet(np.column_stack([self.g_plus, self.g_minus]))


def optimal_pair(k) -> OptimalPair:
    """The pair of inputs separated by the smallest angle that ``k`` discriminates.

    ``g+- = s_min |v_max> +- s_max |v_min>``; both map to
    ``s_min s_max (|u_max> +- |u_min>)``. When all singular values coincide,
    the extremal right singular vectors are returned with ``degenerate=True``.
    """
    op = _as_operator(k)
    if not op.invertible:
        raise NonInvertible("optimal pair needs an invertible operator")
    if op.dim < 2:
        raise DimensionMismatch("optimal pair needs dimension >= 2")
    dec = op.svd
    s_max, s_min = dec.s_max, dec.s_min
    v_max = dec.right_vectors[:, 0]
    v_min = dec.right_vectors[:, op.dim - 1]
    degenerate = (s_max - s_min) <= nk.DEGENERACY_RTOL * s_max
    if degenerate:
        gp, gm = v_max.copy(), v_min.copy()
    else:
        gp = s_min * v_max + s_max * v_min
        gm = s_min * v_max - s_max * v_min
    out_p, out_m = op.matrix @ gp, op.matrix @ gm
    gpn = gp / np.linalg.norm(gp)
    gmn = gm / np.linalg.norm(gm)
    overlap = abs(np.vdot(gpn, gmn))
    return OptimalPair(
        g_plus=gp,
        g_minus=gm,
        out_plus=out_p,
        out_minus=out_m,
        angle_rad=pair_angle(gp, gm),
        detection_probability=float(1.0 - overlap),
        conclusive_probability=float(np.linalg.norm(op.matrix @ gpn) ** 2),
        degenerate=bool(degenerate),
    )


def synthesize_discriminator(states, weights=None, output_basis=None) -> LossyOperator:
    """Build ``K = U_out diag(weights) G^-1`` discriminating the columns of ``G``.

    With no weights, uniform weights ``1 / ||G^-1||`` are used, which gives
    ``||K|| = 1``. Explicit weights that would make ``K`` amplify are scaled
    down jointly until ``K`` is passive. For fewer states than dimensions the
    pseudo-inverse replaces ``G^-1`` and the orthogonal complement of the span
    is sent to zero.
    """
    st = _as_states(states)
    g = st.states
    n, m = g.shape
    dec = nk.svd(g)
    if dec.s_max == 0.0 or dec.s_min <= nk.SINGULAR_RTOL * dec.s_max:
        raise LinearlyDependent("input states are linearly dependent; USD is impossible")
    g_pinv = (dec.right_vectors / dec.singular_values) @ dec.left_vectors[:, :m].conj().T

    if weights is None:
        lam = np.full(m, dec.s_min)
    else:
        lam = np.asarray(weights, dtype=float).ravel()
        if lam.size != m:
            raise LengthMismatch(f"{lam.size} weights for {m} states")
        if np.any(lam <= 0) or np.any(lam > 1):
            raise PreconditionError("weights must lie in (0, 1]")

    if output_basis is None:
        u_out = np.eye(n, dtype=complex)
    else:
        u_out = nk.as_matrix(output_basis, "output_basis")
        if u_out.shape != (n, n) or not nk.is_unitary(u_out):
            raise NotUnitary("output basis must be an N x N unitary")

    k = (u_out[:, :m] * lam) @ g_pinv
    norm = nk.spectral_norm(k)
    if norm > 1.0 + PASSIVE_TOL:
        k = k / norm
    return LossyOperator(k)


def are_usd_equivalent(a, b, tol: float = 1e-9) -> bool:
    """Same singular values (relative to the larger ``s_max``) within ``tol``."""
    oa, ob = _as_operator(a), _as_operator(b)
    if oa.dim != ob.dim:
        raise DimensionMismatch(f"dimensions differ: {oa.dim} vs {ob.dim}")
    sa, sb = oa.singular_values, ob.singular_values
    scale = max(sa[0], sb[0], np.finfo(float).tiny)
    return bool(np.max(np.abs(sa - sb)) <= tol * scale)


@dataclass(frozen=True)
class PopulationReport:
    overlaps: np.ndarray
    fully_populated: bool
    min_pairwise_angle_rad: float
    best_angle_rad: float
    completely_nonorthogonal: bool

    @property
    def angle_gap(self) -> float:
        return self.min_pairwise_angle_rad - self.best_angle_rad


def population_report(k, states, tol: float = ORTHOGONALITY_TOL) -> PopulationReport:
    """How the (normalized) inputs populate the right singular vectors of ``k``.

    ``overlaps[j, i] = |<g_j|v_i>|``. For a completely non-orthogonal set that
    ``k`` discriminates every entry is nonzero, and for more than two states
    the smallest pair angle strictly exceeds the best two-state angle.
    """
    op = _as_operator(k)
    st = _as_states(states)
    if st.dim != op.dim:
        raise DimensionMismatch("states and operator dimensions differ")
    if discrimination_residual(op, st) > tol:
        raise NotDiscriminated("operator does not map the states to orthogonal outputs")
    g = st.normalized()
    overlaps = np.abs(g.conj().T @ op.svd.right_vectors)
    ov = np.abs(g.conj().T @ g)
    off = ov[~np.eye(len(st), dtype=bool)]
    return PopulationReport(
        overlaps=overlaps,
        fully_populated=bool(np.all(overlaps > POPULATION_TOL)),
        min_pairwise_angle_rad=min_pairwise_angle(st),
        best_angle_rad=_best_angle_from_svd(op.svd),
        completely_nonorthogonal=bool(np.all(off > POPULATION_TOL)),
    )


@dataclass(frozen=True)
class PairReduction:
    """Real 2-D picture of a discriminated pair in its sum/difference basis."""

    x_in: float
    y_in: float
    x_out: float
    y_out: float
    angle_rad: float

    @property
    def tan_half_angle(self) -> float:
        return self.y_in / self.x_in


def reduce_to_2d(k, g1, g2) -> PairReduction:
    """Internal check used by the tests.

    After rephasing ``g2`` so that ``<g2|g1>`` is real positive, the
    normalized pair reads ``(x_in, +-y_in)`` in the orthonormal basis
    ``|+-> ~ g1 +- g2``. Writing ``x_out = x_in ||K|+>||`` and
    ``y_out = y_in ||K|->||``, orthogonal outputs force ``x_out = y_out``.
    """
    op = _as_operator(k)
    a = np.asarray(g1, dtype=complex) / np.linalg.norm(g1)
    b = np.asarray(g2, dtype=complex) / np.linalg.norm(g2)
    ov = np.vdot(b, a)
    if abs(ov) > 0.0:
        b = b * (ov / abs(ov))
    plus = a + b
    minus = a - b
    plus /= np.linalg.norm(plus)
    minus /= np.linalg.norm(minus)
    x_in = float(np.vdot(plus, a).real)
    y_in = float(np.vdot(minus, a).real)
    x_out = x_in * float(np.linalg.norm(op.matrix @ plus))
    y_out = y_in * float(np.linalg.norm(op.matrix @ minus))
    return PairReduction(x_in, y_in, x_out, y_out, pair_angle(a, b))
