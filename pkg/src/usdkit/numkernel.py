"""Dense complex linear algebra for small operators.

Matrices are plain ``numpy`` complex128 arrays. The singular value
decomposition is a one-sided Jacobi iteration (column rotations only, no
explicit ``K^H K``), which keeps small singular values accurate to working
precision relative to their own size. Everything here is a pure function.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NegativeEigenvalue,
    NoConvergence,
    NonFinite,
    NotHermitian,
    Singular,
)

EPS = np.finfo(float).eps

#: relative threshold below which the smallest singular value counts as zero
SINGULAR_RTOL = 1e-12
#: relative hermiticity tolerance for eigen-solvers
HERMITIAN_RTOL = 1e-10
#: eigenvalues below this (absolute) are an error for psd_sqrt; above it they are clamped
NEGATIVE_EIG_TOL = 1e-8
#: relative gap under which two singular values are treated as equal
DEGENERACY_RTOL = 1e-8
MAX_SWEEPS = 100


@dataclass(frozen=True)
class SvdResult:
    """``m = left_vectors[:, :k] @ diag(singular_values) @ right_vectors[:, :k].conj().T``

    with ``k = min(rows, cols)``. Both vector matrices are square and unitary.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    @property
    def s_max(self) -> float:
        return float(self.singular_values[0])

    @property
    def s_min(self) -> float:
        return float(self.singular_values[-1])

    def reconstruct(self) -> np.ndarray:
        k = len(self.singular_values)
        return (self.left_vectors[:, :k] * self.singular_values) @ self.right_vectors[:, :k].conj().T


@dataclass(frozen=True)
class HermitianEig:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex array (copy)."""
    a = np.array(m, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return a


def _require_square(a: np.ndarray, name: str = "matrix") -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")


def complete_basis(q: np.ndarray, dim: int) -> np.ndarray:
    """Extend orthonormal columns ``q`` (dim x k, k <= dim) to a dim x dim unitary.

    Each new column is the standard basis vector with the largest component
    outside the current span (squared norm >= (dim - k) / dim), projected out
    twice and normalized.
    """
    cols = [q[:, j] for j in range(q.shape[1])]
    while len(cols) < dim:
        basis = np.column_stack(cols) if cols else np.zeros((dim, 0), dtype=complex)
        resid = np.eye(dim, dtype=complex)
        for _ in range(2):
            resid = resid - basis @ (basis.conj().T @ resid)
        norms = np.linalg.norm(resid, axis=0)
        j = int(np.argmax(norms))
        cols.append(resid[:, j] / norms[j])
    return np.column_stack(cols) if cols else np.zeros((dim, 0), dtype=complex)




def _jacobi_tall(a: np.ndarray, max_sweeps: int):
    """One-sided Jacobi on the columns of ``a`` (rows >= cols)."""
    a = a.copy()
    m, n = a.shape
    v = np.eye(n, dtype=complex)
    tol = max(m, n) * EPS
    # columns below eps * ||a||_F end up under the zero cutoff anyway; rotating
    # them only chases rounding noise
    negligible = max((EPS * np.linalg.norm(a)) ** 2, 1e-300)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                alpha = np.vdot(ap, ap).real
                beta = np.vdot(aq, aq).real
                gamma = np.vdot(ap, aq)
                g = abs(gamma)
                if g == 0.0 or g <= tol * np.sqrt(alpha * beta) or min(alpha, beta) < negligible:
                    continue
                rotated = True
                # rephase column q so that <a_p|a_q> is real positive, then rotate
                phase = np.exp(1j * np.angle(gamma))
                zeta = (beta - alpha) / (2.0 * g)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                bq = aq * np.conj(phase)
                a[:, p] = c * ap - s * bq
                a[:, q] = s * ap + c * bq
                vp = v[:, p].copy()
                vq = v[:, q] * np.conj(phase)
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        if not rotated:
            break
    else:
        raise NoConvergence(f"Jacobi SVD did not converge in {max_sweeps} sweeps")

    sv = np.linalg.norm(a, axis=0)
    order = np.argsort(-sv, kind="stable")
    sv = sv[order]
    a = a[:, order]
    v = v[:, order]

    s_max = sv[0] if n else 0.0
    cutoff = max(m, n) * EPS * s_max
    keep = [j for j in range(n) if sv[j] > cutoff and sv[j] > 0.0]
    u = np.zeros((m, n), dtype=complex)
    for j in keep:
        u[:, j] = a[:, j] / sv[j]
    if len(keep) < m:
        # columns belonging to (numerically) zero singular values get a basis completion
        base = complete_basis(u[:, keep], m)
        extra = iter(range(len(keep), m))
        full = np.zeros((m, m), dtype=complex)
        full[:, keep] = u[:, keep]
        for j in range(m):
            if j not in keep:
                full[:, j] = base[:, next(extra)]
        u = full
    return sv, u, v


def _fix_gauge(u: np.ndarray, v: np.ndarray, k: int) -> None:
    """Make the largest-magnitude entry of each right vector real positive (in place)."""
    for j in range(v.shape[1]):
        col = v[:, j]
        idx = int(np.argmax(np.abs(col)))
        if abs(col[idx]) == 0.0:
            continue
        ph = np.conj(col[idx] / abs(col[idx]))
        v[:, j] = col * ph
        if j < k:
            u[:, j] = u[:, j] * ph


def svd(m, max_sweeps: int = MAX_SWEEPS) -> SvdResult:
    """Singular value decomposition by one-sided Jacobi rotations.

    Singular values come out in descending order. Rectangular input is
    accepted; the left and right vector matrices are always square unitaries.

    Raises
    ------
    NonFinite
        if ``m`` has NaN/Inf entries.
    NoConvergence
        if the sweep cap is reached.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    # work at unit scale so squared column norms cannot under/overflow
    top = float(np.abs(a).max()) if a.size else 0.0
    # power-of-two exponent: exact, and safe for subnormal entries
    shift = int(np.frexp(top)[1]) if top > 0.0 else 0
    a = np.ldexp(a.real, -shift) + 1j * np.ldexp(a.imag, -shift)
    if rows >= cols:
        sv, u, v = _jacobi_tall(a, max_sweeps)
    else:
        sv, v, u = _jacobi_tall(a.conj().T, max_sweeps)
    k = min(rows, cols)
    _fix_gauge(u, v, k)
    sv = np.ldexp(sv, shift)
    return SvdResult(sv, u, v)


def spectral_norm(m) -> float:
    return svd(m).s_max


def hermitian_eig(m, rtol: float = HERMITIAN_RTOL) -> HermitianEig:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending."""
    a = as_matrix(m)
    _require_square(a)
    dev = np.linalg.norm(a - a.conj().T)
    if dev > rtol * max(np.linalg.norm(a), 1.0):
        raise NotHermitian(f"matrix is not Hermitian (||m - m^H|| = {dev:.3e})")
    w, p = np.linalg.eigh(0.5 * (a + a.conj().T))
    return HermitianEig(w[::-1].copy(), p[:, ::-1].copy())


def inverse(m, rtol: float = SINGULAR_RTOL) -> np.ndarray:
    """Inverse through the SVD; refuses (numerically) singular input."""
    a = as_matrix(m)
    _require_square(a)
    dec = svd(a)
    if dec.s_max == 0.0 or dec.s_min <= rtol * dec.s_max:
        raise Singular(
            f"matrix is singular (s_min = {dec.s_min:.3e}, s_max = {dec.s_max:.3e})"
        )
    return (dec.right_vectors / dec.singular_values) @ dec.left_vectors.conj().T


def psd_sqrt(m, neg_tol: float = NEGATIVE_EIG_TOL, zero_floor: float | None = None) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix.

    Eigenvalues at or below ``zero_floor`` are taken as exactly zero (default:
    rounding level relative to the largest eigenvalue). Pass the scale of the
    terms that produced ``m`` when it is a difference such as ``I - K^H K``,
    since sqrt turns 1e-16 rounding noise into 1e-8.
    """
    eig = hermitian_eig(m)
    lam = eig.eigenvalues
    if lam.size and lam[-1] < -neg_tol:
        raise NegativeEigenvalue(f"matrix has eigenvalue {lam[-1]:.3e} < 0")
    if zero_floor is None:
        zero_floor = 8 * len(lam) * EPS * max(abs(lam[0]), abs(lam[-1]))
    root = np.sqrt(np.where(lam > zero_floor, lam, 0.0))
    p = eig.eigenvectors
    out = (p * root) @ p.conj().T
    return 0.5 * (out + out.conj().T)


def gram(states) -> np.ndarray:
    """Matrix of pairwise overlaps ``<col_i|col_j>``."""
    g = as_matrix(states, "states")
    return g.conj().T @ g


def is_unitary(m, tol: float = 1e-10) -> bool:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.linalg.norm(a.conj().T @ a - np.eye(a.shape[0])) <= tol)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a complex Gaussian matrix with the R-phase fixed."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_complex(shape, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
