"""Dense Hermitian linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays. Positive semidefinite operators that are
raised to several powers are wrapped in :class:`PsdOperator`, which caches the
spectral decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

HERMITICITY_RTOL = 1e-10
PSD_RTOL = 1e-10
SUPPORT_RTOL = 1e-8


class NotPositiveError(ValueError):
    """Raised when a matrix that must be PSD has a clearly negative eigenvalue."""


def as_matrix(X, square=False) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2d matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix has non-finite entries")
    if square and X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    return X


def hermitize(X) -> np.ndarray:
    X = np.asarray(X)
    return (X + X.conj().T) / 2


def as_hermitian(X, rtol=HERMITICITY_RTOL) -> np.ndarray:
    """Validate near-Hermiticity and return the symmetrized matrix."""
    X = as_matrix(X, square=True)
    scale = max(np.abs(X).max(), 1e-300)
    resid = np.abs(X - X.conj().T).max()
    if resid > rtol * scale:
        raise ValueError(f"matrix is not Hermitian (residual {resid:.3e})")
    return hermitize(X)


def op_norm(X) -> float:
    return float(np.linalg.norm(X, 2))


def parse_index(p) -> float:
    """Parse a Schatten index such as ``2``, ``"4/3"`` or ``"inf"``."""
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "∞"):
            val = math.inf
        else:
            val = float(Fraction(s))
    else:
        val = float(p)
    if math.isnan(val) or val < 1:
        raise ValueError(f"Schatten index must lie in [1, inf], got {p!r}")
    return val


def format_index(p: float) -> str:
    if math.isinf(p):
        return "inf"
    frac = Fraction(p).limit_denominator(1000)
    if abs(float(frac) - p) < 1e-12 and frac.denominator != 1:
        return f"{frac.numerator}/{frac.denominator}"
    return repr(float(p)) if p != int(p) else str(int(p))


def dual_index(p) -> float:
    """Hölder conjugate ``p'`` with ``1/p + 1/p' = 1``."""
    p = parse_index(p)
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def vector_norm(v, p) -> float:
    v = np.abs(np.asarray(v))
    if math.isinf(p):
        return float(v.max(initial=0.0))
    if p == 1:
        return float(v.sum())
    vmax = v.max(initial=0.0)
    if vmax == 0:
        return 0.0
    # rescale so large p does not underflow
    return float(vmax * np.sum((v / vmax) ** p) ** (1 / p))


def schatten_norm(X, p) -> float:
    """Schatten-p norm ``Tr[|X|^p]^(1/p)``; ``p = inf`` gives the operator norm."""
    X = as_matrix(X)
    p = parse_index(p)
    s = np.linalg.svd(X, compute_uv=False)
    return vector_norm(s, p)


def schatten_norm_hermitian(X, p) -> float:
    """Schatten norm of a Hermitian matrix from its eigenvalues."""
    return vector_norm(np.linalg.eigvalsh(hermitize(X)), parse_index(p))


@dataclass(frozen=True)
class PsdOperator:
    """A PSD matrix together with its (clamped) spectral decomposition."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_matrix(cls, A, rtol=PSD_RTOL) -> "PsdOperator":
        if isinstance(A, PsdOperator):
            return A
        A = as_hermitian(A)
        w, U = np.linalg.eigh(A)
        tol = rtol * max(np.abs(w).max(initial=0.0), 1e-300)
        if w.size and w[0] < -tol:
            raise NotPositiveError(f"matrix is not PSD (eigenvalue {w[0]:.3e})")
        w = np.where(w < 0, 0.0, w)
        w.flags.writeable = False
        return cls(w, U)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        U = self.eigenvectors
        return hermitize((U * self.eigenvalues) @ U.conj().T)

    def support_mask(self, rtol=SUPPORT_RTOL) -> np.ndarray:
        w = self.eigenvalues
        return w > rtol * max(w.max(initial=0.0), 1e-300)

    def apply_function(self, f) -> np.ndarray:
        U = self.eigenvectors
        return hermitize((U * f(self.eigenvalues)) @ U.conj().T)


def as_psd(A, rtol=PSD_RTOL) -> PsdOperator:
    return PsdOperator.from_matrix(A, rtol)


def _power_values(w, r, support):
    out = np.zeros_like(w)
    if r == 0:
        out[support] = 1.0
    else:
        out[support] = w[support] ** r
    return out


def matrix_power_psd(A, r, support_rtol=PSD_RTOL) -> np.ndarray:
    """Spectral power ``A^r`` of a PSD matrix for ``r >= 0``.

    ``r = 0`` returns the projection onto the support (``0^0 := 0``).
    Eigenvalues below ``support_rtol * ||A||`` count as zero.
    """
    if r < 0:
        raise ValueError("negative powers need pinv_power on a PSD matrix")
    A = as_psd(A)
    support = A.support_mask(support_rtol)
    return A.apply_function(lambda w: _power_values(w, r, support))


def pinv_power(A, r, support_rtol=SUPPORT_RTOL) -> np.ndarray:
    """Moore-Penrose power of a PSD matrix: ``A^r`` on the support, 0 elsewhere."""
    A = as_psd(A)
    support = A.support_mask(support_rtol)
    return A.apply_function(lambda w: _power_values(w, r, support))


def support_projection(A, rtol=SUPPORT_RTOL) -> np.ndarray:
    return pinv_power(A, 0, rtol)


def hilbert_metric(A, B, rtol=SUPPORT_RTOL) -> float:
    """Projective Hilbert metric between PSD matrices.

    Returns ``inf`` when the supports differ.
    """
    A, B = as_psd(A), as_psd(B)
    if A.dim != B.dim:
        raise ValueError("dimension mismatch")
    mask_a, mask_b = A.support_mask(rtol), B.support_mask(rtol)
    if mask_a.sum() != mask_b.sum() or mask_a.sum() == 0:
        return math.inf
    Pa = A.eigenvectors[:, mask_a]
    Pb = B.eigenvectors[:, mask_b]
    # equal-rank supports coincide iff the principal angles vanish
    overlap = np.linalg.svd(Pa.conj().T @ Pb, compute_uv=False)
    if overlap.min() < 1 - 1e-6:
        return math.inf
    a_isqrt = pinv_power(A, -0.5, rtol)
    b_isqrt = pinv_power(B, -0.5, rtol)
    lam1 = np.linalg.eigvalsh(hermitize(a_isqrt @ B.matrix @ a_isqrt))[-1]
    lam2 = np.linalg.eigvalsh(hermitize(b_isqrt @ A.matrix @ b_isqrt))[-1]
    return float(max(math.log(lam1) + math.log(lam2), 0.0))


def real_embedding(X) -> np.ndarray:
    """Real ``2d x 2d`` matrix with ``Tr[X^T Y] = Re Tr[X^* Y]`` for embedded pairs."""
    X = as_matrix(X, square=True)
    re, im = X.real, X.imag
    return np.block([[re, -im], [im, re]]) / math.sqrt(2)


def partial_transpose(J, dims, system=0) -> np.ndarray:
    """Transpose one tensor factor (default: the first) of an operator on C^n (x) C^m."""
    n, m = dims
    J = as_matrix(J, square=True)
    if J.shape[0] != n * m:
        raise ValueError(f"operator of size {J.shape[0]} does not split as {n}x{m}")
    T = J.reshape(n, m, n, m)
    T = T.transpose(2, 1, 0, 3) if system == 0 else T.transpose(0, 3, 2, 1)
    return T.reshape(n * m, n * m)


def partial_trace(X, dims, keep=0) -> np.ndarray:
    """Trace out all but one factor of a bipartite operator."""
    n, m = dims
    T = np.asarray(X).reshape(n, m, n, m)
    if keep == 0:
        return np.einsum("ikjk->ij", T)
    return np.einsum("kikj->ij", T)


def realign(J, dims) -> np.ndarray:
    """Reshuffle ``J[(i,a),(j,b)] -> R[(a,b),(i,j)]``.

    Applied to a Choi matrix this yields the matrix of the map acting on
    row-major vectorizations.
    """
    n, m = dims
    return np.asarray(J).reshape(n, m, n, m).transpose(1, 3, 0, 2).reshape(m * m, n * n)


def divided_differences(w, f, fprime, floor_rtol=1e-14, coincide_rtol=1e-12) -> np.ndarray:
    """First divided difference matrix of a scalar function on a spectrum.

    Coincident eigenvalues use ``fprime``; eigenvalues are floored at
    ``floor_rtol * max(w)`` so ``fprime`` stays finite at zero.
    """
    w = np.asarray(w, dtype=float)
    scale = max(w.max(initial=0.0), 1e-300)
    w = np.maximum(w, floor_rtol * scale)
    fw = f(w)
    diff = w[:, None] - w[None, :]
    close = np.abs(diff) <= coincide_rtol * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        G = (fw[:, None] - fw[None, :]) / diff
    mean = (w[:, None] + w[None, :]) / 2
    G[close] = fprime(mean[close])
    return G


def frechet_power(A, r, E) -> np.ndarray:
    """Directional derivative of ``X -> X^r`` at PSD ``A`` along Hermitian ``E``."""
    A = as_psd(A)
    U = A.eigenvectors
    G = divided_differences(A.eigenvalues, lambda x: x**r, lambda x: r * x ** (r - 1))
    return U @ (G * (U.conj().T @ E @ U)) @ U.conj().T


def frechet_power_adjoint(A, r, Xi) -> np.ndarray:
    """Gradient pull-back: the Hermitian ``G`` with ``Re Tr[Xi D(A^r)[E]] = Tr[G E]``."""
    A = as_psd(A)
    U = A.eigenvectors
    Xi = hermitize(Xi)
    G = divided_differences(A.eigenvalues, lambda x: x**r, lambda x: r * x ** (r - 1))
    return hermitize(U @ (G * (U.conj().T @ Xi @ U)) @ U.conj().T)


def hermitian_basis(d) -> np.ndarray:
    """Orthonormal basis (real HS inner product) of d x d Hermitian matrices, shape (d*d, d, d)."""
    basis = []
    for i in range(d):
        E = np.zeros((d, d), complex)
        E[i, i] = 1
        basis.append(E)
    s = 1 / math.sqrt(2)
    for i in range(d):
        for j in range(i + 1, d):
            E = np.zeros((d, d), complex)
            E[i, j] = E[j, i] = s
            basis.append(E)
            E = np.zeros((d, d), complex)
            E[i, j], E[j, i] = -1j * s, 1j * s
            basis.append(E)
    return np.array(basis)


def hermitian_to_coords(X, basis) -> np.ndarray:
    return np.einsum("kij,ij->k", basis.conj(), X).real


def coords_to_hermitian(x, basis) -> np.ndarray:
    return np.einsum("k,kij->ij", x, basis)


def random_density(d, rng, rank=None) -> np.ndarray:
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_unitary(d, rng) -> np.ndarray:
    Z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
