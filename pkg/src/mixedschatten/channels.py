"""Linear maps between matrix algebras.

A map ``Phi: C^{n x n} -> C^{m x m}`` is stored in one of three forms:

* :class:`KrausMap` -- operators ``K_i`` (``m x n``) with signs ``s_i = +-1``,
  ``Phi(X) = sum_i s_i K_i X K_i^*``. Negative signs encode differences of CP maps.
* :class:`ChoiMap` -- the Choi matrix ``J = sum_ij |i><j| (x) Phi(|i><j|)``
  (input factor first).
* :class:`MeasurePrepareMap` -- pairs ``(M_i, sigma_i)`` with
  ``Phi(X) = sum_i Tr[M_i X] sigma_i``.

:class:`TensorMap` keeps a tensor product lazily as a list of factors.

Adjoints are taken with respect to the pairing ``Tr[Phi*(Y) X] = Tr[Y Phi(X)]``.
For Hermiticity-preserving maps (all maps in this package) this is the usual
Hilbert-Schmidt adjoint.
"""

from __future__ import annotations

import json
import math
from functools import cached_property

import numpy as np

from .linalg import (
    as_hermitian,
    as_matrix,
    hermitize,
    partial_trace,
    realign,
)

TP_TOL = 1e-8
CP_RTOL = 1e-9
DENSE_TENSOR_LIMIT = 2**12


class NotCompletelyPositive(ValueError):
    """The map's Choi matrix has a negative eigenvalue beyond tolerance."""

    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(f"map is not completely positive: Choi eigenvalue {self.min_eigenvalue:.3e}")


class LinearMap:
    """Base class; subclasses implement ``apply``, ``adjoint`` and ``choi``."""

    in_dim: int
    out_dim: int

    def apply(self, X) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, X) -> np.ndarray:
        return self.apply(X)

    def adjoint(self) -> "LinearMap":
        raise NotImplementedError

    def choi(self) -> np.ndarray:
        n = self.in_dim
        J = np.zeros((n, self.out_dim, n, self.out_dim), complex)
        for i in range(n):
            for j in range(n):
                E = np.zeros((n, n), complex)
                E[i, j] = 1
                J[i, :, j, :] = self.apply(E)
        return J.reshape(n * self.out_dim, n * self.out_dim)

    def superoperator(self) -> np.ndarray:
        """Matrix acting on row-major vectorizations: ``vec(Phi(X)) = S vec(X)``."""
        return realign(self.choi(), (self.in_dim, self.out_dim))

    def _check_input(self, X, dim) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        if X.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} input, got shape {X.shape}")
        return X

    # structural flags -------------------------------------------------------

    def choi_min_eigenvalue(self) -> float:
        J = as_hermitian(self.choi(), rtol=1e-8)
        return float(np.linalg.eigvalsh(J)[0])

    def is_cp(self, rtol=CP_RTOL) -> bool:
        J = hermitize(self.choi())
        w = np.linalg.eigvalsh(J)
        return bool(w[0] >= -rtol * max(np.abs(w).max(), 1e-300))

    def is_tp(self, tol=TP_TOL) -> bool:
        T = partial_trace(self.choi(), (self.in_dim, self.out_dim), keep=0)
        return bool(np.abs(T - np.eye(self.in_dim)).max() <= tol)

    def is_hermiticity_preserving(self, tol=1e-10) -> bool:
        J = self.choi()
        return bool(np.abs(J - J.conj().T).max() <= tol * max(np.abs(J).max(), 1e-300))

    @property
    def known_cp(self) -> bool:
        """Cheap structural CP certificate (no eigen-decomposition)."""
        return False

    def sup_norm_bound(self) -> float:
        """``||Phi(I)||_inf``, which equals ``||Phi||_{inf->inf}`` for positive maps."""
        return float(np.linalg.norm(self.apply(np.eye(self.in_dim)), 2))

    def scaled(self, s: float) -> "LinearMap":
        return ChoiMap(s * self.choi(), self.in_dim, self.out_dim)


class KrausMap(LinearMap):
    def __init__(self, operators, signs=None):
        ops = np.asarray(operators, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] < 1:
            raise ValueError("Kraus operators must be a non-empty list of matrices")
        if not np.all(np.isfinite(ops)):
            raise ValueError("Kraus operators have non-finite entries")
        self.operators = ops
        self.out_dim, self.in_dim = ops.shape[1], ops.shape[2]
        if signs is None:
            signs = np.ones(len(ops))
        signs = np.asarray(signs, dtype=float)
        if signs.shape != (len(ops),) or not np.all(np.isin(signs, (-1.0, 1.0))):
            raise ValueError("signs must be +1/-1, one per Kraus operator")
        self.signs = signs

    def apply(self, X):
        X = self._check_input(X, self.in_dim)
        K = self.operators
        return np.einsum("k,kai,ij,kbj->ab", self.signs, K, X, K.conj(), optimize=True)

    def adjoint(self):
        return KrausMap(self.operators.conj().transpose(0, 2, 1), self.signs)

    def choi(self):
        V = self.operators.transpose(0, 2, 1).reshape(len(self.operators), -1)
        return np.einsum("k,ki,kj->ij", self.signs, V, V.conj())

    @property
    def known_cp(self):
        return bool(np.all(self.signs > 0))

    def scaled(self, s):
        if s < 0:
            return KrausMap(self.operators * math.sqrt(-s), -self.signs)
        return KrausMap(self.operators * math.sqrt(s), self.signs)


class ChoiMap(LinearMap):
    def __init__(self, J, in_dim, out_dim):
        J = as_matrix(J, square=True)
        if J.shape[0] != in_dim * out_dim:
            raise ValueError(f"Choi matrix of size {J.shape[0]} does not match {in_dim}x{out_dim}")
        self._choi = J
        self.in_dim, self.out_dim = int(in_dim), int(out_dim)

    @cached_property
    def _superop(self):
        return realign(self._choi, (self.in_dim, self.out_dim))

    def apply(self, X):
        X = self._check_input(X, self.in_dim)
        return (self._superop @ X.reshape(-1)).reshape(self.out_dim, self.out_dim)

    def adjoint(self):
        n, m = self.in_dim, self.out_dim
        J4 = self._choi.reshape(n, m, n, m)
        return ChoiMap(J4.transpose(3, 2, 1, 0).reshape(n * m, n * m), m, n)

    def choi(self):
        return self._choi.copy()

    def superoperator(self):
        return self._superop.copy()


class MeasurePrepareMap(LinearMap):
    """``X -> sum_i Tr[M_i X] sigma_i``.

    Effects and outputs are Hermitian; when all are PSD the map is entanglement
    breaking and hence CP.
    """

    def __init__(self, effects, outputs):
        effects = np.asarray(effects, dtype=complex)
        outputs = np.asarray(outputs, dtype=complex)
        if effects.ndim != 3 or outputs.ndim != 3 or len(effects) != len(outputs) or len(effects) < 1:
            raise ValueError("need matching non-empty lists of effects and outputs")
        self.effects = np.array([as_hermitian(M) for M in effects])
        self.outputs = np.array([as_hermitian(S) for S in outputs])
        self.in_dim, self.out_dim = effects.shape[1], outputs.shape[1]

    def apply(self, X):
        X = self._check_input(X, self.in_dim)
        weights = np.einsum("kji,ij->k", self.effects, X)
        return np.einsum("k,kab->ab", weights, self.outputs)

    def adjoint(self):
        return MeasurePrepareMap(self.outputs, self.effects)

    def choi(self):
        n, m = self.in_dim, self.out_dim
        J = np.einsum("kji,kab->iajb", self.effects, self.outputs)
        return J.reshape(n * m, n * m)

    def povm_completeness(self) -> float:
        return float(np.abs(self.effects.sum(axis=0) - np.eye(self.in_dim)).max())

    @property
    def known_cp(self):
        def psd(A):
            return np.linalg.eigvalsh(A)[0] >= -1e-12 * max(1.0, np.abs(A).max())

        return all(psd(M) for M in self.effects) and all(psd(S) for S in self.outputs)


class TensorMap(LinearMap):
    """Tensor product of factor maps, applied factor by factor."""

    def __init__(self, factors):
        factors = list(factors)
        if not factors or not all(isinstance(f, LinearMap) for f in factors):
            raise ValueError("tensor needs a non-empty list of LinearMap factors")
        self.factors = factors
        self.in_dims = [f.in_dim for f in factors]
        self.out_dims = [f.out_dim for f in factors]
        self.in_dim = math.prod(self.in_dims)
        self.out_dim = math.prod(self.out_dims)

    def apply_product(self, inputs) -> list:
        """Apply to an elementary tensor ``X_1 (x) ... (x) X_k``; returns the factor outputs."""
        if len(inputs) != len(self.factors):
            raise ValueError("one input per factor required")
        return [f.apply(X) for f, X in zip(self.factors, inputs)]

    def _require_dense(self):
        if self.in_dim * self.out_dim > DENSE_TENSOR_LIMIT:
            raise MemoryError(
                f"dense form of a {self.in_dim}->{self.out_dim} tensor map exceeds the "
                f"{DENSE_TENSOR_LIMIT} Choi-size limit; use apply_product"
            )

    def apply(self, X):
        X = self._check_input(X, self.in_dim)
        if self.in_dim > 2**8 or self.out_dim > 2**8:
            raise MemoryError("dense application limited to 256-dimensional factors products")
        k = len(self.factors)
        T = X.reshape(self.in_dims + self.in_dims)
        cur = list(self.in_dims)
        for t, f in enumerate(self.factors):
            S = f.superoperator().reshape(f.out_dim, f.out_dim, f.in_dim, f.in_dim)
            # contract legs t (row) and k+t (column) of T with S
            T = np.tensordot(S, T, axes=([2, 3], [t, k + t]))
            # new legs (a, b) are in front; move them back into place
            T = np.moveaxis(T, [0, 1], [t, k + t])
            cur[t] = f.out_dim
        return T.reshape(self.out_dim, self.out_dim)

    def adjoint(self):
        return TensorMap([f.adjoint() for f in self.factors])

    def choi(self):
        self._require_dense()
        J = np.ones((1, 1), complex)
        dims_in, dims_out = [], []
        for f in self.factors:
            n, m = f.in_dim, f.out_dim
            J = np.kron(J, f.choi())
            dims_in.append(n)
            dims_out.append(m)
        # kron ordering is (n1 m1 n2 m2 ...); reorder to (n1 n2 ... m1 m2 ...)
        k = len(self.factors)
        inter = [d for pair in zip(dims_in, dims_out) for d in pair]
        T = J.reshape(inter + inter)
        perm = [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)]
        perm = perm + [2 * k + p for p in perm]
        return T.transpose(perm).reshape(self.in_dim * self.out_dim, -1)

    @property
    def known_cp(self):
        return all(f.known_cp for f in self.factors)


def tensor(maps) -> TensorMap:
    return TensorMap(maps)


# conversions ----------------------------------------------------------------


def choi(phi: LinearMap) -> np.ndarray:
    return phi.choi()


def apply(phi: LinearMap, X) -> np.ndarray:
    return phi.apply(X)


def adjoint(phi: LinearMap) -> LinearMap:
    return phi.adjoint()


def kraus_from_choi(J, in_dim, out_dim, tol=CP_RTOL) -> KrausMap:
    """Kraus form of a CP map from its Choi matrix (scaled eigenvectors)."""
    J = as_hermitian(J, rtol=1e-8)
    if J.shape[0] != in_dim * out_dim:
        raise ValueError("Choi size does not match dimensions")
    w, V = np.linalg.eigh(J)
    scale = max(np.abs(w).max(), 1e-300)
    if w[0] < -tol * scale:
        raise NotCompletelyPositive(w[0])
    keep = w > tol * scale
    if not keep.any():
        keep[-1] = True
    ops = [math.sqrt(max(lam, 0.0)) * v.reshape(in_dim, out_dim).T for lam, v in zip(w[keep], V[:, keep].T)]
    return KrausMap(np.array(ops))


def signed_kraus_from_choi(J, in_dim, out_dim, tol=1e-12) -> KrausMap:
    """Signed Kraus form of any Hermiticity-preserving map."""
    J = as_hermitian(J, rtol=1e-8)
    w, V = np.linalg.eigh(J)
    scale = max(np.abs(w).max(), 1e-300)
    keep = np.abs(w) > tol * scale
    if not keep.any():
        return KrausMap(np.zeros((1, out_dim, in_dim)))
    ops = [math.sqrt(abs(lam)) * v.reshape(in_dim, out_dim).T for lam, v in zip(w[keep], V[:, keep].T)]
    return KrausMap(np.array(ops), np.sign(w[keep]))


def to_kraus(phi: LinearMap) -> KrausMap:
    if isinstance(phi, KrausMap):
        return phi
    return signed_kraus_from_choi(phi.choi(), phi.in_dim, phi.out_dim)


def is_cp(phi: LinearMap, rtol=CP_RTOL) -> bool:
    return phi.known_cp or phi.is_cp(rtol)


def is_tp(phi: LinearMap, tol=TP_TOL) -> bool:
    return phi.is_tp(tol)


def positivity_floor_from_choi(phi: LinearMap) -> float:
    """Certified ``c`` with ``Phi(w) >= c Tr[w] I`` for PSD ``w``: the smallest Choi eigenvalue."""
    J = hermitize(phi.choi())
    w = np.linalg.eigvalsh(J)
    if w[0] < -CP_RTOL * max(np.abs(w).max(), 1e-300):
        raise NotCompletelyPositive(w[0])
    return float(max(w[0], 0.0))


# constructors ---------------------------------------------------------------


def identity_channel(d) -> KrausMap:
    return KrausMap(np.eye(d)[None])


def unitary_channel(U) -> KrausMap:
    U = as_matrix(U, square=True)
    return KrausMap(U[None])


def depolarizing_channel(d, in_dim=None) -> ChoiMap:
    """Completely depolarizing channel ``X -> Tr[X] I/d`` (input dimension defaults to ``d``)."""
    n = d if in_dim is None else in_dim
    return ChoiMap(np.eye(n * d) / d, n, d)


def classical_embedding(A) -> KrausMap:
    """CP map ``rho -> sum_ij A_ij |i><j| rho |j><i|`` of an entrywise nonnegative matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    if not np.all(np.isfinite(A)) or np.any(A < 0):
        raise ValueError("classical embedding needs an entrywise nonnegative matrix")
    m, n = A.shape
    ops = []
    for i in range(m):
        for j in range(n):
            if A[i, j] > 0:
                K = np.zeros((m, n))
                K[i, j] = math.sqrt(A[i, j])
                ops.append(K)
    if not ops:
        ops.append(np.zeros((m, n)))
    return KrausMap(np.array(ops))


def linear_combination(coeffs, maps) -> ChoiMap:
    maps = list(maps)
    n, m = maps[0].in_dim, maps[0].out_dim
    if any((f.in_dim, f.out_dim) != (n, m) for f in maps):
        raise ValueError("maps must share dimensions")
    J = sum(c * f.choi() for c, f in zip(coeffs, maps))
    return ChoiMap(J, n, m)


def smooth(phi: LinearMap, delta: float) -> ChoiMap:
    """Depolarizing smoothing ``(1 - delta) Phi + delta Tr[.] I/m``."""
    if not 0 <= delta <= 1:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    n, m = phi.in_dim, phi.out_dim
    return ChoiMap((1 - delta) * phi.choi() + delta * np.eye(n * m) / m, n, m)


def holder_dual_problem(phi: LinearMap, q, p):
    """``||Phi||_{q->p} = ||Phi*||_{p'->q'}``; returns ``(Phi*, p', q')``."""
    from .linalg import dual_index

    return phi.adjoint(), dual_index(p), dual_index(q)


def random_cptp(d, rng, rank=None, out_dim=None) -> KrausMap:
    """Random channel from a Haar-like isometry."""
    m = d if out_dim is None else out_dim
    rank = d * m if rank is None else rank
    G = rng.normal(size=(rank * m, d)) + 1j * rng.normal(size=(rank * m, d))
    Q, _ = np.linalg.qr(G)
    return KrausMap(Q.reshape(rank, m, d))


def random_cp(d, rng, rank=None, out_dim=None) -> KrausMap:
    m = d if out_dim is None else out_dim
    rank = d * m if rank is None else rank
    K = (rng.normal(size=(rank, m, d)) + 1j * rng.normal(size=(rank, m, d))) / math.sqrt(2 * d * rank)
    return KrausMap(K)


def random_measure_prepare(d, rng, outcomes=3, out_dim=None) -> MeasurePrepareMap:
    from .linalg import random_density

    m = d if out_dim is None else out_dim
    G = [random_density(d, rng) for _ in range(outcomes)]
    S = sum(G)
    w, U = np.linalg.eigh(S)
    isq = (U / np.sqrt(w)) @ U.conj().T
    effects = [hermitize(isq @ g @ isq) for g in G]
    outputs = [random_density(m, rng) for _ in range(outcomes)]
    return MeasurePrepareMap(effects, outputs)


def symmetrizer_channel(k, d) -> ChoiMap:
    """Uniform average over permutations of ``k`` tensor factors of ``C^d`` (dense; toy sizes only)."""
    import itertools

    D = d**k
    if D * D > DENSE_TENSOR_LIMIT:
        raise MemoryError("symmetrizer is only built densely for tiny spaces")
    perms = list(itertools.permutations(range(k)))
    ops = []
    for perm in perms:
        P = np.eye(D).reshape([d] * k + [D])
        P = P.transpose(list(perm) + [k]).reshape(D, D)
        ops.append(P / math.sqrt(len(perms)))
    return ChoiMap(KrausMap(np.array(ops)).choi(), D, D)


# file format ----------------------------------------------------------------


def _encode(M):
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _decode(data, what):
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{what}: malformed complex matrix") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"{what}: expected nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def map_to_dict(phi: LinearMap) -> dict:
    base = {"in_dim": phi.in_dim, "out_dim": phi.out_dim}
    if isinstance(phi, KrausMap):
        base.update(kind="kraus", operators=[_encode(K) for K in phi.operators])
        if np.any(phi.signs < 0):
            base["signs"] = [int(s) for s in phi.signs]
    elif isinstance(phi, MeasurePrepareMap):
        base.update(
            kind="measure_prepare",
            elements=[{"povm": _encode(M), "output": _encode(S)} for M, S in zip(phi.effects, phi.outputs)],
        )
    else:
        base.update(kind="choi", choi=_encode(phi.choi()))
    return base


def map_from_dict(data: dict) -> LinearMap:
    if not isinstance(data, dict):
        raise ValueError("map document must be an object")
    try:
        kind = data["kind"]
        n, m = int(data["in_dim"]), int(data["out_dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"map document missing field: {exc}") from exc
    if n < 1 or m < 1:
        raise ValueError("dimensions must be positive")
    if kind == "kraus":
        ops = np.array([_decode(K, "kraus operator") for K in data["operators"]])
        phi = KrausMap(ops, data.get("signs"))
    elif kind == "choi":
        phi = ChoiMap(_decode(data["choi"], "choi"), n, m)
    elif kind == "measure_prepare":
        els = data["elements"]
        phi = MeasurePrepareMap(
            [_decode(e["povm"], "povm") for e in els], [_decode(e["output"], "output") for e in els]
        )
    else:
        raise ValueError(f"unknown map kind {kind!r}")
    if (phi.in_dim, phi.out_dim) != (n, m):
        raise ValueError(f"declared dimensions {n}->{m} disagree with the data {phi.in_dim}->{phi.out_dim}")
    return phi


def save_map(phi: LinearMap, path) -> None:
    with open(path, "w") as fh:
        json.dump(map_to_dict(phi), fh)


def load_map(path) -> LinearMap:
    with open(path) as fh:
        return map_from_dict(json.load(fh))
