"""Independent ground-truth estimators used to validate the solvers.

Everything here is a lower-bound generator (random-restart projected ascent)
or an exact path for a small special case. The main solvers never call into
this module.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .channels import LinearMap, is_cp
from .linalg import as_matrix, hermitize, parse_index, realign, schatten_norm, vector_norm

ARMIJO = 1e-4
MAX_DIM = 2**10


# --------------------------------------------------------------------------- norms and gradients

def _schatten_grad(Y, p):
    """``(||Y||_p, G)`` with ``d||Y||_p = Re Tr[G^dagger dY]`` (a subgradient where not smooth)."""
    U, s, Vh = np.linalg.svd(Y)
    if math.isinf(p):
        val = s[0]
        return val, np.outer(U[:, 0], Vh[0])
    val = float(np.sum(s**p) ** (1 / p))
    if val == 0:
        return 0.0, np.zeros_like(Y)
    if p == 1:
        keep = s > 1e-14 * s[0]
        return val, U[:, keep] @ Vh[keep]
    return val, (U * (s / val) ** (p - 1)) @ Vh


def _vector_grad(y, p):
    a = np.abs(y)
    if math.isinf(p):
        g = np.zeros_like(y)
        k = int(np.argmax(a))
        g[k] = np.sign(y[k])
        return a[k], g
    val = float(np.sum(a**p) ** (1 / p))
    if val == 0:
        return 0.0, np.zeros_like(y)
    return val, np.sign(y) * (a / val) ** (p - 1)


def _inner(a, b):
    return float(np.real(np.vdot(a, b)))


# --------------------------------------------------------------------------- ascent engine

def _ascend(x, value_grad, project, steps, t0=1.0):
    """Projected gradient ascent with backtracking (halving) and an Armijo test."""
    x = project(x)
    f, g = value_grad(x)
    t = t0
    for _ in range(steps):
        gn = math.sqrt(sum(_inner(gi, gi) for gi in g))
        if gn < 1e-14:
            break
        while t > 1e-14:
            y = project(tuple(xi + t * gi for xi, gi in zip(x, g)))
            fy, gy = value_grad(y)
            gain = sum(_inner(gi, yi - xi) for gi, xi, yi in zip(g, x, y))
            if fy >= f + ARMIJO * max(gain, 0.0) and fy >= f:
                break
            t /= 2
        else:
            break
        improvement = fy - f
        x, f, g = y, fy, gy
        t = min(4 * t, 1e3)
        if improvement <= 1e-15 * max(1.0, abs(f)):
            break
    return f, x


def _best_of(starts, value_grad, project, steps):
    best, arg = -math.inf, None
    for x0 in starts:
        f, x = _ascend(x0, value_grad, project, steps)
        if f > best:  # strict: earlier seeds win ties
            best, arg = f, x
    return best, arg


# --------------------------------------------------------------------------- map plumbing

class _Super:
    """``vec(Phi(X)) = S vec(X)`` (row-major vec), optionally ampliated by ``id_a``."""

    def __init__(self, S, n, m, ancilla=1):
        self.S, self.n, self.m, self.a = S, n, m, ancilla

    @classmethod
    def from_map(cls, phi: LinearMap, ancilla=1):
        return cls(np.asarray(phi.superoperator()), phi.in_dim, phi.out_dim, ancilla)

    def _act(self, X, S, din, dout):
        a = self.a
        X4 = X.reshape(a, din, a, din).transpose(0, 2, 1, 3).reshape(a, a, din * din)
        Y4 = (X4 @ S.T).reshape(a, a, dout, dout).transpose(0, 2, 1, 3)
        return Y4.reshape(a * dout, a * dout)

    def apply(self, X):
        return self._act(X, self.S, self.n, self.m)

    def adjoint(self, Y):
        """Hilbert-Schmidt adjoint: ``<Y, Phi(X)> = <Phi^dagger(Y), X>``."""
        return self._act(Y, self.S.conj().T, self.m, self.n)


def _random_pure(n, rng):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def _random_mixed(n, rng):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return G @ G.conj().T


def _random_herm(n, rng):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (G + G.conj().T) / 2


def _clamp(X):
    w, U = np.linalg.eigh(hermitize(X))
    return (U * np.maximum(w, 0)) @ U.conj().T


# --------------------------------------------------------------------------- oracles

def brute_norm_qp(phi: LinearMap, q, p, restarts=64, steps=500, seed=0, domain="auto"):
    """Best ``||Phi(w)||_p / ||w||_q`` found by restarted projected ascent; a lower bound.

    ``domain`` is ``"psd"`` (the positive-restricted norm), ``"hermitian"``, or
    ``"auto"`` (PSD for CP maps, Hermitian otherwise). Returns ``(value, witness)``.
    """
    q, p = parse_index(q), parse_index(p)
    n, m = phi.in_dim, phi.out_dim
    if n * m > MAX_DIM:
        raise MemoryError(f"brute force is limited to in_dim * out_dim <= {MAX_DIM}")
    if domain == "auto":
        domain = "psd" if is_cp(phi) else "hermitian"
    if domain not in ("psd", "hermitian"):
        raise ValueError(f"unknown domain {domain!r}")
    op = _Super.from_map(phi)
    rng = np.random.default_rng(seed)

    def project(x):
        (X,) = x
        X = _clamp(X) if domain == "psd" else hermitize(X)
        nrm = schatten_norm(X, q)
        if nrm == 0:
            X = np.eye(n, dtype=complex)
            nrm = schatten_norm(X, q)
        return (X / nrm,)

    def value_grad(x):
        (X,) = x
        num, GY = _schatten_grad(op.apply(X), p)
        den, GX = _schatten_grad(X, q)
        grad = hermitize(op.adjoint(GY)) / den - num * hermitize(GX) / den**2
        return num / den, (grad,)

    starts = [(np.eye(n, dtype=complex),)]
    for k in range(restarts - 1):
        if domain == "psd":
            X = _random_pure(n, rng) if k % 2 == 0 else _random_mixed(n, rng)
        else:
            X = _random_herm(n, rng) if k % 2 == 0 else _random_pure(n, rng) - _random_pure(n, rng)
        starts.append((X,))
    val, arg = _best_of(starts, value_grad, project, steps)
    return float(val), arg[0]


def norm_22(phi: LinearMap) -> float:
    """``||Phi||_{2->2}``: largest singular value of the realigned Choi matrix."""
    S = realign(phi.choi(), (phi.in_dim, phi.out_dim))
    return float(np.linalg.norm(S, 2))


def brute_two_indexed(X, dims, q, p, restarts=32, steps=400, seed=0):
    """Lower bound on ``||X||_{(q,p)}`` for ``q >= p`` by ascent over the factors.

    With ``C = A^{1/2r}`` and ``D = B^{1/2r}`` the constraint ``Tr A = 1`` reads
    ``||C||_{2r} = 1``, so the objective is the scale-free ratio
    ``||(C (x) 1) X (D (x) 1)||_p / (||C||_{2r} ||D||_{2r})`` over PSD ``C, D``.
    Returns ``(value, (A, B))``.
    """
    q, p = parse_index(q), parse_index(p)
    X = as_matrix(X, square=True)
    nA, nB = dims
    if nA * nB != X.shape[0]:
        raise ValueError("dims do not match X")
    if X.shape[0] > 2**8:
        raise MemoryError("brute_two_indexed is limited to dimension 2^8")
    if q == p:
        return schatten_norm(X, p), None
    if q < p:
        raise ValueError("brute_two_indexed covers the supremum regime q >= p")
    rq = 2 / (1 / p - 1 / q)  # = 2r
    I = np.eye(nB)
    rng = np.random.default_rng(seed)

    def project(x):
        out = []
        for C in x:
            C = _clamp(C)
            nrm = schatten_norm(C, rq)
            if nrm == 0:
                C, nrm = np.eye(nA, dtype=complex), nA ** (1 / rq)
            out.append(C / nrm)
        return tuple(out)

    def value_grad(x):
        C, D = x
        Ck, Dk = np.kron(C, I), np.kron(D, I)
        num, G = _schatten_grad(Ck @ X @ Dk, p)
        cn, GC = _schatten_grad(C, rq)
        dn, GD = _schatten_grad(D, rq)
        # d num = Re Tr[G^dagger (dC (x) 1) X Dk] + Re Tr[G^dagger Ck X (dD (x) 1)]
        HC = (G @ (X @ Dk).conj().T).reshape(nA, nB, nA, nB).trace(axis1=1, axis2=3)
        HD = ((Ck @ X).conj().T @ G).reshape(nA, nB, nA, nB).trace(axis1=1, axis2=3)
        den = cn * dn
        gC = hermitize(HC) / den - num * hermitize(GC) / (cn * den)
        gD = hermitize(HD) / den - num * hermitize(GD) / (dn * den)
        return num / den, (gC, gD)

    starts = [(np.eye(nA, dtype=complex), np.eye(nA, dtype=complex))]
    for k in range(restarts - 1):
        if k % 2 == 0:
            P = _random_pure(nA, rng)
            starts.append((P, P.copy()))
        else:
            starts.append((_random_mixed(nA, rng), _random_mixed(nA, rng)))
    val, (C, D) = _best_of(starts, value_grad, project, steps)
    w, U = np.linalg.eigh(hermitize(C))
    A = (U * np.maximum(w, 0) ** rq) @ U.conj().T
    w, U = np.linalg.eigh(hermitize(D))
    B = (U * np.maximum(w, 0) ** rq) @ U.conj().T
    return float(val), (A, B)


def diamond_lower_bound(psi: LinearMap, ancilla_dim=None, restarts=32, steps=400, seed=0):
    """``max ||(id (x) Psi)(|phi><phi|)||_1`` over unit vectors on ``C^a (x) C^n``.

    Tight for ``a = n``. Returns ``(value, phi)``.
    """
    n = psi.in_dim
    a = n if ancilla_dim is None else int(ancilla_dim)
    if not 1 <= a <= n:
        raise ValueError("ancilla_dim must lie in [1, in_dim]")
    op = _Super.from_map(psi, ancilla=a)
    rng = np.random.default_rng(seed)
    N = a * n

    def project(x):
        (v,) = x
        nrm = np.linalg.norm(v)
        return (v / nrm,) if nrm > 0 else (np.eye(N, 1)[:, 0].astype(complex),)

    def value_grad(x):
        (v,) = x
        val, G = _schatten_grad(op.apply(np.outer(v, v.conj())), 1)
        M = op.adjoint(G)
        return val, ((M + M.conj().T) @ v,)

    starts = []
    for k in range(restarts):
        if k == 0:  # maximally entangled start
            v = np.zeros((a, n), complex)
            v[np.arange(a), np.arange(a)] = 1
            v = v.reshape(-1)
        else:
            v = rng.normal(size=N) + 1j * rng.normal(size=N)
        starts.append((v,))
    val, arg = _best_of(starts, value_grad, project, steps)
    return float(val), arg[0]


# --------------------------------------------------------------------------- classical norms

VERTEX_LIMIT = 20


def _vertex_norm(A, p):
    """``||A||_{inf->p} = max over sign vectors of ||A x||_p`` (convexity puts the max at a vertex)."""
    n = A.shape[1]
    if n > VERTEX_LIMIT:
        raise MemoryError(f"vertex enumeration is limited to n <= {VERTEX_LIMIT}")
    best = 0.0
    total = 1 << (n - 1)
    chunk = 1 << 14
    for start in range(0, total, chunk):
        k = np.arange(start, min(total, start + chunk), dtype=np.int64)
        bits = (k[:, None] >> np.arange(n - 1, dtype=np.int64)) & 1
        Xs = np.ones((len(k), n))
        Xs[:, 1:] = 1 - 2 * bits
        Y = np.abs(Xs @ A.T)
        vals = Y.max(axis=1) if math.isinf(p) else np.sum(Y**p, axis=1) ** (1 / p)
        best = max(best, float(vals.max()))
    return best


def _scalar_boyd(A, q, p, rel_tol=1e-8, max_iter=100_000):
    """Classical power iteration for entrywise nonnegative ``A`` and ``q >= p``."""
    n = A.shape[1]
    if math.isinf(q):
        return vector_norm(A @ np.ones(n), p), True
    x = np.full(n, n ** (-1 / q))
    best_lo, best_hi = 0.0, math.inf
    e = (q - 1) / p
    for _ in range(max_iter):
        y = A @ x
        best_lo = max(best_lo, vector_norm(y, p))
        T = A.T @ y ** (p - 1)
        if np.any(x <= 0) or np.any(T <= 0):
            return best_lo, False
        ratio = (T / x ** (q - 1)) ** (1 / (q - 1))
        m, M = ratio.min(), ratio.max()
        best_lo = max(best_lo, m**e)
        best_hi = min(best_hi, M**e)
        if M <= (1 + rel_tol) * m:
            return (best_lo + best_hi) / 2, True
        x = T ** (1 / (q - 1))
        x /= vector_norm(x, q)
    return best_lo, False


def _random_search(A, q, p, restarts=64, steps=500, seed=0):
    rng = np.random.default_rng(seed)
    n = A.shape[1]

    def project(x):
        (v,) = x
        nrm = vector_norm(v, q)
        return (v / nrm,) if nrm > 0 else (np.ones(n) / vector_norm(np.ones(n), q),)

    def value_grad(x):
        (v,) = x
        num, gy = _vector_grad(A @ v, p)
        den, gx = _vector_grad(v, q)
        return num / den, (A.T @ gy / den - num * gx / den**2,)

    starts = [(np.ones(n),)] + [(np.eye(n)[k],) for k in range(n)]
    starts += [(rng.normal(size=n),) for _ in range(max(0, restarts - len(starts)))]
    return _best_of(starts, value_grad, project, steps)[0]


def classical_mixed_norm(A, q, p, return_method=False):
    """``||A||_{q->p} = max ||A x||_p / ||x||_q`` for a real matrix ``A``.

    Exact paths: vertex enumeration at ``q = inf``, and scalar power iteration for
    entrywise nonnegative ``A`` with ``q >= p``. Anything else falls back to
    random-restart ascent, which is only an estimate (a lower bound) and warns.
    """
    q, p = parse_index(q), parse_index(p)
    A = np.asarray(A)
    if np.iscomplexobj(A):
        if np.abs(A.imag).max() > 0:
            raise ValueError("classical_mixed_norm expects a real matrix")
        A = A.real
    A = np.atleast_2d(A.astype(float))
    if math.isinf(q):
        out = (_vertex_norm(A, p), "vertex")
    else:
        out = None
        if np.all(A >= 0) and q >= p:
            val, ok = _scalar_boyd(A, q, p)
            if ok:
                out = (val, "scalar-boyd")
        if out is None:
            warnings.warn("classical_mixed_norm: no exact path applies, returning a random-search estimate")
            out = (_random_search(A, q, p), "estimate")
    return out if return_method else out[0]
