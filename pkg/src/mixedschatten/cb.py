"""Two-indexed Schatten norms and completely bounded norms.

For ``X`` on ``H (x) K`` and ``q > p`` the two-indexed norm is

    ||X||_{(q,p)} = sup_{A, B >= 0, Tr A, Tr B <= 1} ||(A^{1/2r} (x) 1) X (B^{1/2r} (x) 1)||_p,
    1/r = 1/p - 1/q,

a concave maximization, solved here by the ellipsoid method. The cb norm
``||Psi||_{cb,1->p}`` equals ``||J_Psi||_{(inf,p)}`` for the Choi matrix ``J_Psi``.
"""

from __future__ import annotations

import math

import numpy as np

from .boyd import boyd_solve_general
from .channels import LinearMap, NotCompletelyPositive, is_cp
from .ellipsoid import UnsupportedRegion, norm_qp_cp, two_indexed_sup
from .linalg import as_matrix, parse_index, pinv_power, schatten_norm
from .results import NormResult


def regime(q, p) -> str:
    q, p = parse_index(q), parse_index(p)
    if q == p:
        return "equal"
    return "sup" if q > p else "inf"


def r_index(q, p) -> float:
    """``r`` with ``1/r = |1/q - 1/p|`` (``inf`` when ``q = p``)."""
    q, p = parse_index(q), parse_index(p)
    inv = abs(1 / q - 1 / p)
    return math.inf if inv == 0 else 1 / inv


def two_indexed_norm(X, dims, q, p, eps=1e-4, positive_only=False, max_iter=None) -> NormResult:
    """``||X||_{(q,p)}`` for ``q >= p``; the optimizer witness is the pair ``(A, B)``."""
    q, p = parse_index(q), parse_index(p)
    X = as_matrix(X, square=True)
    nA, nB = dims
    if nA < 1 or nB < 1 or nA * nB != X.shape[0]:
        raise ValueError(f"cannot split a {X.shape[0]}-dimensional operator as {nA} x {nB}")
    kind = regime(q, p)
    if kind == "equal":
        v = schatten_norm(X, p)
        return NormResult(v, v, None, 0, "two-indexed:exact", True)
    if kind == "inf":
        raise UnsupportedRegion(
            "the infimum regime q < p is only available as an upper-bound evaluator "
            "(two_indexed_inf_upper)"
        )
    s = float(np.linalg.norm(X, 2))
    if s == 0:
        return NormResult(0.0, 0.0, None, 0, "two-indexed:ellipsoid", True)
    r = r_index(q, p)
    lo, hi, (A, B), its, conv = two_indexed_sup(X / s, dims, p, r, eps, positive_only, max_iter)
    res = NormResult(lo, hi, (A, B), its, "two-indexed:ellipsoid", conv, True,
                     {"q": q, "p": p, "r": r, "positive_only": positive_only})
    return res.scaled(s)


def two_indexed_inf_upper(X, dims, q, p, A, B) -> float:
    """Upper bound ``||A^{-1/2r} X B^{-1/2r}||_p`` on ``||X||_{(q,p)}``, ``q < p``, for states ``A, B``.

    Requires ``X`` supported on ``supp(A) (x) K`` from the left and ``supp(B) (x) K``
    from the right; the Moore-Penrose inverse is used otherwise, and the bound is
    then only valid if ``X`` factors through these supports.
    """
    q, p = parse_index(q), parse_index(p)
    if regime(q, p) != "inf":
        raise ValueError("upper-bound evaluator is for q < p")
    r = r_index(q, p)
    nB = dims[1]
    A = np.asarray(A, complex) / np.trace(A).real
    B = np.asarray(B, complex) / np.trace(B).real
    Ai = np.kron(pinv_power(A, -1 / (2 * r)), np.eye(nB))
    Bi = np.kron(pinv_power(B, -1 / (2 * r)), np.eye(nB))
    return schatten_norm(Ai @ X @ Bi, p)


def cb_norm_1p(psi: LinearMap, p, eps=1e-4, positive_only=False, max_iter=None) -> NormResult:
    """``||Psi||_{cb,1->p} = ||J_Psi||_{(inf,p)}`` for any linear map.

    ``positive_only`` restricts the inputs to PSD operators (``A = B``). At
    ``p = inf`` the two indices coincide and the value is ``||J_Psi||_inf``.
    """
    p = parse_index(p)
    J = psi.choi()
    dims = (psi.in_dim, psi.out_dim)
    if math.isinf(p):
        v = schatten_norm(J, math.inf)
        return NormResult(v, v, None, 0, "cb:choi-operator-norm", True, True, {"p": "inf"})
    res = two_indexed_norm(J, dims, math.inf, p, eps, positive_only, max_iter)
    res.method = "cb:choi-two-indexed"
    return res


def cb_norm_qp_cp(phi: LinearMap, q, p, eps=1e-4, method="auto") -> NormResult:
    """``||Phi||_{cb,q->p} = ||Phi||_{q->p}`` for CP maps with ``q >= p``."""
    q, p = parse_index(q), parse_index(p)
    if q < p:
        raise UnsupportedRegion("no algorithm is known for cb norms with q < p")
    if not is_cp(phi):
        raise NotCompletelyPositive(phi.choi_min_eigenvalue())
    if method == "boyd" or (method == "auto" and p <= 2 <= q):
        res = boyd_solve_general(phi, q, p, eps)
    else:
        res = norm_qp_cp(phi, q, p, eps)
    res.method = "cb=non-cb:" + res.method
    return res


def cb_norm_22(phi: LinearMap) -> NormResult:
    """``||Phi||_{cb,2->2} = ||Phi||_{2->2}``: largest singular value of the superoperator matrix."""
    S = phi.superoperator()
    v = float(np.linalg.norm(S, 2))
    return NormResult(v, v, None, 0, "exact22:superoperator-svd", True)
