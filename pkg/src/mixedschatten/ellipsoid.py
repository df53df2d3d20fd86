"""Central-cut ellipsoid method over Hermitian matrices.

Hermitian ``d x d`` matrices are identified with ``R^{d^2}`` through an
orthonormal basis for the real inner product ``Re Tr[X^* Y]``; the real
embedding of :func:`mixedschatten.linalg.real_embedding` realizes the same
inner product. A cut is a Hermitian ``W`` such that every feasible ``Y``
satisfies ``Re Tr[(Y - X) W] <= 0``.

For ``p <= q`` and CP ``Phi`` the function ``X -> Tr[Phi(X^{1/q})^p]`` is concave
on PSD matrices, so ``G(X) = -||Phi(X^{1/q})||_p`` is convex and its minimum
over ``D = {X >= 0, Tr X <= 1}`` is ``-||Phi||_{q->p}``. Minimizing the root
``G`` instead of ``-Tr[...]^p`` gives the same cut directions and a certified
lower bound on the norm scale directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .boyd import UnsupportedRegion
from .channels import LinearMap, NotCompletelyPositive, is_cp
from .linalg import (
    coords_to_hermitian,
    divided_differences,
    hermitian_basis,
    hermitian_to_coords,
    hermitize,
    parse_index,
    partial_trace,
    schatten_norm_hermitian,
)
from .results import NormResult

PSD_TOL = 1e-10
SPECTRAL_FLOOR = 1e-14


@dataclass
class Cut:
    kind: str  # "feasibility" or "objective"
    normal: np.ndarray
    offset: float = 0.0


# separation oracles ---------------------------------------------------------


def separation_oracle_states(X, tol=PSD_TOL):
    """``None`` if ``X`` lies in ``D = {X >= 0, ||X||_1 <= 1}``, else a separating :class:`Cut`."""
    X = hermitize(X)
    w, U = np.linalg.eigh(X)
    scale = max(1.0, np.abs(w).max())
    if w[0] < -tol * scale:
        P = (U[:, w > 0]) @ U[:, w > 0].conj().T
        return Cut("feasibility", P - np.eye(len(w)))
    if w.sum() > 1 + tol:
        return Cut("feasibility", np.eye(len(w)))
    return None


def separation_oracle_box(X, tol=PSD_TOL):
    """``None`` if ``0 <= X <= I``; otherwise a cut (``P_+ - I`` or ``+P_{>1}``)."""
    X = hermitize(X)
    w, U = np.linalg.eigh(X)
    if w[0] < -tol:
        P = U[:, w > 0] @ U[:, w > 0].conj().T
        return Cut("feasibility", P - np.eye(len(w)))
    if w[-1] > 1 + tol:
        V = U[:, w > 1]
        return Cut("feasibility", V @ V.conj().T)
    return None


# objectives and gradients ---------------------------------------------------


def psd_power(X, r, floor=0.0):
    """``X^r`` with negative eigenvalues clamped to ``floor * lambda_max`` (``r > 0``)."""
    w, U = np.linalg.eigh(hermitize(X))
    w = np.maximum(w, floor * max(w[-1], 0.0))
    return hermitize((U * w**r) @ U.conj().T)


def objective_qp(phi: LinearMap, X, q, p) -> float:
    """``F(X) = -Tr[Phi(X^{1/q})^p]``."""
    Y = hermitize(phi.apply(psd_power(X, 1 / q)))
    return -schatten_norm_hermitian(Y, p) ** p


def _spectral_pullback(X, r, Xi):
    """Hermitian ``G`` with ``Re Tr[Xi D(X^r)[E]] = Tr[G E]`` (Daleckii-Krein, floored spectrum)."""
    w, U = np.linalg.eigh(hermitize(X))
    w = np.maximum(w, 0.0)
    Gam = divided_differences(w, lambda x: x**r, lambda x: r * x ** (r - 1), floor_rtol=SPECTRAL_FLOOR)
    return hermitize(U @ (Gam * (U.conj().T @ hermitize(Xi) @ U)) @ U.conj().T)


def subgradient_qp(phi: LinearMap, X, q, p, phi_adj=None, check_cp=True):
    """Gradient of ``F(X) = -Tr[Phi(X^{1/q})^p]`` at a PSD ``X`` (finite ``q``).

    ``-p U ((U^* Phi^*(Y^{p-1}) U) o Gamma) U^*`` with ``Y = Phi(X^{1/q})`` and
    ``Gamma`` the divided differences of ``t -> t^{1/q}``.
    """
    q, p = parse_index(q), parse_index(p)
    if math.isinf(q):
        raise ValueError("q = inf is handled by the direct box formulation")
    if check_cp and not is_cp(phi):
        raise NotCompletelyPositive(phi.choi_min_eigenvalue())
    phi_adj = phi.adjoint() if phi_adj is None else phi_adj
    Y = hermitize(phi.apply(psd_power(X, 1 / q)))
    Yp = np.eye(Y.shape[0]) if p == 1 else psd_power(Y, p - 1)
    return -p * _spectral_pullback(X, 1 / q, phi_adj.apply(Yp))


def _cb_core(X, A, B, p, r, dims):
    """``K = (A^{1/2r} (x) 1) X (B^{1/2r} (x) 1)`` and the gradient of ``||K||_p^p`` in (A, B)."""
    nA, nB = dims
    e = 1 / (2 * r)
    At = np.kron(psd_power(A, e), np.eye(nB))
    Bt = np.kron(psd_power(B, e), np.eye(nB))
    K = At @ X @ Bt
    U, s, Vh = np.linalg.svd(K)
    val = float(np.sum(s**p))
    if p == 1:
        sp = (s > 1e-14 * max(s[0], 1e-300)).astype(float)
    else:
        sp = s ** (p - 1)
    GK = p * (U * sp) @ Vh
    CA = partial_trace(X @ Bt @ GK.conj().T, dims, keep=0)
    CB = partial_trace(GK.conj().T @ At @ X, dims, keep=0)
    gA = _spectral_pullback(A, e, hermitize(CA))
    gB = _spectral_pullback(B, e, hermitize(CB))
    return val, gA, gB, K


def objective_cb(X, A, B, p, dims, r=None) -> float:
    """``F(A, B) = -||(A^{1/2r} (x) 1) X (B^{1/2r} (x) 1)||_p^p`` (``r = p`` for the ``(inf, p)`` norm)."""
    r = p if r is None else r
    nB = dims[1]
    K = np.kron(psd_power(A, 1 / (2 * r)), np.eye(nB)) @ X @ np.kron(psd_power(B, 1 / (2 * r)), np.eye(nB))
    s = np.linalg.svd(K, compute_uv=False)
    return -float(np.sum(s**p))


def subgradient_cb(J, A, B, p, dims, r=None):
    """Partial gradients ``(grad_A F, grad_B F)`` of :func:`objective_cb`."""
    r = p if r is None else r
    _, gA, gB, _ = _cb_core(np.asarray(J, complex), A, B, p, r, dims)
    return -gA, -gB


# the ellipsoid method -------------------------------------------------------


@dataclass
class EllipsoidProblem:
    """Minimize a convex function given by ``oracle`` over a convex set.

    ``oracle(x)`` returns ``("feasibility", g)`` for an infeasible point, or
    ``("objective", f, g)`` with a subgradient ``g`` at a feasible point.
    The initial ellipsoid is the ball of radius ``R`` around ``center``; the
    feasible set is assumed to contain a ball of radius ``r``.
    """

    dim: int
    center: np.ndarray
    oracle: Callable
    R: float
    r: float
    eps: float = 1e-4
    max_iter: int | None = None
    lower_bound_valid: bool = True
    shape: np.ndarray | None = None

    def __post_init__(self):
        if not self.R >= self.r > 0:
            raise ValueError("radii must satisfy R >= r > 0")

    def iteration_bound(self) -> int:
        n = self.dim
        return int(math.ceil(2 * n * n * math.log(4 * self.R / (self.r * self.eps))))


@dataclass
class EllipsoidResult:
    x_best: np.ndarray | None
    f_best: float
    lower_bound: float
    iterations: int
    converged: bool
    log_volume: list = field(default_factory=list)
    restarts: int = 0


def ellipsoid_minimize(problem: EllipsoidProblem, track_volume=False) -> EllipsoidResult:
    n = problem.dim
    if n < 2:
        raise ValueError("the central-cut update needs dimension >= 2")
    x = np.array(problem.center, dtype=float)
    P = problem.shape.copy() if problem.shape is not None else problem.R**2 * np.eye(n)
    t_max = problem.iteration_bound() if problem.max_iter is None else problem.max_iter
    f_best, x_best, lb = math.inf, None, -math.inf
    logdet = np.linalg.slogdet(P)[1]
    vols = [logdet] if track_volume else []
    c1 = n * n / (n * n - 1.0)
    c2 = 2.0 / (n + 1)
    converged = False
    restarts = 0
    it = 0
    for it in range(1, t_max + 1):
        out = problem.oracle(x)
        g = np.asarray(out[-1], dtype=float)
        if out[0] == "objective":
            f = out[1]
            if f < f_best:
                f_best, x_best = f, x.copy()
        Pg = P @ g
        gPg = float(g @ Pg)
        if not gPg > 0 or not math.isfinite(gPg):
            if out[0] == "objective" and np.linalg.norm(g) == 0:
                # zero subgradient at a feasible point: x is a global minimizer
                lb = max(lb, out[1])
                converged = True
                break
            if restarts >= 3:
                break
            restarts += 1
            P = hermitize(P) + 1e-12 * np.trace(P) / n * np.eye(n)
            continue
        if out[0] == "objective" and problem.lower_bound_valid:
            lb = max(lb, out[1] - math.sqrt(gPg))
        if x_best is not None and f_best - lb <= problem.eps * abs(f_best):
            converged = True
            break
        gt = Pg / math.sqrt(gPg)
        x = x - gt / (n + 1)
        P = c1 * (P - c2 * np.outer(gt, gt))
        P = (P + P.T) / 2
        if track_volume:
            logdet += n * math.log(c1) + math.log(1 - c2)
            vols.append(np.linalg.slogdet(P)[1])
    return EllipsoidResult(x_best, f_best, lb, it, converged, vols, restarts)


# mixed norms of CP maps -----------------------------------------------------


def _herm_problem_oracle(basis, sep, value_and_grad):
    def oracle(x):
        X = coords_to_hermitian(x, basis)
        cut = sep(X)
        if cut is not None:
            return ("feasibility", hermitian_to_coords(cut.normal, basis))
        f, G = value_and_grad(X)
        return ("objective", f, hermitian_to_coords(G, basis))

    return oracle


def root_objective_qp(phi, phi_adj, X, q, p):
    """``G(X) = -||Phi(X^{1/q})||_p`` and its gradient."""
    Y = hermitize(phi.apply(psd_power(X, 1 / q)))
    val = schatten_norm_hermitian(Y, p)
    if val == 0:
        return 0.0, -phi_adj.apply(np.eye(Y.shape[0])) / q
    gF = subgradient_qp(phi, X, q, p, phi_adj, check_cp=False)
    return -val, gF * (val ** (1 - p) / p)


def norm_qp_cp(phi: LinearMap, q, p, eps=1e-4, max_iter=None) -> NormResult:
    """``||Phi||_{q->p}`` of a CP map with ``p <= q`` by the ellipsoid method."""
    q, p = parse_index(q), parse_index(p)
    if q < p:
        raise UnsupportedRegion(
            "hypercontractive norms (q < p) are NP-hard already for entanglement-breaking channels "
            "at q = 1; no efficient algorithm is available"
        )
    if not is_cp(phi):
        raise NotCompletelyPositive(phi.choi_min_eigenvalue())
    n = phi.in_dim
    s = phi.sup_norm_bound()
    if s == 0:
        return NormResult(0.0, 0.0, np.eye(n), 0, "ellipsoid", True)
    lam = phi.scaled(1 / s)
    lam_adj = lam.adjoint()
    basis = hermitian_basis(n)
    dim = n * n
    if math.isinf(q):
        return _norm_box(lam, lam_adj, p, eps, max_iter, basis).scaled(s)
    if n == 1:
        val = schatten_norm_hermitian(lam.apply(np.eye(1)), p)
        return NormResult(val, val, np.eye(1), 0, "ellipsoid", True).scaled(s)
    oracle = _herm_problem_oracle(
        basis, separation_oracle_states, lambda X: root_objective_qp(lam, lam_adj, X, q, p)
    )
    prob = EllipsoidProblem(
        dim,
        hermitian_to_coords(np.eye(n) / (2 * n), basis),
        oracle,
        R=1.0,
        r=1 / (2 * n),
        eps=eps,
        max_iter=max_iter,
    )
    res = ellipsoid_minimize(prob)
    X = psd_power(coords_to_hermitian(res.x_best, basis), 1.0)
    omega = psd_power(X, 1 / q)
    lo = schatten_norm_hermitian(lam.apply(omega), p) / schatten_norm_hermitian(omega, q)
    hi = max(-res.lower_bound, lo)
    diag = {"q": q, "p": p, "lower_bound_F": res.lower_bound, "restarts": res.restarts}
    out = NormResult(lo, hi, omega / schatten_norm_hermitian(omega, q), res.iterations, "ellipsoid",
                     res.converged, True, diag)
    return out.scaled(s)


def _norm_box(lam, lam_adj, p, eps, max_iter, basis):
    """``q = inf``: search ``{0 <= w <= I}`` for the maximizer of ``||Lambda(w)||_p``.

    The objective is concave here, so the usual certificate does not apply.
    Every objective cut ``Tr[Lambda*(Y^{p-1})(w' - w)] >= 0`` keeps ``w' = I``
    (since ``Lambda*`` of a PSD matrix is PSD and ``w <= I``), so the search is
    sound. The upper bound ``||Lambda(I)||_p`` follows from monotonicity.
    """
    n = lam.in_dim
    upper = schatten_norm_hermitian(hermitize(lam.apply(np.eye(n))), p)

    def value_and_grad(W):
        Y = hermitize(lam.apply(W))
        val = schatten_norm_hermitian(Y, p)
        Yp = np.eye(Y.shape[0]) if p == 1 else (psd_power(Y, p - 1) if not math.isinf(p) else _top_projector(Y))
        return -val, -hermitize(lam_adj.apply(Yp))

    oracle = _herm_problem_oracle(basis, separation_oracle_box, value_and_grad)
    prob = EllipsoidProblem(
        n * n, hermitian_to_coords(np.eye(n) / 2, basis), oracle, R=math.sqrt(n) / 2, r=0.5, eps=eps,
        max_iter=max_iter, lower_bound_valid=False,
    )
    # stop as soon as the witness matches the monotonicity bound
    prob.oracle = _stop_when(prob.oracle, -upper, eps)
    res = ellipsoid_minimize(prob)
    Wm = _clip_box(coords_to_hermitian(res.x_best, basis))
    lo = schatten_norm_hermitian(hermitize(lam.apply(Wm)), p)
    conv = lo >= (1 - eps) * upper
    return NormResult(lo, upper, Wm, res.iterations, "ellipsoid:box", conv, True,
                      {"q": "inf", "p": p, "upper": "monotonicity bound ||Lambda(I)||_p"})


def _top_projector(Y):
    w, U = np.linalg.eigh(Y)
    V = U[:, w >= w[-1] * (1 - 1e-12)]
    return V @ V.conj().T / V.shape[1]


def _clip_box(W):
    w, U = np.linalg.eigh(hermitize(W))
    return hermitize((U * np.clip(w, 0, 1)) @ U.conj().T)


def _stop_when(oracle, target, eps):
    """Wrap an oracle so objective values within ``eps`` of ``target`` return a zero gradient."""

    def wrapped(x):
        out = oracle(x)
        if out[0] == "objective" and out[1] <= target * (1 - eps):
            return ("objective", out[1], np.zeros_like(out[2]))
        return out

    return wrapped


# two-indexed norms in the sup regime ------------------------------------------


def two_indexed_sup(X, dims, p, r, eps=1e-4, positive_only=False, max_iter=None):
    """``sup_{A,B in D} ||(A^{1/2r} (x) 1) X (B^{1/2r} (x) 1)||_p`` by the ellipsoid method.

    Returns ``(lower, upper, (A, B), iterations, converged)``.
    """
    nA, nB = dims
    basis = hermitian_basis(nA)
    k = nA * nA
    X = np.asarray(X, complex)

    def split(x):
        A = coords_to_hermitian(x[:k], basis)
        B = A if positive_only else coords_to_hermitian(x[k:], basis)
        return A, B

    def oracle(x):
        A, B = split(x)
        cutA = separation_oracle_states(A)
        if cutA is not None:
            g = np.zeros_like(x)
            g[:k] = hermitian_to_coords(cutA.normal, basis)
            return ("feasibility", g)
        if not positive_only:
            cutB = separation_oracle_states(B)
            if cutB is not None:
                g = np.zeros_like(x)
                g[k:] = hermitian_to_coords(cutB.normal, basis)
                return ("feasibility", g)
        val, gA, gB, _ = _cb_core(X, A, B, p, r, dims)
        root = val ** (1 / p)
        if root == 0:
            fac = 0.0
        else:
            fac = root ** (1 - p) / p
        if positive_only:
            g = -fac * hermitian_to_coords(gA + gB, basis)
        else:
            g = -fac * np.concatenate([hermitian_to_coords(gA, basis), hermitian_to_coords(gB, basis)])
        return ("objective", -root, g)

    c = hermitian_to_coords(np.eye(nA) / (2 * nA), basis)
    center = c if positive_only else np.concatenate([c, c])
    dim = k if positive_only else 2 * k
    if dim < 2:
        A = np.eye(1)
        val = _cb_core(X, A, A, p, r, dims)[0] ** (1 / p)
        return val, val, (A, A), 0, True
    prob = EllipsoidProblem(dim, center, oracle, R=1.0 if positive_only else math.sqrt(2), r=1 / (2 * nA),
                            eps=eps, max_iter=max_iter)
    res = ellipsoid_minimize(prob)
    A, B = split(res.x_best)
    A, B = psd_power(A, 1.0), psd_power(B, 1.0)
    A, B = A / max(np.trace(A).real, 1.0), B / max(np.trace(B).real, 1.0)
    lo = _cb_core(X, A, B, p, r, dims)[0] ** (1 / p)
    hi = max(-res.lower_bound, lo)
    return lo, hi, (A, B), res.iterations, res.converged
