"""Nonlinear power iteration for ``||Lambda||^+_{q->p}`` of positive maps.

The iteration map is ``S(w) = Lambda*(Lambda(w)^(p-1))^(1/(q-1))`` followed by
renormalization in the q-norm. For a strictly positive iterate ``w`` with
``||w||_q = 1`` write ``T = S(w)^(q-1)`` and

    Z = w^{-(q-1)/2} T w^{-(q-1)/2},   m = lambda_min(Z)^(1/(q-1)),   M = lambda_max(Z)^(1/(q-1)).

Then ``m^(q-1) <= ||Lambda||^p_{q->p} <= M^(q-1)``, so every step carries a
certified enclosure of the norm. Convergence is guaranteed for positivity
improving maps when ``1 <= p <= 2 <= q <= inf``.
"""

from __future__ import annotations

import math

import numpy as np

from .channels import LinearMap, NotCompletelyPositive, is_cp, positivity_floor_from_choi, smooth
from .linalg import (
    as_psd,
    hermitize,
    matrix_power_psd,
    parse_index,
    pinv_power,
    schatten_norm_hermitian,
)
from .results import NormResult

MAX_ITER_CAP = 10**6


class UnsupportedRegion(ValueError):
    """The requested (q, p) pair lies outside the region with a convergence guarantee."""


class DegenerateMap(ValueError):
    """``S(w)`` vanished, so the iteration cannot be renormalized."""


class BracketUndefined(ValueError):
    """The iterate is singular, so the upper bracket ``M`` is infinite."""


def check_region(q, p, experimental=False):
    q, p = parse_index(q), parse_index(p)
    if not (p <= 2 <= q):
        if not experimental:
            raise UnsupportedRegion(
                f"the power iteration is only guaranteed for 1 <= p <= 2 <= q <= inf (got q={q}, p={p}); "
                "pass experimental=True to run it without guarantees"
            )
        if p > q:
            raise UnsupportedRegion("hypercontractive indices (q < p) are not supported")
    return q, p


def _qnorm_normalize(w, q):
    nrm = schatten_norm_hermitian(w, q)
    if not nrm > 0:
        raise DegenerateMap("S(w) vanished; the map is zero on the support of the iterate")
    return hermitize(w / nrm)


def _outer_operator(lam: LinearMap, lam_adj: LinearMap, w, p):
    """``(Lambda(w), Lambda*(Lambda(w)^(p-1)))``."""
    Y = hermitize(lam.apply(w))
    return Y, hermitize(lam_adj.apply(matrix_power_psd(Y, p - 1)))


def boyd_step(lam: LinearMap, omega, q, p, lam_adj=None):
    """One normalized step ``S(w)/||S(w)||_q``."""
    q, p = parse_index(q), parse_index(p)
    lam_adj = lam.adjoint() if lam_adj is None else lam_adj
    _, T = _outer_operator(lam, lam_adj, omega, p)
    r = 0.0 if math.isinf(q) else 1 / (q - 1)
    return _qnorm_normalize(matrix_power_psd(T, r), q)


def boyd_bracket(lam: LinearMap, omega, q, p, lam_adj=None, T=None):
    """Certified ``(m, M)`` with ``m^(q-1) <= ||Lambda||^p_{q->p} <= M^(q-1)``.

    ``omega`` must be strictly positive with unit q-norm.
    """
    q, p = parse_index(q), parse_index(p)
    if math.isinf(q):
        raise ValueError("the bracket exponent 1/(q-1) degenerates at q = inf; use the exact q = inf path")
    if q == 1:
        raise ValueError("the bracket needs q > 1")
    w = as_psd(omega)
    lo = w.eigenvalues[0]
    if not lo > 1e-14 * max(w.eigenvalues[-1], 1e-300):
        raise BracketUndefined("iterate is singular; smooth the map or perturb the iterate")
    if T is None:
        lam_adj = lam.adjoint() if lam_adj is None else lam_adj
        _, T = _outer_operator(lam, lam_adj, w.matrix, p)
    R = pinv_power(w, -(q - 1) / 2)
    z = np.linalg.eigvalsh(hermitize(R @ T @ R))
    z = np.maximum(z, 0.0)
    e = 1 / (q - 1)
    return float(z[0] ** e), float(z[-1] ** e)


def default_max_iter(floor, d, rel_tol):
    """Worst-case step count ``~ N^2 d^2 sqrt(d) log(d/rel_tol)`` with ``floor = 1/(N d)``, capped."""
    if not floor > 0:
        return 10_000
    N = 1 / (floor * d)
    est = N**2 * d**2.5 * max(1.0, math.log(d / rel_tol))
    return int(min(MAX_ITER_CAP, max(200, math.ceil(est))))


def stationarity_residual(lam, omega, q, p, lam_adj=None) -> float:
    """Norm of ``||w||_q^{1-q} ||Lambda(w)||_p w^{q-1} - ||Lambda(w)||_p^{1-p} ||w||_q Lambda*(Lambda(w)^{p-1})``."""
    lam_adj = lam.adjoint() if lam_adj is None else lam_adj
    Y, T = _outer_operator(lam, lam_adj, omega, p)
    wq = schatten_norm_hermitian(omega, q)
    yp = schatten_norm_hermitian(Y, p)
    G = wq ** (1 - q) * yp * matrix_power_psd(omega, q - 1) - yp ** (1 - p) * wq * T
    return float(np.linalg.norm(G))


def _exact_q_inf(lam, p, method="boyd"):
    """For positive maps ``0 <= w <= I`` gives ``Lambda(w) <= Lambda(I)``, so ``I`` is optimal."""
    n = lam.in_dim
    val = schatten_norm_hermitian(hermitize(lam.apply(np.eye(n))), p)
    return NormResult(val, val, np.eye(n), 1, method + ":exact-q-inf", True, True, {"q": "inf"})


def boyd_solve(lam: LinearMap, q, p, rel_tol=1e-8, max_iter=None, experimental=False, omega0=None,
               record=False) -> NormResult:
    """Iterate ``S`` until the certified bracket satisfies ``M/m - 1 <= rel_tol``.

    ``lam`` should be positivity improving with ``||lam||_{inf->inf} <= 1``; the
    bracket is valid regardless, only the convergence rate depends on it.
    Returns the interval ``[max(m^{(q-1)/p}, ||Lambda(w)||_p), min_j M_j^{(q-1)/p}]``.
    """
    q, p = check_region(q, p, experimental)
    if math.isinf(q):
        return _exact_q_inf(lam, p)
    n = lam.in_dim
    lam_adj = lam.adjoint()
    if max_iter is None:
        try:
            floor = positivity_floor_from_choi(lam)
        except NotCompletelyPositive:
            floor = 0.0
        max_iter = default_max_iter(floor, n, rel_tol)
    omega = np.eye(n) / n ** (1 / q) if omega0 is None else _qnorm_normalize(omega0, q)
    best_lo, best_hi = 0.0, math.inf
    best_omega = omega
    history = []
    converged = False
    e = (q - 1) / p
    it = 0
    for it in range(1, max_iter + 1):
        Y, T = _outer_operator(lam, lam_adj, omega, p)
        val = schatten_norm_hermitian(Y, p)
        if val > best_lo:
            best_lo, best_omega = val, omega
        try:
            m, M = boyd_bracket(lam, omega, q, p, T=T)
        except BracketUndefined:
            m, M = 0.0, math.inf
        best_lo = max(best_lo, m**e)
        if M**e < best_hi:
            best_hi = M**e
        if record:
            history.append((m, M))
        if M < math.inf and M <= (1 + rel_tol) * m:
            converged = True
            break
        omega = _qnorm_normalize(matrix_power_psd(T, 1 / (q - 1)), q)
    diag = {"q": q, "p": p, "final_ratio": (M / m) if m > 0 else math.inf}
    if record:
        diag["history"] = history
    if experimental and not (p <= 2 <= q):
        diag["experimental"] = True
    return NormResult(
        best_lo,
        best_hi,
        best_omega,
        it,
        "boyd",
        converged,
        certified_upper=not (experimental and not (p <= 2 <= q)),
        diagnostics=diag,
    )


def smoothing_constant(n, m, q, p) -> float:
    """``||Tr[.] I_m/m||^+_{q->p} = m^{1/p-1} n^{1-1/q}``."""
    q, p = parse_index(q), parse_index(p)
    return m ** (1 / p - 1) * n ** (1 - 1 / q)


def smoothing_sandwich(norm_smoothed, delta, d, q):
    """Two-sided bounds on ``||Lambda||`` from ``||Lambda_delta||`` for TP ``Lambda`` on ``C^d``.

    ``||Lambda_delta|| / (1 - delta + delta d^{1-1/q}) <= ||Lambda|| <= ||Lambda_delta|| / (1 - delta - delta d^{1-1/q})``.
    """
    q = parse_index(q)
    t = delta * d ** (1 - 1 / q)
    lo = norm_smoothed / (1 - delta + t)
    hi = norm_smoothed / (1 - delta - t) if 1 - delta - t > 0 else math.inf
    return lo, hi


def boyd_solve_general(lam: LinearMap, q, p, eps=1e-3, assume_positive=False, experimental=False,
                       max_iter=None) -> NormResult:
    """``||Lambda||^+_{q->p}`` to relative accuracy ``~eps`` for any positive map.

    The map is rescaled by ``s = ||Lambda(I)||_inf`` and smoothed to
    ``(1-delta) Lambda + delta Tr[.] I/m``. Since ``Lambda_delta >= (1-delta) Lambda``
    on PSD inputs and differs from it by ``delta`` times the depolarizing map,

        (||Lambda_delta|| - delta K) / (1 - delta) <= ||Lambda|| <= ||Lambda_delta|| / (1 - delta),

    with ``K = m^{1/p-1} n^{1-1/q}``. ``delta = eps L / (4K)`` where ``L`` is the
    certified lower bound ``||Lambda(I)||_p / ||I||_q``.
    """
    q, p = check_region(q, p, experimental)
    if not assume_positive and not is_cp(lam):
        raise NotCompletelyPositive(lam.choi_min_eigenvalue())
    if not 0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 0.5]")
    n, m = lam.in_dim, lam.out_dim
    s = lam.sup_norm_bound()
    if s == 0:
        return NormResult(0.0, 0.0, np.eye(n), 0, "boyd", True, True, {"zero_map": True})
    if math.isinf(q):
        return _exact_q_inf(lam, p)
    lam1 = lam.scaled(1 / s)
    K = smoothing_constant(n, m, q, p)
    L = schatten_norm_hermitian(hermitize(lam1.apply(np.eye(n))), p) / n ** (1 / q)
    delta = min(0.5, eps * L / (4 * K))
    lam_d = smooth(lam1, delta)
    rel_tol = eps * p / (2 * (q - 1))
    res = boyd_solve(lam_d, q, p, rel_tol=rel_tol, max_iter=max_iter, experimental=experimental)
    w = res.optimizer
    direct = schatten_norm_hermitian(hermitize(lam1.apply(w)), p) / schatten_norm_hermitian(w, q)
    lo = max(direct, (res.value_lo - delta * K) / (1 - delta), L)
    hi = res.value_hi / (1 - delta)
    diag = dict(res.diagnostics, delta=delta, smoothing_constant=K, scale=s, smoothed_interval=[res.value_lo, res.value_hi])
    out = NormResult(lo, max(hi, lo), w, res.iterations, "boyd+smoothing", res.converged, res.certified_upper, diag)
    return out.scaled(s)
