"""The acceptance suite, shared by ``mixedschatten selftest`` and the test suite.

Each criterion returns a :class:`CriterionResult` made of named sub-checks.
``level="full"`` runs the stated sample sizes; ``level="quick"`` runs a
subsample with identical tolerances.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .boyd import boyd_solve, boyd_solve_general, smoothing_sandwich
from .cb import cb_norm_1p, cb_norm_22
from .channels import (
    KrausMap,
    classical_embedding,
    depolarizing_channel,
    holder_dual_problem,
    identity_channel,
    linear_combination,
    random_cp,
    random_cptp,
    smooth,
)
from .ellipsoid import norm_qp_cp, objective_cb, objective_qp, subgradient_cb, subgradient_qp
from .linalg import hilbert_metric, matrix_power_psd, random_density
from .oracles import brute_norm_qp, classical_mixed_norm, diamond_lower_bound
from .sat import (
    all_patterns_instance,
    certificate_value,
    exhaustive_sat,
    gadget_bound,
    gap_certify,
    one_to_one_bound,
    single_clause_instance,
)

INF = math.inf


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.title} ({self.seconds:.1f} s)"

    def report(self) -> str:
        out = [self.line()]
        for c in self.checks:
            out.append(f"    {'ok  ' if c.passed else 'FAIL'} {c.name}" + (f": {c.detail}" if c.detail else ""))
        return "\n".join(out)


def _count(level, full, quick):
    return full if level == "full" else quick


def _rel(a, b):
    return abs(a - b) / abs(b)


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


# 1 -------------------------------------------------------------------------

def criterion_closed_forms(level="full", seed=0):
    res = CriterionResult(1, "closed-form norms of depolarizing and identity channels")
    dims = _count(level, (2, 3, 4), (2, 3))
    pairs = [(INF, 1), (2, 1), (INF, 2), (4, 2), (2, 2)]
    worst_err, worst_time, failures = 0.0, 0.0, []
    for d in dims:
        for name, phi in (("depolarizing", depolarizing_channel(d)), ("identity", identity_channel(d))):
            for q, p in pairs:
                target = d ** (1 / p - 1 / q)
                for method, solver in (("boyd", boyd_solve_general), ("ellipsoid", norm_qp_cp)):
                    r, dt = _timed(solver, phi, q, p, eps=1e-4)
                    err = _rel(r.value, target)
                    worst_err, worst_time = max(worst_err, err), max(worst_time, dt)
                    if err > 1e-3 or dt >= 5:
                        failures.append(f"{name} d={d} q={q} p={p} {method}: err={err:.1e} t={dt:.2f}s")
    res.add("relative error <= 1e-3", worst_err <= 1e-3, f"worst {worst_err:.2e}")
    res.add("each solve < 5 s", worst_time < 5, f"slowest {worst_time:.2f} s")
    if failures:
        res.add("failing cases", False, "; ".join(failures[:5]))
    return res


# 2 -------------------------------------------------------------------------

def criterion_classical_embedding(level="full", seed=0):
    res = CriterionResult(2, "classical embedding equals the classical mixed norm")
    rng = np.random.default_rng(seed)
    n_each = _count(level, 20, 3)
    worst, t0 = 0.0, time.perf_counter()
    for n in (3, 4):
        for _ in range(n_each):
            A = rng.random((n, n))
            phi = classical_embedding(A)
            for q, p in ((INF, 1), (3, 2)):
                v = boyd_solve_general(phi, q, p, eps=1e-5).value
                worst = max(worst, _rel(v, classical_mixed_norm(A, q, p)))
    total = time.perf_counter() - t0
    res.add("relative error <= 1e-3", worst <= 1e-3, f"worst {worst:.2e} over {2 * n_each} matrices x 2 index pairs")
    res.add("total runtime < 120 s", total < 120, f"{total:.1f} s")
    return res


# 3 -------------------------------------------------------------------------

BRACKET_ROUNDOFF = 1e-12


def criterion_bracket_soundness(level="full", seed=0):
    res = CriterionResult(3, "power-iteration bracket soundness")
    rng = np.random.default_rng(seed)
    n_maps = _count(level, 50, 10)
    pairs = [(3, 2), (2, 1.5), (4, 1.5), (2, 2), (6, 1.2)]
    mono_ok, encl_ok = True, True
    worst_mono, worst_encl = 0.0, 0.0
    for k in range(n_maps):
        d = 2 + k % 2
        q, p = pairs[k % len(pairs)]
        lam = random_cptp(d, rng)  # full Kraus rank, hence positivity improving
        lam = lam.scaled(1 / lam.sup_norm_bound())
        r = boyd_solve(lam, q, p, rel_tol=1e-10, record=True)
        hist = np.array(r.diagnostics["history"])
        m, M = hist[:, 0], hist[:, 1]
        scale = M.max()
        dm = np.diff(m).min(initial=0.0) / scale
        dM = np.diff(M).max(initial=0.0) / scale
        worst_mono = min(worst_mono, dm, -dM)
        if dm < -BRACKET_ROUNDOFF or dM > BRACKET_ROUNDOFF:
            mono_ok = False
        oracle, _ = brute_norm_qp(lam, q, p, restarts=8, steps=3000, seed=seed + k)
        e = (q - 1) / p
        below = np.max(m**e) - 1e-6 - oracle
        above = oracle - (np.min(M**e) + 1e-6)
        worst_encl = max(worst_encl, below, above)
        if below > 0 or above > 0:
            encl_ok = False
    res.add("m nondecreasing and M nonincreasing", mono_ok,
            f"largest violation {-worst_mono:.1e} (relative, roundoff allowance {BRACKET_ROUNDOFF:g})")
    res.add("oracle inside every [m^e - 1e-6, M^e + 1e-6]", encl_ok, f"largest excursion {worst_encl:.1e}")
    return res


# 4 -------------------------------------------------------------------------

def criterion_smoothing_sandwich(level="full", seed=0):
    res = CriterionResult(4, "smoothing sandwich at d = 2")
    rng = np.random.default_rng(seed)
    n_maps = _count(level, 20, 5)
    d = 2
    worst = -math.inf
    for k in range(n_maps):
        lam = random_cptp(d, rng, rank=1 + k % 4)
        q, p = ((4, 2), (3, 1.5))[k % 2]
        v, _ = brute_norm_qp(lam, q, p, restarts=8, steps=3000, seed=seed + k)
        for delta in (1e-2, 1e-3):
            vd, _ = brute_norm_qp(smooth(lam, delta), q, p, restarts=8, steps=3000, seed=seed + k)
            lo, hi = smoothing_sandwich(vd, delta, d, q)
            worst = max(worst, lo - v, v - hi)
    res.add("brute-force values satisfy both bounds within 1e-6", worst <= 1e-6, f"largest violation {worst:.1e}")
    return res


# 5 -------------------------------------------------------------------------

COUNTEREXAMPLE_CONSTANT = (15 + math.sqrt(97)) / 16


def _strictly_positive(d, rng):
    return random_density(d, rng) + 1e-3 * np.eye(d)


def criterion_hilbert_metric(level="full", seed=0):
    res = CriterionResult(5, "Hilbert-metric contraction and the r > 1 counterexample")
    rng = np.random.default_rng(seed)
    n_pairs = _count(level, 500, 100)
    tol = 1e-9
    sym = tri = scale = contr = True
    worst_contr = -math.inf
    for k in range(n_pairs):
        d = 2 + k % 3
        A, B, C = (_strictly_positive(d, rng) for _ in range(3))
        dab = hilbert_metric(A, B)
        sym &= abs(dab - hilbert_metric(B, A)) <= tol * max(1, dab)
        tri &= hilbert_metric(A, C) <= dab + hilbert_metric(B, C) + tol
        a, b = rng.uniform(0.1, 10, size=2)
        scale &= abs(hilbert_metric(a * A, b * B) - dab) <= tol * max(1, dab)
        for r in (0.25, 0.5, 0.9):
            gap = hilbert_metric(matrix_power_psd(A, r), matrix_power_psd(B, r)) - r * dab
            worst_contr = max(worst_contr, gap)
            contr &= gap <= tol
    eq_err = 0.0
    for _ in range(50):
        a, b = rng.uniform(0.1, 10, size=(2, 3))
        for r in (0.25, 0.5, 0.9):
            eq_err = max(eq_err, abs(hilbert_metric(np.diag(a**r), np.diag(b**r)) - r * hilbert_metric(np.diag(a), np.diag(b))))
    res.add("symmetry", sym)
    res.add("triangle inequality", tri)
    res.add("scale invariance", scale)
    res.add("d_H(A^r, B^r) <= r d_H(A, B) + 1e-9", contr, f"largest excess {worst_contr:.1e}")
    res.add("equality on commuting pairs", eq_err <= tol, f"max deviation {eq_err:.1e}")

    A = np.diag([1.0, 2.0])
    Hd = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    B = Hd @ A @ Hd
    Ais = np.diag(A.diagonal() ** -0.5)
    val = float(np.linalg.norm(Ais @ B @ Ais, 2))
    res.add("||A^-1/2 B A^-1/2||_inf = (15 + sqrt 97)/16 within 1e-10",
            abs(val - COUNTEREXAMPLE_CONSTANT) <= 1e-10,
            f"computed {val:.12f}, stated {COUNTEREXAMPLE_CONSTANT:.12f}")
    d1 = hilbert_metric(A, B)
    d2 = hilbert_metric(A @ A, B @ B)
    res.add("d_H(A^2, B^2) > 2 d_H(A, B)", d2 > 2 * d1, f"{d2:.6f} > {2 * d1:.6f}")
    return res


# 6 -------------------------------------------------------------------------

def _rand_herm(d, rng):
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    E = (G + G.conj().T) / 2
    return E / np.linalg.norm(E)


def criterion_subgradients(level="full", seed=0):
    res = CriterionResult(6, "gradients agree with central finite differences")
    rng = np.random.default_rng(seed)
    n_pts = _count(level, 100, 20)
    t = 1e-6
    worst_qp = worst_cb = 0.0
    qp_pairs = [(3, 2), (2, 1.5), (4, 3), (2, 1), (1.5, 1.2)]
    for k in range(n_pts):
        d = 2 + k % 2
        q, p = qp_pairs[k % len(qp_pairs)]
        phi = random_cp(d, rng)
        X = random_density(d, rng)
        E = _rand_herm(d, rng)
        G = subgradient_qp(phi, X, q, p)
        fd = (objective_qp(phi, X + t * E, q, p) - objective_qp(phi, X - t * E, q, p)) / (2 * t)
        worst_qp = max(worst_qp, abs(fd - np.trace(G @ E).real))
    for k in range(n_pts):
        d = 2 + k % 2
        p = (1, 1.5, 2, 3)[k % 4]
        r = p if k % 3 else 2 * p  # the (inf, p) case and a finite-q case
        J = random_cp(d, rng).choi()
        A, B = random_density(d, rng), random_density(d, rng)
        EA, EB = _rand_herm(d, rng), _rand_herm(d, rng)
        gA, gB = subgradient_cb(J, A, B, p, (d, d), r=r)

        def F(s):
            return objective_cb(J, A + s * EA, B + s * EB, p, (d, d), r=r)

        fd = (F(t) - F(-t)) / (2 * t)
        worst_cb = max(worst_cb, abs(fd - np.trace(gA @ EA).real - np.trace(gB @ EB).real))
    res.add("q->p objective, |FD - <G, E>| <= 1e-5", worst_qp <= 1e-5, f"worst {worst_qp:.1e} over {n_pts} points")
    res.add("cb objective, |FD - <G, E>| <= 1e-5", worst_cb <= 1e-5, f"worst {worst_cb:.1e} over {n_pts} points")
    return res


# 7 -------------------------------------------------------------------------

def criterion_cb_norms(level="full", seed=0):
    res = CriterionResult(7, "completely bounded norms")
    rng = np.random.default_rng(seed)
    n_maps = _count(level, 20, 4)
    worst = 0.0
    for _ in range(n_maps):
        worst = max(worst, abs(cb_norm_1p(random_cptp(2, rng), 1).value - 1))
    res.add("cb 1->1 norm of CPTP maps is 1 (tol 1e-4)", worst <= 1e-4, f"worst deviation {worst:.1e}")

    Z = np.diag([1.0, -1.0])
    diff = KrausMap(np.array([np.eye(2), Z]), [1, -1])
    v = cb_norm_1p(diff, 1).value
    oracle, _ = diamond_lower_bound(diff, 2, restarts=16, steps=300, seed=seed)
    res.add("id - Z.Z at p = 1 gives 2 (tol 1e-3, ancilla oracle)", abs(v - 2) <= 1e-3 and abs(oracle - v) <= 1e-3,
            f"solver {v:.6f}, oracle {oracle:.6f}")

    v = cb_norm_1p(identity_channel(2), 2).value
    res.add("qubit identity at p = 2 gives sqrt 2 (tol 1e-3)", abs(v - math.sqrt(2)) <= 1e-3, f"{v:.6f}")

    worst = 0.0
    for k in range(n_maps):
        d = 2 + k % 2
        if k % 2:
            phi = linear_combination([1.0, -0.7], [random_cp(d, rng), random_cp(d, rng)])
        else:
            phi = random_cp(d, rng)
        exact = cb_norm_22(phi).value
        brute, _ = brute_norm_qp(phi, 2, 2, restarts=8, steps=300, seed=seed + k, domain="hermitian")
        worst = max(worst, abs(exact - brute))
    res.add("cb 2->2 matches brute force (tol 1e-4)", worst <= 1e-4, f"worst deviation {worst:.1e}")
    return res


# 8 -------------------------------------------------------------------------

def criterion_sat_gadget(level="full", seed=0):
    res = CriterionResult(8, "SAT gadget certificates and gap")
    sat = single_clause_instance()
    x = exhaustive_sat(sat)
    d = sat.d
    worst_one = worst_f = worst_11 = 0.0
    for p in (2, 3, INF):
        worst_one = max(worst_one, abs(certificate_value(sat, d * d, p, x) - 1))
        for eta in (0.5, 1.0):
            worst_f = max(worst_f, abs(certificate_value(sat, eta, p, x) - gadget_bound(eta, d, p)))
    for eta in (0.5, 1.0, float(d * d)):
        worst_11 = max(worst_11, abs(certificate_value(sat, eta, 1, x, "one_to_one") - one_to_one_bound(eta, d)))
    res.add("one_to_p at eta = d^2 equals 1 (tol 1e-9)", worst_one <= 1e-9, f"{worst_one:.1e}")
    res.add("one_to_p equals f(eta, 4, p) for eta in {0.5, 1} (tol 1e-9)", worst_f <= 1e-9, f"{worst_f:.1e}")
    res.add("one_to_one equals 2^3 (2 - 2/4) eta/16 (tol 1e-9)", worst_11 <= 1e-9, f"{worst_11:.1e}")

    unsat = all_patterns_instance()
    gap_ok = literal_ok = True
    details, literal = [], []
    for p in (2, 3, INF):
        rep = gap_certify(unsat, 1.0, p)
        f, mx = rep["gadget_bound"], rep["max_proper_value"]
        ok = (not rep["satisfiable"]) and mx < f and mx <= f * (1 - rep["delta_gap"]) and rep["certified"]
        gap_ok &= ok
        details.append(f"p={p}: max {mx:.6f} < f {f:.6f}, gap {f - mx:.2e} >= {f * rep['delta_gap']:.2e}")
        # the margin a residual of at least 1/m would give
        h = 2 / unsat.m
        lit = 1 - (max(h / 2, 1 - h / 2) if math.isinf(p) else ((h / 2) ** p + (1 - h / 2) ** p) ** (1 / p))
        lit_ok = mx <= f * (1 - lit)
        literal_ok &= lit_ok
        literal.append(f"p={p}: gap {f - mx:.2e} vs {f * lit:.2e}")
    res.add("UNSAT: max proper certificate strictly below f by the integrality margin 1/(2 m d^2)", gap_ok,
            "; ".join(details))
    rep = gap_certify(unsat, 1.0, 2)
    res.add("UNSAT: residual min (1/2)Tr[H psi psi] >= 1/m and gap >= the margin it implies", literal_ok
            and rep["residual_min"] >= 1 / unsat.m,
            f"residual {rep['residual_min']:.6f} vs 1/m = {1 / unsat.m:.6f}; " + "; ".join(literal))
    return res


# 9 -------------------------------------------------------------------------

def criterion_holder_duality(level="full", seed=0):
    res = CriterionResult(9, "Hoelder duality")
    rng = np.random.default_rng(seed)
    n_maps = _count(level, 20, 5)
    worst = -math.inf
    for k in range(n_maps):
        phi = random_cp(2, rng)
        q, p = ((3, 2), (4, 1.5))[k % 2]
        a = boyd_solve_general(phi, q, p, eps=1e-5)
        adj, p2, q2 = holder_dual_problem(phi, q, p)
        b = norm_qp_cp(adj, p2, q2, eps=1e-5)
        worst = max(worst, max(a.value_lo, b.value_lo) - min(a.value_hi, b.value_hi))
    res.add("certified intervals of (Phi, q, p) and (Phi*, p', q') overlap", worst <= 1e-9,
            f"largest separation {worst:.1e} (negative means overlap)")
    return res


CRITERIA = [
    criterion_closed_forms,
    criterion_classical_embedding,
    criterion_bracket_soundness,
    criterion_smoothing_sandwich,
    criterion_hilbert_metric,
    criterion_subgradients,
    criterion_cb_norms,
    criterion_sat_gadget,
    criterion_holder_duality,
]


def run_criterion(fn, level="full", seed=0) -> CriterionResult:
    t0 = time.perf_counter()
    res = fn(level, seed)
    res.seconds = time.perf_counter() - t0
    return res


def run_all(level="quick", seed=0, stream=None):
    results = []
    for fn in CRITERIA:
        r = run_criterion(fn, level, seed)
        results.append(r)
        if stream is not None:
            print(r.report(), file=stream, flush=True)
    return results
