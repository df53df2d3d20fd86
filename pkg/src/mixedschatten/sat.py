"""2-out-of-4-SAT instances and the channel gadgets built from them.

An instance on ``d`` variables is a list of clauses; clause ``k`` is the vector
``|A_k> = sum_i a_i |i>`` with exactly four entries ``+-1/2``. A sign vector
``x in {+-1}^d`` satisfies the instance when the proper state
``psi = x / sqrt(d)`` is orthogonal to every ``|A_k>``.

The four gadget channels act on ``H = K (x) K`` with ``K = C^d``. They are only
ever evaluated on product inputs ``(psi (x) psi)^{(x) 4}``, one copy per factor,
so nothing on ``H^{(x) 4}`` is materialized.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .channels import KrausMap, MeasurePrepareMap
from .linalg import parse_index, schatten_norm_hermitian, vector_norm

MAX_ENUM_D = 24
_MINUS = ("-", "−")


@dataclass(frozen=True)
class TwoOutOfFourInstance:
    d: int
    clauses: tuple  # of (indices: 4-tuple of 0-based ints, signs: 4-tuple of +-1)

    def __post_init__(self):
        if self.d < 4:
            raise ValueError("a clause needs four distinct variables, so d >= 4")
        if len(self.clauses) < 1:
            raise ValueError("an instance needs at least one clause")
        for idx, sg in self.clauses:
            if len(idx) != 4 or len(set(idx)) != 4:
                raise ValueError(f"clause indices must be 4 distinct values, got {idx}")
            if any(not 0 <= i < self.d for i in idx):
                raise ValueError(f"clause index out of range in {idx}")
            if len(sg) != 4 or any(s not in (1, -1) for s in sg):
                raise ValueError(f"clause signs must be four of +1/-1, got {sg}")

    @property
    def m(self) -> int:
        return len(self.clauses)

    def clause_matrix(self) -> np.ndarray:
        """Rows are the coefficient vectors ``a^k`` (entries 0 or +-1/2)."""
        A = np.zeros((self.m, self.d))
        for k, (idx, sg) in enumerate(self.clauses):
            for i, s in zip(idx, sg):
                A[k, i] = 0.5 * s
        return A

    @classmethod
    def from_dict(cls, data) -> "TwoOutOfFourInstance":
        try:
            d = int(data["d"])
            clauses = []
            for c in data["clauses"]:
                idx = tuple(int(i) - 1 for i in c["indices"])
                sg = tuple(-1 if str(s).strip() in _MINUS else 1 if str(s).strip() == "+" else None
                           for s in c["signs"])
                if None in sg:
                    raise ValueError(f"signs must be '+' or '-', got {c['signs']}")
                clauses.append((idx, sg))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed instance document: {exc}") from exc
        return cls(d, tuple(clauses))

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "clauses": [
                {"indices": [i + 1 for i in idx], "signs": ["+" if s > 0 else "-" for s in sg]}
                for idx, sg in self.clauses
            ],
        }


def load_instance(path) -> TwoOutOfFourInstance:
    with open(path) as fh:
        return TwoOutOfFourInstance.from_dict(json.load(fh))


def save_instance(inst, path):
    with open(path, "w") as fh:
        json.dump(inst.to_dict(), fh)


def proper_state(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or not np.all(np.isin(x, (-1.0, 1.0))):
        raise ValueError("a proper state needs signs in {+1, -1}")
    return x / math.sqrt(len(x))


def build_hamiltonian(inst: TwoOutOfFourInstance) -> np.ndarray:
    """``H = (1/m) sum_k |A_k><A_k| (x) |A_k><A_k|`` on ``C^{d^2}``."""
    A = inst.clause_matrix()
    V = np.einsum("ki,kj->kij", A, A).reshape(inst.m, -1)
    return (V.T @ V / inst.m).astype(complex)


def _projector(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def swap_operator(d) -> np.ndarray:
    F = np.zeros((d, d, d, d))
    for i in range(d):
        for j in range(d):
            F[i, j, j, i] = 1
    return F.reshape(d * d, d * d)


def cube_effect(d) -> np.ndarray:
    """``(1/(d(d-1))) sum_{i != j} Pi_ij (x) Pi'_ij``."""
    M0 = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            plus = np.zeros(d)
            minus = np.zeros(d)
            plus[i] = plus[j] = 1
            minus[i], minus[j] = 1, -1
            M0 += np.kron(np.outer(plus, plus) / 2, np.outer(minus, minus) / 2)
    return M0 / (d * (d - 1))


def _e(k):
    E = np.zeros((2, 2))
    E[k, k] = 1
    return E


def trace_channel(d, eta) -> KrausMap:
    """``rho -> (1 - eta/d^2) I/d + (eta/d^2) Tr_2 rho`` from ``C^{d^2}`` to ``C^d``."""
    if not 0 < eta <= d * d:
        raise ValueError(f"eta must lie in (0, d^2] = (0, {d * d}], got {eta}")
    a = eta / d**2
    ops = []
    for k in range(d):
        ops.append(math.sqrt(a) * np.kron(np.eye(d), np.eye(d)[k][None, :]))
    if a < 1:
        c = math.sqrt((1 - a) / d)
        for out in range(d):
            for i in range(d):
                for k in range(d):
                    K = np.zeros((d, d * d))
                    K[out, i * d + k] = c
                    ops.append(K)
    return KrausMap(np.array(ops))


@dataclass
class GadgetChannels:
    phi_H: MeasurePrepareMap
    phi_trace: KrausMap
    phi_swap: MeasurePrepareMap
    phi_cube: MeasurePrepareMap
    eta: float
    d: int
    # recorded, not verified: separability testing is itself hard
    entanglement_breaking: bool = field(default=False)

    def factors(self):
        return [self.phi_trace, self.phi_swap, self.phi_cube, self.phi_H]


def build_gadget_channels(inst: TwoOutOfFourInstance, eta) -> GadgetChannels:
    d = inst.d
    if not 0 < eta <= d * d:
        raise ValueError(f"eta must lie in (0, d^2] = (0, {d * d}], got {eta}")
    D = d * d
    I = np.eye(D)
    H = build_hamiltonian(inst)
    phi_H = MeasurePrepareMap([H / 2, I - H / 2], [_e(0), _e(1)])
    F = swap_operator(d)
    phi_swap = MeasurePrepareMap([(I + F) / 2, (I - F) / 2], [_e(0), _e(1)])
    M0 = cube_effect(d)
    phi_cube = MeasurePrepareMap([M0, I - M0], [_e(0), _e(1)])
    return GadgetChannels(phi_H, trace_channel(d, eta), phi_swap, phi_cube, float(eta), d, eta < 1)


def build_centered_channels(inst: TwoOutOfFourInstance, eta):
    """Factors of the difference map: ``Phi_trace - Tr[.] I/d``, ``Phi_swap - Tr[.]|1><1|``,
    ``Phi_cube - Tr[.]|0><0|`` and ``Phi_H - Tr[.]|0><0|``."""
    d = inst.d
    if not 0 < eta <= d * d:
        raise ValueError(f"eta must lie in (0, d^2], got {eta}")
    D = d * d
    I = np.eye(D)
    a = eta / d**2
    ops, signs = [], []
    for k in range(d):
        ops.append(math.sqrt(a) * np.kron(np.eye(d), np.eye(d)[k][None, :]))
        signs.append(1)
    c = math.sqrt(a / d)
    for out in range(d):
        for j in range(D):
            K = np.zeros((d, D))
            K[out, j] = c
            ops.append(K)
            signs.append(-1)
    trace_c = KrausMap(np.array(ops), signs)
    Z10 = _e(1) - _e(0)
    H = build_hamiltonian(inst)
    swap_c = MeasurePrepareMap([(I + swap_operator(d)) / 2], [-Z10])
    cube_c = MeasurePrepareMap([I - cube_effect(d)], [Z10])
    H_c = MeasurePrepareMap([I - H / 2], [Z10])
    return [trace_c, swap_c, cube_c, H_c]


def gadget_bound(eta, d, p) -> float:
    """``f(eta, d, p)``: the largest p-norm of ``(1 - eta/d^2) I/d + (eta/d^2) rho_1``."""
    p = parse_index(p)
    a = eta / d**2
    lo = (1 - a) / d
    if math.isinf(p):
        return lo + a
    return ((d - 1) * lo**p + (lo + a) ** p) ** (1 / p)


def certificate_value(inst, eta, p, x, variant="one_to_p", channels=None) -> float:
    """Norm of the gadget output on ``(psi (x) psi)^{(x) 4}``, computed factor by factor."""
    p = parse_index(p)
    psi = proper_state(x)
    if len(psi) != inst.d:
        raise ValueError("sign vector length must equal d")
    rho = _projector(np.kron(psi, psi))
    if variant == "one_to_p":
        chans = build_gadget_channels(inst, eta).factors() if channels is None else channels
        return float(np.prod([schatten_norm_hermitian(f.apply(rho), p) for f in chans]))
    if variant == "one_to_one":
        chans = build_centered_channels(inst, eta) if channels is None else channels
        return float(np.prod([schatten_norm_hermitian(f.apply(rho), 1) for f in chans]))
    raise ValueError(f"unknown variant {variant!r}")


def gadget_output_on_product(channels, taus) -> np.ndarray:
    """``(Phi_trace (x) Phi_swap (x) Phi_cube (x) Phi_H)(Lambda_4(tau_1 (x) ... (x) tau_4))``.

    The symmetrizer turns the product input into the uniform mixture of its
    permutations, so the output is a sum of 24 products on ``C^d (x) C^2 (x) C^2 (x) C^2``.
    """
    if isinstance(channels, GadgetChannels):
        channels = channels.factors()
    if len(taus) != 4:
        raise ValueError("need one input per tensor factor")
    out = 0
    perms = list(itertools.permutations(range(4)))
    for perm in perms:
        term = np.ones((1, 1))
        for f, k in zip(channels, perm):
            term = np.kron(term, f.apply(taus[k]))
        out = out + term
    return out / len(perms)


def one_to_one_bound(eta, d) -> float:
    return 2**3 * (2 - 2 / d) * eta / d**2


def _sign_vectors(d, start, stop):
    """Rows ``x`` with ``x_0 = +1`` and the remaining bits of the integers in ``[start, stop)``."""
    k = np.arange(start, stop, dtype=np.int64)
    bits = (k[:, None] >> np.arange(d - 1, dtype=np.int64)) & 1
    X = np.ones((len(k), d))
    X[:, 1:] = 1 - 2 * bits
    return X


def _overlap_chunks(inst, chunk=1 << 16):
    if inst.d > MAX_ENUM_D:
        raise MemoryError(f"exhaustive enumeration is limited to d <= {MAX_ENUM_D}")
    A = 2 * inst.clause_matrix()  # integer entries, exact in floating point
    total = 1 << (inst.d - 1)
    for start in range(0, total, chunk):
        X = _sign_vectors(inst.d, start, min(total, start + chunk))
        yield X, X @ A.T  # = 2 sqrt(d) <A_k|psi>, integers in {0, +-2, +-4}


def exhaustive_sat(inst: TwoOutOfFourInstance):
    """First satisfying sign vector (with ``x_1 = +1``), or ``None`` if unsatisfiable.

    The global flip ``x -> -x`` preserves every constraint, so half the cube suffices.
    """
    for X, S in _overlap_chunks(inst):
        ok = np.all(S == 0, axis=1)
        if ok.any():
            return X[np.argmax(ok)].astype(int)
    return None


def residual_min(inst) -> tuple:
    """``min_x (1/2) Tr[H psi (x) psi]`` over proper states, with a minimizer."""
    best, arg = math.inf, None
    for X, S in _overlap_chunks(inst):
        h = np.sum((S / (2 * math.sqrt(inst.d))) ** 4, axis=1) / inst.m
        k = int(np.argmin(h))
        if h[k] / 2 < best:
            best, arg = h[k] / 2, X[k].astype(int)
    return float(best), arg


def integrality_residual_bound(inst) -> float:
    """Lower bound on ``(1/2) Tr[H psi (x) psi]`` at unsatisfying proper states: ``1/(2 m d^2)``.

    A violated clause has ``|<A_k|psi>| >= 1/sqrt(d)``, so ``h >= 1/(m d^2)``.
    """
    return 1 / (2 * inst.m * inst.d**2)


def _h_factor(h, p):
    """p-norm of ``Phi_H`` output ``diag(h/2, 1 - h/2)``, decreasing in ``h`` for ``p > 1``."""
    return vector_norm(np.array([h / 2, 1 - h / 2]), p)


def gap_certify(inst: TwoOutOfFourInstance, eta, p) -> dict:
    """Compare the best proper certificate with ``f(eta, d, p)``.

    Satisfiable: the certificate attains the bound. Unsatisfiable: every proper
    certificate lies below ``f * ||(h0/2, 1 - h0/2)||_p`` with ``h0 = 1/(m d^2)``.
    Only the proper-certificate restriction is certified, not the full norm.
    """
    p = parse_index(p)
    f = gadget_bound(eta, inst.d, p)
    x = exhaustive_sat(inst)
    report = {"d": inst.d, "m": inst.m, "eta": float(eta), "p": p if not math.isinf(p) else "inf",
              "gadget_bound": f, "scope": "proper certificates (psi x psi)^{x4} only; full norm not certified"}
    if x is not None:
        val = certificate_value(inst, eta, p, x)
        report.update(satisfiable=True, witness=[int(v) for v in x], certificate_value=val,
                      equality_residual=abs(val - f), certified=bool(abs(val - f) <= 1e-9))
        return report
    res, xr = residual_min(inst)
    h_min = 2 * res
    max_val = f * _h_factor(h_min, p)
    direct = certificate_value(inst, eta, p, xr)
    h0 = 2 * integrality_residual_bound(inst)
    delta_gap = 1 - _h_factor(h0, p)
    report.update(
        satisfiable=False,
        max_proper_value=max_val,
        max_proper_value_direct=direct,
        maximizer=[int(v) for v in xr],
        residual_min=res,
        integrality_residual_bound=integrality_residual_bound(inst),
        delta_gap=delta_gap,
        certified=bool(max_val <= f * (1 - delta_gap) + 1e-15 and delta_gap > 0),
    )
    return report


def single_clause_instance(d=4, signs=(1, 1, 1, 1)) -> TwoOutOfFourInstance:
    return TwoOutOfFourInstance(d, (((0, 1, 2, 3), tuple(signs)),))


def all_patterns_instance(d=4) -> TwoOutOfFourInstance:
    """All eight sign patterns (up to global sign) on the first four variables; unsatisfiable."""
    clauses = []
    for k in range(8):
        sg = (1,) + tuple(1 - 2 * ((k >> b) & 1) for b in range(3))
        clauses.append(((0, 1, 2, 3), sg))
    return TwoOutOfFourInstance(d, tuple(clauses))
