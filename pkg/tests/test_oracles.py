import math
import warnings

import numpy as np
import pytest

from mixedschatten.boyd import boyd_solve_general
from mixedschatten.channels import (
    KrausMap,
    classical_embedding,
    depolarizing_channel,
    identity_channel,
    linear_combination,
    random_cp,
    random_cptp,
    unitary_channel,
)
from mixedschatten.linalg import random_density, random_unitary, schatten_norm
from mixedschatten.oracles import (
    brute_norm_qp,
    brute_two_indexed,
    classical_mixed_norm,
    diamond_lower_bound,
    norm_22,
)


@pytest.fixture
def rng():
    return np.random.default_rng(4)


@pytest.mark.parametrize("q,p", [(2, 1), (4, 2), ("inf", 1), (3, 3)])
def test_depolarizing_closed_form(q, p):
    qq = math.inf if q == "inf" else q
    v, w = brute_norm_qp(depolarizing_channel(3), q, p, restarts=8, steps=300)
    assert v == pytest.approx(3 ** (1 / p - 1 / qq), rel=1e-4)
    assert w.shape == (3, 3)


def test_norm_22_values(rng):
    assert norm_22(identity_channel(3)) == pytest.approx(1)
    # Tr[X] I/2 has 2->2 norm sqrt(2)/sqrt(2) = 1, attained at X = I
    assert norm_22(depolarizing_channel(2)) == pytest.approx(1)
    assert norm_22(unitary_channel(random_unitary(3, rng))) == pytest.approx(1)
    for phi in (random_cp(2, rng), linear_combination([1, -1], [random_cp(2, rng), random_cp(2, rng)])):
        v, _ = brute_norm_qp(phi, 2, 2, restarts=16, steps=1000, domain="hermitian")
        assert v == pytest.approx(norm_22(phi), rel=1e-4)


def test_embedding_matches_classical(rng):
    A = rng.random((3, 3))
    v, _ = brute_norm_qp(classical_embedding(A), "inf", 1, restarts=16, steps=500)
    assert v == pytest.approx(classical_mixed_norm(A, "inf", 1), rel=1e-4)


def test_witness_attains_value(rng):
    phi = random_cptp(2, rng)
    v, w = brute_norm_qp(phi, 4, 1.5, restarts=4, steps=200)
    assert schatten_norm(phi.apply(w), 1.5) / schatten_norm(w, 4) == pytest.approx(v, rel=1e-12)


def test_oracle_is_below_solver_upper_bound(rng):
    for _ in range(3):
        phi = random_cp(2, rng)
        r = boyd_solve_general(phi, 3, 2, eps=1e-5)
        v, _ = brute_norm_qp(phi, 3, 2, restarts=8, steps=1000)
        assert v <= r.value_hi + 1e-9
        assert v >= r.value_lo - 1e-6


def test_determinism(rng):
    phi = random_cp(2, rng)
    a = brute_norm_qp(phi, 3, 2, restarts=4, steps=100, seed=7)
    b = brute_norm_qp(phi, 3, 2, restarts=4, steps=100, seed=7)
    assert a[0] == b[0] and np.array_equal(a[1], b[1])
    X = rng.normal(size=(4, 4))
    X = X + X.T
    assert brute_two_indexed(X, (2, 2), "inf", 2, restarts=4, steps=100, seed=3)[0] == \
        brute_two_indexed(X, (2, 2), "inf", 2, restarts=4, steps=100, seed=3)[0]


def test_domain_validation():
    with pytest.raises(ValueError):
        brute_norm_qp(identity_channel(2), 2, 2, domain="real")
    with pytest.raises(MemoryError):
        brute_norm_qp(identity_channel(40), 2, 2)


def test_two_indexed_examples(rng):
    v, (A, B) = brute_two_indexed(np.eye(6), (2, 3), "inf", 2, restarts=8, steps=400)
    assert v == pytest.approx(math.sqrt(3), rel=1e-5)
    assert np.trace(A).real == pytest.approx(1) and np.trace(B).real == pytest.approx(1)
    A0 = rng.normal(size=(2, 2))
    A0 = A0 + A0.T
    B0 = random_density(2, rng)
    v, _ = brute_two_indexed(np.kron(A0, B0), (2, 2), "inf", 3, restarts=8, steps=400)
    assert v == pytest.approx(np.abs(np.linalg.eigvalsh(A0)).max() * schatten_norm(B0, 3), rel=1e-5)
    X = rng.normal(size=(4, 4))
    assert brute_two_indexed(X, (2, 2), 3, 3)[0] == pytest.approx(schatten_norm(X, 3))
    with pytest.raises(ValueError):
        brute_two_indexed(X, (2, 2), 2, 3)
    with pytest.raises(ValueError):
        brute_two_indexed(X, (2, 3), "inf", 2)


def test_diamond_examples(rng):
    Z = np.diag([1.0, -1.0])
    diff = KrausMap(np.array([np.eye(2), Z]), [1, -1])
    v, phi = diamond_lower_bound(diff)
    assert v == pytest.approx(2, abs=1e-6)
    assert np.linalg.norm(phi) == pytest.approx(1)
    zero = KrausMap(np.zeros((1, 2, 2)))
    assert diamond_lower_bound(zero)[0] == pytest.approx(0)
    assert diamond_lower_bound(random_cptp(2, rng))[0] == pytest.approx(1)
    with pytest.raises(ValueError):
        diamond_lower_bound(diff, ancilla_dim=3)


def test_classical_vertex_and_boyd(rng):
    A = np.array([[1.0, 1.0], [1.0, 0.0]])
    val, how = classical_mixed_norm(A, "inf", 1, return_method=True)
    assert (val, how) == (pytest.approx(3), "vertex")
    for n in (2, 3):
        for q, p in ((2, 1), (4, 2), (3, 3)):
            assert classical_mixed_norm(np.eye(n), q, p) == pytest.approx(max(1, n ** (1 / p - 1 / q)), rel=1e-6)
    B = rng.random((4, 4))
    assert classical_mixed_norm(B, 1e6, 1) == pytest.approx(classical_mixed_norm(B, "inf", 1), rel=1e-4)
    with pytest.raises(MemoryError):
        classical_mixed_norm(np.ones((2, 21)), "inf", 1)


def test_classical_fallback_warns(rng):
    A = rng.normal(size=(3, 3))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        val, how = classical_mixed_norm(A, 2, 2, return_method=True)
    assert how == "estimate" and caught
    assert val == pytest.approx(np.linalg.norm(A, 2), rel=1e-4)
