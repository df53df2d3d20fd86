import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixedschatten.linalg import (
    PsdOperator,
    as_hermitian,
    coords_to_hermitian,
    divided_differences,
    dual_index,
    format_index,
    frechet_power,
    frechet_power_adjoint,
    hermitian_basis,
    hermitian_to_coords,
    hilbert_metric,
    matrix_power_psd,
    parse_index,
    partial_trace,
    partial_transpose,
    pinv_power,
    random_density,
    real_embedding,
    realign,
    schatten_norm,
    schatten_norm_hermitian,
    support_projection,
    vector_norm,
)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_parse_and_format_index():
    assert parse_index("inf") == math.inf
    assert parse_index("4/3") == pytest.approx(4 / 3)
    assert parse_index(2) == 2.0
    assert format_index(math.inf) == "inf"
    assert format_index(4 / 3) == "4/3"
    assert format_index(2.0) == "2"
    for bad in ("0.5", "nan", -1):
        with pytest.raises(ValueError):
            parse_index(bad)


def test_dual_index():
    assert dual_index(1) == math.inf
    assert dual_index("inf") == 1
    assert dual_index(3) == pytest.approx(1.5)


def test_schatten_norm_simple_values():
    X = np.diag([3.0, -4.0])
    assert schatten_norm(X, 1) == pytest.approx(7)
    assert schatten_norm(X, 2) == pytest.approx(5)
    assert schatten_norm(X, "inf") == pytest.approx(4)
    assert schatten_norm(np.eye(4), 2) == pytest.approx(2)


def test_schatten_norm_large_p_no_underflow():
    v = np.array([1e-200, 2e-200])
    assert vector_norm(v, 400) == pytest.approx(2e-200, rel=1e-2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 1.5, 2, 3, math.inf]))
def test_schatten_unitary_invariance_and_hermitian_path(seed, p):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    H = G + G.conj().T
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    assert schatten_norm(Q @ G, p) == pytest.approx(schatten_norm(G, p))
    assert schatten_norm_hermitian(H, p) == pytest.approx(schatten_norm(H, p))


def test_as_hermitian_rejects_non_hermitian():
    with pytest.raises(ValueError):
        as_hermitian(np.array([[0, 1], [0, 0]]))


def test_psd_operator_and_powers(rng):
    A = random_density(3, rng)
    P = PsdOperator.from_matrix(A)
    assert np.allclose(P.matrix, A)
    R = matrix_power_psd(A, 0.5)
    assert np.allclose(R @ R, A)
    assert np.allclose(pinv_power(A, -1) @ A, np.eye(3))


def test_power_zero_is_support_projection(rng):
    v = rng.normal(size=3)
    A = np.outer(v, v)
    P = matrix_power_psd(A, 0)
    assert np.allclose(P, A / np.trace(A))
    assert np.allclose(support_projection(A), P)


def test_hilbert_metric_basics(rng):
    A = random_density(3, rng)
    assert hilbert_metric(A, A) == pytest.approx(0, abs=1e-12)
    assert hilbert_metric(A, 5 * A) == pytest.approx(0, abs=1e-12)
    assert hilbert_metric(np.diag([1, 0.0]), np.diag([0, 1.0])) == math.inf
    assert hilbert_metric(np.diag([1.0, 1.0]), np.diag([1.0, 4.0])) == pytest.approx(math.log(4))


def test_hilbert_metric_same_support_rank_deficient():
    P = np.diag([1.0, 2.0, 0.0])
    Q = np.diag([3.0, 1.0, 0.0])
    assert hilbert_metric(P, Q) == pytest.approx(math.log(3 * 2))


def test_real_embedding_preserves_inner_product(rng):
    X = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    Y = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    lhs = np.trace(real_embedding(X).T @ real_embedding(Y))
    assert lhs == pytest.approx(np.trace(X.conj().T @ Y).real)


def test_partial_operations(rng):
    A, B = random_density(2, rng), random_density(3, rng)
    J = np.kron(A, B)
    assert np.allclose(partial_trace(J, (2, 3), keep=0), A)
    assert np.allclose(partial_trace(J, (2, 3), keep=1), B)
    assert np.allclose(partial_transpose(J, (2, 3), 0), np.kron(A.T, B))
    assert np.allclose(partial_transpose(J, (2, 3), 1), np.kron(A, B.T))


def test_realign_gives_superoperator(rng):
    K = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    v = K.T.reshape(-1)
    J = np.outer(v, v.conj())
    X = rng.normal(size=(2, 2))
    S = realign(J, (2, 3))
    assert np.allclose((S @ X.reshape(-1)).reshape(3, 3), K @ X @ K.conj().T)


def test_divided_differences_diagonal_is_derivative():
    w = np.array([0.5, 0.5 + 1e-14, 2.0])
    G = divided_differences(w, np.sqrt, lambda x: 0.5 / np.sqrt(x))
    assert G[0, 0] == pytest.approx(0.5 / math.sqrt(0.5))
    assert G[0, 1] == pytest.approx(0.5 / math.sqrt(0.5))
    assert G[0, 2] == pytest.approx((math.sqrt(2) - math.sqrt(0.5)) / 1.5)


def test_frechet_power_matches_finite_difference(rng):
    A = random_density(3, rng)
    E = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    E = E + E.conj().T
    t = 1e-6
    fd = (matrix_power_psd(A + t * E, 0.7) - matrix_power_psd(A - t * E, 0.7)) / (2 * t)
    assert np.allclose(frechet_power(A, 0.7, E), fd, atol=1e-6)
    Xi = rng.normal(size=(3, 3))
    Xi = Xi + Xi.T
    G = frechet_power_adjoint(A, 0.7, Xi)
    assert np.trace(G @ E).real == pytest.approx(np.trace(Xi @ frechet_power(A, 0.7, E)).real)


def test_hermitian_basis_is_orthonormal():
    B = hermitian_basis(3)
    gram = np.einsum("aij,bij->ab", B.conj(), B).real
    assert np.allclose(gram, np.eye(9))
    X = B[4] * 2 + B[1]
    assert np.allclose(coords_to_hermitian(hermitian_to_coords(X, B), B), X)
