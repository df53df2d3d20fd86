import math

import numpy as np
import pytest

from mixedschatten.boyd import (
    BracketUndefined,
    UnsupportedRegion,
    boyd_bracket,
    boyd_solve,
    boyd_solve_general,
    boyd_step,
    check_region,
    default_max_iter,
    smoothing_constant,
    smoothing_sandwich,
    stationarity_residual,
)
from mixedschatten.channels import (
    NotCompletelyPositive,
    depolarizing_channel,
    identity_channel,
    linear_combination,
    random_cp,
    random_cptp,
    smooth,
)
from mixedschatten.linalg import schatten_norm


@pytest.fixture
def rng():
    return np.random.default_rng(3)


def test_region_guard():
    check_region(4, 2)
    check_region("inf", 1)
    with pytest.raises(UnsupportedRegion):
        check_region(3, 2.5)
    check_region(3, 2.5, experimental=True)
    with pytest.raises(UnsupportedRegion):
        check_region(2, 3, experimental=True)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("q,p", [(2, 1), (4, 2), (2, 2), (3, 1.5)])
def test_closed_forms(d, q, p):
    target = d ** (1 / p - 1 / q)
    for phi in (depolarizing_channel(d), identity_channel(d)):
        r = boyd_solve_general(phi, q, p, eps=1e-5)
        assert r.value_lo <= target * (1 + 1e-9)
        assert r.value_hi >= target * (1 - 1e-9)
        assert r.rel_width < 1e-4


def test_q_inf_is_exact(rng):
    phi = random_cp(3, rng)
    r = boyd_solve(phi, "inf", 1.5)
    assert r.value_lo == r.value_hi == pytest.approx(schatten_norm(phi.apply(np.eye(3)), 1.5))


def test_bracket_encloses_norm_and_tightens(rng):
    lam = random_cptp(3, rng)
    r = boyd_solve(lam, 3, 2, rel_tol=1e-12, record=True)
    assert r.converged
    hist = np.array(r.diagnostics["history"])
    assert np.all(np.diff(hist[:, 0]) >= -1e-12)
    assert np.all(np.diff(hist[:, 1]) <= 1e-12)
    e = (3 - 1) / 2
    assert hist[0, 0] ** e <= r.value_lo + 1e-12
    assert hist[0, 1] ** e >= r.value_hi - 1e-12


def test_fixed_point_is_stationary(rng):
    lam = random_cptp(2, rng)
    r = boyd_solve(lam, 4, 1.5, rel_tol=1e-12)
    w = r.optimizer
    assert stationarity_residual(lam, w, 4, 1.5) < 1e-6
    assert np.allclose(boyd_step(lam, w, 4, 1.5), w, atol=1e-6)


def test_bracket_undefined_for_singular_iterate(rng):
    lam = random_cptp(2, rng)
    with pytest.raises(BracketUndefined):
        boyd_bracket(lam, np.diag([1.0, 0.0]), 3, 2)
    with pytest.raises(ValueError):
        boyd_bracket(lam, np.eye(2), "inf", 2)


def test_rejects_non_cp(rng):
    diff = linear_combination([1, -1], [random_cp(2, rng), random_cp(2, rng)])
    with pytest.raises(NotCompletelyPositive):
        boyd_solve_general(diff, 3, 2)


def test_non_positivity_improving_map_via_smoothing():
    # a rank-one projection map: the raw iteration would stall on the boundary
    P = np.diag([1.0, 0.0])
    phi = linear_combination([1.0], [depolarizing_channel(2)])
    phi = type(phi)(np.kron(P, P), 2, 2)
    r = boyd_solve_general(phi, 4, 2, eps=1e-4)
    assert r.value == pytest.approx(1.0, rel=2e-4)
    assert r.value_lo <= 1 + 1e-12 <= r.value_hi + 2e-12


def test_smoothing_helpers():
    assert smoothing_constant(3, 3, 2, 1) == pytest.approx(3 ** 0.5)
    lo, hi = smoothing_sandwich(1.0, 0.01, 2, 2)
    assert lo < 1 < hi
    assert smoothing_sandwich(1.0, 0.9, 2, "inf")[1] == math.inf


def test_general_bounds_bracket_true_value(rng):
    for _ in range(5):
        lam = random_cp(2, rng)
        exact = boyd_solve(smooth(lam, 0.0), 3, 2, rel_tol=1e-12).value
        r = boyd_solve_general(lam, 3, 2, eps=1e-3)
        assert r.value_lo <= exact * (1 + 1e-9)
        assert r.value_hi >= exact * (1 - 1e-9)


def test_default_max_iter():
    assert default_max_iter(0.0, 2, 1e-6) == 10_000
    assert 200 <= default_max_iter(0.1, 2, 1e-6) <= 10**6
