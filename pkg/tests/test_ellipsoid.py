import math

import numpy as np
import pytest

from mixedschatten.boyd import UnsupportedRegion, boyd_solve_general
from mixedschatten.channels import (
    NotCompletelyPositive,
    depolarizing_channel,
    identity_channel,
    linear_combination,
    random_cp,
    random_cptp,
)
from mixedschatten.ellipsoid import (
    EllipsoidProblem,
    ellipsoid_minimize,
    norm_qp_cp,
    objective_qp,
    root_objective_qp,
    separation_oracle_box,
    separation_oracle_states,
    subgradient_qp,
)
from mixedschatten.linalg import random_density


@pytest.fixture
def rng():
    return np.random.default_rng(5)


def test_state_oracle_cuts_are_valid(rng):
    assert separation_oracle_states(random_density(3, rng)) is None
    X = np.diag([0.5, -0.2, 0.1])
    cut = separation_oracle_states(X)
    # the normal separates X from every state
    n = cut.normal
    assert np.trace(n @ X).real > 0
    for _ in range(20):
        assert np.trace(n @ random_density(3, rng)).real <= 1e-12
    cut = separation_oracle_states(np.eye(3))
    assert np.trace(cut.normal @ np.eye(3)).real > np.trace(cut.normal @ random_density(3, rng)).real


def test_box_oracle_cuts_are_valid(rng):
    assert separation_oracle_box(np.eye(2) / 2) is None
    X = np.diag([1.5, 0.5])
    n = separation_oracle_box(X).normal
    for _ in range(20):
        W = random_density(2, rng)
        W = W / np.linalg.eigvalsh(W)[-1]  # 0 <= W <= I
        assert np.trace(n @ (W - X)).real <= 1e-12
    n = separation_oracle_box(np.diag([-0.5, 0.5])).normal
    assert np.trace(n @ (np.eye(2) / 2 - np.diag([-0.5, 0.5]))).real <= 0


def test_ellipsoid_quadratic_with_certified_lower_bound():
    c = np.array([0.3, -0.2, 0.1])

    def oracle(x):
        if np.linalg.norm(x) > 1:
            return ("feasibility", x / np.linalg.norm(x))
        return ("objective", float((x - c) @ (x - c)) + 1.0, 2 * (x - c))

    prob = EllipsoidProblem(3, np.zeros(3), oracle, R=1.0, r=0.5, eps=1e-6)
    res = ellipsoid_minimize(prob, track_volume=True)
    assert res.converged
    assert res.lower_bound <= 1.0 <= res.f_best
    assert res.f_best - 1.0 <= 2e-6
    assert np.all(np.diff(res.log_volume) < 0)
    assert res.iterations <= prob.iteration_bound()


def test_problem_validation():
    with pytest.raises(ValueError):
        EllipsoidProblem(2, np.zeros(2), None, R=0.1, r=1.0)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("q,p", [("inf", 1), (2, 1), ("inf", 2), (4, 2), (2, 2), (3, 3)])
def test_closed_forms(d, q, p):
    qq = math.inf if q == "inf" else q
    target = d ** (1 / p - 1 / qq)
    for phi in (depolarizing_channel(d), identity_channel(d)):
        r = norm_qp_cp(phi, q, p, eps=1e-5)
        assert r.value_lo <= target * (1 + 1e-9)
        assert r.value_hi >= target * (1 - 1e-9)
        assert r.value == pytest.approx(target, rel=1e-4)


def test_agrees_with_power_iteration(rng):
    for d in (2, 3):
        phi = random_cptp(d, rng)
        a = norm_qp_cp(phi, 3, 2, eps=1e-6)
        b = boyd_solve_general(phi, 3, 2, eps=1e-6)
        assert max(a.value_lo, b.value_lo) <= min(a.value_hi, b.value_hi) + 1e-9


def test_covers_region_outside_power_iteration(rng):
    phi = random_cp(2, rng)
    r = norm_qp_cp(phi, 4, 3, eps=1e-5)
    assert r.converged
    # lower end is attained by the witness
    w = r.optimizer
    val = np.linalg.norm(np.linalg.eigvalsh(phi.apply(w)), 3) / np.linalg.norm(np.linalg.eigvalsh(w), 4)
    assert val == pytest.approx(r.value_lo, rel=1e-9)


def test_refusals(rng):
    with pytest.raises(UnsupportedRegion):
        norm_qp_cp(random_cp(2, rng), 2, 3)
    diff = linear_combination([1, -1], [random_cp(2, rng), random_cp(2, rng)])
    with pytest.raises(NotCompletelyPositive):
        norm_qp_cp(diff, 3, 2)


def test_root_objective_gradient_matches_fd(rng):
    phi = random_cp(3, rng)
    X = random_density(3, rng)
    E = rng.normal(size=(3, 3))
    E = (E + E.T) / 2
    t = 1e-6
    f = lambda Y: root_objective_qp(phi, phi.adjoint(), Y, 3, 2)[0]  # noqa: E731
    _, G = root_objective_qp(phi, phi.adjoint(), X, 3, 2)
    assert np.trace(G @ E).real == pytest.approx((f(X + t * E) - f(X - t * E)) / (2 * t), abs=1e-6)


def test_subgradient_rejects_q_inf(rng):
    with pytest.raises(ValueError):
        subgradient_qp(random_cp(2, rng), np.eye(2) / 2, "inf", 2)
    assert objective_qp(identity_channel(2), np.eye(2) / 2, 2, 2) == pytest.approx(-1.0)
