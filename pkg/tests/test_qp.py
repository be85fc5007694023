"""Active-set QP solver against hand cases and the enumeration oracle."""
import numpy as np
import pytest

from arcbf.qp import (FEASIBILITY_TOL, MULTIPLIER_TOL, STATIONARITY_TOL,
                      DenseQp, QpStatus, brute_force_oracle, kkt_residuals,
                      solve_qp)
from arcbf.errors import ContractViolationError, OracleScopeError


def test_hand_case_single_bound():
    # min 1/2 u^2  s.t. -u <= -1  ->  u = 1, lambda = 1
    qp = DenseQp.make([[1.0]], [0.0], [[-1.0]], [-1.0])
    sol = solve_qp(qp)
    assert sol.status is QpStatus.OPTIMAL
    assert sol.z[0] == pytest.approx(1.0, abs=1e-12)
    assert sol.multipliers[0] == pytest.approx(1.0, abs=1e-12)
    assert sol.active_set == (0,)


def test_hand_case_soft_slack_row():
    # min 1/2 u^2 + 100 delta^2  s.t. u - delta <= -2
    # stationarity on the active row: u = -lam, 200 delta = lam
    # -> lam (1 + 1/200) = 2, u = -400/201, delta = 2/201
    qp = DenseQp.make(np.diag([1.0, 200.0]), np.zeros(2),
                      [[1.0, -1.0]], [-2.0])
    sol = solve_qp(qp)
    assert sol.z[0] == pytest.approx(-400.0 / 201.0, abs=1e-12)
    assert sol.z[1] == pytest.approx(2.0 / 201.0, abs=1e-12)
    assert sol.multipliers[0] == pytest.approx(400.0 / 201.0, abs=1e-12)


def test_unconstrained_and_inactive_rows():
    qp = DenseQp.make(np.diag([2.0, 2.0]), [-2.0, -4.0])
    sol = solve_qp(qp)
    np.testing.assert_allclose(sol.z, [1.0, 2.0], atol=1e-14)
    # same problem with a row that is slack at the optimum
    qp2 = DenseQp.make(np.diag([2.0, 2.0]), [-2.0, -4.0], [[1.0, 1.0]], [10.0])
    sol2 = solve_qp(qp2)
    np.testing.assert_allclose(sol2.z, [1.0, 2.0], atol=1e-12)
    assert sol2.multipliers[0] == 0.0


def test_equality_from_opposed_rows():
    # z <= 1 and -z <= -1 pin z = 1
    qp = DenseQp.make([[1.0]], [0.0], [[1.0], [-1.0]], [1.0, -1.0])
    sol = solve_qp(qp)
    assert sol.status is QpStatus.OPTIMAL
    assert sol.z[0] == pytest.approx(1.0, abs=1e-10)


def test_infeasible_slab():
    # z <= 0 and z >= 1 is empty
    qp = DenseQp.make([[1.0]], [0.0], [[1.0], [-1.0]], [0.0, -1.0])
    sol = solve_qp(qp)
    assert sol.status is QpStatus.INFEASIBLE
    assert sol.z is None and sol.multipliers is None
    assert brute_force_oracle(qp).status is QpStatus.INFEASIBLE


def test_validation():
    with pytest.raises(ContractViolationError):
        DenseQp.make([[1.0, 0.5], [0.0, 1.0]], [0.0, 0.0])   # not symmetric
    with pytest.raises(ContractViolationError):
        DenseQp.make([[0.0]], [0.0])                         # not PD
    with pytest.raises(ContractViolationError):
        DenseQp.make([[1.0]], [0.0, 1.0])                    # dim mismatch
    with pytest.raises(ContractViolationError):
        DenseQp.make([[1.0]], [0.0], [[1.0]], [1.0, 2.0])    # row mismatch
    with pytest.raises(OracleScopeError):
        d = 2
        A = np.ones((13, d))
        brute_force_oracle(DenseQp.make(np.eye(d), np.zeros(d), A, np.ones(13)))


def _random_feasible_qp(rng, d=None, k=None):
    d = d if d is not None else int(rng.integers(1, 5))
    k = k if k is not None else int(rng.integers(0, 7))
    M = rng.normal(size=(d, d))
    Q = M.T @ M + np.eye(d)
    c = rng.normal(size=d) * 3.0
    A = rng.normal(size=(k, d))
    z_int = rng.normal(size=d)
    b = A @ z_int + rng.uniform(0.1, 2.0, size=k)   # z_int strictly inside
    return DenseQp.make(Q, c, A, b)


def test_random_against_oracle():
    rng = np.random.default_rng(0)
    for _ in range(150):
        qp = _random_feasible_qp(rng)
        sol = solve_qp(qp)
        ref = brute_force_oracle(qp)
        assert sol.status is QpStatus.OPTIMAL and ref.status is QpStatus.OPTIMAL
        assert np.max(np.abs(sol.z - ref.z)) <= 1e-7
        assert abs(qp.objective(sol.z) - qp.objective(ref.z)) <= 1e-9
        res = kkt_residuals(qp, sol)
        assert res["stationarity"] <= STATIONARITY_TOL * (1 + np.abs(qp.c).max())
        assert res["feasibility"] <= FEASIBILITY_TOL * (1 + np.abs(qp.b).max(initial=0))
        assert res["min_multiplier"] >= -MULTIPLIER_TOL
        assert res["complementarity"] <= 1e-6


def test_random_infeasible_against_oracle():
    rng = np.random.default_rng(1)
    hit = 0
    for _ in range(60):
        d = int(rng.integers(1, 4))
        a = rng.normal(size=d)
        a /= np.linalg.norm(a)
        gap = rng.uniform(0.5, 3.0)
        extra = int(rng.integers(0, 4))
        A = np.vstack([a, -a, rng.normal(size=(extra, d))])
        b = np.concatenate([[0.0, -gap], rng.uniform(-1, 1, size=extra)])
        M = rng.normal(size=(d, d))
        qp = DenseQp.make(M.T @ M + np.eye(d), rng.normal(size=d), A, b)
        sol = solve_qp(qp)
        ref = brute_force_oracle(qp)
        assert sol.status is ref.status
        if sol.status is QpStatus.INFEASIBLE:
            hit += 1
    assert hit == 60   # the slab construction is always empty


def test_dependent_rows():
    rng = np.random.default_rng(2)
    for _ in range(40):
        qp0 = _random_feasible_qp(rng, k=int(rng.integers(1, 5)))
        i = int(rng.integers(0, qp0.n_rows))
        s = rng.uniform(0.5, 4.0)
        A = np.vstack([qp0.A, s * qp0.A[i]])
        b = np.concatenate([qp0.b, [s * qp0.b[i]]])   # duplicate row, rescaled
        qp = DenseQp.make(qp0.Q, qp0.c, A, b)
        sol = solve_qp(qp)
        ref = brute_force_oracle(qp)
        assert np.max(np.abs(sol.z - ref.z)) <= 1e-7
        assert abs(qp.objective(sol.z) - qp.objective(ref.z)) <= 1e-9


def test_row_scaling_invariance():
    rng = np.random.default_rng(4)
    for _ in range(30):
        qp = _random_feasible_qp(rng, k=int(rng.integers(1, 7)))
        base = solve_qp(qp).z
        i = int(rng.integers(0, qp.n_rows))
        s = 10.0 ** rng.uniform(-3, 3)
        A = qp.A.copy()
        b = qp.b.copy()
        A[i] *= s
        b[i] *= s
        scaled = solve_qp(DenseQp.make(qp.Q, qp.c, A, b)).z
        assert np.max(np.abs(scaled - base)) <= 1e-9 * (1 + np.abs(base).max())


def test_optimum_beats_random_feasible_points():
    rng = np.random.default_rng(5)
    d = 3
    Q = np.diag([1.0, 2.0, 5.0])
    c = np.array([1.0, -2.0, 0.5])
    A = np.vstack([np.eye(d), -np.eye(d)])
    b = np.ones(2 * d)   # the unit box
    qp = DenseQp.make(Q, c, A, b)
    sol = solve_qp(qp)
    best = qp.objective(sol.z)
    pts = rng.uniform(-1, 1, size=(1000, d))
    objs = 0.5 * np.einsum("ij,jk,ik->i", pts, Q, pts) + pts @ c
    assert best <= objs.min() + 1e-12


def test_determinism_and_warm_start():
    rng = np.random.default_rng(6)
    qp = _random_feasible_qp(rng, d=3, k=5)
    z1 = solve_qp(qp).z
    z2 = solve_qp(qp).z
    assert np.array_equal(z1, z2)   # bit-identical
    warm = solve_qp(qp, start=z1)
    assert np.max(np.abs(warm.z - z1)) <= 1e-9
    # an infeasible start is ignored, not an error
    bad = solve_qp(qp, start=z1 + 1e6)
    assert np.max(np.abs(bad.z - z1)) <= 1e-9
