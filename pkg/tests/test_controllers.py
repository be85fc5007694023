"""Controller variants: uncertainty terms, QP assembly, pointwise decisions."""
import dataclasses
import math

import numpy as np
import pytest

from arcbf import (AccParams, ControllerConfig, InfeasibilityPolicy, LieData,
                   Variant, acc_bounds, assemble_qp, build_acc_certificates,
                   build_acc_model, constraint_rows, control_step,
                   effective_gamma, lie_data, uncertainty_terms)
from arcbf.errors import ConfigurationError, QpInfeasibleError
from arcbf.qp import QpStatus

NH = math.sqrt(1.0 + 1.8 ** 2)


def _setup():
    params = AccParams()
    model, lip = build_acc_model(params)
    clf, cbf = build_acc_certificates(params)
    bounds = acc_bounds(params, model, lip)
    weight = np.array([[1.0 / params.mass ** 2]])
    cfg = lambda variant, policy=InfeasibilityPolicy.ERROR: ControllerConfig(
        H=lambda x: weight, p=100.0, variant=variant, T_qp=0.01,
        infeasibility=policy)
    return params, model, clf, cbf, bounds, cfg


def _bench_lie():
    return LieData(V=100.0, Vx=np.array([0.0, -20.0, 0.0]), LfV=0.0,
                   LgV=np.array([-20.0 / 1650.0]), h=58.4,
                   hx=np.array([0.0, -1.8, 1.0]), LfH=6.0,
                   LgH=np.array([-1.8 / 1650.0]))


def test_uncertainty_terms_hand_values():
    lie = _bench_lie()
    d_hat = np.array([0.0, -0.05, 0.0])
    c_v, c_h = uncertainty_terms(Variant.ADAPTIVE_ROBUST, lie, d_hat,
                                 gamma=0.298, theta=4.0)
    # c_h = (-1.8)(-0.05) - ||hx||*0.298 = 0.09 - 0.61361...
    assert c_h == pytest.approx(-0.5236195564028252, abs=1e-12)
    assert c_v == pytest.approx(1.0 + 20.0 * 0.298, abs=1e-12)

    assert uncertainty_terms(Variant.NOMINAL, lie, d_hat, 0.298, 4.0) == (0.0, 0.0)

    d = np.array([0.0, 1.0, 0.0])
    c_v, c_h = uncertainty_terms(Variant.TRUE_UNCERTAINTY, lie, d_hat,
                                 0.298, 4.0, d_true=d)
    assert (c_v, c_h) == (-20.0, -1.8)
    with pytest.raises(ConfigurationError):
        uncertainty_terms(Variant.TRUE_UNCERTAINTY, lie, d_hat, 0.298, 4.0)

    c_v, c_h = uncertainty_terms(Variant.ROBUST_WORST_CASE, lie, d_hat, 0.298, 4.0)
    assert c_v == pytest.approx(20.0 * 4.0, abs=1e-12)
    assert c_h == pytest.approx(-NH * 4.0, abs=1e-12)


def test_uncertainty_terms_monotone_in_gamma():
    lie = _bench_lie()
    d_hat = np.array([0.0, 0.2, 0.0])
    last_ch = math.inf
    for gamma in (0.0, 0.1, 0.298, 1.0, 4.0):
        _, c_h = uncertainty_terms(Variant.ADAPTIVE_ROBUST, lie, d_hat, gamma, 5.0)
        assert c_h <= last_ch        # larger gamma shrinks the feasible u set
        last_ch = c_h


def test_worst_case_row_below_adaptive_row():
    # whenever ||d_hat|| <= theta - gamma the static worst case is the more
    # conservative CBF row at every u (Cauchy-Schwarz)
    lie = _bench_lie()
    theta, gamma = 4.0, 0.298
    rng = np.random.default_rng(12)
    for _ in range(50):
        d_hat = rng.normal(size=3)
        d_hat *= rng.uniform(0, theta - gamma) / np.linalg.norm(d_hat)
        u = rng.uniform(-6474.6, 6474.6, size=1)
        _, rwc = constraint_rows(Variant.ROBUST_WORST_CASE, *_certs(), lie,
                                 u, 0.0, d_hat, gamma, theta)
        _, ar = constraint_rows(Variant.ADAPTIVE_ROBUST, *_certs(), lie,
                                u, 0.0, d_hat, gamma, theta)
        assert rwc <= ar + 1e-12


def _certs():
    return build_acc_certificates(AccParams())


def test_assemble_qp_structure():
    _, model, clf, cbf, _, cfg = _setup()
    lie = _bench_lie()
    qp = assemble_qp(cfg(Variant.NOMINAL), clf, cbf, lie, model.input_box,
                     np.array([18.0, 12.0, 80.0]), c_v=0.5, c_h=-0.25)
    assert qp.A.shape == (4, 2) and qp.b.shape == (4,)
    assert qp.Q[0, 0] == pytest.approx(1.0 / 1650.0 ** 2)
    assert qp.Q[1, 1] == 200.0                    # 2 p
    assert qp.Q[0, 1] == 0.0
    np.testing.assert_array_equal(qp.c, [0.0, 0.0])
    # CLF row: LgV u - delta <= -(LfV + c_v + alpha(V))
    assert qp.A[0, 0] == lie.LgV[0] and qp.A[0, 1] == -1.0
    assert qp.b[0] == pytest.approx(-(0.0 + 0.5 + 5.0 * 100.0))
    # CBF row: -LgH u <= LfH + c_h + beta(h), no slack coefficient
    assert qp.A[1, 0] == -lie.LgH[0] and qp.A[1, 1] == 0.0
    assert qp.b[1] == pytest.approx(6.0 - 0.25 + 58.4)
    # input box rows
    np.testing.assert_array_equal(qp.A[2], [1.0, 0.0])
    np.testing.assert_array_equal(qp.A[3], [-1.0, 0.0])
    assert qp.b[2] == 6474.6 and qp.b[3] == 6474.6


def test_effective_gamma_branches():
    params, model, clf, cbf, bounds, cfg = _setup()
    assert effective_gamma(Variant.ADAPTIVE_ROBUST, bounds, 0.0) == bounds.theta
    assert effective_gamma(Variant.ADAPTIVE_ROBUST, bounds, 0.5 * bounds.T) == bounds.theta
    assert effective_gamma(Variant.ADAPTIVE_ROBUST, bounds, bounds.T) == bounds.gamma_T
    assert effective_gamma(Variant.NOMINAL, bounds, 0.0) == bounds.gamma_T
    assert effective_gamma(Variant.ROBUST_WORST_CASE, bounds, 0.0) == bounds.gamma_T


def test_true_equals_nominal_without_disturbance():
    params, model, clf, cbf, bounds, cfg = _setup()
    quiet = dataclasses.replace(model, d_true=lambda t, x: np.zeros(3))
    rng = np.random.default_rng(13)
    for _ in range(10):
        # ample headway keeps every variant's QP feasible
        x = np.array([rng.uniform(5, 35), rng.uniform(5, 35), rng.uniform(150, 290)])
        a = control_step(cfg(Variant.TRUE_UNCERTAINTY), quiet, clf, cbf, bounds,
                         0.25, x, np.zeros(3))
        b = control_step(cfg(Variant.NOMINAL), quiet, clf, cbf, bounds,
                         0.25, x, np.zeros(3))
        assert np.array_equal(a.u, b.u) and a.delta == b.delta


def test_adaptive_before_first_sample_equals_worst_case():
    params, model, clf, cbf, bounds, cfg = _setup()
    rng = np.random.default_rng(14)
    for _ in range(10):
        x = np.array([rng.uniform(5, 35), rng.uniform(5, 35), rng.uniform(150, 290)])
        a = control_step(cfg(Variant.ADAPTIVE_ROBUST), model, clf, cbf, bounds,
                         0.0, x, np.zeros(3))            # t < T: no estimate yet
        r = control_step(cfg(Variant.ROBUST_WORST_CASE), model, clf, cbf, bounds,
                         0.0, x, np.zeros(3))
        assert np.array_equal(a.u, r.u) and a.delta == r.delta


def test_cbf_row_active_decision():
    # lead 2 m/s slower with h = 0.5: braking to exactly the CBF boundary
    params, model, clf, cbf, bounds, cfg = _setup()
    x = np.array([18.0, 20.0, 36.5])
    dec = control_step(cfg(Variant.NOMINAL), model, clf, cbf, bounds, 0.0, x,
                       np.zeros(3))
    assert dec.status is QpStatus.OPTIMAL
    # row: -2 - (1.8/1650) u + 0.5 >= 0  ->  u <= -1375
    assert dec.u[0] == pytest.approx(-1375.0, abs=1e-6)
    assert abs(dec.cbf_row) <= 1e-9                      # equality at the boundary
    assert 1 in dec.active_set
    assert dec.multipliers[1] > 0.0


def test_box_row_active_decision():
    # tracking demands ~5x the available braking force; the input saturates
    params, model, clf, cbf, bounds, cfg = _setup()
    x = np.array([30.0, 30.0, 300.0])
    dec = control_step(cfg(Variant.NOMINAL), model, clf, cbf, bounds, 0.0, x,
                       np.zeros(3))
    assert dec.u[0] == pytest.approx(-params.u_max, rel=1e-12)
    assert 3 in dec.active_set                           # lower input bound row
    assert dec.cbf_row > 0.0                             # CBF slack, not binding
    assert dec.delta > 0.0                               # CLF softened instead


def test_infeasible_error_policy():
    params, model, clf, cbf, bounds, cfg = _setup()
    x = np.array([10.0, 20.0, 36.5])    # needs u <= -8708 < -u_max
    with pytest.raises(QpInfeasibleError) as exc:
        control_step(cfg(Variant.NOMINAL), model, clf, cbf, bounds, 0.0, x,
                     np.zeros(3))
    assert exc.value.t == 0.0


def test_infeasible_hold_policy():
    params, model, clf, cbf, bounds, cfg = _setup()
    x = np.array([10.0, 20.0, 36.5])
    dec = control_step(cfg(Variant.NOMINAL, InfeasibilityPolicy.HOLD), model,
                       clf, cbf, bounds, 0.0, x, np.zeros(3),
                       prev_u=np.array([-2000.0]))
    assert dec.status is QpStatus.INFEASIBLE
    assert dec.u[0] == -2000.0                           # held input
    assert dec.delta == 0.0
    assert dec.multipliers is None and dec.active_set == ()
    assert dec.cbf_row < 0.0                             # honest residual


def test_warm_start_consistency():
    params, model, clf, cbf, bounds, cfg = _setup()
    x = np.array([18.0, 20.0, 36.5])
    cold = control_step(cfg(Variant.ADAPTIVE_ROBUST), model, clf, cbf, bounds,
                        0.05, x, np.zeros(3))
    warm = control_step(cfg(Variant.ADAPTIVE_ROBUST), model, clf, cbf, bounds,
                        0.05, x, np.zeros(3), prev_u=cold.u)
    assert abs(warm.u[0] - cold.u[0]) <= 1e-9 * (1 + abs(cold.u[0]))


def test_controller_config_validation():
    with pytest.raises(ConfigurationError):
        ControllerConfig(H=lambda x: np.eye(1), p=0.0,
                         variant=Variant.NOMINAL, T_qp=0.01)
    with pytest.raises(ConfigurationError):
        ControllerConfig(H=lambda x: np.eye(1), p=1.0,
                         variant=Variant.NOMINAL, T_qp=0.0)
