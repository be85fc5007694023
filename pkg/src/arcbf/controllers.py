"""Pointwise min-norm controllers: a soft CLF row, a hard CBF row, and input
bounds assembled into a small QP over z = (u, delta).

Four variants differ only in the uncertainty terms (c_V, c_h) added to the
two certificate rows:

    TRUE_UNCERTAINTY    Vx . d,        hx . d          (simulation ideal)
    NOMINAL             0,             0               (uncertainty ignored)
    ROBUST_WORST_CASE   +||Vx|| theta, -||hx|| theta   (static worst case)
    ADAPTIVE_ROBUST     Vx . d_hat + ||Vx|| gamma,
                        hx . d_hat - ||hx|| gamma      (estimate + error bound)

Before the first estimator sample (t < T) the adaptive variant has no
estimate and falls back to gamma = theta, which makes its rows identical to
ROBUST_WORST_CASE with d_hat = 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .bounds import UncertaintyBounds
from .certificates import Cbf, Clf, LieData, lie_data
from .errors import ConfigurationError, QpInfeasibleError
from .model import ControlAffineModel
from .qp import DenseQp, QpStatus, solve_qp


class Variant(Enum):
    TRUE_UNCERTAINTY = "true_uncertainty"
    NOMINAL = "nominal"
    ROBUST_WORST_CASE = "robust_worst_case"
    ADAPTIVE_ROBUST = "adaptive_robust"


class InfeasibilityPolicy(Enum):
    ERROR = "error"
    HOLD = "hold"


@dataclass(frozen=True, eq=False)
class ControllerConfig:
    H: Callable[[np.ndarray], np.ndarray]   # input cost, symmetric PD (m, m)
    p: float                                # slack penalty
    variant: Variant
    T_qp: float                             # control hold period
    infeasibility: InfeasibilityPolicy = InfeasibilityPolicy.ERROR

    def __post_init__(self):
        if self.p <= 0:
            raise ConfigurationError(f"slack penalty must be > 0, got {self.p}")
        if self.T_qp <= 0:
            raise ConfigurationError(f"T_qp must be > 0, got {self.T_qp}")


@dataclass(frozen=True, eq=False)
class ControlDecision:
    u: np.ndarray
    delta: float
    clf_row: float            # <= 0 when the soft row is satisfied at (u, delta)
    cbf_row: float            # >= 0 when the hard row holds at u
    status: QpStatus
    multipliers: np.ndarray | None
    active_set: tuple[int, ...]


def uncertainty_terms(
    variant: Variant,
    lie: LieData,
    d_hat: np.ndarray,
    gamma: float,
    theta: float,
    d_true: np.ndarray | None = None,
) -> tuple[float, float]:
    """(c_V, c_h) for the requested variant."""
    if variant is Variant.TRUE_UNCERTAINTY:
        if d_true is None:
            raise ConfigurationError("TRUE_UNCERTAINTY requires the true disturbance")
        return float(lie.Vx @ d_true), float(lie.hx @ d_true)
    if variant is Variant.NOMINAL:
        return 0.0, 0.0
    if variant is Variant.ROBUST_WORST_CASE:
        nv = float(np.linalg.norm(lie.Vx))
        nh = float(np.linalg.norm(lie.hx))
        return nv * theta, -nh * theta
    nv = float(np.linalg.norm(lie.Vx))
    nh = float(np.linalg.norm(lie.hx))
    return (float(lie.Vx @ d_hat) + nv * gamma,
            float(lie.hx @ d_hat) - nh * gamma)


def assemble_qp(
    cfg: ControllerConfig,
    clf: Clf,
    cbf: Cbf,
    lie: LieData,
    input_box,
    x: np.ndarray,
    c_v: float,
    c_h: float,
) -> DenseQp:
    """Rows, in order: CLF (soft), CBF (hard), input upper bounds, input
    lower bounds. Variables z = (u_1..u_m, delta)."""
    m = lie.LgV.size
    H = np.atleast_2d(np.asarray(cfg.H(x), dtype=float))
    Q = np.zeros((m + 1, m + 1))
    Q[:m, :m] = H
    Q[m, m] = 2.0 * cfg.p
    c = np.zeros(m + 1)

    A = np.zeros((2 + 2 * m, m + 1))
    b = np.zeros(2 + 2 * m)
    # LfV + LgV u + c_v + alpha(V) - delta <= 0
    A[0, :m] = lie.LgV
    A[0, m] = -1.0
    b[0] = -(lie.LfV + c_v + clf.alpha(lie.V))
    # -(LfH + LgH u + c_h + beta(h)) <= 0
    A[1, :m] = -lie.LgH
    b[1] = lie.LfH + c_h + cbf.beta(lie.h)
    #  u <= hi,  -u <= -lo
    A[2:2 + m, :m] = np.eye(m)
    b[2:2 + m] = input_box.upper
    A[2 + m:, :m] = -np.eye(m)
    b[2 + m:] = -input_box.lower
    return DenseQp.make(Q, c, A, b)


def constraint_rows(
    variant: Variant,
    clf: Clf,
    cbf: Cbf,
    lie: LieData,
    u: np.ndarray,
    delta: float,
    d_hat: np.ndarray,
    gamma: float,
    theta: float,
    d_true: np.ndarray | None = None,
) -> tuple[float, float]:
    """Residuals of the two certificate rows at a given (u, delta), using the
    same uncertainty terms the variant enforces. clf_row <= 0 and
    cbf_row >= 0 mean satisfied."""
    c_v, c_h = uncertainty_terms(variant, lie, d_hat, gamma, theta, d_true)
    u = np.asarray(u, dtype=float)
    clf_row = lie.LfV + float(lie.LgV @ u) + c_v + clf.alpha(lie.V) - delta
    cbf_row = lie.LfH + float(lie.LgH @ u) + c_h + cbf.beta(lie.h)
    return clf_row, cbf_row


def effective_gamma(variant: Variant, bounds: UncertaintyBounds, t: float) -> float:
    """Error radius used by the adaptive variant at time t: before the first
    sample there is no estimate, so the static worst case applies."""
    if variant is Variant.ADAPTIVE_ROBUST and t < bounds.T:
        return bounds.theta
    return bounds.gamma_T


def control_step(
    cfg: ControllerConfig,
    model: ControlAffineModel,
    clf: Clf,
    cbf: Cbf,
    bounds: UncertaintyBounds,
    t: float,
    x: np.ndarray,
    d_hat: np.ndarray,
    prev_u: np.ndarray | None = None,
) -> ControlDecision:
    """Solve one pointwise QP at the measured state. prev_u seeds a feasible
    start (the soft row can always absorb the CLF residual)."""
    x = np.asarray(x, dtype=float)
    lie = lie_data(clf, cbf, model, t, x)
    gamma = effective_gamma(cfg.variant, bounds, t)
    d_true = model.d_true(t, x) if cfg.variant is Variant.TRUE_UNCERTAINTY else None
    c_v, c_h = uncertainty_terms(cfg.variant, lie, d_hat, gamma, bounds.theta, d_true)
    qp = assemble_qp(cfg, clf, cbf, lie, model.input_box, x, c_v, c_h)

    start = None
    u_seed = model.input_box.clamp(prev_u if prev_u is not None else np.zeros(model.m))
    clf_lhs = lie.LfV + float(lie.LgV @ u_seed) + c_v + clf.alpha(lie.V)
    cand = np.concatenate([u_seed, [max(0.0, clf_lhs) + 1.0]])
    if qp.violation(cand) <= 0.0:
        start = cand

    sol = solve_qp(qp, start=start)
    if sol.status is QpStatus.INFEASIBLE:
        if cfg.infeasibility is InfeasibilityPolicy.ERROR:
            raise QpInfeasibleError(
                f"controller QP infeasible at t={t:.6g} (variant {cfg.variant.value})",
                t=t, x=x.copy())
        u = model.input_box.clamp(prev_u if prev_u is not None else np.zeros(model.m))
        clf_row, cbf_row = constraint_rows(
            cfg.variant, clf, cbf, lie, u, 0.0, d_hat, gamma, bounds.theta, d_true)
        return ControlDecision(u, 0.0, clf_row, cbf_row, QpStatus.INFEASIBLE, None, ())

    u = sol.z[:model.m]
    delta = float(sol.z[model.m])
    clf_row, cbf_row = constraint_rows(
        cfg.variant, clf, cbf, lie, u, delta, d_hat, gamma, bounds.theta, d_true)
    return ControlDecision(u, delta, clf_row, cbf_row, sol.status,
                           sol.multipliers, sol.active_set)
