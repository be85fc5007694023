"""Piecewise-constant estimator of the unknown dynamics term.

A state predictor is integrated alongside the plant,

    x_hat' = f(t, x) + g(x) u + d_hat - a (x_hat - x),    x_hat(0) = x(0),

and at every sampling instant iT the held estimate is refreshed from the
prediction error x_tilde = x_hat - x:

    d_hat(iT) = -(a / (e^{aT} - 1)) * x_tilde(iT).

d_hat is right-continuous and constant on [iT, (i+1)T); it is identically
zero on [0, T) because x_tilde(0) = 0. expm1 keeps the gain accurate for
the tiny aT this is typically run at.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractViolationError
from .model import ControlAffineModel


@dataclass
class EstimatorState:
    """Mutable estimator state owned by a single simulation."""

    x_hat: np.ndarray
    d_hat: np.ndarray
    a: float
    T: float
    next_sample_time: float
    sample_index: int = 0
    gain: float = field(init=False, repr=False)

    def __post_init__(self):
        # -a / (e^{aT} - 1), precomputed once.
        self.gain = -self.a / math.expm1(self.a * self.T)


def init_estimator(x0: np.ndarray, a: float, T: float) -> EstimatorState:
    if a <= 0 or not np.isfinite(a):
        raise ConfigurationError(f"estimator gain must be > 0, got {a}")
    if T <= 0 or not np.isfinite(T):
        raise ConfigurationError(f"sampling time must be > 0, got {T}")
    x0 = np.asarray(x0, dtype=float)
    return EstimatorState(
        x_hat=x0.copy(),
        d_hat=np.zeros(x0.size),
        a=float(a),
        T=float(T),
        next_sample_time=float(T),
    )


def predictor_derivative(
    est: EstimatorState,
    model: ControlAffineModel,
    t: float,
    x: np.ndarray,
    u: np.ndarray,
) -> np.ndarray:
    """x_hat' given the measured state x; the drift terms are evaluated at x,
    so they cancel exactly against the plant in the error dynamics."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != est.x_hat.shape:
        raise ContractViolationError("measured state dimension mismatch")
    return model.f(t, x) + model.g(x) @ u + est.d_hat - est.a * (est.x_hat - x)


def sample_update(est: EstimatorState, x: np.ndarray, t: float) -> EstimatorState:
    """Refresh d_hat from the prediction error at the sampling instant t,
    which must be the scheduled one ((sample_index + 1) * T). Mutates and
    returns est."""
    x = np.asarray(x, dtype=float)
    if x.shape != est.x_hat.shape:
        raise ContractViolationError("measured state dimension mismatch")
    scheduled = (est.sample_index + 1) * est.T
    if abs(t - scheduled) > 1e-9 * est.T:
        raise ContractViolationError(
            f"sample_update called at t={t!r}, scheduled instant is {scheduled!r}")
    est.d_hat = est.gain * (est.x_hat - x)
    est.sample_index += 1
    est.next_sample_time = (est.sample_index + 1) * est.T
    return est
