"""Multirate closed-loop simulation.

The plant and the estimator's state predictor are integrated jointly with
fixed-step classical RK4. Three clocks, all tied to the estimator period T:

    integration step   h = T / substeps
    estimator samples  every T
    controller hold    every T_qp = q T (zero-order hold in between)

At a coincident instant the estimator is refreshed first, then the
controller (so it sees the freshest estimate), then the row is logged;
every logged column is therefore the right-continuous value at t. Traces
are logged on the T grid and are bit-reproducible for identical inputs.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace, field
from typing import Optional

import numpy as np

from .bounds import UncertaintyBounds
from .certificates import Cbf, Clf, lie_data
from .controllers import (ControlDecision, ControllerConfig, Variant,
                          constraint_rows, control_step, effective_gamma)
from .errors import (AdmissibleSetExit, ConfigurationError, InvariantViolation)
from .estimator import init_estimator, sample_update
from .model import ControlAffineModel


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    T: float
    substeps: int = 10
    seed: int = 0
    assertions_on: bool = False

    def __post_init__(self):
        if self.t_end <= 0 or self.T <= 0:
            raise ConfigurationError("t_end and T must be > 0")
        if self.substeps < 1:
            raise ConfigurationError("substeps must be >= 1")


def _grid_multiple(big: float, small: float, name: str) -> int:
    q = round(big / small)
    if q < 1 or abs(big - q * small) > 1e-9 * small:
        raise ConfigurationError(f"{name} ({big}) must be a positive integer multiple of T ({small})")
    return q


@dataclass(eq=False)
class SimulationTrace:
    variant: str
    t: np.ndarray
    x: np.ndarray          # (N+1, n)
    u: np.ndarray          # (N+1, m)
    delta: np.ndarray
    d_true: np.ndarray     # (N+1, n)
    d_hat: np.ndarray      # (N+1, n)
    est_err_norm: np.ndarray
    h: np.ndarray
    V: np.ndarray
    clf_row: np.ndarray
    cbf_row: np.ndarray
    status: list[str]
    events: list[tuple[float, str]] = field(default_factory=list)
    decisions: list[tuple[float, ControlDecision]] = field(default_factory=list)
    T: float = 0.0
    T_qp: float = 0.0
    gamma_T: float = 0.0
    theta: float = 0.0

    def __len__(self) -> int:
        return self.t.size

    def columns(self) -> list[str]:
        n = self.x.shape[1]
        m = self.u.shape[1]
        return (["t"] + [f"x{i}" for i in range(n)] + [f"u{i}" for i in range(m)]
                + ["delta"] + [f"d_true_{i}" for i in range(n)]
                + [f"d_hat_{i}" for i in range(n)]
                + ["est_err_norm", "h", "V", "clf_row", "cbf_row", "status"])

    def write_csv(self, path) -> None:
        """17-significant-digit CSV; floats re-parse to the in-memory values."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        g = lambda v: format(v, ".17g")
        for i in range(self.t.size):
            row = ([g(self.t[i])] + [g(v) for v in self.x[i]] + [g(v) for v in self.u[i]]
                   + [g(self.delta[i])] + [g(v) for v in self.d_true[i]]
                   + [g(v) for v in self.d_hat[i]]
                   + [g(self.est_err_norm[i]), g(self.h[i]), g(self.V[i]),
                      g(self.clf_row[i]), g(self.cbf_row[i]), self.status[i]])
            w.writerow(row)
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())

    def summary(self) -> dict:
        tgeT = self.t >= self.T - 1e-12 * max(self.T, 1.0)
        track = np.sqrt(np.maximum(self.V, 0.0))
        return {
            "variant": self.variant,
            "min_h": float(np.min(self.h)),
            "max_tracking_err": float(np.max(track)),
            "integrated_tracking_err": float(np.trapezoid(self.V, self.t)),
            "cbf_active_fraction": float(np.mean(self.cbf_row <= 1e-6)),
            "max_est_err_t_ge_T": float(np.max(self.est_err_norm[tgeT]))
            if np.any(tgeT) else 0.0,
            "gamma_T": self.gamma_T,
            "n_infeasible": sum(1 for _, kind in self.events if kind == "infeasible-hold"),
        }


def read_trace_csv(path) -> dict:
    """Inverse of write_csv: float columns as numpy arrays, status as a list."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    out: dict = {}
    for j, name in enumerate(header):
        col = [r[j] for r in data]
        out[name] = col if name == "status" else np.array([float(v) for v in col])
    return out


def run_simulation(
    model: ControlAffineModel,
    clf: Optional[Clf],
    cbf: Optional[Cbf],
    bounds: UncertaintyBounds,
    controller_cfg: Optional[ControllerConfig],
    sim_cfg: SimConfig,
    x0: np.ndarray,
) -> SimulationTrace:
    """Closed-loop run from x0. With controller_cfg=None the input is held at
    the clamped zero vector (open-loop estimation run). Raises
    AdmissibleSetExit if the state leaves the admissible box and, when
    assertions are enabled, InvariantViolation if a post-run check fails."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.n,):
        raise ConfigurationError(f"x0 must have shape ({model.n},)")
    if not model.state_box.contains(x0, tol=1e-12):
        raise ConfigurationError("x0 is outside the admissible state box")
    if abs(bounds.T - sim_cfg.T) > 1e-12 * sim_cfg.T:
        raise ConfigurationError("bounds were derived for a different sampling time T")
    N = _grid_multiple(sim_cfg.t_end, sim_cfg.T, "t_end")
    if controller_cfg is not None:
        q = _grid_multiple(controller_cfg.T_qp, sim_cfg.T, "T_qp")
    else:
        q = N + 1   # never triggers
    T = sim_cfg.T
    n, m = model.n, model.m
    h_step = T / sim_cfg.substeps
    substeps = sim_cfg.substeps

    est = init_estimator(x0, bounds.a, T)
    x = x0.copy()
    x_hat = x0.copy()
    u = model.input_box.clamp(np.zeros(m))
    delta = 0.0
    status = "open-loop"
    variant = controller_cfg.variant if controller_cfg is not None else None

    cols_t = np.empty(N + 1)
    cols_x = np.empty((N + 1, n))
    cols_u = np.empty((N + 1, m))
    cols_delta = np.empty(N + 1)
    cols_dt = np.empty((N + 1, n))
    cols_dh = np.empty((N + 1, n))
    cols_err = np.empty(N + 1)
    cols_h = np.empty(N + 1)
    cols_V = np.empty(N + 1)
    cols_clf = np.empty(N + 1)
    cols_cbf = np.empty(N + 1)
    statuses: list[str] = []
    events: list[tuple[float, str]] = []
    decisions: list[tuple[float, ControlDecision]] = []

    f, g, d_fn = model.f, model.g, model.d_true
    a_gain = bounds.a

    def trace_slice(rows: int) -> SimulationTrace:
        return SimulationTrace(
            variant=variant.value if variant is not None else "open-loop",
            t=cols_t[:rows].copy(), x=cols_x[:rows].copy(), u=cols_u[:rows].copy(),
            delta=cols_delta[:rows].copy(), d_true=cols_dt[:rows].copy(),
            d_hat=cols_dh[:rows].copy(), est_err_norm=cols_err[:rows].copy(),
            h=cols_h[:rows].copy(), V=cols_V[:rows].copy(),
            clf_row=cols_clf[:rows].copy(), cbf_row=cols_cbf[:rows].copy(),
            status=list(statuses), events=list(events), decisions=list(decisions),
            T=T, T_qp=controller_cfg.T_qp if controller_cfg is not None else 0.0,
            gamma_T=bounds.gamma_T, theta=bounds.theta)

    for i in range(N + 1):
        t = i * T
        if i > 0:
            est.x_hat = x_hat
            sample_update(est, x, t)
        if controller_cfg is not None and i % q == 0 and i < N:
            dec = control_step(controller_cfg, model, clf, cbf, bounds, t, x,
                               est.d_hat, prev_u=u)
            u = dec.u
            delta = dec.delta
            status = dec.status.value
            decisions.append((t, dec))
            if dec.status.value == "infeasible":
                events.append((t, "infeasible-hold"))

        d_now = d_fn(t, x)
        cols_t[i] = t
        cols_x[i] = x
        cols_u[i] = u
        cols_delta[i] = delta
        cols_dt[i] = d_now
        cols_dh[i] = est.d_hat
        cols_err[i] = float(np.linalg.norm(est.d_hat - d_now))
        if clf is not None and cbf is not None:
            lie = lie_data(clf, cbf, model, t, x)
            cols_h[i] = lie.h
            cols_V[i] = lie.V
            if variant is not None:
                gam = effective_gamma(variant, bounds, t)
                d_for_rows = d_now if variant is Variant.TRUE_UNCERTAINTY else None
                row_v, row_h = constraint_rows(variant, clf, cbf, lie, u, delta,
                                               est.d_hat, gam, bounds.theta, d_for_rows)
                cols_clf[i] = row_v
                cols_cbf[i] = row_h
            else:
                cols_clf[i] = 0.0
                cols_cbf[i] = 0.0
        else:
            cols_h[i] = 0.0
            cols_V[i] = 0.0
            cols_clf[i] = 0.0
            cols_cbf[i] = 0.0
        statuses.append(status)

        if not model.state_box.contains(x, tol=1e-9):
            events.append((t, "exited-admissible-set"))
            raise AdmissibleSetExit(
                f"state left the admissible box at t={t:.6g}", t=t, x=x.copy(),
                trace=trace_slice(i + 1))

        if i == N:
            break

        # Integrate [t, t+T) with u and d_hat held.
        d_hat = est.d_hat
        y = np.concatenate([x, x_hat])
        tau = t
        for _ in range(substeps):
            k1 = _joint_deriv(f, g, d_fn, tau, y, u, d_hat, a_gain, n)
            k2 = _joint_deriv(f, g, d_fn, tau + 0.5 * h_step, y + (0.5 * h_step) * k1,
                              u, d_hat, a_gain, n)
            k3 = _joint_deriv(f, g, d_fn, tau + 0.5 * h_step, y + (0.5 * h_step) * k2,
                              u, d_hat, a_gain, n)
            k4 = _joint_deriv(f, g, d_fn, tau + h_step, y + h_step * k3,
                              u, d_hat, a_gain, n)
            y = y + (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            tau += h_step
        x = y[:n].copy()
        x_hat = y[n:].copy()

    trace = trace_slice(N + 1)
    if sim_cfg.assertions_on:
        violations = check_trace_invariants(trace, model, clf, cbf, bounds, variant)
        if violations:
            raise InvariantViolation(violations)
    return trace


def _joint_deriv(f, g, d_fn, t, y, u, d_hat, a_gain, n):
    """(plant, predictor) stacked derivative; the drift is evaluated once so
    it cancels exactly in the prediction-error dynamics."""
    x = y[:n]
    base = f(t, x) + g(x) @ u
    d = d_fn(t, x)
    return np.concatenate([base + d, base + d_hat - a_gain * (y[n:] - x)])


def check_trace_invariants(
    trace: SimulationTrace,
    model: ControlAffineModel,
    clf: Optional[Clf],
    cbf: Optional[Cbf],
    bounds: UncertaintyBounds,
    variant: Optional[Variant],
) -> list[str]:
    """Post-run checks on the logged grid. Returns one message per failure.

    * worst-case magnitude: ||d(t, x(t))|| <= theta and ||x'(t)|| <= phi
    * estimation error: <= theta before the first sample, <= gamma(T) after
    * for the adaptive variant: wherever the robust CBF row held, the same
      expression under the true uncertainty holds too
    """
    out = []
    tol_rel = 1e-9
    d_norm = np.linalg.norm(trace.d_true, axis=1)
    bad = d_norm > bounds.theta * (1.0 + tol_rel) + 1e-12
    if np.any(bad):
        i = int(np.argmax(d_norm))
        out.append(f"||d|| exceeds theta={bounds.theta:.6g}: "
                   f"max {d_norm[i]:.6g} at t={trace.t[i]:.6g}")
    speed = np.empty(len(trace))
    for i in range(len(trace)):
        speed[i] = float(np.linalg.norm(
            model.rhs(trace.t[i], trace.x[i], trace.u[i], trace.d_true[i])))
    if np.any(speed > bounds.phi * (1.0 + tol_rel) + 1e-12):
        i = int(np.argmax(speed))
        out.append(f"||x'|| exceeds phi={bounds.phi:.6g}: "
                   f"max {speed[i]:.6g} at t={trace.t[i]:.6g}")

    before = trace.t < trace.T - 1e-12
    slack = 1e-6
    if np.any(before) and np.any(trace.est_err_norm[before] > bounds.theta + slack):
        out.append("estimation error exceeds theta before the first sample")
    after = ~before
    if np.any(after):
        worst = float(np.max(trace.est_err_norm[after] - bounds.gamma_T))
        if worst > slack:
            i = int(np.argmax(trace.est_err_norm * after))
            out.append(f"estimation error exceeds gamma(T)={bounds.gamma_T:.6g} "
                       f"by {worst:.3g} at t={trace.t[i]:.6g}")

    if variant is Variant.ADAPTIVE_ROBUST and clf is not None and cbf is not None:
        for i in range(len(trace)):
            if trace.t[i] < trace.T - 1e-12 or trace.cbf_row[i] < 0.0:
                continue
            lie = lie_data(clf, cbf, model, trace.t[i], trace.x[i])
            true_row = (lie.LfH + float(lie.LgH @ trace.u[i])
                        + float(lie.hx @ trace.d_true[i]) + cbf.beta(lie.h))
            if true_row < -1e-9:
                out.append(
                    f"robust CBF row held but the true-uncertainty row is "
                    f"{true_row:.3g} at t={trace.t[i]:.6g}")
                break
    return out


def compare_variants(
    model: ControlAffineModel,
    clf: Clf,
    cbf: Cbf,
    bounds: UncertaintyBounds,
    base_cfg: ControllerConfig,
    sim_cfg: SimConfig,
    x0: np.ndarray,
    variants=(Variant.TRUE_UNCERTAINTY, Variant.NOMINAL,
              Variant.ROBUST_WORST_CASE, Variant.ADAPTIVE_ROBUST),
) -> dict[Variant, SimulationTrace]:
    """Run the same scenario once per controller variant."""
    out = {}
    for v in variants:
        cfg = replace(base_cfg, variant=v)
        out[v] = run_simulation(model, clf, cbf, bounds, cfg, sim_cfg, x0)
    return out
