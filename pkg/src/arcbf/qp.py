"""Dense strictly-convex QP solver for small problems.

    minimize    0.5 z' Q z + c' z
    subject to  A z <= b

Q must be symmetric positive definite. The solver is a primal active-set
method: a feasible point is produced by an iteratively re-centered phase-1
sub-QP (minimize constraint violation), then constraints are added/dropped
with smallest-index (Bland) tie-breaking until the KKT conditions hold.
Everything is deterministic: identical inputs give bit-identical outputs.

`brute_force_oracle` solves the same problem by enumerating every active-set
candidate in closed form; it shares no iterative machinery with `solve_qp`
and exists so the two can be checked against each other.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractViolationError, OracleScopeError

# KKT tolerances used both inside the solver and by its tests.
STATIONARITY_TOL = 1e-8     # relative to 1 + ||c||
FEASIBILITY_TOL = 1e-9      # absolute on A z - b
MULTIPLIER_TOL = 1e-10      # lambda >= -MULTIPLIER_TOL

_MAX_ITER_FACTOR = 50


class QpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class DenseQp:
    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    @staticmethod
    def make(Q, c, A=None, b=None) -> "DenseQp":
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        c = np.atleast_1d(np.asarray(c, dtype=float))
        d = c.size
        if Q.shape != (d, d):
            raise ContractViolationError(f"Q must be ({d},{d}), got {Q.shape}")
        if A is None:
            A = np.zeros((0, d))
            b = np.zeros(0)
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.shape[1] != d or A.shape[0] != b.size:
            raise ContractViolationError(
                f"constraints must be A ({b.size},{d}) and b ({b.size},), "
                f"got A {A.shape}, b {b.shape}")
        if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(Q).max())):
            raise ContractViolationError("Q must be symmetric")
        try:
            np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            raise ContractViolationError("Q must be positive definite") from None
        return DenseQp(Q, c, A, b)

    @property
    def dim(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size

    def objective(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ self.Q @ z + self.c @ z)

    def violation(self, z: np.ndarray) -> float:
        """max(A z - b), i.e. <= 0 iff z is feasible."""
        if self.n_rows == 0:
            return -np.inf
        return float(np.max(self.A @ z - self.b))


@dataclass(frozen=True, eq=False)
class QpSolution:
    z: np.ndarray | None
    status: QpStatus
    active_set: tuple[int, ...]
    multipliers: np.ndarray | None   # one per constraint row, zero off the active set


def _eq_step(Q, A, b_rows, z, c, working):
    """Solve the equality-constrained subproblem on the working set: step p
    to the point minimizing the quadratic on {A_W (z+p) = b_W}, plus
    multipliers. The constraint block re-targets b_W rather than holding
    A_W p = 0, so rounding drift off the working rows is corrected instead
    of carried along."""
    grad = Q @ z + c
    if not working:
        p = np.linalg.solve(Q, -grad)
        return p, np.zeros(0)
    AW = A[list(working)]
    k = AW.shape[0]
    d = Q.shape[0]
    kkt = np.zeros((d + k, d + k))
    kkt[:d, :d] = Q
    kkt[:d, d:] = AW.T
    kkt[d:, :d] = AW
    rhs = np.concatenate([-grad, b_rows[list(working)] - AW @ z])
    try:
        sol = np.linalg.solve(kkt, rhs)   # nonsingular: Q PD, rows independent
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    return sol[:d], sol[d:]


def _active_set_min(Q, c, A, b, z0, max_iter):
    """Primal active-set loop from a feasible z0. Returns (z, working, lam)."""
    z = np.array(z0, dtype=float)
    working: list[int] = []
    n_rows = b.size
    row_scale = (np.max(np.abs(A), axis=1, initial=0.0) if n_rows
                 else np.zeros(0))
    feas_guard = FEASIBILITY_TOL * (1.0 + float(np.max(np.abs(b), initial=0.0)))
    for _ in range(max_iter):
        p, lam = _eq_step(Q, A, b, z, c, working)
        p_scale = float(np.max(np.abs(p), initial=0.0))
        at_optimum = False
        if p_scale <= 1e-11 * (1.0 + np.max(np.abs(z), initial=0.0)):
            # Polish: p is the exact step to the working-set KKT point; take
            # it when it stays feasible. If it does not, a nearby row blocks
            # even this tiny step, so fall through to the ratio test.
            z_new = z + p
            if n_rows == 0 or float(np.max(A @ z_new - b)) <= feas_guard:
                z = z_new
                at_optimum = True
        if not at_optimum:
            # Ratio test toward the nearest blocking constraint. Rows whose
            # slope along p is at rounding level are treated as non-blocking
            # (numerically dependent on the working set).
            alpha = 1.0
            blocker = -1
            for i in range(n_rows):
                if i in working:
                    continue
                d_i = float(A[i] @ p)
                if d_i <= 1e-12 * (1.0 + row_scale[i] * p_scale):
                    continue
                step = (float(b[i]) - float(A[i] @ z)) / d_i
                if step < alpha - 1e-15:
                    alpha = max(step, 0.0)
                    blocker = i
            z = z + alpha * p
            if blocker >= 0:
                working.append(blocker)
                working.sort()
                continue
            # Full step with no blocker: z is now the working-set minimizer
            # and lam is its multiplier vector (the KKT solve is for z + p).
            at_optimum = True
        if lam.size == 0 or np.min(lam) >= -MULTIPLIER_TOL:
            return z, working, lam
        # Drop the lowest-index row with a negative multiplier (Bland).
        neg = [working[j] for j in range(len(working)) if lam[j] < -MULTIPLIER_TOL]
        working.remove(min(neg))
    raise ContractViolationError("active-set iteration did not converge")


def _phase1(A, b, d, max_iter):
    """Find a feasible point for {A z <= b} or report infeasibility.

    Minimizes 0.5*eps*||w||^2 + 0.5*s^2 over (w, s) subject to
    A (z_ref + w) - s <= b, re-centering z_ref on the previous answer so the
    regularization bias vanishes geometrically across rounds. Rows are
    normalized and eps is kept moderate so every KKT system stays well
    conditioned; the bias this costs per round is what the re-centering
    removes."""
    n_rows = b.size
    z_ref = np.zeros(d)
    norms = np.linalg.norm(A, axis=1)
    norms[norms < 1e-300] = 1.0
    An = A / norms[:, None]
    eps = 1e-6
    Q1 = np.eye(d + 1)
    Q1[:d, :d] *= eps
    c1 = np.zeros(d + 1)
    A1 = np.hstack([An, -np.ones((n_rows, 1))])
    tol = FEASIBILITY_TOL * (1.0 + float(np.max(np.abs(b), initial=0.0)))
    for _ in range(20):
        viol = float(np.max(A @ z_ref - b, initial=-np.inf))
        if viol <= tol:
            return z_ref
        b1 = (b - A @ z_ref) / norms
        w0 = np.zeros(d + 1)
        w0[d] = max(0.0, -float(np.min(b1))) + 1.0   # strictly feasible start
        w, _, _ = _active_set_min(Q1, c1, A1, b1, w0, max_iter)
        step = w[:d]
        z_ref = z_ref + step
        if float(np.max(np.abs(step), initial=0.0)) <= 1e-14 * (
                1.0 + float(np.max(np.abs(z_ref)))):
            break   # stalled: minimum-violation point reached, system infeasible
    return None if float(np.max(A @ z_ref - b, initial=-np.inf)) > tol else z_ref


def solve_qp(qp: DenseQp, start: np.ndarray | None = None) -> QpSolution:
    """Solve the QP. `start`, if given and feasible, skips phase 1; an
    infeasible start is silently ignored."""
    d = qp.dim
    max_iter = _MAX_ITER_FACTOR * (qp.n_rows + d + 1)
    if qp.n_rows == 0:
        z = np.linalg.solve(qp.Q, -qp.c)
        return QpSolution(z, QpStatus.OPTIMAL, (), np.zeros(0))

    z0 = None
    if start is not None:
        cand = np.asarray(start, dtype=float)
        if cand.shape == (d,) and qp.violation(cand) <= FEASIBILITY_TOL * (
                1.0 + float(np.max(np.abs(qp.b)))):
            z0 = cand
    if z0 is None:
        z0 = _phase1(qp.A, qp.b, d, max_iter)
        if z0 is None:
            return QpSolution(None, QpStatus.INFEASIBLE, (), None)

    z, working, lam = _active_set_min(qp.Q, qp.c, qp.A, qp.b, z0, max_iter)
    mult = np.zeros(qp.n_rows)
    for idx, lam_i in zip(working, lam):
        mult[idx] = max(lam_i, 0.0)
    return QpSolution(z, QpStatus.OPTIMAL, tuple(working), mult)


def brute_force_oracle(qp: DenseQp, max_rows: int = 12) -> QpSolution:
    """Reference solver: enumerate all 2^k active-set candidates, solve each
    equality-constrained problem in closed form, keep KKT-consistent
    candidates, return the best. Exponential; refuses k > max_rows."""
    k = qp.n_rows
    if k > max_rows:
        raise OracleScopeError(f"oracle handles at most {max_rows} rows, got {k}")
    d = qp.dim
    # Tight filters: the exact optimum's candidate set satisfies these to
    # solve precision, while a looser slack would let marginally infeasible
    # candidates undercut the true objective.
    feas_tol = 1e-9 * (1.0 + float(np.max(np.abs(qp.b), initial=0.0)))
    best = None
    for size in range(0, k + 1):
        for subset in itertools.combinations(range(k), size):
            if size == 0:
                z = np.linalg.solve(qp.Q, -qp.c)
                lam_s = np.zeros(0)
            else:
                AS = qp.A[list(subset)]
                kkt = np.zeros((d + size, d + size))
                kkt[:d, :d] = qp.Q
                kkt[:d, d:] = AS.T
                kkt[d:, :d] = AS
                rhs = np.concatenate([-qp.c, qp.b[list(subset)]])
                sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
                if np.max(np.abs(kkt @ sol - rhs)) > 1e-7 * (1.0 + np.max(np.abs(rhs))):
                    continue   # singular/inconsistent candidate
                z, lam_s = sol[:d], sol[d:]
            if qp.violation(z) > feas_tol:
                continue
            if lam_s.size and np.min(lam_s) < -1e-9:
                continue
            obj = qp.objective(z)
            if best is None or obj < best[0] - 1e-12:
                mult = np.zeros(k)
                for idx, lam_i in zip(subset, lam_s):
                    mult[idx] = max(float(lam_i), 0.0)
                best = (obj, z, subset, mult)
    if best is None:
        return QpSolution(None, QpStatus.INFEASIBLE, (), None)
    _, z, subset, mult = best
    return QpSolution(z, QpStatus.OPTIMAL, tuple(subset), mult)


def kkt_residuals(qp: DenseQp, sol: QpSolution) -> dict:
    """Diagnostics for tests: stationarity / feasibility / complementarity."""
    z, lam = sol.z, sol.multipliers
    grad = qp.Q @ z + qp.c + (qp.A.T @ lam if qp.n_rows else 0.0)
    comp = 0.0
    if qp.n_rows:
        comp = float(np.max(np.abs(lam * (qp.A @ z - qp.b))))
    return {
        "stationarity": float(np.max(np.abs(grad))),
        "feasibility": max(qp.violation(z), 0.0),
        "min_multiplier": float(np.min(lam)) if qp.n_rows else 0.0,
        "complementarity": comp,
    }
