"""Lyapunov and barrier certificates and their robust constraint terms.

For a candidate control Lyapunov function V and barrier function h, the
controller works with the uncertainty-aware expressions

    psi_V = LfV + LgV u + Vx . d_hat + ||Vx|| gamma
    psi_h = LfH + LgH u + hx . d_hat - ||hx|| gamma

which upper/lower-bound the true V' and h' whenever the estimate is within
gamma of the truth (Cauchy-Schwarz).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .model import Box, ControlAffineModel

ScalarFn = Callable[[np.ndarray], float]
GradFn = Callable[[np.ndarray], np.ndarray]
ClassKFn = Callable[[float], float]


@dataclass(frozen=True, eq=False)
class Clf:
    """Control Lyapunov function: value, gradient, and class-K gain alpha."""

    value: ScalarFn
    grad: GradFn
    alpha: ClassKFn


@dataclass(frozen=True, eq=False)
class Cbf:
    """Control barrier function: value, gradient, and extended class-K gain beta."""

    value: ScalarFn
    grad: GradFn
    beta: ClassKFn


@dataclass(frozen=True, eq=False)
class LieData:
    """Certificate values and Lie derivatives at one (t, x)."""

    V: float
    Vx: np.ndarray
    LfV: float
    LgV: np.ndarray   # shape (m,)
    h: float
    hx: np.ndarray
    LfH: float
    LgH: np.ndarray   # shape (m,)


def lie_data(clf: Clf, cbf: Cbf, model: ControlAffineModel, t: float, x: np.ndarray) -> LieData:
    x = np.asarray(x, dtype=float)
    fx = model.f(t, x)
    gx = model.g(x)
    Vx = np.asarray(clf.grad(x), dtype=float)
    hx = np.asarray(cbf.grad(x), dtype=float)
    return LieData(
        V=float(clf.value(x)),
        Vx=Vx,
        LfV=float(Vx @ fx),
        LgV=Vx @ gx,
        h=float(cbf.value(x)),
        hx=hx,
        LfH=float(hx @ fx),
        LgH=hx @ gx,
    )


def psi_v(lie: LieData, u: np.ndarray, d_hat: np.ndarray, gamma: float) -> float:
    """Upper bound on V' under estimate d_hat with error radius gamma."""
    u = np.asarray(u, dtype=float)
    return float(lie.LfV + lie.LgV @ u + lie.Vx @ d_hat
                 + np.linalg.norm(lie.Vx) * gamma)


def psi_h(lie: LieData, u: np.ndarray, d_hat: np.ndarray, gamma: float) -> float:
    """Lower bound on h' under estimate d_hat with error radius gamma."""
    u = np.asarray(u, dtype=float)
    return float(lie.LfH + lie.LgH @ u + lie.hx @ d_hat
                 - np.linalg.norm(lie.hx) * gamma)


@dataclass(frozen=True, eq=False)
class CertificateReport:
    clf_ok: bool
    cbf_ok: bool
    clf_worst_margin: float
    cbf_worst_margin: float
    clf_witness: np.ndarray
    cbf_witness: np.ndarray
    points: np.ndarray        # (P, n)
    clf_margins: np.ndarray   # (P,)
    cbf_margins: np.ndarray   # (P,)

    @property
    def ok(self) -> bool:
        return self.clf_ok and self.cbf_ok

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            n = self.points.shape[1]
            w.writerow([f"x{i}" for i in range(n)] + ["clf_margin", "cbf_margin"])
            for p, cm, bm in zip(self.points, self.clf_margins, self.cbf_margins):
                w.writerow([format(v, ".17g") for v in p]
                           + [format(cm, ".17g"), format(bm, ".17g")])


def verify_robust_certificates(
    clf: Clf,
    cbf: Cbf,
    model: ControlAffineModel,
    theta: float,
    *,
    grid_density: int = 50,
    region: Box | None = None,
    t: float = 0.0,
    tol: float = 1e-12,
) -> CertificateReport:
    """Grid check of the worst-case certificate conditions over a box:

        min_u (LfV + LgV u) + ||Vx|| theta <= -alpha(V)      (CLF)
        max_u (LfH + LgH u) - ||hx|| theta >= -beta(h)       (CBF)

    with u ranging over the input-box vertices (exact for box inputs since
    both sides are affine in u). Margins are signed so that >= 0 means the
    condition holds at that grid point. A sampled diagnostic, not a proof.
    """
    if theta < 0:
        raise ConfigurationError(f"theta must be >= 0, got {theta}")
    box = model.state_box if region is None else region
    if box.dim != model.n:
        raise ConfigurationError("verification region dimension does not match the model")
    pts = box.grid(grid_density)
    u_verts = model.input_box.vertices()
    P = pts.shape[0]
    clf_margins = np.empty(P)
    cbf_margins = np.empty(P)
    for idx in range(P):
        x = pts[idx]
        ld = lie_data(clf, cbf, model, t, x)
        lgv = ld.LgV @ u_verts.T
        lgh = ld.LgH @ u_verts.T
        clf_lhs = ld.LfV + float(np.min(lgv)) + float(np.linalg.norm(ld.Vx)) * theta
        cbf_lhs = ld.LfH + float(np.max(lgh)) - float(np.linalg.norm(ld.hx)) * theta
        clf_margins[idx] = -clf.alpha(ld.V) - clf_lhs
        cbf_margins[idx] = cbf_lhs + cbf.beta(ld.h)
    i_clf = int(np.argmin(clf_margins))
    i_cbf = int(np.argmin(cbf_margins))
    return CertificateReport(
        clf_ok=bool(clf_margins[i_clf] >= -tol),
        cbf_ok=bool(cbf_margins[i_cbf] >= -tol),
        clf_worst_margin=float(clf_margins[i_clf]),
        cbf_worst_margin=float(cbf_margins[i_cbf]),
        clf_witness=pts[i_clf].copy(),
        cbf_witness=pts[i_cbf].copy(),
        points=pts,
        clf_margins=clf_margins,
        cbf_margins=cbf_margins,
    )


def validate_certificates(
    clf: Clf,
    cbf: Cbf,
    model: ControlAffineModel,
    *,
    grid_density: int = 6,
    scale_samples=(1e-3, 0.1, 1.0, 10.0),
) -> list[str]:
    """Cheap sampled sanity checks (nonnegativity of V, monotone class-K
    gains, nontrivial LgH). Returns a list of complaints, empty when clean."""
    problems = []
    pts = model.state_box.grid(grid_density)
    if any(clf.value(x) < -1e-12 for x in pts):
        problems.append("V takes negative values on the state box")
    if abs(clf.alpha(0.0)) > 1e-12 or abs(cbf.beta(0.0)) > 1e-12:
        problems.append("alpha(0) and beta(0) must be zero")
    for fn, name in ((clf.alpha, "alpha"), (cbf.beta, "beta")):
        vals = [fn(s) for s in scale_samples]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            problems.append(f"{name} is not strictly increasing on sampled arguments")
    if all(np.allclose(cbf.grad(x) @ model.g(x), 0.0) for x in pts):
        problems.append("LgH vanishes at every sampled point; the barrier has no control authority")
    return problems
