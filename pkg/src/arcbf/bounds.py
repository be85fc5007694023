"""Worst-case constants for the unknown dynamics term and the estimation
error bound of the piecewise-constant estimator.

    theta            worst-case magnitude of d over the admissible box
    phi              worst-case speed of the state, max ||f + g u|| + theta
    eta              worst-case rate of change of d along trajectories,
                     l_t + l_d * phi
    gamma(T)         estimation error bound after the first sampling interval,
                     2 sqrt(n) eta T + sqrt(n) (1 - e^{-aT}) theta

theta/phi/eta computed from Lipschitz constants over a large box are often far
more conservative than a direct bound on d itself, so all three can be
overridden explicitly in derive_bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .model import Box, ControlAffineModel, LipschitzData


def max_norm_over_box(box: Box) -> float:
    """max ||x||_2 over an axis-aligned box; attained at a vertex because the
    norm is convex."""
    return float(max(np.linalg.norm(v) for v in box.vertices()))


def compute_theta(lip: LipschitzData, state_box: Box) -> float:
    """Worst-case ||d(t,x)|| over the box: l_d * max ||x|| + b_d."""
    return lip.l_d * max_norm_over_box(state_box) + lip.b_d


def compute_phi(
    model: ControlAffineModel,
    theta: float,
    grid_density: int = 50,
    times=(0.0,),
) -> float:
    """Worst-case ||x'||: grid max of ||f(t,x) + g(x) u|| over the state box
    and the input-box vertices, plus theta. `times` samples any explicit time
    dependence of the drift (one per regime is enough for piecewise-constant
    signals)."""
    pts = model.state_box.grid(grid_density)
    u_verts = model.input_box.vertices()
    best = 0.0
    for t in times:
        for x in pts:
            fx = model.f(t, x)
            gx = model.g(x)
            for u in u_verts:
                v = float(np.linalg.norm(fx + gx @ u))
                if v > best:
                    best = v
    return best + theta


def compute_gamma(theta: float, eta: float, a: float, n: int, T: float) -> float:
    """Estimation error bound valid from t = T on."""
    if T <= 0:
        raise ConfigurationError(f"sampling time must be > 0, got {T}")
    if a <= 0:
        raise ConfigurationError(f"estimator gain must be > 0, got {a}")
    if n < 1:
        raise ConfigurationError(f"state dimension must be >= 1, got {n}")
    rootn = math.sqrt(n)
    return 2.0 * rootn * eta * T + rootn * (-math.expm1(-a * T)) * theta


@dataclass(frozen=True, eq=False)
class UncertaintyBounds:
    theta: float
    phi: float
    eta: float
    a: float
    T: float
    gamma_T: float
    n: int
    l_d: float
    l_t: float
    b_d: float

    def gamma(self, T: float | None = None) -> float:
        """gamma at an arbitrary sampling time (defaults to the configured T)."""
        return compute_gamma(self.theta, self.eta, self.a, self.n, self.T if T is None else T)


def derive_bounds(
    model: ControlAffineModel,
    lip: LipschitzData,
    a: float,
    T: float,
    *,
    grid_density: int = 50,
    times=(0.0,),
    theta: float | None = None,
    phi: float | None = None,
    eta: float | None = None,
) -> UncertaintyBounds:
    """Build the bound set for a model. Any of theta/phi/eta may be pinned
    explicitly when the Lipschitz-derived value is known to be unusably
    conservative; whatever is not pinned is computed from the formulas."""
    th = compute_theta(lip, model.state_box) if theta is None else float(theta)
    ph = compute_phi(model, th, grid_density, times) if phi is None else float(phi)
    et = lip.l_t + lip.l_d * ph if eta is None else float(eta)
    if th < 0 or ph < 0 or et < 0:
        raise ConfigurationError("theta, phi, eta must be >= 0")
    gam = compute_gamma(th, et, a, model.n, T)
    return UncertaintyBounds(
        theta=th, phi=ph, eta=et, a=float(a), T=float(T), gamma_T=gam,
        n=model.n, l_d=lip.l_d, l_t=lip.l_t, b_d=lip.b_d,
    )


def gamma_table(bounds: UncertaintyBounds, T_values) -> list[tuple[float, float]]:
    """(T, gamma(T)) rows for a list of sampling times."""
    return [(float(T), bounds.gamma(T)) for T in T_values]
