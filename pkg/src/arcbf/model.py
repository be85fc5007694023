"""Control-affine plant description.

The dynamics are  x' = f(t, x) + g(x) u + d(t, x)  where d is unknown to the
controller but available to the simulator as ground truth. The admissible
state region and the input constraints are axis-aligned boxes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ContractViolationError

DriftFn = Callable[[float, np.ndarray], np.ndarray]
InputMapFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box {v : lower <= v <= upper}."""

    lower: np.ndarray
    upper: np.ndarray

    @staticmethod
    def make(lower, upper) -> "Box":
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ConfigurationError("box bounds must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ConfigurationError("box bounds must be finite")
        if np.any(lo > hi):
            raise ConfigurationError("empty box: a lower bound exceeds its upper bound")
        return Box(lo, hi)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    def contains(self, v: np.ndarray, tol: float = 0.0) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    def clamp(self, v: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(np.asarray(v, dtype=float), self.lower), self.upper)

    def vertices(self) -> np.ndarray:
        """All corner points, shape (#vertices, dim). Degenerate axes
        (lower == upper) contribute a single coordinate."""
        axes = []
        for lo, hi in zip(self.lower, self.upper):
            axes.append((lo,) if lo == hi else (lo, hi))
        return np.array(list(itertools.product(*axes)), dtype=float)

    def grid(self, density: int) -> np.ndarray:
        """Uniform grid including the faces, shape (density^dim, dim)."""
        if density < 1:
            raise ConfigurationError("grid density must be >= 1")
        axes = [
            np.array([lo]) if lo == hi else np.linspace(lo, hi, density)
            for lo, hi in zip(self.lower, self.upper)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True, eq=False)
class LipschitzData:
    """Regularity constants of the unknown term d(t, x):

        ||d(t, x) - d(tau, y)|| <= l_d ||x - y|| + l_t |t - tau|
        ||d(t, 0)|| <= b_d
    """

    l_d: float
    l_t: float
    b_d: float

    def __post_init__(self):
        for name in ("l_d", "l_t", "b_d"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ConfigurationError(f"{name} must be finite and >= 0, got {v}")

    def scaled(self, xi: float) -> "LipschitzData":
        """Apply a safety multiplier xi >= 1 to all three constants."""
        if xi < 1:
            raise ConfigurationError(f"safety multiplier must be >= 1, got {xi}")
        return LipschitzData(self.l_d * xi, self.l_t * xi, self.b_d * xi)


@dataclass(frozen=True, eq=False)
class ControlAffineModel:
    n: int
    m: int
    f: DriftFn
    g: InputMapFn
    d_true: DriftFn
    state_box: Box
    input_box: Box

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ConfigurationError("state and input dimensions must be >= 1")
        if self.state_box.dim != self.n:
            raise ConfigurationError("state box dimension does not match n")
        if self.input_box.dim != self.m:
            raise ConfigurationError("input box dimension does not match m")

    def rhs(self, t: float, x: np.ndarray, u: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Full right-hand side f(t,x) + g(x) u + d. Raises on dimension
        mismatch; does not clamp u (that is the caller's job)."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        d = np.asarray(d, dtype=float)
        if x.shape != (self.n,):
            raise ContractViolationError(f"state must have shape ({self.n},), got {x.shape}")
        if u.shape != (self.m,):
            raise ContractViolationError(f"input must have shape ({self.m},), got {u.shape}")
        if d.shape != (self.n,):
            raise ContractViolationError(f"disturbance must have shape ({self.n},), got {d.shape}")
        return self.f(t, x) + self.g(x) @ u + d

    def clamp_input(self, u: np.ndarray) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.shape != (self.m,):
            raise ContractViolationError(f"input must have shape ({self.m},), got {u.shape}")
        return self.input_box.clamp(u)


def check_lipschitz_consistency(
    model: ControlAffineModel,
    lip: LipschitzData,
    times=(0.0,),
    grid_density: int = 8,
) -> dict:
    """Sampled diagnostic that the registered d_true is compatible with the
    declared constants. Returns worst-case signed margins (<= 0 means the
    declared constant covers every sample)."""
    pts = model.state_box.grid(grid_density)
    origin = np.zeros(model.n)
    worst_ld = -np.inf
    worst_bd = -np.inf
    for t in times:
        d0 = model.d_true(t, origin)
        worst_bd = max(worst_bd, float(np.linalg.norm(d0)) - lip.b_d)
        for x in pts:
            dx = model.d_true(t, x)
            nrm = float(np.linalg.norm(x))
            worst_ld = max(worst_ld, float(np.linalg.norm(dx - d0)) - lip.l_d * nrm)
    return {"ld_margin": worst_ld, "bd_margin": worst_bd,
            "ok": worst_ld <= 1e-9 and worst_bd <= 1e-9}
