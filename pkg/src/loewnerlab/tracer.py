"""Forward Loewner solver: drive a curve from its driving function.

Each sub-step approximates the driving function on one capacity cell
[t0, t0+dt] by base + k*sqrt(u) with k = dW/sqrt(dt), matched to the cell's
increment.  The cell is then realized exactly by one tilted-slit map, so the
scheme is exact on the straight-slit family and second order in general.
Curve points are obtained by composing the inverse (slit-opening) maps in
reverse order; capacities add up to the total exactly by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import CurveSamples
from .errors import (ConvergenceError, DomainError, InputError,
                     RefinementRequiredError, SurvivalError)
from .maps import K_MAX, TiltedSlitParams, tilted_slit_forward, tilted_slit_inverse, _B_from_k


@dataclass
class DrivingFunction:
    """Real driving values on a strictly increasing capacity grid from 0."""

    t: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float).ravel()
        if t.size != w.size or t.size < 2:
            raise InputError("driving function needs matching t/w grids of length >= 2")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(w))):
            raise InputError("driving function values must be finite (NaN in input?)")
        if t[0] != 0.0:
            raise InputError("capacity grid must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise InputError("capacity grid must be strictly increasing")
        self.t = t
        self.w = w

    @property
    def T(self) -> float:
        return float(self.t[-1])

    def __call__(self, tq):
        """Piecewise-linear interpolant."""
        return np.interp(tq, self.t, self.w)

    def refined(self, steps_per_unit: int) -> "DrivingFunction":
        """Insert grid points so every cell has dt <= 1/steps_per_unit."""
        if steps_per_unit < 1:
            raise InputError("steps_per_unit must be a positive integer")
        target = 1.0 / steps_per_unit
        knots = [np.array([0.0])]
        for a, b in zip(self.t[:-1], self.t[1:]):
            m = max(1, int(np.ceil((b - a) / target)))
            knots.append(np.linspace(a, b, m + 1)[1:])
        t = np.concatenate(knots)
        return DrivingFunction(t, self(t))

    def scaled(self, a: float) -> "DrivingFunction":
        """Brownian scaling a*W(t/a**2); leaves the Dirichlet energy invariant."""
        if a <= 0:
            raise DomainError("scaling factor must be positive")
        return DrivingFunction(self.t * a * a, self.w * a)

    def shifted_tail(self, index: int) -> "DrivingFunction":
        """Driving of the mapped-out remainder, recentred at grid point ``index``."""
        if not 0 <= index < self.t.size - 1:
            raise InputError("split index out of range")
        return DrivingFunction(self.t[index:] - self.t[index],
                               self.w[index:] - self.w[index])


@dataclass
class CurveTrace:
    """Traced curve tips with their capacity values."""

    points: np.ndarray
    t_of_point: np.ndarray

    def as_curve(self) -> CurveSamples:
        return CurveSamples(self.points, closed=False)


def _cell_params(W: DrivingFunction):
    """Per-cell slit parameters (k_i, dt_i, base_i)."""
    dt = np.diff(W.t)
    dw = np.diff(W.w)
    k = dw / np.sqrt(dt)
    if np.any(np.abs(k) > K_MAX):
        worst = float(np.max(np.abs(k)))
        raise RefinementRequiredError(
            f"|dW|/sqrt(dt) = {worst:.3g} exceeds the slit family range; "
            "refine the capacity grid"
        )
    return [
        TiltedSlitParams(k=float(k[i]), dt=float(dt[i]), base=float(W.w[i]))
        for i in range(dt.size)
    ]


def trace_curve(W: DrivingFunction, steps_per_unit: int = 256) -> CurveTrace:
    """Trace the curve generated by ``W``.

    The tip at grid time t_i is the image of the i-th cell's slit tip under
    the inverse maps of all earlier cells, evaluated with a reverse sweep so
    the whole trace costs O(n^2) vectorized map applications.
    """
    Wr = W.refined(steps_per_unit) if steps_per_unit else W
    cells = _cell_params(Wr)
    n = len(cells)
    tips = np.array([c.tip for c in cells], dtype=complex)
    for j in range(n - 1, 0, -1):
        tips[j:] = tilted_slit_forward(cells[j - 1], tips[j:])
    points = np.concatenate([[complex(Wr.w[0], 0.0)], tips])
    return CurveTrace(points=points, t_of_point=Wr.t.copy())


def evolve_point(W: DrivingFunction, z: complex, t_end: float,
                 steps_per_unit: int = 256) -> complex:
    """Solve the Loewner flow for one point: returns g_{t_end}(z).

    Composes the mapping-out of each capacity cell in order.  A point
    swallowed by the hull raises :class:`SurvivalError` carrying the
    survival-time estimate.
    """
    if not 0.0 <= t_end <= W.T + 1e-12 * max(1.0, W.T):
        raise InputError("t_end outside the driving function's capacity range")
    if t_end == 0.0:
        return complex(z)
    head = DrivingFunction(
        np.concatenate([W.t[W.t < t_end], [t_end]]),
        np.concatenate([W.w[W.t < t_end], [float(W(t_end))]]),
    )
    Wr = head.refined(steps_per_unit) if steps_per_unit else head
    cells = _cell_params(Wr)
    out = complex(z)
    for i, cell in enumerate(cells):
        try:
            out = tilted_slit_inverse(cell, out)
        except (DomainError, ConvergenceError) as exc:
            raise SurvivalError(
                f"point swallowed by the hull near t = {Wr.t[i]:.6g}",
                tau=float(Wr.t[i]),
            ) from exc
    return out
