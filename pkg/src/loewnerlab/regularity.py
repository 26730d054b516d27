"""Empirical regularity analysis of driving functions.

Implements the measurement side of the smoothness correspondence: moduli of
continuity, log-log Hoelder fits with optional logarithmic correction, the
half-exponent shift between a curve's tangent regularity and its driving
function, the startup bound |W_t| <= c * omega(5t) * sqrt(t), and the
boundary-integral representation of the driving derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import CurveSamples, tangent_samples
from .errors import DomainError, InputError, RefinementRequiredError
from .tracer import DrivingFunction
from .zipper import drive_tangential
from .maps import sqrt_branch


@dataclass
class HolderFit:
    exponent: float
    constant: float
    log_correction: bool
    residual: float
    delta_range: tuple


@dataclass
class LsEstimate:
    s: float
    L: float
    integrand_tail: float


@dataclass
class RegularityShiftReport:
    beta: float
    predicted_exponent: float
    fitted: HolderFit
    branch: str                      # "driving" (beta <= 1/2) or "derivative"
    wdot0_ratio: float | None = None # |dW/dt(0)| / max |dW/dt|


@dataclass
class BoundCheckReport:
    constant: float                  # sup_t |W_t| / (omega(5t) sqrt(t))
    t_used: tuple
    excluded_below: float            # t-range dropped (zero-omega or startup)


def modulus_of_continuity(values, grid, deltas) -> np.ndarray:
    """Exact modulus sup_{|s-s'|<=delta} |f(s)-f(s')| over grid pairs.

    Works on uniform or quasi-uniform grids; one pass over index shifts
    serves all deltas at once.
    """
    f = np.asarray(values)
    s = np.asarray(grid, dtype=float)
    if f.shape != s.shape or f.size < 2:
        raise InputError("values and grid must align with length >= 2")
    if np.any(np.diff(s) <= 0):
        raise InputError("grid must be strictly increasing")
    deltas = np.asarray(deltas, dtype=float)
    min_gap = float(np.min(np.diff(s)))
    if np.any(deltas < min_gap):
        raise RefinementRequiredError(
            "requested delta below the grid resolution"
        )
    out = np.zeros(deltas.shape)
    dmax = float(np.max(deltas))
    for shift in range(1, f.size):
        ds = s[shift:] - s[:-shift]
        if float(np.min(ds)) > dmax:
            break
        df = np.abs(f[shift:] - f[:-shift])
        for i, d in enumerate(deltas):
            sel = ds <= d
            if np.any(sel):
                out[i] = max(out[i], float(np.max(df[sel])))
    return out


def holder_fit(deltas, omegas) -> HolderFit:
    """Least-squares exponent of log omega against log delta.

    A logarithmic correction is flagged when dividing out log(1/delta)
    reduces the fit residual by more than 25%.
    """
    d = np.asarray(deltas, dtype=float)
    w = np.asarray(omegas, dtype=float)
    keep = w > 0
    d, w = d[keep], w[keep]
    if d.size < 8:
        raise DomainError("holder_fit needs at least 8 positive scales")
    if np.max(d) / np.min(d) < 99.0:
        raise DomainError("scales must span at least two decades")
    if np.max(w) / np.min(w) < 1e-9 + 1.0:
        raise DomainError("modulus is constant; exponent undefined")

    logd = np.log(d)
    plain = np.polyfit(logd, np.log(w), 1, full=True)
    resid_plain = float(plain[1][0]) if plain[1].size else 0.0
    corr = np.polyfit(logd, np.log(w) - np.log(np.log(1.0 / d)), 1, full=True)
    resid_corr = float(corr[1][0]) if corr[1].size else 0.0
    use_log = resid_corr < 0.75 * resid_plain
    coef = corr[0] if use_log else plain[0]
    resid = resid_corr if use_log else resid_plain
    return HolderFit(
        exponent=float(coef[0]),
        constant=float(math.exp(coef[1])),
        log_correction=bool(use_log),
        residual=resid,
        delta_range=(float(np.min(d)), float(np.max(d))),
    )


def dyadic_deltas(span: float, floor: float, n_drop_small: int = 2,
                  n_drop_large: int = 1) -> np.ndarray:
    """Dyadic scale ladder with the fit-hygiene trims applied.

    Drops the smallest scales (discretization-dominated) and the largest
    (geometry-dominated).
    """
    levels = int(math.floor(math.log2(span / floor)))
    d = span / np.power(2.0, np.arange(0, levels + 1))
    d = d[n_drop_large:]
    if n_drop_small:
        d = d[:-n_drop_small] if n_drop_small < d.size else d[:0]
    if d.size < 8:
        raise RefinementRequiredError("not enough dyadic scales between grid "
                                      "resolution and data span")
    return d


def driving_derivative(W: DrivingFunction):
    """Increment slopes dW/dt at cell midpoints."""
    dt = np.diff(W.t)
    mid = W.t[:-1] + 0.5 * dt
    return mid, np.diff(W.w) / dt


def driving_slope(W: DrivingFunction, t0: float, window: float) -> float:
    """Local least-squares slope of W on [t0 - window, t0 + window]."""
    sel = (W.t >= t0 - window) & (W.t <= t0 + window)
    if np.sum(sel) < 3:
        raise RefinementRequiredError("slope window holds fewer than 3 samples")
    coef = np.polyfit(W.t[sel] - t0, W.w[sel], 1)
    return float(coef[0])


def verify_regularity_shift(curve: CurveSamples, beta: float,
                            tol: float = 1e-9) -> RegularityShiftReport:
    """Fit the driving regularity of a tangentially attached curve.

    For beta <= 1/2 the modulus of W itself is fitted (predicted exponent
    beta + 1/2); for beta > 1/2 the modulus of the increment derivative is
    fitted (predicted beta - 1/2) and the size of dW/dt at t = 0 relative to
    its maximum is reported.
    """
    if not 0 < beta <= 1:
        raise DomainError("beta must lie in (0, 1]")
    W, _ = drive_tangential(curve, tol=tol)
    if beta <= 0.5:
        floor = 2.0 * float(np.max(np.diff(W.t)))
        deltas = dyadic_deltas(W.T, floor)
        om = modulus_of_continuity(W.w, W.t, deltas)
        fit = holder_fit(deltas, om)
        return RegularityShiftReport(
            beta=beta, predicted_exponent=beta + 0.5, fitted=fit,
            branch="driving",
        )
    mid, wdot = driving_derivative(W)
    grid = np.concatenate([[0.0], mid])
    vals = np.concatenate([[0.0], wdot])  # dW/dt(0) = 0 in this regime
    floor = 2.0 * float(np.max(np.diff(grid)))
    deltas = dyadic_deltas(W.T, floor)
    om = modulus_of_continuity(vals, grid, deltas)
    fit = holder_fit(deltas, om)
    ratio = float(abs(wdot[0]) / np.max(np.abs(wdot)))
    return RegularityShiftReport(
        beta=beta, predicted_exponent=beta - 0.5, fitted=fit,
        branch="derivative", wdot0_ratio=ratio,
    )


def vertical_bound_check(curve: CurveSamples, startup_skip: int = 2,
                         tol: float = 1e-9) -> BoundCheckReport:
    """Empirical constant in |W_t| <= c * omega(5t) * sqrt(t).

    omega is the modulus of continuity of the sampled unit tangent in
    arclength.  Grid times whose omega window vanishes (straight start) or
    that fall inside the startup skip are excluded.
    """
    W, cap = drive_tangential(curve, tol=tol)
    s_mid, tangents = tangent_samples(curve)
    t_grid = W.t[1 + startup_skip:]
    if t_grid.size == 0:
        raise InputError("curve too short for the bound check")
    w_vals = W.w[1 + startup_skip:]
    s_max = float(s_mid[-1])
    ratios = []
    used = []
    excluded_below = 0.0
    for t_i, w_i in zip(t_grid, w_vals):
        arg = 5.0 * t_i
        if arg > s_max:
            break
        om = _omega_at(tangents, s_mid, arg)
        if om <= tol:
            excluded_below = max(excluded_below, t_i)
            continue
        ratios.append(abs(w_i) / (om * math.sqrt(t_i)))
        used.append(t_i)
    if not ratios:
        return BoundCheckReport(constant=0.0, t_used=(), excluded_below=excluded_below)
    return BoundCheckReport(
        constant=float(np.max(ratios)),
        t_used=(float(used[0]), float(used[-1])),
        excluded_below=excluded_below,
    )


def _omega_at(values, grid, delta) -> float:
    """Modulus of continuity at a single scale."""
    f = np.asarray(values)
    s = np.asarray(grid, dtype=float)
    best = 0.0
    for shift in range(1, f.size):
        ds = s[shift:] - s[:-shift]
        sel = ds <= delta
        if not np.any(sel):
            break
        best = max(best, float(np.max(np.abs(f[shift:] - f[:-shift])[sel])))
    return best


def estimate_Ls(curve: CurveSamples, s: float, n_grid: int = 400,
                tol: float = 1e-9) -> LsEstimate:
    """Boundary-integral estimate of the driving derivative factor.

    Builds the uniformizer of the mapped-out domain at arclength ``s`` from
    the recorded slit compositions, samples the boundary tangent angle v on
    a graded real grid through the closed-form inverse composition, and
    evaluates (1/pi) * integral (v(r) - v(0)) / r^2 dr with an explicit tail
    correction at r_max = 10 * sqrt(S).
    """
    s_all = curve.arclength
    i_s = int(np.argmin(np.abs(s_all - s)))
    if i_s < 8:
        raise InputError("s too close to the attachment point")
    s_i = float(s_all[i_s])
    prefix = CurveSamples(curve.points[: i_s + 1].copy(), closed=False, beta=curve.beta)
    W, cap = drive_tangential(prefix, tol=tol)
    w_t = float(W.w[-1])
    gamma_s = complex(curve.points[i_s])

    S_total = float(s_all[-1])
    r_max = 10.0 * math.sqrt(S_total)
    # Below this scale the tip cancellation in z^2 - gamma(s) drowns the
    # boundary angle in rounding noise; the skipped mass is O(w_min).
    w_min = 1e-3 * math.sqrt(max(W.T, 1e-300))
    side = np.geomspace(w_min, r_max, n_grid)
    w_grid = np.concatenate([-side[::-1], [0.0], side])

    z = np.asarray(cap.composition.invert(w_grid + w_t))
    sphere = z * z - gamma_s
    p = np.sqrt(sphere.astype(complex))
    center = n_grid  # index of w = 0
    p[center] = 0.0
    # Branch continuity outward from the tip.  The two sides leave the tip in
    # opposite directions (phi_s is conformal there), which anchors the signs.
    if abs(p[center - 1] + p[center + 1]) > abs(p[center - 1] - p[center + 1]):
        p[center - 1] = -p[center - 1]
    for i in range(center + 2, p.size):
        if abs(p[i] - p[i - 1]) > abs(p[i] + p[i - 1]):
            p[i] = -p[i]
    for i in range(center - 2, -1, -1):
        if abs(p[i] - p[i + 1]) > abs(p[i] + p[i + 1]):
            p[i] = -p[i]

    # Tangent angle along the boundary: centered secants, unwrapped.
    v = np.unwrap(np.angle(p[2:] - p[:-2]))
    w_v = w_grid[1:-1]
    v0 = float(v[center - 1])  # secant across the tip

    pos = w_v > 0
    neg = w_v < 0
    value = float(
        np.trapezoid((v[pos] - v0) / w_v[pos] ** 2, w_v[pos])
        + np.trapezoid((v[neg] - v0) / w_v[neg] ** 2, w_v[neg])
    )
    tail = ((v[-1] - v0) + (v[0] - v0)) / r_max
    inner_gap = (abs(v[center] - v0) + abs(v[center - 2] - v0)) / math.pi
    L = (value + tail) / math.pi
    return LsEstimate(s=s_i, L=L, integrand_tail=float(abs(tail) / math.pi + inner_gap))
