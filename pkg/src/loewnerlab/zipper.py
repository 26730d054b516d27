"""Inverse Loewner solver: unzip sampled curves into driving functions.

The slit-algorithm zipper fits one straight tilted slit per sample segment:
at each step the current first remaining point determines (k, dt) exactly
(the segment from the previous driving value to that point is treated as the
slit), the mapping-out of that slit is applied to the remaining points, and
the accumulated (t_i, W_i) grid is the extracted driving function.  The step
is exact on straight rays and reuses the closed-form slit family throughout.

The same machinery uniformizes complements of arcs on the sphere (for loop
and arc energies) by opening the arc at its first segment with a
Moebius-and-square-root map and unzipping the residual slit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import CurveSamples, validate_chord_in_h, validate_tangential
from .errors import (GeometryError, InputError, RefinementRequiredError)
from .maps import (ConformalComposition, MobiusMap, MobiusStep, SlitStep,
                   SqrtStep, TiltedSlitParams, _k_from_theta, _B_from_k,
                   sqrt_branch, tilted_slit_forward, tilted_slit_inverse)
from .tracer import DrivingFunction


@dataclass
class CapacityMap:
    """Arclength-to-capacity correspondence plus the per-step compositions."""

    s: np.ndarray
    t: np.ndarray
    composition: ConformalComposition
    offset: float = 0.0  # horizontal shift applied before unzipping

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if s.shape != t.shape:
            raise InputError("arclength and capacity grids must align")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise InputError("capacity grid must increase strictly from 0")
        self.s = s
        self.t = t

    def capacity_at(self, s_query):
        return np.interp(s_query, self.s, self.t)

    def arclength_at(self, t_query):
        return np.interp(t_query, self.t, self.s)


def compute_driving(curve: CurveSamples, tol: float = 1e-9) -> tuple[DrivingFunction, CapacityMap]:
    """Extract the driving function of a chord attached to the real axis.

    The start abscissa is normalised to W(0) = 0; the horizontal shift is
    recorded on the returned :class:`CapacityMap`.
    """
    chord = validate_chord_in_h(curve, tol=tol)
    offset = float(chord.points[0].real)
    pts = chord.points - offset
    w_grid, t_grid, steps = _unzip(pts)
    comp = ConformalComposition(
        [MobiusStep(MobiusMap.translation(-offset))] + [SlitStep(s) for s in steps],
        normalization={"zero": complex(offset, 0.0), "infinity": None},
    )
    cap = CapacityMap(s=chord.arclength, t=t_grid, composition=comp, offset=offset)
    return DrivingFunction(t_grid, w_grid), cap


def _unzip(pts: np.ndarray):
    """Core zipper loop on points already normalised to start at 0 on R."""
    n = pts.size
    images = pts.astype(complex).copy()
    w = np.zeros(n)
    t = np.zeros(n)
    steps: list[TiltedSlitParams] = []
    for j in range(1, n):
        base = w[j - 1]
        d = images[j] - base
        if not (d.imag > 0):
            raise GeometryError(
                f"segment image leaves the upper half-plane at sample {j}"
            )
        theta = 0.5 * math.pi - math.atan2(d.imag, d.real)
        k = _k_from_theta(theta)
        dt = (abs(d) / abs(_B_from_k(k))) ** 2
        params = TiltedSlitParams(k=k, dt=dt, base=base)
        w[j] = base + params.driving_increment
        t[j] = t[j - 1] + dt
        steps.append(params)
        if j + 1 < n:
            images[j + 1:] = tilted_slit_inverse(params, images[j + 1:])
    return w, t, steps


def _apply_steps(steps, points):
    out = np.asarray(points, dtype=complex).copy()
    for s in steps:
        out = tilted_slit_inverse(s, out)
    return out


def attach_and_lift(gamma: CurveSamples, tol: float = 1e-9) -> CurveSamples:
    """Lift a tangentially attached curve through the square-root branch.

    The lifted curve sqrt(gamma) starts at 0 on the real axis; its capacity
    parametrization satisfies s/5 <= t(s) <= s/2 for R-regular inputs.
    """
    arc = validate_tangential(gamma, tol=tol)
    pts = arc.points.copy()
    lifted = np.empty_like(pts)
    lifted[0] = 0j
    lifted[1:] = sqrt_branch(pts[1:], tol=tol * max(1.0, float(np.max(np.abs(pts)))))
    return CurveSamples(lifted, closed=False, beta=arc.beta)


def drive_tangential(gamma: CurveSamples, tol: float = 1e-9):
    """Lift then unzip: driving function of sqrt(gamma) with its capacity map.

    The returned CapacityMap's ``s`` grid is the arclength of the original
    curve gamma, so the s/5 <= t <= s/2 bounds can be read off directly.
    """
    lifted = attach_and_lift(gamma, tol=tol)
    W, cap = compute_driving(lifted, tol=tol)
    cap_gamma = CapacityMap(
        s=gamma.arclength, t=cap.t, composition=cap.composition, offset=cap.offset
    )
    return W, cap_gamma


# ---------------------------------------------------------------------------
# Complements of arcs on the sphere
# ---------------------------------------------------------------------------

def uniformize_slit_complement(loop: CurveSamples, root_index: int, eps_index: int,
                               tol: float = 1e-9):
    """Uniformize the complement of the arc loop[root..eps] onto H.

    Returns ``(composition, chord)`` where the composition maps the slit
    complement onto H sending loop[eps] -> 0 and loop[root] -> infinity, and
    ``chord`` is the image of the remaining part of the loop, a chord in
    (H, 0, infinity) starting at 0 on the real axis.

    Built as: Moebius opening of the first arc segment (root to root+1) with
    a square-root branch, zipper mapping-out of the residual arc image, and
    a final recentring translation.
    """
    if not loop.closed:
        raise InputError("uniformize_slit_complement expects a closed loop")
    n = len(loop)
    r = int(root_index) % n
    e = int(eps_index) % n
    arc_len = (e - r) % n
    if arc_len == 0:
        raise InputError("eps_index must differ from root_index")
    if arc_len < 2:
        raise RefinementRequiredError(
            "arc too short for stable normalization; refine the loop sampling"
        )
    if arc_len > n - 2:
        raise InputError("arc must leave at least two chord samples")

    rolled = loop.rerooted(r)
    arc = rolled.points[: arc_len + 1]          # root .. eps inclusive
    chord_pts = rolled.points[arc_len:]         # eps .. last sample before root

    opening = SqrtStep(p0=arc[0], p1=arc[1], scale=1.0)
    lifted_arc = np.asarray(opening.apply(arc[1:]))
    # Unit-scale normalization: second unzipped sample at distance 1.
    scale = 1.0 / abs(lifted_arc[1]) if arc_len >= 2 else 1.0
    opening = SqrtStep(p0=arc[0], p1=arc[1], scale=scale)
    lifted_arc = np.asarray(opening.apply(arc[1:]))
    lifted_chord = np.asarray(opening.apply(chord_pts))

    if np.any(lifted_arc[1:].imag <= 0) or np.any(lifted_chord[1:].imag <= 0):
        raise GeometryError("opened arc image leaves the upper half-plane")

    # The lifted residual arc starts at 0 on R; unzip it.
    lifted_arc[0] = 0j
    w_grid, t_grid, steps = _unzip(lifted_arc)
    w_end = w_grid[-1]

    # The chord's first sample is the slit tip; its image is the final
    # driving value by construction, so only the rest is inverted.
    images = lifted_chord.copy()
    images[1:] = _apply_steps(steps, images[1:])
    images = images - w_end
    images[0] = 0j

    comp = ConformalComposition(
        [opening] + [SlitStep(s) for s in steps]
        + [MobiusStep(MobiusMap.translation(-w_end))],
        normalization={"zero": complex(arc[-1]), "infinity": complex(arc[0])},
    )
    if np.any(images[1:].imag <= 0):
        raise GeometryError("chord image leaves the upper half-plane")
    chord = CurveSamples(images, closed=False)
    chord.require_simple()
    return comp, chord


def resample_uniform_capacity(curve: CurveSamples, n: int | None = None,
                              tol: float = 1e-9) -> CurveSamples:
    """Resample a chord to quasi-uniform capacity increments.

    One extraction pass yields t(s); the curve is then re-sampled by linear
    interpolation at the arclengths of a uniform capacity grid.
    """
    _, cap = compute_driving(curve, tol=tol)
    m = n or len(curve)
    t_grid = np.linspace(0.0, cap.t[-1], m)
    s_grid = cap.arclength_at(t_grid)
    s_grid[0], s_grid[-1] = cap.s[0], cap.s[-1]
    s_all = curve.arclength
    re = np.interp(s_grid, s_all, curve.points.real)
    im = np.interp(s_grid, s_all, curve.points.imag)
    pts = re + 1j * im
    pts[0] = curve.points[0]
    pts[-1] = curve.points[-1]
    im_interior = np.maximum(pts[1:-1].imag, 1e-300)
    pts[1:-1] = pts[1:-1].real + 1j * im_interior
    return CurveSamples(pts, closed=False, beta=curve.beta)


def geodesic_to_infinity(cap: CapacityMap, w_end: float, heights: np.ndarray) -> np.ndarray:
    """Points of the hyperbolic geodesic from the current tip to infinity.

    In the unzipped plane the geodesic is the vertical ray above the final
    driving value; its preimage under the recorded composition is returned.
    """
    ray = w_end + 1j * np.asarray(heights, dtype=float)
    return np.asarray(cap.composition.invert(ray))


def boundary_parametrization(cap: CapacityMap, w_grid: np.ndarray) -> np.ndarray:
    """Preimages of real points under the full unzip composition.

    Sweeping w over the real line traverses the original domain boundary:
    values inside the released interval land on the curve (prime ends from
    either side), values outside stay on the real axis.
    """
    return np.asarray(cap.composition.invert(np.asarray(w_grid, dtype=complex)))
