"""Sampled planar curves and the analytic test-curve catalog.

A :class:`CurveSamples` is an ordered list of complex points, either a simple
arc or a Jordan loop (``closed=True``, wraparound implicit, first point not
repeated).  Arclength metadata is cumulative chord length.

The catalog generates the analytic families every solver is tested against:
straight slits and tilted rays in H, circles and ellipses, tangentially
attached circle arcs and arc pairs, and the curve family with tangent angle
pi + a*s**beta whose derivative has exact Hoelder exponent beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import LineString, LinearRing

from .errors import DomainError, GeometryError, InputError, RefinementRequiredError

# Curve kinds used by the file format and validators.
KIND_ARC = "arc"
KIND_LOOP = "loop"
KIND_CHORD = "chord-in-H"
KIND_TANGENTIAL = "tangential-to-R+"
KINDS = (KIND_ARC, KIND_LOOP, KIND_CHORD, KIND_TANGENTIAL)

MIN_SAMPLES = 8


@dataclass
class CurveSamples:
    """Ordered complex samples of a simple arc or Jordan loop."""

    points: np.ndarray
    closed: bool = False
    beta: float | None = None  # known Hoelder class of the tangent, if any

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        if pts.size < 2:
            raise InputError("a curve needs at least two samples")
        if not np.all(np.isfinite(pts.real) & np.isfinite(pts.imag)):
            raise InputError("curve samples must be finite")
        if np.any(np.abs(np.diff(pts)) == 0):
            raise GeometryError("consecutive curve samples must be distinct")
        if self.closed and abs(pts[-1] - pts[0]) == 0:
            raise InputError("closed loops store the wraparound implicitly")
        self.points = pts

    def __len__(self):
        return self.points.size

    @property
    def arclength(self) -> np.ndarray:
        """Cumulative chord length per sample (loops: up to the last stored point)."""
        seg = np.abs(np.diff(self.points))
        return np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def total_length(self) -> float:
        length = self.arclength[-1]
        if self.closed:
            length += abs(self.points[0] - self.points[-1])
        return float(length)

    def is_simple(self) -> bool:
        coords = [(z.real, z.imag) for z in self.points]
        if self.closed:
            try:
                return LinearRing(coords).is_valid
            except Exception:
                return False
        return LineString(coords).is_simple

    def require_simple(self):
        if not self.is_simple():
            raise GeometryError("curve is not simple (self-intersection detected)")

    def reversed(self) -> "CurveSamples":
        return CurveSamples(self.points[::-1].copy(), closed=self.closed, beta=self.beta)

    def rerooted(self, index: int) -> "CurveSamples":
        """Rotate a loop's storage so that ``index`` becomes sample 0."""
        if not self.closed:
            raise InputError("rerooting applies to closed loops")
        idx = int(index) % len(self)
        return CurveSamples(np.roll(self.points, -idx), closed=True, beta=self.beta)

    def resampled(self, n: int) -> "CurveSamples":
        """Resample uniformly in arclength with linear interpolation."""
        if n < 2:
            raise InputError("need at least two samples")
        pts = self.points
        if self.closed:
            pts = np.concatenate([pts, pts[:1]])
        s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(pts)))])
        grid = np.linspace(0.0, s[-1], n + 1 if self.closed else n)
        if self.closed:
            grid = grid[:-1]
        re = np.interp(grid, s, pts.real)
        im = np.interp(grid, s, pts.imag)
        return CurveSamples(re + 1j * im, closed=self.closed, beta=self.beta)


def validate_chord_in_h(curve: CurveSamples, tol: float = 1e-9) -> CurveSamples:
    """Check a chord: starts on the real axis, then stays in the open H."""
    if curve.closed:
        raise InputError("a chord must be an open curve")
    if len(curve) < MIN_SAMPLES:
        raise RefinementRequiredError(
            f"curves with fewer than {MIN_SAMPLES} samples are rejected")
    pts = curve.points.copy()
    scale = max(1.0, float(np.max(np.abs(pts))))
    if abs(pts[0].imag) > tol * scale:
        raise GeometryError("chord must start on the real axis")
    pts[0] = pts[0].real + 0j
    if np.any(pts[1:].imag <= 0):
        bad = int(np.argmax(pts[1:].imag <= 0)) + 1
        raise GeometryError(f"chord leaves the upper half-plane at sample {bad}")
    out = CurveSamples(pts, closed=False, beta=curve.beta)
    out.require_simple()
    return out


def validate_tangential(curve: CurveSamples, tol: float = 1e-9) -> CurveSamples:
    """Check a curve tangentially attached to R+: starts at 0, avoids (0, inf)."""
    if curve.closed:
        raise InputError("a tangentially attached curve must be an open arc")
    if len(curve) < MIN_SAMPLES:
        raise RefinementRequiredError(
            f"curves with fewer than {MIN_SAMPLES} samples are rejected")
    pts = curve.points.copy()
    scale = max(1.0, float(np.max(np.abs(pts))))
    if abs(pts[0]) > tol * scale:
        raise GeometryError("tangentially attached curve must start at 0")
    pts[0] = 0j
    on_cut = (pts[1:].real > 0) & (np.abs(pts[1:].imag) <= tol * scale)
    if np.any(on_cut):
        raise GeometryError("curve touches the positive real axis (branch cut)")
    out = CurveSamples(pts, closed=False, beta=curve.beta)
    out.require_simple()
    return out


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two complex point sets."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

def vertical_slit(length: float = 1.0, n: int = 64) -> CurveSamples:
    """Straight segment [0, i*length], the zero-driving chord."""
    y = np.linspace(0.0, length, n)
    return CurveSamples(1j * y + 0.0, closed=False)


def tilted_ray(theta: float, length: float = 1.0, n: int = 256,
               grading: str = "geometric") -> CurveSamples:
    """Ray at angle pi/2 - theta from the real axis, driven by k(theta)*sqrt(t).

    The default geometric radius grading keeps the extraction error of the
    inverse solver uniformly small in log-capacity; pass grading="uniform"
    for equally spaced radii.
    """
    if not -math.pi / 2 < theta < math.pi / 2:
        raise DomainError("theta must lie in (-pi/2, pi/2)")
    if grading == "geometric":
        r = np.concatenate([[0.0], np.geomspace(1e-4 * length, length, n - 1)])
    elif grading == "uniform":
        r = np.linspace(0.0, length, n)
    else:
        raise InputError("grading must be 'geometric' or 'uniform'")
    return CurveSamples(r * np.exp(1j * (math.pi / 2 - theta)), closed=False)


def circle_loop(n: int = 512, radius: float = 1.0, center: complex = 0.0) -> CurveSamples:
    phi = 2.0 * math.pi * np.arange(n) / n
    return CurveSamples(center + radius * np.exp(1j * phi), closed=True)


def ellipse_loop(a: float = 2.0, b: float = 1.0, n: int = 512) -> CurveSamples:
    """Ellipse with semi-axes a, b, resampled uniformly in arclength."""
    fine = 16 * n
    phi = np.linspace(0.0, 2.0 * math.pi, fine + 1)
    pts = a * np.cos(phi) + 1j * b * np.sin(phi)
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(pts)))])
    grid = np.linspace(0.0, s[-1], n + 1)[:-1]
    re = np.interp(grid, s, pts.real)
    im = np.interp(grid, s, pts.imag)
    return CurveSamples(re + 1j * im, closed=True)


def straight_continuation(length: float = 1.0, n: int = 64) -> CurveSamples:
    """gamma(s) = -s: the straight extension of R+ through 0."""
    s = np.linspace(0.0, length, n)
    return CurveSamples(-s + 0j, closed=False, beta=1.0)


def circle_arc_tangential(length: float = 1.0, curvature: float = 1.0,
                          n: int = 256) -> CurveSamples:
    """Circular arc attached at 0 with gamma'(0) = -1 and constant curvature.

    gamma(s) = i*(exp(i*kappa*s) - 1)/kappa dips into the lower half-plane,
    staying clear of the positive reals for length < 2*pi/kappa.
    """
    if curvature <= 0:
        raise DomainError("curvature must be positive")
    if length >= 2.0 * math.pi / curvature:
        raise DomainError("arc longer than the full circle")
    s = np.linspace(0.0, length, n)
    return CurveSamples(1j * (np.exp(1j * curvature * s) - 1.0) / curvature,
                        closed=False, beta=1.0)


def circle_chord_in_h(opening: float = 2.0 * math.pi / 3, radius: float = 1.0,
                      n: int = 256) -> CurveSamples:
    """Circular arc from 0 into H with a vertical tangent at 0."""
    if not 0 < opening < math.pi:
        raise DomainError("opening must lie in (0, pi)")
    phi = np.linspace(0.0, opening, n)
    return CurveSamples(radius * (1.0 - np.exp(-1j * phi)), closed=False)


def arc_pair_tangential(lengths=(0.6, 0.6), curvatures=(1.0, -0.8),
                        n: int = 256) -> CurveSamples:
    """Two tangentially concatenated circular arcs: a C^{1,1} catalog curve."""
    s1, s2 = lengths
    k1, k2 = curvatures
    if s1 <= 0 or s2 <= 0:
        raise DomainError("arc lengths must be positive")
    total = s1 + s2
    s = np.linspace(0.0, total, n)
    pts = np.empty(n, dtype=complex)
    first = s <= s1
    # Integrals of exp(i*(pi + k*s)) in closed form; segments fall back to the
    # zero-curvature limit.
    pts[first] = _arc_integral(s[first], math.pi, k1)
    base = _arc_integral(np.array([s1]), math.pi, k1)[0]
    tail = s[~first] - s1
    pts[~first] = base + _arc_integral(tail, math.pi + k1 * s1, k2)
    return CurveSamples(pts, closed=False, beta=1.0)


def _arc_integral(s, phi0, kappa):
    if abs(kappa) < 1e-14:
        return s * np.exp(1j * phi0)
    return (np.exp(1j * (phi0 + kappa * s)) - np.exp(1j * phi0)) / (1j * kappa)


def c1beta_curve(beta: float = 0.75, amplitude: float = 0.5, length: float = 1.0,
                 n: int = 1024, grid: np.ndarray | None = None) -> CurveSamples:
    """Tangentially attached curve with tangent angle pi + a*s**beta.

    The derivative gamma' is exactly C^{0,beta} with constant ``amplitude``,
    making this the reference family for the regularity-shift experiments.
    A custom arclength ``grid`` (for graded sampling near 0) may be supplied.
    """
    if not 0.0 < beta <= 1.0:
        raise DomainError("beta must lie in (0, 1]")
    if amplitude < 0:
        raise DomainError("amplitude must be nonnegative")
    if amplitude * length**beta >= 0.45 * math.pi:
        raise DomainError("total turning too large for a tangential catalog curve")
    s = np.linspace(0.0, length, n) if grid is None else np.asarray(grid, dtype=float)
    if s[0] != 0.0 or np.any(np.diff(s) <= 0):
        raise InputError("arclength grid must start at 0 and increase")
    pts = _cumulative_gauss(lambda u: np.exp(1j * (math.pi + amplitude * u**beta)), s)
    out = CurveSamples(pts, closed=False, beta=beta)
    return out


# 8-point Gauss-Legendre nodes/weights on [0, 1].
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _cumulative_gauss(f, s):
    """Cumulative integral of f along the grid s by per-cell Gauss quadrature."""
    a = s[:-1]
    h = np.diff(s)
    nodes = a[:, None] + h[:, None] * _GL_X[None, :]
    vals = f(nodes)
    cells = (vals * _GL_W[None, :]).sum(axis=1) * h
    return np.concatenate([[0.0 + 0.0j], np.cumsum(cells)])


def hybrid_grid(length: float, n_uniform: int = 4096,
                start_fraction: float = 1e-6) -> np.ndarray:
    """Arclength grid: geometric refinement near 0, then uniform cells.

    The graded start resolves the t -> 0 behaviour of extracted driving
    functions (startup derivatives, corner detection) without inflating the
    total sample count.
    """
    h = length / n_uniform
    s0 = start_fraction * length
    if s0 >= h:
        return np.linspace(0.0, length, n_uniform + 1)
    graded = np.geomspace(s0, h, max(2, int(math.ceil(math.log(h / s0) / math.log(1.35)))))
    uniform = np.linspace(h, length, n_uniform)
    return np.concatenate([[0.0], graded[:-1], uniform])


def tangent_samples(curve: CurveSamples) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint arclengths and unit tangents from finite differences."""
    pts = curve.points
    seg = np.diff(pts)
    ds = np.abs(seg)
    s_mid = curve.arclength[:-1] + 0.5 * ds
    return s_mid, seg / ds


CATALOG = {
    "vertical-slit": vertical_slit,
    "ray": tilted_ray,
    "circle": circle_loop,
    "ellipse": ellipse_loop,
    "straight": straight_continuation,
    "circle-arc": circle_arc_tangential,
    "circle-chord": circle_chord_in_h,
    "arc-pair": arc_pair_tangential,
    "c1beta": c1beta_curve,
}

CATALOG_KINDS = {
    "vertical-slit": KIND_CHORD,
    "ray": KIND_CHORD,
    "circle": KIND_LOOP,
    "ellipse": KIND_LOOP,
    "straight": KIND_TANGENTIAL,
    "circle-arc": KIND_TANGENTIAL,
    "circle-chord": KIND_CHORD,
    "arc-pair": KIND_TANGENTIAL,
    "c1beta": KIND_TANGENTIAL,
}


def make_catalog_curve(name: str, **kwargs) -> CurveSamples:
    try:
        builder = CATALOG[name]
    except KeyError:
        raise InputError(f"unknown catalog curve {name!r}; choices: {sorted(CATALOG)}")
    return builder(**kwargs)
