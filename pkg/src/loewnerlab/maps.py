"""Elementary conformal building blocks.

The whole toolkit is assembled from three map families on the upper
half-plane H:

* Moebius maps z -> (az+b)/(cz+d) with the point at infinity handled
  explicitly through a sentinel value;
* the square-root branch mapping the slit plane C minus the positive real
  axis onto H;
* the straight tilted-slit family: for a driving coefficient k the map that
  grows, in capacity time dt, a straight segment attached to the real axis
  at angle pi/2 - theta(k).  Its driving function is exactly t -> k*sqrt(t),
  which makes it the exact integrator cell for both Loewner solvers.

The slit map is realized in closed form as the two-power product
``(z + p)^(1-a) * (z - q)^a`` hydrodynamically normalized; ``p`` and ``q``
are derived analytically from (k, dt) below.  The forward direction (open a
slit) is closed form; the mapping-out direction is a guarded Newton
iteration with analytic seeds.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL
from .errors import BranchCutError, ConvergenceError, DomainError

# A single distinguished value stands in for the point at infinity; only
# Moebius maps ever produce or consume it.
INFINITY = complex(math.inf, 0.0)

# Largest |k| = |dW|/sqrt(dt) a single slit cell will represent before the
# solvers are asked to refine.  The family is defined for all real k, but the
# two-power exponents degenerate as |k| grows.
K_MAX = 100.0


def is_infinity(z) -> bool:
    return not (math.isfinite(z.real) and math.isfinite(z.imag))


def close(a: complex, b: complex, tol: float = DEFAULT_TOL) -> bool:
    """Point equality under the global absolute tolerance."""
    if is_infinity(a) or is_infinity(b):
        return is_infinity(a) and is_infinity(b)
    return abs(a - b) <= tol


# ---------------------------------------------------------------------------
# Driving-coefficient geometry of straight slits
# ---------------------------------------------------------------------------

def k_of_theta(theta: float) -> float:
    """Driving coefficient of the straight slit tilted by ``theta`` from vertical.

    Valid for 0 <= theta <= pi/4; the slit attached at angle pi/2 - theta is
    generated by the driving function t -> k*sqrt(t) with
    k = 8*theta / sqrt(pi^2 - 4*theta^2).
    """
    if not 0.0 <= theta <= math.pi / 4:
        raise DomainError(f"theta={theta} outside [0, pi/4]")
    return _k_from_theta(theta)


def _k_from_theta(theta: float) -> float:
    # Extended range used internally by the solvers: theta in (-pi/2, pi/2).
    return 8.0 * theta / math.sqrt(math.pi**2 - 4.0 * theta**2)


def theta_of_k(k: float) -> float:
    """Tilt angle (from vertical) of the slit driven by t -> k*sqrt(t)."""
    return 0.5 * math.pi * k / math.sqrt(k * k + 16.0)


def B_of_k(k: float) -> complex:
    """Capacity-scaled tip position of a straight slit: tip(t) = B(k)*sqrt(t).

    Requires k >= 0 (the mirrored slit is the conjugate-negated value).
    |B(k)| >= 2 always, with equality in the vertical limit k -> 0.
    """
    if k < 0:
        raise DomainError(f"k={k} must be nonnegative")
    return _B_from_k(k)


def _B_from_k(k: float) -> complex:
    root = math.sqrt(k * k + 16.0)
    modulus = 2.0 * ((root + k) / (root - k)) ** (k / (2.0 * root))
    return modulus * cmath.exp(1j * (0.5 * math.pi - theta_of_k(k)))


# ---------------------------------------------------------------------------
# Square-root branch
# ---------------------------------------------------------------------------

def sqrt_branch(z, tol: float = 0.0):
    """Square root on C minus the positive real axis, taking values in H.

    Accepts scalars or arrays.  Negative reals map onto the positive
    imaginary axis (-x*x -> i*x).  Points on the open positive real axis lie
    on the branch cut and are rejected; values within ``tol`` of the cut are
    resolved to the upper prime end.
    """
    arr = np.asarray(z, dtype=complex)
    on_cut = (arr.real > 0) & (np.abs(arr.imag) <= tol)
    bad = (arr.real > 0) & (arr.imag == 0) & ~on_cut
    if np.any(bad):
        raise BranchCutError("sqrt_branch undefined on the positive real axis")
    work = np.where(on_cut, arr.real + 0j, arr)
    # i*sqrt(-z) with the principal branch puts the image in the closed
    # upper half-plane and the cut on the positive reals.
    neg = -work
    neg = np.where(neg.imag == 0.0, neg.real + 0j, neg)  # clear negative zeros
    out = 1j * np.sqrt(neg)
    out = np.where(on_cut, np.abs(out.real) + 0j, out)
    if np.isscalar(z) or np.ndim(z) == 0:
        return complex(out)
    return out


# ---------------------------------------------------------------------------
# Moebius maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MobiusMap:
    """z -> (a*z + b)/(c*z + d) with ad - bc != 0."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if scale == 0 or abs(det) <= DEFAULT_TOL * scale * scale:
            raise DomainError("degenerate Moebius coefficients (ad - bc = 0)")

    def __call__(self, z):
        if np.isscalar(z) or np.ndim(z) == 0:
            z = complex(z)
            if is_infinity(z):
                return INFINITY if self.c == 0 else self.a / self.c
            den = self.c * z + self.d
            if den == 0:
                return INFINITY
            return (self.a * z + self.b) / den
        arr = np.asarray(z, dtype=complex)
        out = np.empty_like(arr)
        inf_mask = ~(np.isfinite(arr.real) & np.isfinite(arr.imag))
        den = self.c * arr + self.d
        pole = (den == 0) & ~inf_mask
        safe = ~inf_mask & ~pole
        out[safe] = (self.a * arr[safe] + self.b) / den[safe]
        out[pole] = INFINITY
        out[inf_mask] = INFINITY if self.c == 0 else self.a / self.c
        return out

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """Map acting as self after other: (self.compose(other))(z) = self(other(z))."""
        return MobiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    @classmethod
    def translation(cls, offset: complex) -> "MobiusMap":
        return cls(1.0, offset, 0.0, 1.0)

    @classmethod
    def scaling(cls, factor: complex) -> "MobiusMap":
        return cls(factor, 0.0, 0.0, 1.0)

    @classmethod
    def to_zero_inf(cls, p: complex, q: complex) -> "MobiusMap":
        """Map sending p -> 0 and q -> infinity."""
        if is_infinity(p):
            return cls(0.0, 1.0, 1.0, -q)
        if is_infinity(q):
            return cls(1.0, -p, 0.0, 1.0)
        return cls(1.0, -p, 1.0, -q)


# ---------------------------------------------------------------------------
# Tilted slit maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TiltedSlitParams:
    """Parameters of one straight-slit cell.

    k is the driving coefficient, theta the tilt from vertical (linked to k
    by theta_of_k), dt >= 0 the half-plane capacity increment, and base the
    real attachment point.
    """

    k: float
    theta: float = field(default=None)  # type: ignore[assignment]
    dt: float = 0.0
    base: float = 0.0

    def __post_init__(self):
        if self.dt < 0:
            raise DomainError("capacity increment dt must be >= 0")
        if abs(self.k) > K_MAX:
            raise DomainError(f"|k|={abs(self.k):.3g} exceeds the slit family range {K_MAX}")
        if self.theta is None:
            object.__setattr__(self, "theta", theta_of_k(self.k))
        elif abs(theta_of_k(self.k) - self.theta) > 1e-9:
            raise DomainError("theta inconsistent with k (must satisfy theta_of_k)")

    # Derived two-power parameters.  alpha*pi is the slit angle measured from
    # the positive real axis; p, q are the base prime-end offsets.
    @property
    def alpha(self) -> float:
        return 0.5 - self.k / (2.0 * math.sqrt(self.k * self.k + 16.0))

    @property
    def _m(self) -> float:
        return 4.0 * math.sqrt(self.dt) / math.sqrt(self.k * self.k + 16.0)

    @property
    def p(self) -> float:
        return self._m / (1.0 - self.alpha)

    @property
    def q(self) -> float:
        return self._m / self.alpha

    @property
    def driving_increment(self) -> float:
        """Image of the tip under the mapping-out function, relative to base."""
        return self.k * math.sqrt(self.dt)

    @property
    def tip(self) -> complex:
        """Position of the grown slit's tip: base + B(k)*sqrt(dt)."""
        return self.base + _B_from_k(self.k) * math.sqrt(self.dt)


def _two_power(zrel, alpha: float, p: float, q: float):
    """(z + p)^(1-alpha) * (z - q)^alpha with boundary values taken from H.

    The domain is the closed upper half-plane; negative-zero or rounding-dust
    imaginary parts would flip the branch across the real axis, so they are
    snapped back to the boundary.
    """
    zrel = np.asarray(zrel, dtype=complex)
    dust = (zrel.imag < 0) & (zrel.imag >= -1e-9 * np.abs(zrel))
    zrel = np.where(dust, zrel.real + 0j, zrel)
    zp = zrel + p
    zq = zrel - q
    zp = np.where(zp.imag == 0.0, zp.real + 0j, zp)
    zq = np.where(zq.imag == 0.0, zq.real + 0j, zq)
    return zp ** (1.0 - alpha) * zq**alpha


def _two_power_deriv_factor(zrel, alpha: float, p: float, q: float):
    """F'(z)/F(z) = (1-alpha)/(z+p) + alpha/(z-q)."""
    return (1.0 - alpha) / (zrel + p) + alpha / (zrel - q)


def tilted_slit_forward(params: TiltedSlitParams, z):
    """Open a straight slit: conformal map of H onto H minus the slit.

    Hydrodynamically normalized, z - 2*dt/z + o(1/z) at infinity.  Real
    arguments inside the base interval (base-p, base+q) return the slit-side
    boundary values approached from H.
    """
    scalar = np.isscalar(z) or np.ndim(z) == 0
    arr = np.asarray(z, dtype=complex)
    if params.dt == 0.0:
        return complex(arr) if scalar else arr.copy()
    rel = arr - params.base
    out = params.base + _two_power(rel, params.alpha, params.p, params.q)
    return complex(out) if scalar else out


def tilted_slit_inverse(params: TiltedSlitParams, w, side: str | None = None,
                        tol: float = 1e-12, maxiter: int = 60):
    """Map out the straight slit: inverse of :func:`tilted_slit_forward`.

    ``w`` must lie in the closure of H minus the slit.  A point on the open
    slit has two prime ends; pass side="left" or side="right" to select the
    boundary image, otherwise such points raise :class:`DomainError`.
    """
    if side is not None:
        return _slit_prime_end(params, w, side)
    scalar = np.isscalar(w) or np.ndim(w) == 0
    arr = np.atleast_1d(np.asarray(w, dtype=complex))
    if params.dt == 0.0:
        out = arr.copy()
        return complex(out[0]) if scalar else out.reshape(np.shape(w))

    alpha, p, q = params.alpha, params.p, params.q
    rel_target = arr - params.base
    tip_rel = params.tip - params.base
    xstar = params.driving_increment  # tip preimage, relative to base
    scale = max(math.sqrt(params.dt), 1e-300)

    # The tip is a one-sided boundary point whose image is the driving value;
    # interior slit points are two-sided and need an explicit side.
    at_tip = np.abs(rel_target - tip_rel) <= 1e-9 * (abs(tip_rel) + scale)
    on_slit = _on_slit_mask(rel_target, tip_rel, tol=1e-12 * scale) & ~at_tip
    if np.any(on_slit):
        raise DomainError(
            "point lies on the slit; request a prime end with side='left'/'right'"
        )

    sol = np.full_like(rel_target, np.nan)
    resid = np.full(rel_target.shape, np.inf)
    sol[at_tip] = xstar
    resid[at_tip] = 0.0

    # Real targets live on the two monotone real branches; bisection there is
    # exact-side and unconditionally stable.
    real_mask = (np.abs(rel_target.imag) <= 1e-14 * np.maximum(1.0, np.abs(rel_target))) & ~at_tip
    if np.any(real_mask):
        xr = _invert_real_branch(rel_target.real[real_mask], alpha, p, q)
        sol[real_mask] = xr
        resid[real_mask] = np.abs(_two_power(sol[real_mask], alpha, p, q) - rel_target[real_mask])

    with np.errstate(divide="ignore", invalid="ignore"):
        for seed in _inverse_seeds(rel_target, params):
            pending = resid > tol * np.maximum(1.0, np.abs(rel_target))
            if not np.any(pending):
                break
            cand = seed[pending].copy()
            target = rel_target[pending]
            cand = _newton_two_power(cand, target, alpha, p, q, maxiter)
            cand_res = np.abs(_two_power(cand, alpha, p, q) - target)
            cand_res = np.where(np.isfinite(cand_res), cand_res, np.inf)
            old = resid[pending]
            better = cand_res < old
            idx = np.flatnonzero(pending)[better]
            sol[idx] = cand[better]
            resid[idx] = cand_res[better]

    ok = resid <= tol * np.maximum(1.0, np.abs(rel_target))
    if not np.all(ok):
        worst = float(np.max(resid[~ok]))
        raise ConvergenceError(
            f"slit inversion failed for {int(np.sum(~ok))} point(s), residual {worst:.3g}"
        )
    # Boundary dust: inputs on the real axis must come back real.
    real_in = np.abs(arr.imag) <= 1e-14 * np.maximum(1.0, np.abs(arr.real))
    sol.imag[real_in & (np.abs(sol.imag) <= 1e-9 * scale)] = 0.0
    sol.imag = np.maximum(sol.imag, 0.0)
    out = sol + params.base
    return complex(out[0]) if scalar else out.reshape(np.shape(w))


def _on_slit_mask(rel, tip_rel, tol):
    # Distance to the straight segment [0, tip_rel].
    unit = tip_rel / abs(tip_rel) if abs(tip_rel) > 0 else 1.0
    proj = (rel * np.conj(unit)).real
    proj = np.clip(proj, 0.0, abs(tip_rel))
    return np.abs(rel - proj * unit) <= tol


def _inverse_seeds(rel_target, params: TiltedSlitParams):
    """Analytic starting points for the Newton inversion, best first."""
    dt = params.dt
    tip_rel = params.tip - params.base
    xstar = params.driving_increment
    # Vertical-slit-style seed, exact for k = 0 and accurate at large |w|.
    sq = rel_target * rel_target + 4.0 * dt
    sq = np.where(sq.imag == 0.0, sq.real + 0j, sq)
    s = np.sqrt(np.abs(sq)) * np.exp(0.5j * np.angle(sq))
    s = np.where(s.imag < 0, -s, s)
    yield s
    # Near-tip seeds from the quadratic behaviour at the critical point.
    fpp = tip_rel * (-params.alpha * (1.0 - params.alpha) / (params._m**2))
    h = np.sqrt(2.0 * (rel_target - tip_rel) / fpp)
    for sgn in (1.0, -1.0):
        cand = xstar + sgn * h
        cand = np.where(cand.imag < 0, np.conj(cand), cand)
        yield cand
    # Seeds next to the slit's prime ends, for points hugging the slit.
    unit = tip_rel / abs(tip_rel)
    proj = np.clip((rel_target * np.conj(unit)).real, 0.0, abs(tip_rel))
    offset = np.abs(rel_target - proj * unit)
    rho = np.minimum(proj, abs(tip_rel) * (1 - 1e-12))
    for side_lo, side_hi in ((-params.p, xstar), (params.q, xstar)):
        x = _radial_bisect(rho, params.alpha, params.p, params.q, side_lo, side_hi)
        slope = np.abs(_two_power(x, params.alpha, params.p, params.q)
                       * _two_power_deriv_factor(x, params.alpha, params.p, params.q))
        lift = offset / np.maximum(slope, 1e-30)
        yield x + 1j * np.maximum(lift, 1e-14 * abs(tip_rel))


def _radial_bisect(rho, alpha, p, q, lo_val, hi_val, iters=80):
    """Preimage on one side of the base interval with |F| = rho (vectorized)."""
    lo = np.full(np.shape(rho), float(lo_val))
    hi = np.full(np.shape(rho), float(hi_val))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = np.abs(_two_power(mid.astype(complex), alpha, p, q)) < rho
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return (0.5 * (lo + hi)).astype(complex)


def _invert_real_branch(w, alpha, p, q):
    """Invert the two-power map for real targets off the base interval.

    The map is monotone increasing on each of (-inf, -p] and [q, inf), with
    value 0 at both interval endpoints, so signed targets identify the branch.
    """
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    span = p + q

    def f_right(x):
        return np.exp((1.0 - alpha) * np.log(x + p) + alpha * np.log(x - q))

    def f_left(x):
        return -np.exp((1.0 - alpha) * np.log(-x - p) + alpha * np.log(q - x))

    pos = w > 0
    if np.any(pos):
        t = w[pos]
        lo = np.full_like(t, q)
        hi = np.maximum(t + span, q + span) + q
        grow = f_right(hi) < t
        while np.any(grow):
            hi[grow] = 2.0 * hi[grow] + span
            grow = f_right(hi) < t
        for _ in range(110):
            mid = 0.5 * (lo + hi)
            below = f_right(mid) < t
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out[pos] = 0.5 * (lo + hi)
    neg = w < 0
    if np.any(neg):
        t = w[neg]
        hi = np.full_like(t, -p)
        lo = np.minimum(t - span, -p - span) - p
        grow = f_left(lo) > t
        while np.any(grow):
            lo[grow] = 2.0 * lo[grow] - span
            grow = f_left(lo) > t
        for _ in range(110):
            mid = 0.5 * (lo + hi)
            below = f_left(mid) < t
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out[neg] = 0.5 * (lo + hi)
    if np.any(w == 0):
        raise DomainError(
            "real target at the slit base is a two-sided prime end; use side="
        )
    return out.astype(complex)


def _newton_two_power(z, target, alpha, p, q, maxiter):
    for _ in range(maxiter):
        val = _two_power(z, alpha, p, q)
        err = val - target
        if np.all(np.abs(err) <= 1e-15 * np.maximum(1.0, np.abs(target))):
            break
        deriv = val * _two_power_deriv_factor(z, alpha, p, q)
        deriv = np.where(deriv == 0, 1e-300, deriv)
        step = err / deriv
        # Keep iterates in the closed upper half-plane.
        znew = z - step
        znew = np.where(znew.imag < 0, znew.real + 0j, znew)
        z = znew
    return z


def _slit_prime_end(params: TiltedSlitParams, w, side: str):
    """Boundary preimages of a point on the open slit, by bisection in radius."""
    if side not in ("left", "right"):
        raise DomainError("side must be 'left' or 'right'")
    rho = abs(complex(w) - params.base)
    tip_rho = abs(params.tip - params.base)
    if rho > tip_rho * (1 + 1e-9):
        raise DomainError("point is beyond the slit tip")
    alpha, p, q = params.alpha, params.p, params.q
    xstar = params.driving_increment
    lo, hi = (-p, xstar) if side == "left" else (q, xstar)

    def radius(x):
        return abs(_two_power(np.asarray(x, dtype=complex), alpha, p, q))

    # |F| is monotone from 0 at the base prime end to |tip| at the preimage
    # of the tip, on each side.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if radius(mid) < rho:
            lo = mid
        else:
            hi = mid
    return params.base + 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Compositions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SqrtStep:
    """Square-root branch folded with an affine normalization.

    Forward: z -> scale * i * sqrt((z - p1)/(z - p0)), the opening map used
    by the arc uniformizer (p0 -> infinity, p1 -> 0).  Closed form both ways.
    """

    p0: complex
    p1: complex
    scale: complex = 1.0

    def apply(self, z):
        mob = MobiusMap.to_zero_inf(self.p1, self.p0)
        u = mob(z)
        u = np.where(np.ndim(u) and u.imag == 0.0, u.real + 0j, u) if np.ndim(u) else u
        out = self.scale * 1j * np.sqrt(np.asarray(u, dtype=complex))
        # The principal sqrt maps to Re >= 0, so i*sqrt lands in H; flips are
        # only needed for boundary dust.
        out = np.where(out.imag < 0, -out, out)
        if np.isscalar(z) or np.ndim(z) == 0:
            return complex(out)
        return out

    def invert(self, w):
        u = (np.asarray(w, dtype=complex) / (1j * self.scale)) ** 2
        out = np.where(
            u == 1.0, INFINITY, (self.p1 - self.p0 * u) / (1.0 - u)
        )
        if np.isscalar(w) or np.ndim(w) == 0:
            return complex(out)
        return out


@dataclass(frozen=True)
class SlitStep:
    """One zipper cell: forward direction is the mapping-out of the slit."""

    params: TiltedSlitParams

    def apply(self, z):
        return tilted_slit_inverse(self.params, z)

    def invert(self, w):
        return tilted_slit_forward(self.params, w)


@dataclass(frozen=True)
class MobiusStep:
    mob: MobiusMap

    def apply(self, z):
        return self.mob(z)

    def invert(self, w):
        return self.mob.inverse()(w)


@dataclass
class ConformalComposition:
    """Ordered list of elementary steps with forward/inverse evaluation.

    ``apply`` runs the steps in order (the uniformizing direction);
    ``invert`` runs the inverses in reverse order.  ``normalization`` records
    which input points map to 0 and infinity.
    """

    steps: list
    normalization: dict = field(default_factory=dict)

    def apply(self, z):
        out = z
        for step in self.steps:
            out = step.apply(out)
        return out

    def invert(self, w):
        out = w
        for step in reversed(self.steps):
            out = step.invert(out)
        return out

    def extended(self, step) -> "ConformalComposition":
        return ConformalComposition(self.steps + [step], dict(self.normalization))
