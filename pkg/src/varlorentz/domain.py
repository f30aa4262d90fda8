"""Balls in R^d, variable exponents on them, and piecewise-linear radial profiles.

All functions in the package are radial about the centre of a ball, so a
function is stored as its radial profile ``v(r)`` on ``[0, a]``.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from . import _quad


def unit_ball_volume(d):
    """Volume of the unit ball in R^d, ``pi^(d/2) / Gamma(d/2 + 1)``."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@dataclass(frozen=True)
class BallDomain:
    """Open ball of the given radius in R^dim."""

    dim: int
    radius: float
    center: tuple = None

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim!r}")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "radius", float(self.radius))
        center = (0.0,) * self.dim if self.center is None else tuple(map(float, self.center))
        if len(center) != self.dim:
            raise ValueError("center has the wrong dimension")
        object.__setattr__(self, "center", center)

    @property
    def unit_volume(self):
        return unit_ball_volume(self.dim)

    def measure(self):
        return self.unit_volume * self.radius ** self.dim

    def ball_measure(self, r):
        """Measure of the concentric ball of radius ``r`` (array-friendly)."""
        return self.unit_volume * np.asarray(r, dtype=float) ** self.dim

    def radius_of_measure(self, m):
        """Inverse of :meth:`ball_measure`."""
        return (np.asarray(m, dtype=float) / self.unit_volume) ** (1.0 / self.dim)

    def with_radius(self, radius):
        return BallDomain(self.dim, radius, self.center)


# ---------------------------------------------------------------------------
# radial scalar fields


class RadialField:
    """A function of ``r = |x - x0|``.

    Subclasses implement ``__call__`` on arrays and may report ``breakpoints``
    (radii where the field has a kink) so quadrature can split there.
    """

    def __call__(self, r):
        raise NotImplementedError

    def breakpoints(self):
        return ()

    def at_log(self, y):
        """Value at radius ``exp(-y)``; subclasses avoid the underflow for huge ``y``."""
        return self(np.exp(-np.asarray(y, dtype=float)))

    bounded = True

    def extrema(self, radius):
        """(inf, sup) of the field over ``(0, radius]``."""
        r = np.concatenate([np.geomspace(radius * 1e-300, radius, 2000),
                            [b for b in self.breakpoints() if 0 < b < radius]])
        v = self(r)
        return float(np.min(v)), float(np.max(v))


@dataclass(frozen=True)
class ConstantExponent(RadialField):
    q0: float

    def __post_init__(self):
        if not self.q0 >= 1:
            raise ValueError(f"exponent must be >= 1, got {self.q0!r}")
        object.__setattr__(self, "q0", float(self.q0))

    def __call__(self, r):
        return np.full(np.shape(r), self.q0)

    def extrema(self, radius):
        return self.q0, self.q0

    clamped = False


@dataclass(frozen=True)
class LogSingularExponent(RadialField):
    """``q(r) = p* - C / |log(1/r)|^ell`` for ``r <= eta``, frozen beyond ``eta``.

    ``p* = dp/(d-p)``.  Values are clamped into ``[1, p*]``; ``clamped`` tells
    whether the clamp is active anywhere.
    """

    p: float
    d: int
    C: float
    ell: float
    eta: float

    def __post_init__(self):
        if not (1 <= self.p < self.d):
            raise ValueError(f"need 1 <= p < d, got p={self.p}, d={self.d}")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError("d must be an integer >= 2")
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not (0 < self.ell <= 1):
            raise ValueError("ell must lie in (0, 1]")
        if not (0 < self.eta < 1):
            raise ValueError("eta must lie in (0, 1)")
        for name in ("p", "C", "ell", "eta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "d", int(self.d))

    @property
    def critical(self):
        return self.d * self.p / (self.d - self.p)

    def unclamped(self, r):
        r = np.minimum(np.asarray(r, dtype=float), self.eta)
        with np.errstate(divide="ignore"):
            L = -np.log(r)
        return self.critical - self.C / L ** self.ell

    def __call__(self, r):
        return np.clip(self.unclamped(r), 1.0, self.critical)

    def at_log(self, y):
        y = np.maximum(np.asarray(y, dtype=float), -math.log(self.eta))
        return np.clip(self.critical - self.C / y ** self.ell, 1.0, self.critical)

    @property
    def clamp_radius(self):
        """Radius below which the clamp at 1 is inactive (None if never active)."""
        gap = self.critical - 1.0
        if gap <= 0:
            return None
        r = math.exp(-((self.C / gap) ** (1.0 / self.ell)))
        return r if r < self.eta else None

    @property
    def clamped(self):
        return self.clamp_radius is not None or self.critical <= 1.0

    def breakpoints(self):
        out = [self.eta]
        if self.clamp_radius is not None:
            out.append(self.clamp_radius)
        return tuple(sorted(out))

    def extrema(self, radius):
        lo = float(self(min(radius, self.eta)))
        return lo, self.critical


# ---------------------------------------------------------------------------
# radial profiles


def _as_readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Piecewise-linear radial function on a ball.

    ``knots`` run from 0 to ``domain.radius`` and are nondecreasing; a radius
    repeated twice marks a jump (left value, then right value).  Outside the
    ball the function is 0.
    """

    domain: BallDomain
    knots: np.ndarray
    values: np.ndarray
    tags: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        k = np.array(self.knots, dtype=float)
        v = np.array(self.values, dtype=float)
        if k.ndim != 1 or k.shape != v.shape or k.size < 2:
            raise ValueError("knots and values must be 1-d arrays of equal length >= 2")
        if not np.all(np.isfinite(v)) or not np.all(np.isfinite(k)):
            raise ValueError("knots and values must be finite")
        a = self.domain.radius
        if k[0] != 0.0:
            raise ValueError("first knot must be 0")
        if abs(k[-1] - a) > 1e-12 * a:
            raise ValueError(f"last knot must equal the domain radius {a}")
        k[-1] = a
        dk = np.diff(k)
        if np.any(dk < 0):
            raise ValueError("knots must be nondecreasing")
        if np.any((dk[:-1] == 0) & (dk[1:] == 0)):
            raise ValueError("a radius may appear at most twice")
        if dk[0] == 0 or dk[-1] == 0:
            raise ValueError("jumps at r = 0 or at the boundary are not representable")
        object.__setattr__(self, "knots", _as_readonly(k))
        object.__setattr__(self, "values", _as_readonly(v))

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, domain, c=1.0):
        return cls(domain, [0.0, domain.radius], [c, c])

    @classmethod
    def tent(cls, domain, height=1.0):
        """``height (1 - r/a)``."""
        return cls(domain, [0.0, domain.radius], [height, 0.0])

    @classmethod
    def plateau_tent(cls, domain, support=None, height=1.0):
        """1 on ``[0, s/2]``, linear down to 0 at ``s``, 0 beyond (s = support)."""
        a = domain.radius
        s = a if support is None else float(support)
        if not 0 < s <= a:
            raise ValueError("support must lie in (0, radius]")
        knots = [0.0, s / 2, s] + ([a] if s < a else [])
        values = [height, height, 0.0] + ([0.0] if s < a else [])
        return cls(domain, knots, values)

    @classmethod
    def steps(cls, domain, radii, levels):
        """Piecewise-constant profile: ``levels[i]`` on ``(radii[i-1], radii[i])``.

        ``radii`` are the interior jump radii, so ``len(levels) == len(radii) + 1``.
        """
        radii = [float(r) for r in radii]
        if len(levels) != len(radii) + 1:
            raise ValueError("need one more level than jump radius")
        edges = [0.0] + radii + [domain.radius]
        if any(b <= a_ for a_, b in zip(edges, edges[1:])):
            raise ValueError("jump radii must increase strictly inside (0, radius)")
        knots, values = [], []
        for i, c in enumerate(levels):
            knots += [edges[i], edges[i + 1]]
            values += [c, c]
        return cls(domain, knots, values)

    @classmethod
    def annulus_indicator(cls, domain, r1, r2, c=1.0):
        """``c`` on the annulus ``r1 < r < r2`` (``r1 = 0`` gives a ball)."""
        a = domain.radius
        if not 0 <= r1 < r2 <= a:
            raise ValueError("need 0 <= r1 < r2 <= radius")
        radii, levels = [], []
        if r1 > 0:
            radii.append(r1)
            levels.append(0.0)
        levels.append(c)
        if r2 < a:
            radii.append(r2)
            levels.append(0.0)
        return cls.steps(domain, radii, levels)

    @classmethod
    def from_function(cls, domain, fn, n_knots=2048, spacing="log", r_min=None):
        """Sample ``fn`` on a knot grid (log-spaced near 0 by default).

        The value at r = 0 is taken from the first positive knot, which keeps
        functions that blow up at the origin finite.
        """
        a = domain.radius
        if spacing == "log":
            r_min = a * 1e-12 if r_min is None else r_min
            knots = np.concatenate([[0.0], np.geomspace(r_min, a, n_knots - 1)])
        elif spacing == "linear":
            knots = np.linspace(0.0, a, n_knots)
        else:
            raise ValueError(f"unknown spacing {spacing!r}")
        vals = np.asarray(fn(knots[1:]), dtype=float)
        return cls(domain, knots, np.concatenate([[vals[0]], vals]))

    # -- evaluation -------------------------------------------------------

    def _interp(self, r, side):
        r = np.asarray(r, dtype=float)
        k, v = self.knots, self.values
        i = np.searchsorted(k, r, side=side) - 1
        i = np.clip(i, 0, k.size - 2)
        # land on a positive-length interval
        if side == "left":
            i = np.where(k[i + 1] == k[i], np.maximum(i - 1, 0), i)
        else:
            i = np.where(k[i + 1] == k[i], np.minimum(i + 1, k.size - 2), i)
        k0, k1 = k[i], k[i + 1]
        t = np.where(k1 > k0, (r - k0) / np.where(k1 > k0, k1 - k0, 1.0), 0.0)
        out = v[i] + t * (v[i + 1] - v[i])
        return np.where((r < 0) | (r > self.domain.radius), 0.0, out)

    def __call__(self, r):
        """Right-continuous evaluation; 0 outside the ball."""
        return self._interp(r, "right")

    def left_limit(self, r):
        return self._interp(r, "left")

    def right_limit(self, r):
        return self._interp(r, "right")

    @property
    def sup(self):
        return float(np.max(np.abs(self.values)))

    @cached_property
    def is_decreasing(self):
        return bool(np.all(np.diff(self.values) <= 0) and self.values[-1] >= 0)

    @property
    def has_jumps(self):
        return bool(np.any(np.diff(self.knots) == 0))

    def intervals(self):
        """Positive-length pieces as arrays ``(r0, r1, v0, v1)``."""
        k, v = self.knots, self.values
        m = np.diff(k) > 0
        return k[:-1][m], k[1:][m], v[:-1][m], v[1:][m]

    def slopes(self):
        r0, r1, v0, v1 = self.intervals()
        return (v1 - v0) / (r1 - r0)

    # -- transformations --------------------------------------------------

    def _replace(self, knots, values, domain=None):
        return RadialProfile(domain or self.domain, knots, values)

    def __mul__(self, c):
        return self._replace(self.knots, self.values * float(c))

    __rmul__ = __mul__

    def abs(self):
        """``|f|`` with zero crossings inserted as knots so it stays piecewise linear."""
        k, v = self.knots, self.values
        if np.all(v >= 0):
            return self
        nk, nv = [k[0]], [abs(v[0])]
        for i in range(k.size - 1):
            v0, v1 = v[i], v[i + 1]
            if k[i + 1] > k[i] and v0 * v1 < 0:
                rz = k[i] + (k[i + 1] - k[i]) * v0 / (v0 - v1)
                nk.append(rz)
                nv.append(0.0)
            nk.append(k[i + 1])
            nv.append(abs(v1))
        return self._replace(nk, nv)

    def restrict(self, rho):
        """``f * chi_{B_rho}``."""
        return self.combine([self], [1.0], cut=(0.0, rho))

    def cut_inside(self, t):
        """``(1 - chi_{B_t}) f``."""
        return self.combine([self], [1.0], cut=(t, self.domain.radius))

    def clip_above(self, level):
        """``min(f, level)`` for a nonnegative decreasing profile (flattens the top)."""
        if not self.is_decreasing:
            raise ValueError("clip_above expects a decreasing profile")
        k, v = self.knots, self.values
        if level >= v[0]:
            return self
        # first radius where f drops to `level`
        j = int(np.searchsorted(-v, -level, side="left"))
        j = max(j, 1)
        r0, r1, v0, v1 = k[j - 1], k[j], v[j - 1], v[j]
        rc = r1 if v0 == v1 else r0 + (r1 - r0) * (v0 - level) / (v0 - v1)
        keep = k > rc
        nk = np.concatenate([[0.0, rc], k[keep]])
        nv = np.concatenate([[level, level], v[keep]])
        return self._replace(nk, nv)

    def on_domain(self, domain):
        """Same function viewed on a concentric ball of another radius."""
        if domain.dim != self.domain.dim:
            raise ValueError("dimension mismatch")
        a_new, a = domain.radius, self.domain.radius
        if a_new >= a:
            if a_new == a:
                return self._replace(self.knots, self.values, domain)
            k = np.concatenate([self.knots, [a, a_new]]) if self.values[-1] != 0 else \
                np.concatenate([self.knots, [a_new]])
            v = np.concatenate([self.values, [0.0, 0.0]]) if self.values[-1] != 0 else \
                np.concatenate([self.values, [0.0]])
            return RadialProfile(domain, k, v)
        if np.any(np.abs(self.values[self.knots > a_new]) > 0) or abs(self.left_limit(a_new)) > 0:
            raise ValueError("profile is not supported inside the smaller ball")
        keep = self.knots < a_new
        return RadialProfile(domain, np.concatenate([self.knots[keep], [a_new]]),
                             np.concatenate([self.values[keep], [0.0]]))

    def dilate(self, n, amplitude=1.0, domain=None):
        """``amplitude * f(n r)`` on ``domain`` (defaults to the current ball).

        ``f`` is taken as 0 outside its own ball, so the result is supported
        in the ball of radius ``a/n``.
        """
        domain = domain or self.domain
        a = self.domain.radius
        k = self.knots / n
        v = self.values * amplitude
        if k[-1] > domain.radius * (1 + 1e-12):
            raise ValueError("dilated profile does not fit in the target ball")
        small = RadialProfile(self.domain.with_radius(k[-1]), k, v)
        return small.on_domain(domain)

    @classmethod
    def combine(cls, profiles, coeffs, cut=None):
        """``sum_i c_i f_i`` on a common ball, optionally multiplied by ``chi`` of
        the annulus ``cut = (lo, hi)``.  Jumps are carried over exactly."""
        dom = profiles[0].domain
        if any(p.domain.dim != dom.dim or p.domain.radius != dom.radius for p in profiles):
            raise ValueError("profiles must live on the same ball")
        a = dom.radius
        radii = np.unique(np.concatenate([p.knots for p in profiles]))
        if cut is not None:
            lo, hi = float(cut[0]), float(cut[1])
            radii = np.unique(np.concatenate([radii, [r for r in (lo, hi) if 0 < r < a]]))
        left = sum(c * p.left_limit(radii) for p, c in zip(profiles, coeffs))
        right = sum(c * p.right_limit(radii) for p, c in zip(profiles, coeffs))
        left = np.asarray(left, dtype=float) * np.ones_like(radii)
        right = np.asarray(right, dtype=float) * np.ones_like(radii)
        if cut is not None:
            inside_l = (radii > lo) & (radii <= hi)
            inside_r = (radii >= lo) & (radii < hi)
            left = np.where(inside_l, left, 0.0)
            right = np.where(inside_r, right, 0.0)
            if hi >= a:
                left[-1] = left[-1] if radii[-1] > lo else 0.0
        left[0] = right[0]
        right[-1] = left[-1]
        # a jump needs a jumping summand or a cut edge; otherwise the two sums
        # differ only by rounding
        jumps = np.zeros(radii.size, dtype=bool)
        for prof in profiles:
            jumps |= np.isin(radii, prof.knots[:-1][np.diff(prof.knots) == 0])
        if cut is not None:
            jumps |= (radii == lo) | (radii == hi)
        left = np.where(jumps, left, right)
        knots, values = [], []
        for r, vl, vr in zip(radii, left, right):
            if vl == vr or r == 0.0 or r == a:
                knots.append(r)
                values.append(vl if r == a else vr)
            else:
                knots += [r, r]
                values += [vl, vr]
        return cls(dom, knots, values)

    # -- norms ------------------------------------------------------------

    def lp_norm(self, p):
        return lp_norm_radial(self, p)

    def seminorm(self, p, zero_trace=False):
        return sobolev_seminorm_radial(self, p, zero_trace=zero_trace)


def lp_norm_radial(f, p):
    """``(int_Omega |f|^p dx)^(1/p)`` for a radial profile."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    exact = getattr(f, "exact_lp_norm", None)
    if exact is not None:
        return exact(p)
    g = f.abs()
    d, nu = g.domain.dim, g.domain.unit_volume
    r0, r1, v0, v1 = g.intervals()
    if float(p).is_integer():
        # integrand is a polynomial of degree p + d - 1: Gauss is exact
        n = int(p + d) // 2 + 2
        x, w = _quad.gauss_legendre(n)
        half, mid = 0.5 * (r1 - r0), 0.5 * (r1 + r0)
        r = mid[:, None] + half[:, None] * x
        t = (r - r0[:, None]) / (r1 - r0)[:, None]
        v = v0[:, None] + t * (v1 - v0)[:, None]
        total = np.sum(half[:, None] * w * v ** p * r ** (d - 1))
    else:
        total = 0.0
        for a_, b_, va, vb in zip(r0, r1, v0, v1):
            fn = lambda r: (va + (r - a_) * (vb - va) / (b_ - a_)) ** p * r ** (d - 1)
            total += integrate.quad(fn, a_, b_, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return float((d * nu * total) ** (1.0 / p))


def sobolev_seminorm_radial(f, p, zero_trace=False):
    """``||grad f||_{L^p}`` of a continuous piecewise-linear radial profile.

    The radial slope is constant on each knot interval, so the integral is
    exact.  ``zero_trace=True`` insists on ``f(a) = 0`` (a ``W_0^{1,p}`` element).
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    exact = getattr(f, "exact_seminorm", None)
    if exact is not None:
        return exact(p)
    if f.has_jumps:
        raise ValueError("profile has jumps; its gradient is not in L^p")
    if zero_trace and f.values[-1] != 0:
        raise ValueError("profile does not vanish on the boundary")
    r0, r1, v0, v1 = f.intervals()
    slope = np.abs((v1 - v0) / (r1 - r0))
    shell = f.domain.unit_volume * (r1 ** f.domain.dim - r0 ** f.domain.dim)
    return float(np.sum(slope ** p * shell) ** (1.0 / p))
