"""Distribution functions and rearrangements of piecewise-linear radial profiles.

Everything is exact up to floating point: on a linear piece of the profile the
super-level set ``{|f| > lam}`` is a sub-interval in radius whose endpoint is
linear in ``lam``, so measures of level sets are sums of ``nu_d (b^d - a^d)``.
The decreasing rearrangement is the generalized inverse of that measure and
is evaluated by bisection inside the value gap that contains the answer.
"""

from dataclasses import dataclass

import numpy as np

from . import _quad
from .domain import RadialProfile, lp_norm_radial

_BISECT_STEPS = 200


class LevelSets:
    """Level-set structure of ``|f|`` for a radial profile ``f``.

    The distinct knot values ``0 = V_0 < V_1 < ... < V_m`` split the value
    axis into gaps.  Inside gap ``k`` (``V_k <= lam < V_{k+1}``) every piece
    of the profile is either entirely above ``lam`` (it contributes its full
    shell measure) or crosses the gap (it contributes a partial shell).
    """

    def __init__(self, f):
        g = f.abs()
        self.profile = g
        dom = g.domain
        self.domain = dom
        self.dim = dom.dim
        self.nu = dom.unit_volume
        self.total = dom.measure()
        r0, r1, v0, v1 = g.intervals()
        self.r0, self.r1, self.v0, self.v1 = r0, r1, v0, v1
        V = np.unique(np.concatenate([[0.0], v0, v1]))
        self.values = V
        d = self.dim
        shell = self.nu * (r1 ** d - r0 ** d)
        lo_v = np.minimum(v0, v1)
        hi_v = np.maximum(v0, v1)
        i_lo = np.searchsorted(V, lo_v)
        i_hi = np.searchsorted(V, hi_v)
        n_gap = V.size  # gap V.size-1 is [V_max, inf): nothing above
        # pieces entirely above gap k are those with i_lo >= k + 1
        full = np.zeros(n_gap + 1)
        np.add.at(full, i_lo, shell)
        self._full = np.cumsum(full[::-1])[::-1][1:]
        # every piece above the gap: the whole ball, which the shell sum only
        # reaches up to rounding
        n_full = np.cumsum(np.bincount(i_lo, minlength=n_gap + 1)[::-1])[::-1][1:]
        self._full[n_full == r0.size] = self.total
        # pieces crossing gap k: i_lo <= k < i_hi
        count = i_hi - i_lo
        piece = np.repeat(np.arange(r0.size), count)
        start = np.repeat(np.cumsum(count) - count, count)
        gap = i_lo[piece] + (np.arange(piece.size) - start)
        order = np.argsort(gap, kind="stable")
        self._act_piece = piece[order]
        self._act_ptr = np.concatenate([[0], np.cumsum(np.bincount(gap, minlength=n_gap))])
        plateau = np.zeros(n_gap)
        flat = lo_v == hi_v
        np.add.at(plateau, i_lo[flat], shell[flat])
        self._plateau = plateau
        self.above = self.measure_above(V)  # d_f(V_k)
        # pieces at or above V_k, except plateaus at V_k, cover the whole ball
        n_ge = np.cumsum(np.bincount(i_lo, minlength=n_gap)[::-1])[::-1]
        n_ge = n_ge - np.bincount(i_lo[flat], minlength=n_gap)
        self.above[n_ge == r0.size] = self.total
        self.at_least = self.above + plateau  # |{|f| >= V_k}|
        self.at_least[0] = self.total
        # a gap no piece crosses carries no measure: tie its ends together exactly
        empty = np.flatnonzero(np.diff(self._act_ptr)[:-1] == 0)
        self.at_least[empty + 1] = self.above[empty]

    # -- forward maps -----------------------------------------------------

    def _gap_of(self, lam):
        return np.searchsorted(self.values, lam, side="right") - 1

    def _crossing_terms(self, lam, k):
        """Flat (index into lam, measure) for crossing pieces of gap ``k[i]``."""
        n = self._act_ptr[k + 1] - self._act_ptr[k]
        owner = np.repeat(np.arange(lam.size), n)
        start = np.repeat(np.cumsum(n) - n, n)
        pos = self._act_ptr[k][owner] + (np.arange(owner.size) - start)
        i = self._act_piece[pos]
        r0, r1, v0, v1 = self.r0[i], self.r1[i], self.v0[i], self.v1[i]
        x = lam[owner]
        frac = np.clip((x - v0) / (v1 - v0), 0.0, 1.0)
        rc = np.where(frac == 1.0, r1, r0 + (r1 - r0) * frac)
        dec = v0 > v1
        a = np.where(dec, r0, rc)
        b = np.where(dec, rc, r1)
        return owner, a, b

    def measure_above(self, lam):
        """Exact ``|{|f| > lam}|`` (vectorised)."""
        lam = np.asarray(lam, dtype=float)
        shape = lam.shape
        lam = lam.ravel()
        out = np.zeros(lam.size)
        k = self._gap_of(lam)
        neg = lam < 0
        inside = (k >= 0) & (k < self.values.size - 1) & ~neg
        idx = np.flatnonzero(inside)
        if idx.size:
            kk = k[idx]
            owner, a, b = self._crossing_terms(lam[idx], kk)
            part = np.bincount(owner, weights=self.nu * (b ** self.dim - a ** self.dim),
                               minlength=idx.size)
            out[idx] = self._full[kk] + part
        out[neg] = self.total
        return out.reshape(shape)

    def measure_at_least(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = self.measure_above(lam)
        j = np.searchsorted(self.values, lam)
        hit = (j < self.values.size) & (self.values[np.minimum(j, self.values.size - 1)] == lam)
        out = np.where(hit, self.at_least[np.minimum(j, self.values.size - 1)], out)
        return np.where(lam <= 0, self.total, out)

    def annuli(self, lam):
        """Super-level sets ``{|f| > lam}`` as merged annuli.

        Returns flat ``(lo, hi, owner)`` with ``owner`` indexing ``lam``.
        """
        lam = np.asarray(lam, dtype=float).ravel()
        r0, r1, v0, v1 = self.r0, self.r1, self.v0, self.v1
        los, his, owners = [], [], []
        chunk = max(1, 2_000_000 // max(r0.size, 1))
        for s in range(0, lam.size, chunk):
            x = lam[s:s + chunk, None]
            above0, above1 = v0 > x, v1 > x
            slope = np.where(v1 != v0, v1 - v0, 1.0)
            rc = r0 + (r1 - r0) * np.clip((x - v0) / slope, 0.0, 1.0)
            a = np.where(above0, r0, rc)
            b = np.where(above1, r1, rc)
            nonempty = (above0 | above1) & (b > a)
            row, col = np.nonzero(nonempty)
            los.append(a[row, col])
            his.append(b[row, col])
            owners.append(row + s)
        lo, hi, owner = np.concatenate(los), np.concatenate(his), np.concatenate(owners)
        if lo.size == 0:
            return lo, hi, owner
        new_run = np.ones(lo.size, dtype=bool)
        new_run[1:] = (owner[1:] != owner[:-1]) | (lo[1:] != hi[:-1])
        starts = np.flatnonzero(new_run)
        ends = np.concatenate([starts[1:], [lo.size]]) - 1
        return lo[starts], hi[ends], owner[starts]

    # -- inverse ----------------------------------------------------------

    def inverse(self, t, transform=None):
        """``inf{lam >= 0 : |{g(|f|) > lam}| <= t}`` with ``g`` monotone.

        ``transform = (g, g_inv)`` works directly on the level sets of the
        composite ``g(|f|)``: the bisection runs over values of ``g``.
        Without a transform this is the decreasing rearrangement ``f*(t)``.
        """
        t = np.asarray(t, dtype=float)
        shape = t.shape
        t = t.ravel()
        V = self.values
        if transform is None:
            g = ginv = (lambda x: x)
        else:
            g, ginv = transform
        GV = g(V)
        out = np.full(t.size, g(0.0) if transform is not None else 0.0)
        below = t < self.above[0]
        # smallest k with d_f(V_k) <= t
        k = np.searchsorted(-self.above, -t, side="left")
        k = np.clip(k, 1, V.size - 1)
        plateau = below & (t < self.at_least[k])
        out[plateau] = GV[k[plateau]]
        root = np.flatnonzero(below & ~plateau)
        if root.size and transform is None:
            out[root] = self._solve_in_gaps(t[root], k[root] - 1)
        elif root.size:
            lo = GV[k[root] - 1].astype(float)
            hi = GV[k[root]].astype(float)
            tt = t[root]
            for _ in range(_BISECT_STEPS):
                mid = 0.5 * (lo + hi)
                moved = (mid > lo) & (mid < hi) & (hi - lo > 1e-16 * hi)
                if not moved.any():
                    break
                m = self.measure_above(ginv(mid))
                go_up = m > tt
                lo = np.where(go_up & moved, mid, lo)
                hi = np.where(~go_up & moved, mid, hi)
            out[root] = hi
        # f*(0) is the sup; the root solve only resolves it to sqrt(eps) at a double root
        out[t <= 0] = GV[-1]
        return out.reshape(shape)

    def measure_slope(self, lam):
        """``|d/dlam |{|f| > lam}||`` inside the gaps (coarea formula)."""
        lam = np.asarray(lam, dtype=float).ravel()
        out = np.zeros(lam.size)
        k = self._gap_of(lam)
        inside = (k >= 0) & (k < self.values.size - 1) & (lam >= 0)
        idx = np.flatnonzero(inside)
        if idx.size:
            owner, a, b = self._crossing_terms(lam[idx], k[idx])
            n = self._act_ptr[k[idx] + 1] - self._act_ptr[k[idx]]
            start = np.repeat(np.cumsum(n) - n, n)
            pos = self._act_ptr[k[idx]][owner] + (np.arange(owner.size) - start)
            i = self._act_piece[pos]
            rc = np.where(self.v0[i] > self.v1[i], b, a)
            dr = (self.r1[i] - self.r0[i]) / np.abs(self.v1[i] - self.v0[i])
            term = self.dim * self.nu * rc ** (self.dim - 1) * dr
            out[idx] = np.bincount(owner, weights=term, minlength=idx.size)
        return out

    def _gap_polynomials(self):
        """Coefficients of ``|{|f| > lam}|`` per gap in powers of ``lam - V_k``."""
        if getattr(self, "_poly", None) is not None:
            return self._poly
        from math import comb
        d, nu = self.dim, self.nu
        n_gap = self.values.size
        coef = np.zeros((n_gap, d + 1))
        coef[:, 0] = self._full
        counts = np.diff(self._act_ptr)
        gap = np.repeat(np.arange(n_gap), counts)
        i = self._act_piece
        r0, r1, v0, v1 = self.r0[i], self.r1[i], self.v0[i], self.v1[i]
        beta = (r1 - r0) / (v1 - v0)
        alpha = r0 + (self.values[gap] - v0) * beta
        dec = v0 > v1
        sign = np.where(dec, 1.0, -1.0)
        np.add.at(coef[:, 0], gap, nu * np.where(dec, -r0 ** d, r1 ** d))
        for j in range(d + 1):
            np.add.at(coef[:, j], gap, sign * nu * comb(d, j) * alpha ** (d - j) * beta ** j)
        self._poly = coef
        return coef

    def _poly_newton(self, t, gap, lam, lo, hi, steps=30):
        coef = self._gap_polynomials()[gap]
        x0 = self.values[gap]
        d = self.dim
        lo, hi = lo.copy(), hi.copy()
        for _ in range(steps):
            x = lam - x0
            F = coef[:, d] * 1.0
            dF = np.zeros_like(F)
            for j in range(d - 1, -1, -1):
                dF = dF * x + F
                F = F * x + coef[:, j]
            F = F - t
            lo = np.where(F > 0, lam, lo)
            hi = np.where(F > 0, hi, lam)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = lam - F / dF
            ok = (newton > lo) & (newton < hi) & np.isfinite(newton)
            nxt = np.where(ok, newton, 0.5 * (lo + hi))
            if np.all(np.abs(nxt - lam) <= 1e-15 * np.abs(lam)):
                return nxt
            lam = nxt
        return lam

    def _solve_in_gaps(self, t, gap):
        """Root of ``|{|f| > lam}| = t`` with ``lam`` inside value gap ``gap``.

        Newton on the exact polynomial measure, safeguarded by bisection on the
        bracket ``(V_gap, V_gap+1)``; the gather structure is built once.
        """
        V = self.values
        lo, hi = V[gap].astype(float), V[gap + 1].astype(float)
        # secant start between the one-sided measures at the gap ends
        m_lo, m_hi = self.above[gap], self.at_least[gap + 1]
        w = np.clip((m_lo - t) / np.where(m_lo > m_hi, m_lo - m_hi, 1.0), 0.0, 1.0)
        lam = np.clip(lo + w * (hi - lo), lo, hi)
        lam = self._poly_newton(t, gap, lam, lo, hi)
        base = self._full[gap] - t
        d, nu = self.dim, self.nu
        todo = np.arange(t.size)
        for _ in range(_BISECT_STEPS):
            if todo.size == 0:
                break
            g = gap[todo]
            n = self._act_ptr[g + 1] - self._act_ptr[g]
            owner = np.repeat(np.arange(todo.size), n)
            start = np.repeat(np.cumsum(n) - n, n)
            i = self._act_piece[self._act_ptr[g][owner] + (np.arange(owner.size) - start)]
            r0, r1, v0, v1 = self.r0[i], self.r1[i], self.v0[i], self.v1[i]
            dec = v0 > v1
            drdl = (r1 - r0) / (v1 - v0)
            x = lam[todo][owner]
            rc = np.clip(r0 + (x - v0) * drdl, r0, r1)
            term = np.where(dec, rc ** d - r0 ** d, r1 ** d - rc ** d)
            F = base[todo] + nu * np.bincount(owner, weights=term, minlength=todo.size)
            dF = nu * np.bincount(owner, weights=np.where(dec, 1.0, -1.0) * d * rc ** (d - 1) * drdl,
                                  minlength=todo.size)
            cur, l, h = lam[todo], lo[todo], hi[todo]
            l = np.where(F > 0, cur, l)
            h = np.where(F > 0, h, cur)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = cur - F / dF
            ok = (newton > l) & (newton < h) & np.isfinite(newton)
            nxt = np.where(ok, newton, 0.5 * (l + h))
            small_step = ok & (np.abs(nxt - cur) <= 2e-15 * np.abs(cur))
            done = small_step | (h - l <= 4e-16 * h) | (np.abs(F) <= 1e-15 * self.total)
            lo[todo], hi[todo] = l, h
            lam[todo] = np.where(done & ~small_step, cur, nxt)
            todo = todo[~done]
        return lam

    def crossing_gaps(self):
        """Indices of gaps that contain at least one crossing piece."""
        return np.flatnonzero(np.diff(self._act_ptr) > 0)


class BallLevelSets(LevelSets):
    """Level sets of ``f#``: balls with the measures of the source's level sets."""

    def __init__(self, source):
        self.__dict__.update(source.__dict__)
        self.source = source

    def annuli(self, lam):
        lam = np.asarray(lam, dtype=float).ravel()
        m = self.source.measure_above(lam)
        keep = np.flatnonzero(m > 0)
        hi = np.minimum(self.domain.radius_of_measure(m[keep]), self.domain.radius)
        return np.zeros(keep.size), hi, keep


def level_sets(f):
    """Level-set structure of ``|f|``; exact for symmetric rearrangements too."""
    if isinstance(f, SymmetricRearrangement):
        return BallLevelSets(f.source)
    return LevelSets(f)


@dataclass(frozen=True, eq=False)
class SymmetricRearrangement(RadialProfile):
    """``f#`` evaluated exactly through ``f*``.

    ``knots``/``values`` hold a decreasing piecewise-linear skeleton that passes
    through exact points of ``f#``; transformations such as :meth:`restrict`
    work on the skeleton.  Evaluation, level sets, ``L^p`` norms and the
    gradient norm are computed from the source exactly.
    """

    source: LevelSets = None

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = self.source.inverse(self.domain.ball_measure(np.clip(r, 0.0, None)))
        return np.where((r < 0) | (r > self.domain.radius), 0.0, out)

    def right_limit(self, r):
        return self(r)

    def left_limit(self, r):
        return self(np.nextafter(np.asarray(r, dtype=float), 0.0))

    @property
    def is_decreasing(self):
        return True

    def abs(self):
        return self

    def exact_lp_norm(self, p):
        return lp_norm_radial(self.source.profile, p)

    def exact_seminorm(self, p):
        """``||grad f#||_p`` through the coarea formula in the level variable."""
        L = self.source
        V = L.values
        gaps = L.crossing_gaps()
        # a value gap with no crossing piece is a jump of f# inside the ball
        jump_gaps = np.setdiff1d(np.arange(V.size - 1), gaps)
        if any(0 < L.above[k] < L.total * (1 - 1e-12) for k in jump_gaps):
            raise ValueError("rearrangement has a jump; its gradient is not in L^p")
        dom = self.domain
        d, nu = dom.dim, dom.unit_volume

        def integrand(lam):
            rho = dom.radius_of_measure(L.measure_above(lam))
            surface = d * nu * rho ** (d - 1)
            if p == 1:
                return surface
            slope = L.measure_slope(lam)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(slope > 0, surface / slope, 0.0)
            return ratio ** (p - 1) * surface

        val, err = _quad.adaptive_gk(integrand, V[gaps], V[gaps + 1], rtol=1e-13)
        if not err <= 1e-6 * val:
            # an unbounded slope of f# at a level-set radius is not L^p-integrable
            return float("inf")
        return float(val ** (1.0 / p))


class DistributionFunction:
    """``lam -> |{|f| > lam}|``; exact, nonincreasing and right-continuous."""

    def __init__(self, f, levels=None):
        self.levels = levels or level_sets(f)

    def __call__(self, lam):
        return self.levels.measure_above(lam)

    @property
    def breakpoints(self):
        """Knot values of ``|f|``; the only places where the function can jump."""
        return self.levels.values

    def left_limit(self, lam):
        return self.levels.measure_at_least(lam)


class StepFunction:
    """Right-continuous nonincreasing step function on ``[0, inf)``.

    Equal to ``levels[i]`` on ``[breakpoints[i], breakpoints[i+1])`` and 0
    from ``breakpoints[-1]`` on.
    """

    def __init__(self, breakpoints, levels):
        b = np.asarray(breakpoints, dtype=float)
        c = np.asarray(levels, dtype=float)
        if b.size != c.size + 1 or b[0] != 0.0 or np.any(np.diff(b) <= 0):
            raise ValueError("need 0 = t_0 < t_1 < ... < t_M and M levels")
        if np.any(np.diff(c) >= 0) or (c.size and c[-1] < 0):
            raise ValueError("levels must be strictly decreasing and nonnegative")
        self.breakpoints, self.levels = b, c

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(self.breakpoints, t, side="right") - 1
        ok = (i >= 0) & (i < self.levels.size)
        return np.where(ok, self.levels[np.clip(i, 0, max(self.levels.size - 1, 0))], 0.0) \
            if self.levels.size else np.zeros_like(t)

    def measure_above(self, lam):
        """``|{t : F(t) > lam}|``, exact."""
        lam = np.asarray(lam, dtype=float)
        n = np.sum(self.levels[None, :] > lam.ravel()[:, None], axis=1)
        return self.breakpoints[n].reshape(lam.shape)


class DecreasingRearrangement:
    """Exact ``f*`` of a radial profile, as a callable on ``t >= 0``."""

    def __init__(self, f, levels=None, transform=None):
        self.levels = levels or level_sets(f)
        self.transform = transform
        self.domain_measure = self.levels.total

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.levels.inverse(np.maximum(t, 0.0), self.transform)
        return np.where(t >= self.domain_measure, 0.0, out)

    @property
    def breakpoints(self):
        """Values of ``t`` where ``f*`` reaches a knot value of ``|f|``."""
        L = self.levels
        return np.unique(np.concatenate([L.above, L.at_least]))

    @property
    def support(self):
        return float(self.levels.above[0])

    def measure_above(self, lam, steps=_BISECT_STEPS):
        """``|{t : f*(t) > lam}|`` computed from ``f*`` alone (bisection in ``t``)."""
        lam = np.asarray(lam, dtype=float)
        lo = np.zeros(lam.shape)
        hi = np.full(lam.shape, self.domain_measure)
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            moved = (mid > lo) & (mid < hi) & (hi - lo > 1e-16 * hi)
            if not moved.any():
                break
            up = self(mid) > lam
            lo = np.where(up & moved, mid, lo)
            hi = np.where(~up & moved, mid, hi)
        top = self(np.zeros(lam.shape))
        return np.where(top > lam, hi, 0.0)

    def to_steps(self, max_steps=4096):
        """Step function below ``f*`` with uniform level spacing plus all plateaus.

        The sup error is at most ``max|f| / (max_steps - #plateaus)``.
        """
        L = self.levels
        V = L.values[1:]
        if V.size == 0:
            return StepFunction([0.0], [])
        n_uniform = max(max_steps - V.size, 1)
        grid = np.linspace(0.0, V[-1], n_uniform + 1)[1:]
        lev = np.unique(np.concatenate([V, grid]))[::-1][:max_steps]
        ends = L.measure_at_least(lev)
        keep = np.concatenate([[True], np.diff(ends) > 0]) & (ends > 0)
        lev, ends = lev[keep], ends[keep]
        # a later level with the same end measure would be invisible
        return StepFunction(np.concatenate([[0.0], ends]), lev)


def distribution_function(f):
    """``lam -> |{x : |f(x)| > lam}|`` for a radial profile."""
    return DistributionFunction(f)


def decreasing_rearrangement(f):
    """``f*(t) = inf{lam > 0 : d_f(lam) <= t}``, exact generalized inverse."""
    return DecreasingRearrangement(f)


def symmetric_decreasing_rearrangement(f, measure_tol=1e-7, value_tol=1e-7, max_knots=400_000):
    """Radial decreasing profile ``f#(x) = f*(nu_d |x|^d)``.

    A decreasing nonnegative profile is returned unchanged.  Otherwise the
    result is a :class:`SymmetricRearrangement`: exact on evaluation, with a
    skeleton whose knots sit at the exact radii ``(d_f(lam) / nu_d)^(1/d)`` of
    every knot value of ``|f|`` plus levels added by bisection until linear
    interpolation in radius reproduces the level-set measure to
    ``measure_tol * |Omega|`` and the value to ``value_tol * max|f|``.
    """
    g = f.abs()
    if g.is_decreasing:
        return g
    L = LevelSets(g)
    dom = g.domain
    V = L.values
    top = V[-1]
    mtol = measure_tol * L.total
    vtol = value_tol * top
    rad = lambda m: np.minimum(dom.radius_of_measure(np.maximum(m, 0.0)), dom.radius)

    # refine every crossing gap on the lambda axis
    gaps = L.crossing_gaps()
    cells_lo = V[gaps]
    cells_hi = V[gaps + 1]
    m_lo = L.above[gaps]  # d_f at lam -> V_k^+
    m_hi = L.at_least[gaps + 1]  # d_f at lam -> V_{k+1}^-
    done_lam, done_m = [], []
    total = 0
    for _ in range(80):
        if cells_lo.size == 0:
            break
        mid = 0.5 * (cells_lo + cells_hi)
        m_mid = L.measure_above(mid)
        ra, rb, rm = rad(m_lo), rad(m_hi), rad(m_mid)
        w = (mid - cells_lo) / (cells_hi - cells_lo)
        r_lin = ra + (rb - ra) * w
        merr = np.abs(dom.ball_measure(r_lin) - m_mid)
        with np.errstate(invalid="ignore", divide="ignore"):
            v_lin = cells_lo + (cells_hi - cells_lo) * np.where(rb != ra, (rm - ra) / (rb - ra), w)
        verr = np.abs(v_lin - mid)
        split = ((merr > mtol) | (verr > vtol)) & (mid > cells_lo) & (mid < cells_hi)
        total += int(split.sum())
        if total > max_knots:
            raise RuntimeError("symmetric rearrangement needs too many knots; loosen tolerances")
        done_lam.append(mid[split])
        done_m.append(m_mid[split])
        cells_lo, cells_hi, m_lo, m_hi, mid, m_mid = (
            cells_lo[split], cells_hi[split], m_lo[split], m_hi[split], mid[split], m_mid[split])
        cells_lo, cells_hi = np.concatenate([cells_lo, mid]), np.concatenate([mid, cells_hi])
        m_lo, m_hi = np.concatenate([m_lo, m_mid]), np.concatenate([m_mid, m_hi])

    # points (measure, value): both one-sided measures at every knot value
    lam = np.concatenate([V, V] + done_lam)
    meas = np.concatenate([L.above, L.at_least] + done_m)
    order = np.lexsort((meas, -lam))
    lam, meas = lam[order], meas[order]
    a = dom.radius
    r = rad(meas)
    r = np.where(r >= a * (1 - 1e-13), a, r)
    knots, vals = [], []
    for ri, li in zip(r, lam):
        if knots:
            ri = max(ri, knots[-1])
            if ri == knots[-1]:
                if li == vals[-1]:
                    continue
                if knots[-1] == a:
                    break  # keep the left limit at the boundary
                if len(knots) >= 2 and knots[-2] == ri:
                    vals[-1] = li
                    continue
        knots.append(ri)
        vals.append(li)
    if knots[-1] < a:
        knots.append(a)
        vals.append(vals[-1])
    if knots[1] == 0.0:
        # a jump at the origin touches a null set only
        del knots[0], vals[0]
        knots[0] = 0.0
    return SymmetricRearrangement(dom, knots, vals, source=L)


def exponent_rearrangement(s, alpha, check=True, rtol=1e-9):
    """``[alpha^s]*`` for a nonnegative radial profile ``s`` and ``alpha > 1``.

    The rearrangement of the composite is computed directly on the level sets
    of ``alpha^s`` and compared with ``alpha^(s*(t))`` on the breakpoints of
    ``s*`` and a uniform grid; a mismatch raises ``ArithmeticError``.  Returns
    the callable ``t -> alpha^(s*(t))`` on ``[0, |Omega|)``.
    """
    if not alpha > 1:
        raise ValueError(f"alpha must exceed 1, got {alpha!r}")
    if np.any(s.values < 0):
        raise ValueError("s must be nonnegative")
    L = LevelSets(s)
    log_a = np.log(alpha)
    s_star = DecreasingRearrangement(s, levels=L)
    direct = DecreasingRearrangement(
        s, levels=L, transform=(lambda x: np.power(alpha, x), lambda y: np.log(y) / log_a))

    def closed(t):
        t = np.asarray(t, dtype=float)
        return np.where(t < L.total, np.power(alpha, s_star(t)), 0.0)

    if check:
        t = np.concatenate([s_star.breakpoints, np.linspace(0.0, L.total, 257)])
        t = t[t < L.total]
        a, b = direct(t), closed(t)
        if not np.allclose(a, b, rtol=rtol, atol=0.0):
            raise ArithmeticError("rearrangement of alpha^s differs from alpha^(s*)")
    closed.direct = direct
    closed.s_star = s_star
    return closed


def hardy_littlewood_check(f, g):
    """``(int f g dx, int_0^inf f*(t) g*(t) dt)`` for nonnegative profiles ``f, g``."""
    if np.any(f.values < 0) or np.any(g.values < 0):
        raise ValueError("Hardy-Littlewood check needs nonnegative functions")
    if f.domain.dim != g.domain.dim or f.domain.radius != g.domain.radius:
        raise ValueError("profiles must share a domain")
    dom = f.domain
    d = dom.dim
    # lhs: product of two linear functions times r^(d-1) is a polynomial per cell
    radii = np.unique(np.concatenate([f.knots, g.knots]))
    x, w = _quad.gauss_legendre(d // 2 + 3)
    a, b = radii[:-1], radii[1:]
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    r = mid[:, None] + half[:, None] * x
    # evaluate away from the knots so jumps are sampled on the right side
    vals = f(r) * g(r) * r ** (d - 1)
    lhs = d * dom.unit_volume * float(np.sum(half[:, None] * w * vals))
    # rhs in the variable rho with t = nu rho^d, where f* and g* are piecewise smooth
    fs, gs = DecreasingRearrangement(f), DecreasingRearrangement(g)
    tb = np.unique(np.concatenate([fs.breakpoints, gs.breakpoints, [0.0]]))
    tb = tb[tb <= min(fs.support, gs.support)]
    rb = dom.radius_of_measure(tb)
    fn = lambda rho: fs(dom.ball_measure(rho)) * gs(dom.ball_measure(rho)) * rho ** (d - 1)
    val, _ = _quad.adaptive_gk(fn, rb[:-1], rb[1:], rtol=1e-14, atol=1e-300)
    rhs = d * dom.unit_volume * val
    return lhs, rhs
