"""Brute-force reference computations for the test suite.

These share nothing with the package except ``RadialProfile`` evaluation:
no level-set machinery, no graded quadrature.  They are slow and simple on
purpose.
"""

import math

import numpy as np
from scipy import integrate, optimize, special

from varlorentz.domain import RadialProfile


def ball_volume(d):
    return math.pi ** (d / 2) / special.gamma(d / 2 + 1)


def random_profile(rng, domain, max_knots=32, jumps=True, signed=True, plateaus=True):
    """Random piecewise-linear profile with at most ``max_knots`` knots.

    Jumps are duplicated knots; plateaus and repeated values are mixed in so
    that flat pieces and shared levels across pieces are exercised.
    """
    a = domain.radius
    n_jump = int(rng.integers(0, 4)) if jumps else 0
    n = int(rng.integers(2, max_knots - n_jump + 1))
    inner = np.sort(rng.uniform(0.02 * a, 0.98 * a, n - 2))
    if inner.size:
        inner = inner[np.concatenate([[True], np.diff(inner) > 1e-3 * a])]
    knots = np.concatenate([[0.0], inner, [a]])
    lo = -1.0 if signed else 0.0
    vals = rng.uniform(lo, 1.0, knots.size)
    if plateaus:
        for i in range(1, vals.size):
            if rng.random() < 0.2:
                vals[i] = vals[i - 1]
        if rng.random() < 0.3:
            vals = np.round(vals * 4) / 4
    k, v = list(knots), list(vals)
    if n_jump and inner.size:
        for idx in sorted(rng.choice(np.arange(1, knots.size - 1), min(n_jump, inner.size),
                                     replace=False), reverse=True):
            k.insert(idx + 1, knots[idx])
            v.insert(idx + 1, rng.uniform(lo, 1.0))
    return RadialProfile(domain, k, v)


def _pieces(f):
    k, v = np.asarray(f.knots), np.asarray(f.values)
    keep = np.diff(k) > 0
    return k[:-1][keep], k[1:][keep], v[:-1][keep], v[1:][keep]


def distribution(f, lam):
    """``|{|f| > lam}|`` by solving each linear piece for its crossing radius."""
    lam = np.asarray(lam, dtype=float)
    d, nu = f.domain.dim, ball_volume(f.domain.dim)
    total = np.zeros(lam.shape)
    for r0, r1, v0, v1 in zip(*_pieces(f)):
        for s in (1.0, -1.0):
            a, b = s * v0, s * v1
            if a == b:
                total += np.where(a > lam, nu * (r1 ** d - r0 ** d), 0.0)
                continue
            x = np.clip(r0 + (lam - a) * (r1 - r0) / (b - a), r0, r1)
            # the part of [r0, r1] where the piece exceeds lam
            lo, hi = (r0, x) if a > b else (x, r1)
            total += nu * (hi ** d - lo ** d)
    return total if total.ndim else float(total)


def cell_envelopes(f, n=100_000):
    """Midpoint value and half-variation of ``|f|`` on ``n`` equal-width shells.

    The shells are refined by the knots, so ``f`` is linear inside each one and
    ``|f|`` stays within ``mid +- half`` on it.  Returns ``(measure, mid, half)``.
    """
    a, d = f.domain.radius, f.domain.dim
    r = np.unique(np.concatenate([np.linspace(0.0, a, n + 1), f.knots]))
    lo, hi = r[:-1], r[1:]
    mid = np.abs(f(0.5 * (lo + hi)))
    half = 0.5 * np.abs(f.left_limit(hi) - f.right_limit(lo))
    return ball_volume(d) * (hi ** d - lo ** d), mid, half


def weighted_sort(weights, values):
    """Decreasing rearrangement of a step function: ``(window ends, sorted values)``."""
    order = np.argsort(-values, kind="stable")
    return np.cumsum(weights[order]), values[order]


def rearrangement_error(f, f_star, d_f, n=100_000, measure_slack=1e-10):
    """How far ``f*`` leaves the band between the sorted lower and upper envelopes.

    ``|f|`` lies between two step functions built from ``n`` shell samples, so
    ``f*`` lies between their rearrangements.  The band is checked through
    ``d_f`` (``f*(T) <= u`` iff ``d_f(u) <= T``); ``f*`` itself is only
    evaluated where the check fails, to size the excursion.  Window ends are
    widened by ``measure_slack * |Omega|`` because cumulative sums of ``n``
    shell measures drift by ~1e-14.
    """
    w, mid, half = cell_envelopes(f, n)
    slack = measure_slack * f.domain.measure()
    err = 0.0
    ends, upper = weighted_sort(w, mid + half)
    starts = np.concatenate([[0.0], ends[:-1]])
    bad = d_f(upper) > starts + slack
    if np.any(bad):
        err = max(err, float(np.max(f_star(starts[bad] + slack) - upper[bad])))
    ends, lower = weighted_sort(w, np.maximum(mid - half, 0.0))
    bad = d_f(lower) < ends - slack
    if np.any(bad):
        err = max(err, float(np.max(lower[bad] - f_star(ends[bad] - slack))))
    return max(err, 0.0)


def lp_norm(f, p):
    d, nu = f.domain.dim, ball_volume(f.domain.dim)
    total = 0.0
    for r0, r1, v0, v1 in zip(*_pieces(f)):
        g = lambda r: abs(v0 + (v1 - v0) * (r - r0) / (r1 - r0)) ** p * r ** (d - 1)
        total += integrate.quad(g, r0, r1, epsabs=0, epsrel=1e-13, limit=200)[0]
    return (d * nu * total) ** (1 / p)


def constant_lorentz(f, q0, p):
    """``(int_0^max lam^(p-1) |{|f| > lam}|^(p/q0) dlam)^(1/p)`` by adaptive quad."""
    levels = np.unique(np.concatenate([[0.0], np.abs(f.values)]))
    g = lambda lam: lam ** (p - 1) * distribution(f, lam) ** (p / q0)
    total = sum(integrate.quad(g, a, b, epsabs=0, epsrel=1e-12, limit=400)[0]
                for a, b in zip(levels[:-1], levels[1:]))
    return total ** (1 / p)


def dense_constant_lorentz(f, q0, p, n=100_000):
    """Same quantity by composite Simpson on about ``n`` ``lam`` nodes.

    Nodes are split over the gaps between distinct values of ``|f|`` (jumps
    of the distribution function sit on panel ends) and packed toward both
    ends of each gap by ``lam = a + (b - a)(1 - cos(pi u))/2``, which smooths
    the power-type endpoint behaviour of the integrand.
    """
    levels = np.unique(np.concatenate([[0.0], np.abs(f.values)]))
    total = 0.0
    for a, b in zip(levels[:-1], levels[1:]):
        m = 2 * max(int(n * (b - a) / levels[-1]) // 2, 8) + 1
        u = np.linspace(0.0, 1.0, m)
        lam = a + 0.5 * (b - a) * (1 - np.cos(np.pi * u))
        jac = 0.5 * np.pi * (b - a) * np.sin(np.pi * u)
        # one-sided values: the integrand is continuous from inside the gap
        inner = np.clip(lam, a + 1e-15 * b, b - 1e-15 * b)
        dist = np.maximum(distribution(f, inner), 0.0)
        total += integrate.simpson(lam ** (p - 1) * dist ** (p / q0) * jac, x=u)
    return total ** (1 / p)


def variable_modular(f, q, scale=1.0, r_breaks=()):
    """``int |f / scale|^q(|x|) dx`` by adaptive quad on every piece."""
    d, nu = f.domain.dim, ball_volume(f.domain.dim)
    total = 0.0
    for r0, r1, v0, v1 in zip(*_pieces(f)):
        pts = [b for b in r_breaks if r0 < b < r1]
        if v0 * v1 < 0:
            # |f|^q is not smooth where the piece changes sign
            pts.append(r0 + v0 * (r1 - r0) / (v0 - v1))
        g = lambda r: (abs(v0 + (v1 - v0) * (r - r0) / (r1 - r0)) / scale) ** float(q(r)) \
            * r ** (d - 1)
        total += integrate.quad(g, r0, r1, points=pts or None, epsabs=0, epsrel=1e-13,
                                limit=400)[0]
    return d * nu * total


def variable_luxemburg(f, q, r_breaks=()):
    """Root of ``modular(f / lam) = 1`` by brentq on ``log lam``."""
    top = float(np.max(np.abs(f.values)))
    if top == 0:
        return 0.0
    g = lambda u: math.log(variable_modular(f, q, math.exp(u), r_breaks))
    lo, hi = math.log(top) - 5, math.log(top) + 5
    while g(lo) < 0:
        lo -= 5
    while g(hi) > 0:
        hi += 5
    return math.exp(optimize.brentq(g, lo, hi, xtol=1e-15, rtol=1e-15))


def sorted_field(field, dim, radius, t, r_min=1e-12, n=200_000):
    """Decreasing rearrangement of a radial field at measures ``t`` by weighted sort."""
    r = np.concatenate([[0.0], np.geomspace(r_min, radius, n)])
    lo, hi = r[:-1], r[1:]
    vals = np.asarray(field(np.sqrt(np.maximum(lo, r_min * 1e-3) * hi)), dtype=float)
    w = ball_volume(dim) * (hi ** dim - lo ** dim)
    order = np.argsort(-vals, kind="stable")
    ends, vals = np.cumsum(w[order]), vals[order]
    i = np.searchsorted(ends, np.asarray(t, dtype=float), side="right")
    return vals[np.clip(i, 0, vals.size - 1)]
