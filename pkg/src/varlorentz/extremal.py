"""Estimates of the local Sobolev-Lorentz quotient ``sup ||f||_{L^{q(.),p}} / ||grad f||_p``.

The supremum over ``W_0^{1,p}(B_r)`` is searched over decreasing radial
profiles (symmetrization does not lower the numerator and does not raise the
denominator).  Profiles have fixed knots ``r j / K`` and values given by
nonnegative decrements, and are improved with restarted Nelder-Mead.

During the search the Lorentz norm of a decreasing profile is computed from
a spline table of ``log ||chi_{B_rho}||`` against ``log rho``: the level sets
are balls, so after the change of variables ``lam = f(rho)`` the norm is a
one-dimensional integral over the profile pieces.  The winning profile is
re-scored with the exact norm.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, optimize

from . import _quad
from .compactness import bump_noncompactness_witness
from .domain import BallDomain, LogSingularExponent, RadialProfile
from .norms import ball_indicator_norm, lorentz_norm

KNOTS = 16
RESTARTS = 8
BUDGET = 5000
BETAS = (0.5, 1.0, 2.0)


class BallNormTable:
    """``rho -> ||chi_{B_rho}||_{L^{q(.)}}`` by a cubic spline in log-log coordinates."""

    def __init__(self, dim, field_, r_max, r_min=None, per_decade=40):
        r_min = r_max * 2.0 ** -48 if r_min is None else r_min
        n = int(per_decade * math.log10(r_max / r_min)) + 2
        rho = np.geomspace(r_min, r_max, n)
        br = [b for b in field_.breakpoints() if r_min < b < r_max]
        self.breaks = np.log(np.array(sorted(br)))
        rho = np.unique(np.concatenate([rho, br]))
        dom = BallDomain(dim, r_max)
        x = np.log(rho)
        y = np.log(ball_indicator_norm(dom, rho, field_))
        # one spline per smooth stretch between exponent breakpoints
        cuts = np.concatenate([[x[0]], self.breaks, [x[-1]]])
        self._parts = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            m = (x >= a) & (x <= b)
            if m.sum() >= 4:
                self._parts.append((a, b, interpolate.CubicSpline(x[m], y[m])))
            else:
                self._parts.append((a, b, interpolate.interp1d(x[m], y[m], fill_value="extrapolate")))
        self.x_min, self.x_max = x[0], x[-1]

    def log_norm(self, rho):
        x = np.log(np.asarray(rho, dtype=float))
        out = np.empty_like(x)
        idx = np.searchsorted(self.breaks, x)
        for i, (_, _, s) in enumerate(self._parts):
            m = idx == i
            if np.any(m):
                out[m] = s(x[m])
        return out

    def __call__(self, rho):
        return np.exp(self.log_norm(rho))


def decreasing_lorentz_power(f, table, p, panels_at_origin=24, n=8):
    """``||f||^p`` for a decreasing profile via ``sum_i int f^(p-1) |f'| N(rho)^p drho``."""
    r0, r1, v0, v1 = f.intervals()
    slope = (v0 - v1) / (r1 - r0)
    m = slope > 0
    r0, r1, v0, v1, slope = r0[m], r1[m], v0[m], v1[m], slope[m]
    plo, phi, own = _quad.graded_panels(r0, r1, depth=panels_at_origin)
    r, w = _quad.panel_nodes(plo, phi, n)
    own = np.repeat(own, n)
    r, w = r.ravel(), w.ravel()
    val = v0[own] - slope[own] * (r - r0[own])
    lam = np.maximum(val, 0.0)
    return float(np.sum(w * lam ** (p - 1) * slope[own] * np.exp(p * table.log_norm(r))))


def quotient(f, spec, p):
    """``||f||_{L^{q(.),p}} / ||grad f||_{L^p}`` for a profile vanishing on the boundary."""
    grad = f.seminorm(p, zero_trace=True)
    if not grad > 0:
        raise ValueError("profile has zero gradient")
    return lorentz_norm(f, spec) / grad


def _profile(domain, decrements):
    k = domain.radius * np.arange(KNOTS + 1) / KNOTS
    v = np.concatenate([np.cumsum(decrements[::-1])[::-1], [0.0]])
    return RadialProfile(domain, k, v)


def _seed_decrements():
    x = np.arange(KNOTS + 1) / KNOTS
    seeds = {"bump": np.where(x <= 0.5, 1.0, 2 * (1 - x))}
    for beta in BETAS:
        seeds[f"power_{beta:g}"] = (1 - x) ** beta
    return {k: -np.diff(v) for k, v in seeds.items()}


def bump_floor(spec, p):
    """``delta / (p^(1/p) ||grad phi||_p)`` for the critical family, 0 otherwise."""
    q = spec.exponent
    if not (isinstance(q, LogSingularExponent) and q.ell == 1 and q.p == p):
        return 0.0
    w = bump_noncompactness_witness(q.p, q.d, q.C, q.eta, n_list=())
    pl = spec.second_index
    return w.delta / (pl ** (1 / pl) * w.reference_gradient)


@dataclass
class GammaEstimate:
    r: float
    gamma_hat: float
    argmax_profile: RadialProfile
    floor: float
    iterations: int
    converged: bool
    seed_values: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)

    def as_dict(self):
        f = self.argmax_profile
        return {
            "r": self.r, "gamma_hat": self.gamma_hat, "floor": self.floor,
            "iterations": self.iterations, "converged": self.converged,
            "seed_values": self.seed_values,
            "argmax_profile": {"knots": f.knots.tolist(), "values": f.values.tolist()},
            "trace": [{"r": t.r, "gamma_hat": t.gamma_hat} for t in self.trace],
        }


def maximize_gamma_r(r, spec, p, budget=BUDGET, seed=0, restarts=RESTARTS):
    """Best quotient over decreasing ``KNOTS``-piece profiles supported in ``B_r``."""
    q = spec.exponent
    d = getattr(q, "d", None)
    if d is None:
        raise ValueError("exponent field must carry its dimension")
    if isinstance(q, LogSingularExponent) and r > q.eta * (1 + 1e-12):
        raise ValueError("r must not exceed eta")
    domain = BallDomain(d, r)
    table = BallNormTable(d, q, r)
    pl = spec.second_index
    shells = domain.unit_volume * np.diff((domain.radius * np.arange(KNOTS + 1) / KNOTS) ** d)
    widths = r / KNOTS

    def fast(dec):
        dec = np.abs(dec)
        grad_p = float(np.sum((dec / widths) ** p * shells))
        if not grad_p > 0:
            return 0.0
        num = decreasing_lorentz_power(_profile(domain, dec), table, pl) ** (1 / pl)
        return num / grad_p ** (1 / p)

    seeds = _seed_decrements()
    seed_values = {k: fast(v) for k, v in seeds.items()}
    best_key = max(seed_values, key=lambda k: (seed_values[k], -list(seeds).index(k)))
    best_x, best_val = seeds[best_key], seed_values[best_key]
    evals = len(seeds)
    converged = False
    if budget > 0:
        rng = np.random.default_rng(seed)
        starts = list(seeds.values())
        while len(starts) < restarts:
            base = seeds[best_key]
            starts.append(base * np.exp(0.5 * rng.standard_normal(base.size)))
        per = max(1, budget // restarts)
        converged = True
        for x0 in starts[:restarts]:
            res = optimize.minimize(lambda x: -fast(x), x0, method="Nelder-Mead",
                                    options={"maxfev": per, "xatol": 1e-9, "fatol": 1e-12,
                                             "adaptive": True})
            evals += res.nfev
            converged &= bool(res.success)
            if -res.fun > best_val:
                best_val, best_x = -res.fun, np.abs(res.x)
    f = _profile(domain, np.abs(best_x))
    gamma = quotient(f, spec, p)
    exact_seeds = {k: quotient(_profile(domain, v), spec, p) for k, v in seeds.items()}
    if max(exact_seeds.values()) > gamma:
        k = max(exact_seeds, key=exact_seeds.get)
        gamma, f = exact_seeds[k], _profile(domain, seeds[k])
    return GammaEstimate(r, gamma, f, bump_floor(spec, p), evals, converged and budget > 0,
                         exact_seeds)


def gamma_limit(radii, spec, p, budget=BUDGET, seed=0):
    """Run :func:`maximize_gamma_r` along decreasing radii.

    The result describes the smallest radius; ``trace`` holds every
    per-radius estimate and ``gamma_hat`` is the smallest of them.
    """
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must decrease")
    trace = [maximize_gamma_r(r, spec, p, budget, seed) for r in radii]
    last = trace[-1]
    running = min(t.gamma_hat for t in trace)
    return GammaEstimate(last.r, running, last.argmax_profile, last.floor, sum(t.iterations for t in trace),
                         all(t.converged for t in trace), last.seed_values, trace)
