"""Nested bump systems with disjoint gradient supports, and the Bernstein-number bound they give.

Level ``j`` lives on ``B_{r_j}``.  It starts from a near-extremal decreasing
profile ``f_j`` normalized to ``||grad f_j||_p = 1``.  Flattening ``f_j`` to
its value ``R_j`` inside ``B_{s_j}`` gives ``g_j``; removing the flat core
``B_{t_j}`` gives ``h_j``.  The next level sits inside ``B_{t_j}`` and is
small enough that the earlier plateau heights cannot leak into its share
of the Lorentz integral.  On the span of the ``g_j`` the embedding quotient
then stays above ``(gamma^p/2^p - 4 eps)^{1/p} (1 - eps)^{1/p} - eps``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import BallDomain, RadialProfile, unit_ball_volume
from .extremal import BUDGET, maximize_gamma_r
from .norms import indicator_lorentz_norm, lorentz_power

SEARCH_STEPS = 40
SLACK = 1e-12


class PropertyViolation(RuntimeError):
    """A construction property failed; carries the property index and level."""

    def __init__(self, prop, level, detail=""):
        super().__init__(f"property ({prop}) fails at level {level}: {detail}")
        self.prop, self.level, self.detail = prop, level, detail


class PreconditionError(ValueError):
    pass


def tail_index(eps):
    """Least ``k`` with ``2^-k < eps``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    k = 0
    while 2.0 ** -k >= eps:
        k += 1
    return k


def small_coefficient_mass(alphas, k, p):
    """``sum |alpha_n|^p`` over ``n`` (from 1) with ``|alpha_n| <= 2^-(n+k)``."""
    a = np.abs(np.asarray(alphas, dtype=float))
    n = np.arange(1, a.size + 1)
    small = a <= 2.0 ** -(n + k)
    return float(np.sum(a[small] ** p))


def large_indices(alphas, k):
    a = np.abs(np.asarray(alphas, dtype=float))
    n = np.arange(1, a.size + 1)
    return np.flatnonzero(a > 2.0 ** -(n + k))


def gradient_power(f, p, lo=0.0, hi=math.inf):
    """``int_{lo < |x| < hi} |grad f|^p dx`` for a continuous piecewise-linear profile."""
    r0, r1, v0, v1 = f.intervals()
    a, b = np.maximum(r0, lo), np.minimum(r1, hi)
    m = b > a
    slope = np.abs((v1 - v0) / (r1 - r0))[m]
    d = f.domain.dim
    return float(np.sum(slope ** p * f.domain.unit_volume * (b[m] ** d - a[m] ** d)))


@dataclass
class Level:
    index: int
    r: float
    w: float
    s: float
    t: float
    R: float
    f: RadialProfile
    g: RadialProfile
    h: RadialProfile
    quotient: float
    f_power: float
    g_power: float
    h_power: float
    grad_g_power: float
    core_power: float
    core_norm: float
    delta_next: float = None
    checks: dict = field(default_factory=dict)

    def as_dict(self):
        out = {k: getattr(self, k) for k in
               ("index", "r", "w", "s", "t", "R", "quotient", "f_power", "g_power", "h_power",
                "grad_g_power", "core_power", "core_norm", "delta_next")}
        for name in ("f", "g", "h"):
            prof = getattr(self, name)
            out[name] = {"knots": prof.knots.tolist(), "values": prof.values.tolist()}
        out["checks"] = dict(self.checks)
        return out


@dataclass
class FunctionSystem:
    eps: float
    k_eps: int
    p: float
    spec: object
    domain: BallDomain
    levels: list
    gamma_ref: object
    property7: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.levels)

    @property
    def gamma_hat(self):
        return self.levels[0].quotient

    def combined(self, name, alphas):
        """``sum_j alpha_j u_j`` on the common ball for ``name`` in ``f``, ``g``, ``h``."""
        profs = [getattr(lv, name) for lv in self.levels[:len(alphas)]]
        return RadialProfile.combine(profs, [float(a) for a in alphas])

    def as_dict(self):
        q = self.spec.exponent
        return {
            "eps": self.eps, "k_eps": self.k_eps, "p": self.p,
            "exponent": {k: getattr(q, k) for k in ("p", "d", "C", "ell", "eta")},
            "second_index": self.spec.second_index,
            "domain_radius": self.domain.radius, "count": self.count,
            "gamma_hat": self.gamma_hat,
            "gamma_ref": self.gamma_ref.as_dict() if self.gamma_ref is not None else None,
            "levels": [lv.as_dict() for lv in self.levels],
            "property7": self.property7,
        }


def _bisect(ok, lo, hi, steps=SEARCH_STEPS, geometric=False):
    """Largest point with ``ok`` true (``ok`` monotone: true near ``lo``); returns the safe end."""
    for _ in range(steps):
        mid = math.sqrt(lo * hi) if geometric and lo > 0 else 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _next_radius_bound(R, j, k, eps, p, d, q_plus, r_max):
    """Largest ``delta`` with ``(1/p)(nu delta^d)^{p/q+} (1 + nu delta^d)(R 2^{j+1+k})^p < eps``."""
    nu = unit_ball_volume(d)
    scale = (R * 2.0 ** (j + 1 + k)) ** p / p

    def ok(delta):
        m = nu * delta ** d
        return m ** (p / q_plus) * (1 + m) * scale < eps

    lo = r_max
    while not ok(lo):
        lo *= 0.5
        if lo < 1e-280:
            raise PropertyViolation(7, j, "no admissible next radius")
    return _bisect(ok, lo, min(2 * lo, r_max), steps=60)


def property7_sides(system, alphas):
    """Both sides of ``||sum a_j h_j||^p >= sum_{large j} |a_j|^p (||h_j||^p - eps)``."""
    p = system.spec.second_index
    lhs = lorentz_power(system.combined("h", alphas), system.spec)
    J = large_indices(alphas, system.k_eps)
    a = np.abs(np.asarray(alphas, dtype=float))
    rhs = float(sum(a[j] ** p * (system.levels[j].h_power - system.eps) for j in J))
    return lhs, rhs


def disjoint_sum_lower_bound(system, alphas, spec=None):
    """``(lhs, rhs)`` of property (7); the left side from the exact level sets of the sum."""
    if spec is not None and spec != system.spec:
        system = FunctionSystem(system.eps, system.k_eps, system.p, spec, system.domain,
                                system.levels, system.gamma_ref)
    return property7_sides(system, alphas)


def build_system(eps, level_count, spec, p, budget=BUDGET, seed=0, r1=None,
                 quotient_source=None, property7_vectors=16):
    """Inductive construction; raises :class:`PropertyViolation` on the first failure."""
    q = spec.exponent
    if getattr(q, "ell", None) != 1:
        raise ValueError("the construction needs the critical (ell = 1) exponent family")
    pl = spec.second_index
    if pl != p:
        raise ValueError("the construction uses the same p for the gradient and the Lorentz index")
    d = q.d
    q_plus = q.critical
    k = tail_index(eps)
    r = 0.5 * q.eta if r1 is None else float(r1)
    if not (0 < r < q.eta and unit_ball_volume(d) * r ** d <= 1):
        raise ValueError("r1 must satisfy 0 < r1 < eta and |B_r1| <= 1")
    source = quotient_source or (lambda rad: maximize_gamma_r(rad, spec, p, budget, seed))
    omega = BallDomain(d, r)
    levels = []
    gamma_ref = None
    gamma_hat = None
    for j in range(1, level_count + 1):
        est = source(r)
        if gamma_ref is None:
            gamma_ref = est
        f = est.argmax_profile
        f = (f * (1.0 / f.seminorm(p, zero_trace=True))).on_domain(omega)
        f_power = lorentz_power(f, spec)
        quotient = f_power ** (1 / p)
        if gamma_hat is None:
            gamma_hat = quotient
        # (b) inner ball where both gradient and Lorentz mass are below eps
        w = _bisect(lambda x: gradient_power(f, p, 0.0, x) < eps
                    and lorentz_power(f.restrict(x), spec) < eps, 0.0, r)
        s = 0.5 * w
        R = float(f(s))
        g = f.clip_above(R)
        g_power = lorentz_power(g, spec)
        grad_g = gradient_power(g, p)

        # (d) inner cut: core mass below eps, core norm below eps 2^-j, and property (4)
        def core(x):
            n = float(indicator_lorentz_norm(omega, x, spec)[0]) * R
            return n ** p, n

        def cut_ok(x):
            cp, cn = core(x)
            return (cp < eps and cn < eps * 2.0 ** -j
                    and lorentz_power(g.cut_inside(x), spec) >= g_power - eps)

        t = _bisect(cut_ok, 0.0, 0.5 * s)
        h = g.cut_inside(t)
        h_power = lorentz_power(h, spec)
        core_power, core_norm = core(t)
        lv = Level(j, r, w, s, t, R, f, g, h, quotient, f_power, g_power, h_power, grad_g,
                   core_power, core_norm)
        _check_level(lv, levels, gamma_hat, eps, p)
        levels.append(lv)
        if j < level_count:
            lv.delta_next = _next_radius_bound(R, j, k, eps, p, d, q_plus, t)
            r = min(t, lv.delta_next)
    system = FunctionSystem(eps, k, p, spec, omega, levels, gamma_ref)
    rng = np.random.default_rng(seed)
    vectors = [np.eye(level_count)[i] for i in range(level_count)]
    vectors.append(np.full(level_count, level_count ** (-1 / p)))
    for _ in range(property7_vectors):
        vectors.append(unit_sphere_sample(rng, level_count, p))
    for a in vectors:
        lhs, rhs = property7_sides(system, a)
        system.property7.append({"alphas": a.tolist(), "lhs": lhs, "rhs": rhs})
        if not lhs >= rhs - 1e-8:
            raise PropertyViolation(7, level_count, f"lhs {lhs} < rhs {rhs}")
    return system


def _check_level(lv, previous, gamma_hat, eps, p):
    j = lv.index
    tol = SLACK
    checks = {
        "1": lv.f_power > gamma_hat ** p / 2 ** p - eps,
        "2": 1 - eps < lv.grad_g_power <= 1 + tol,
        "3": lv.f_power - eps <= lv.g_power <= lv.f_power * (1 + tol),
        "4": lv.g_power - eps <= lv.h_power <= lv.g_power * (1 + tol),
        "5": all(lv.r <= prev.t for prev in previous),
        "6": all(lv.r <= prev.s for prev in previous),
        "nesting": lv.t < lv.s < lv.w < lv.r,
        "sup": math.isclose(lv.g.sup, lv.R, rel_tol=1e-12) and math.isclose(lv.h.sup, lv.R, rel_tol=1e-12),
    }
    lv.checks = checks
    for key, ok in checks.items():
        if not ok:
            raise PropertyViolation(key, j, repr(lv.as_dict()["checks"]))


def perturbation_bound(fs, gs, alphas, eps, spec):
    """``(||sum a_n (f_n - g_n)||, ||a||_{l^p} eps)`` after checking ``||f_n - g_n|| < eps 2^-n``."""
    pl = spec.second_index
    diffs = [RadialProfile.combine([f, g], [1.0, -1.0]) for f, g in zip(fs, gs)]
    for n, dlt in enumerate(diffs, start=1):
        nrm = lorentz_power(dlt, spec) ** (1 / pl)
        if not nrm < eps * 2.0 ** -n:
            raise PreconditionError(f"||f_{n} - g_{n}|| = {nrm} is not below eps/2^{n}")
    total = RadialProfile.combine(diffs, [float(a) for a in alphas])
    defect = lorentz_power(total, spec) ** (1 / pl)
    bound = float(np.sum(np.abs(alphas) ** pl) ** (1 / pl) * eps)
    return defect, bound


def unit_sphere_sample(rng, n, p):
    """Random point of the unit ``l^p`` sphere (generalized Gaussian, normalized)."""
    x = rng.gamma(1.0 / p, 1.0, n) ** (1.0 / p) * rng.choice([-1.0, 1.0], n)
    return x / np.sum(np.abs(x) ** p) ** (1.0 / p)


def _candidate_vectors(rng, n, samples, k, p):
    out = [np.eye(n)[i] for i in range(n)]
    out.append(np.full(n, n ** (-1 / p)))
    out.append(np.full(n, n ** (-1 / p)) * np.resize([1.0, -1.0], n))
    thresholds = 2.0 ** -(np.arange(1, n + 1) + k)
    for factor in (0.999, 1.001):
        # straddling needs another coordinate to carry the remaining mass
        for i in range(n if n > 1 else 0):
            a = unit_sphere_sample(rng, n, p)
            a[i] = factor * thresholds[i] * np.sign(a[i] or 1.0)
            rest = np.delete(np.arange(n), i)
            scale = ((1 - abs(a[i]) ** p) / np.sum(np.abs(a[rest]) ** p)) ** (1 / p)
            a[rest] *= scale
            out.append(a)
    while len(out) < samples:
        out.append(unit_sphere_sample(rng, n, p))
    return out[:samples]


@dataclass
class BernsteinReport:
    N: int
    inf_quotient: float
    analytic_bound: float
    beta_lower: float
    gamma_hat: float
    samples: dict
    link_margins: list
    argmin: list
    gradient_identity_error: float
    span_bound: float

    def as_dict(self):
        return dict(self.__dict__)


LINKS = ("perturbation", "property 7", "property 4", "property 3", "property 1", "tail index")


def chain_values(system, alphas):
    """The quotient and the six successive lower bounds of the Bernstein chain."""
    eps, k = system.eps, system.k_eps
    p = system.spec.second_index
    lv = system.levels[:len(alphas)]
    a = np.abs(np.asarray(alphas, dtype=float))
    ap = a ** p
    amax = float(np.max(a))
    num = lorentz_power(system.combined("g", alphas), system.spec) ** (1 / p)
    grad_g = np.array([x.grad_g_power for x in lv])
    den_g = float(np.sum(ap * grad_g)) ** (1 / p)
    den_f = float(np.sum(ap)) ** (1 / p)
    h_sum = lorentz_power(system.combined("h", alphas), system.spec) ** (1 / p)
    J = large_indices(alphas, k)

    def bracket(vals):
        s = float(np.sum(ap[J] * vals[J]))
        return max(s, 0.0) ** (1 / p)

    hp = np.array([x.h_power for x in lv])
    gp = np.array([x.g_power for x in lv])
    fp = np.array([x.f_power for x in lv])
    gamma = system.gamma_hat
    c = gamma ** p / 2 ** p - 4 * eps
    vals = [
        num / den_g,
        (h_sum - amax * eps) / den_g,
        (bracket(hp - eps) - amax * eps) / den_g,
        (bracket(gp - 2 * eps) - amax * eps) / den_g,
        (bracket(fp - 3 * eps) - amax * eps) / den_f,
        (c ** (1 / p) * float(np.sum(ap[J])) ** (1 / p) - amax * eps) / den_f,
        c ** (1 / p) * (1 - eps) ** (1 / p) - eps,
    ]
    grad_direct = system.combined("g", alphas).seminorm(p) ** p
    return vals, abs(grad_direct - den_g ** p) / den_g ** p


def bernstein_lower_bound(system, N, samples=500, seed=42):
    """Sampled inf of the embedding quotient on ``span(g_1..g_N)`` against the analytic bound."""
    if system.count < N:
        raise ValueError("system has fewer than N levels")
    p = system.spec.second_index
    eps = system.eps
    gamma = system.gamma_hat
    c = gamma ** p / 2 ** p - 4 * eps
    if not c > 0:
        raise ValueError("eps too large for the measured gamma")
    bound = c ** (1 / p) * (1 - eps) ** (1 / p) - eps
    rng = np.random.default_rng(seed)
    cands = _candidate_vectors(rng, N, samples, system.k_eps, p)
    best, arg = math.inf, None
    margins = [math.inf] * len(LINKS)
    grad_err = 0.0
    for a in cands:
        vals, gerr = chain_values(system, a)
        grad_err = max(grad_err, gerr)
        for i in range(len(LINKS)):
            margins[i] = min(margins[i], vals[i] - vals[i + 1])
        if vals[0] < best:
            best, arg = vals[0], a
    report = BernsteinReport(N, best, bound, gamma / 2, gamma,
                             {"count": len(cands), "seed": seed}, margins,
                             arg.tolist(), grad_err, bound)
    if best < bound - 1e-6:
        raise PropertyViolation("bernstein", N, f"inf {best} below bound {bound}")
    return report
