"""Compact versus non-compact classification for the log-singular exponent family.

For ``q(r) = p* - C / log(1/r)^ell`` near the centre of the ball:

* ``ell < 1``: the integrals ``int alpha^{s*(t)} dt`` of the rearranged gap
  ``s = 1 / (p* - q)`` are finite for every ``alpha > 1``, which makes the
  embedding ``W_0^{1,p} -> L^{q(.),p}`` compact;
* ``ell = 1``: rescaled plateau bumps keep a uniform positive Lorentz norm while
  their gradients stay fixed, which rules compactness out.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _quad
from .domain import (BallDomain, ConstantExponent, LogSingularExponent, RadialField,
                     RadialProfile, unit_ball_volume)
from .norms import NormSpec, holder_conjugate_field, lorentz_power, luxemburg_norm, modular

DEFAULT_ALPHAS = (2.0, 10.0, 1e2, 1e4, 1e8)
DEFAULT_BUMP_SCALES = tuple(2 ** k for k in range(1, 11))
DEFAULT_DECAY_RADII = tuple(2.0 ** -k for k in range(1, 21))
HOLDER_CONSTANT = 2.0


@dataclass(frozen=True)
class FamilyParams:
    """Parameters of the log-singular exponent family on the ball ``B_radius``."""

    p: float
    d: int
    C: float
    ell: float
    eta: float
    radius: float = 1.0

    def __post_init__(self):
        self.exponent()  # validates
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def exponent(self):
        return LogSingularExponent(self.p, self.d, self.C, self.ell, self.eta)

    @property
    def critical(self):
        return self.d * self.p / (self.d - self.p)

    @property
    def domain(self):
        return BallDomain(self.d, self.radius)

    def as_dict(self):
        return {"p": self.p, "d": self.d, "C": self.C, "ell": self.ell, "eta": self.eta,
                "radius": self.radius}


class GapField(RadialField):
    """``r -> 1 / (p - q(r))`` (``inf`` where the two exponents meet)."""

    def __init__(self, q, p):
        self.q = q
        self.p = float(p)
        self._log_singular = isinstance(q, LogSingularExponent) and math.isclose(p, q.critical)

    def at_log(self, y):
        y = np.asarray(y, dtype=float)
        if self._log_singular:
            # unclamped closed form, exact for huge y
            q = self.q
            return np.maximum(y, -math.log(q.eta)) ** q.ell / q.C
        gap = self.p - self.q.at_log(y)
        with np.errstate(divide="ignore"):
            return np.where(gap > 0, 1.0 / np.where(gap > 0, gap, 1.0), np.inf)

    def __call__(self, r):
        with np.errstate(divide="ignore"):
            return self.at_log(-np.log(np.asarray(r, dtype=float)))

    def breakpoints(self):
        return self.q.breakpoints()

    bounded = False


def s_field(q, p):
    """The gap field ``s(r) = 1/(p - q(r))``; rejects ``q > p``."""
    y = np.concatenate([np.linspace(0.0, 50.0, 501), [1e3, 1e6]])
    if np.any(q.at_log(y) > p * (1 + 1e-14)):
        raise ValueError("q exceeds p somewhere")
    return GapField(q, p)


class SStar:
    """Closed-form decreasing rearrangement of ``s`` for the log-singular family.

    ``(log(nu/t))^ell / (C d^ell)`` below ``nu eta^d``, the frozen value
    ``log(1/eta)^ell / C`` up to ``|Omega|``, and 0 beyond.
    """

    def __init__(self, C, d, ell, eta, domain):
        self.C, self.d, self.ell, self.eta = float(C), int(d), float(ell), float(eta)
        self.domain = domain
        self.nu = unit_ball_volume(self.d)
        self.total = domain.measure()
        self.t_eta = min(self.nu * self.eta ** self.d, self.total)
        self.plateau = math.log(1 / self.eta) ** self.ell / self.C

    def at_log(self, log_t):
        """``s*(exp(log_t))``, usable far below the smallest double."""
        log_t = np.asarray(log_t, dtype=float)
        y = np.maximum(math.log(self.nu) - log_t, 0.0)
        inner = y ** self.ell / (self.C * self.d ** self.ell)
        out = np.where(log_t < math.log(self.t_eta), inner, self.plateau)
        return np.where(log_t >= math.log(self.total), 0.0, out)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return self.at_log(np.log(t))


def closed_form_s_star(C, d, ell, eta, domain, allow_critical=False):
    """Closed-form ``s*`` (for ``0 < ell < 1``; ``allow_critical`` admits ``ell = 1``)."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if not (0 < ell < 1 or (allow_critical and ell == 1)):
        raise ValueError("closed form needs 0 < ell < 1")
    if domain.radius < eta:
        raise ValueError("the ball must contain the singular core B_eta")
    return SStar(C, d, ell, eta, domain)


def tail_exponent(alpha, C, d, ell, eta, omega=0.5):
    """``(omega, y0)`` with ``k y^ell - y <= -omega y`` for ``y >= y0``, or None.

    Here ``k = log(alpha) / (C d^ell)``.  The inequality is also checked on a
    grid past ``y0``.
    """
    k = math.log(alpha) / (C * d ** ell)
    y_start = -d * math.log(eta)
    if ell < 1:
        y0 = max(y_start, (k / (1 - omega)) ** (1 / (1 - ell)))
    elif ell == 1:
        if k >= 1:
            return None
        omega, y0 = 1 - k, y_start
    else:
        return None
    y = y0 * np.geomspace(1.0, 1e6, 2000)
    if np.any(k * y ** ell - y > -omega * y * (1 - 1e-12)):
        raise ArithmeticError("tail exponent check failed")
    return omega, y0


class FinitenessResult(NamedTuple):
    value: float
    converged: bool


def finiteness_report(alpha, params, domain=None, tail_tol=1e-8, agree_tol=1e-4):
    """Both evaluations of ``int_0^|Omega| alpha^{s*(t)} dt`` with the tail certificate."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    domain = domain or params.domain
    C, d, ell, eta = params.C, params.d, params.ell, params.eta
    s = closed_form_s_star(C, d, ell, eta, domain, allow_critical=True)
    la = math.log(alpha)
    nu, total, t_eta = s.nu, s.total, s.t_eta
    report = {"alpha": alpha, "log_alpha": la}
    tail = tail_exponent(alpha, C, d, ell, eta)
    if tail is None:
        report.update(value=math.inf, log_value=math.inf, converged=False, omega=None, y0=None,
                      reason="integrand does not decay")
        return report
    omega, y0 = tail
    # cut where the tail bound nu exp(-omega y)/omega is far below tail_tol
    y_end = max(y0, (math.log(nu / omega) - math.log(tail_tol * 1e-4)) / omega)
    tail_bound = nu * math.exp(-omega * y_end) / omega
    log_plateau = math.log(total - t_eta) + la * s.plateau if total > t_eta else -math.inf

    # direct route: t-cells [|Omega| 2^-(k+1), |Omega| 2^-k] with a break at nu eta^d,
    # nodes kept as log t so the mesh can go below the smallest double
    log_end = math.log(nu) - y_end
    K = int(math.ceil((math.log(total) - log_end) / math.log(2)))
    edges = math.log(total) - math.log(2) * np.arange(K + 1)
    edges = np.unique(np.concatenate([edges, [math.log(t_eta)]]))[::-1]
    hi, lo = edges[:-1], edges[1:]
    x, w = _quad.gauss_legendre(20)
    # t = t_lo + (t_hi - t_lo)(1 + x)/2 in log form
    span = np.expm1(hi - lo)  # t_hi/t_lo - 1
    log_t = lo[:, None] + np.log1p(span[:, None] * 0.5 * (1 + x[None, :]))
    log_dt = lo[:, None] + np.log(0.5 * span[:, None] * w[None, :])
    z = la * s.at_log(log_t) + log_dt
    log_direct = float(np.logaddexp.reduce(z.ravel()))

    # substituted route: nu int e^{k y^ell - y} dy over [y_eta, y_end] plus the plateau part
    k = la / (C * d ** ell)
    y_lo = math.log(nu / t_eta)

    def integrand(y):
        return np.exp(k * y ** ell - y - shift)

    ys = np.linspace(y_lo, y_end, 64)
    shift = float(np.max(k * ys ** ell - ys))
    val, _ = _quad.adaptive_gk(integrand, ys[:-1], ys[1:], rtol=1e-13)
    log_sub_core = math.log(nu) + shift + math.log(val)
    log_sub = float(np.logaddexp(log_sub_core, log_plateau))

    agree = abs(log_direct - log_sub) <= agree_tol
    converged = bool(agree and tail_bound < tail_tol)
    value = math.exp(log_direct) if log_direct < 709 else math.inf
    report.update(value=value, log_value=log_direct, substituted=math.exp(log_sub) if log_sub < 709
                  else math.inf, log_substituted=log_sub, converged=converged, omega=omega, y0=y0,
                  y_end=y_end, tail_bound=tail_bound)
    return report


def finiteness_integral(alpha, params, domain=None):
    """``(value, converged)`` for ``int_0^|Omega| alpha^{s*(t)} dt``.

    ``converged`` means the t-mesh and the substituted y-integral agree to
    1e-4 relative and the exponential tail bound is below 1e-8.  For
    ``ell = 1`` with ``alpha >= e^{C d}`` the integrand does not decay and the
    result is ``(inf, False)``.
    """
    rep = finiteness_report(alpha, params, domain)
    return FinitenessResult(rep["value"], rep["converged"])


def indicator_decay_diagnostic(q, p_star, radii, domain=None):
    """Luxemburg norms of ``chi_{B_r}`` in the Hoelder-conjugate field of ``(p*, q)``."""
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must decrease")
    d = getattr(q, "d", None) if domain is None else domain.dim
    if d is None:
        raise ValueError("pass a domain for exponent fields without a dimension")
    domain = domain or BallDomain(d, max(1.0, radii[0]))
    m = holder_conjugate_field(ConstantExponent(p_star), q)
    return np.array([luxemburg_norm(RadialProfile.annulus_indicator(domain, 0.0, r), m)
                     for r in radii])


@dataclass
class BumpWitness:
    """Evidence that rescaled plateau bumps keep a uniform Lorentz norm."""

    delta: float
    threshold: float
    n_list: list
    modulars: list
    luxemburg: list
    lorentz_powers: list
    lorentz_lower: float
    gradient_norms: list
    lp_norms: list
    reference_gradient: float
    reference_lp: float
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def as_dict(self):
        out = dict(self.__dict__)
        out["ok"] = self.ok
        return out


def bump(n, p, d, domain=None):
    """``n^{(d-p)/p} phi(n x)`` with ``phi`` the plateau tent on the unit ball."""
    domain = domain or BallDomain(d, 1.0)
    phi = RadialProfile.plateau_tent(BallDomain(d, 1.0))
    return phi.dilate(n, amplitude=n ** ((d - p) / p), domain=domain)


def bump_noncompactness_witness(p, d, C0, eta0, n_list=DEFAULT_BUMP_SCALES, safety=0.5,
                                second_index=None):
    """Check the bump argument for the ``ell = 1`` family at each scale ``n``.

    With ``delta = safety * e^{-C0(d-p)/p} nu_d / 2^d`` the modular of
    ``chi_{B_{1/(2n)}} / (delta n^{-(d-p)/p})`` must exceed 1, so the indicator
    has Luxemburg norm at least ``delta n^{-(d-p)/p}`` and the bump has Lorentz
    ``p``-th power at least ``delta^p / p``.  ``second_index`` defaults to ``p``.
    """
    pl = p if second_index is None else second_index
    q = LogSingularExponent(p, d, C0, 1.0, eta0)
    spec = NormSpec(q, pl)
    nu = unit_ball_volume(d)
    threshold = math.exp(-C0 * (d - p) / p) * nu / 2 ** d
    delta = safety * threshold
    dom = BallDomain(d, 1.0)
    phi = RadialProfile.plateau_tent(dom)
    ref_grad = phi.seminorm(p)
    ref_lp = phi.lp_norm(p)
    lower = delta ** pl / pl
    w = BumpWitness(delta, threshold, [int(n) for n in n_list], [], [], [], lower, [], [],
                    ref_grad, ref_lp)
    for n in w.n_list:
        scale = n ** (-(d - p) / p)
        core = RadialProfile.annulus_indicator(dom, 0.0, 1.0 / (2 * n))
        mod = modular(core * (1.0 / (delta * scale)), q)
        lux = luxemburg_norm(core, q)
        phin = bump(n, p, d, dom)
        lor = lorentz_power(phin, spec)
        w.modulars.append(mod)
        w.luxemburg.append(lux)
        w.lorentz_powers.append(lor)
        w.gradient_norms.append(phin.seminorm(p))
        w.lp_norms.append(phin.lp_norm(p))
        if not mod > 1:
            w.failures.append({"n": n, "link": "modular", "value": mod})
        elif not lux >= delta * scale:
            w.failures.append({"n": n, "link": "luxemburg", "value": lux})
        elif not lor >= lower:
            w.failures.append({"n": n, "link": "lorentz", "value": lor})
    return w


@dataclass
class CompactnessVerdict:
    verdict: str
    evidence: dict
    parameters: dict

    def as_dict(self):
        return {"verdict": self.verdict, "parameters": self.parameters, "evidence": self.evidence}


def classify(params, alphas=DEFAULT_ALPHAS, n_list=DEFAULT_BUMP_SCALES,
             decay_radii=DEFAULT_DECAY_RADII, safety=0.5, agree_tol=1e-4):
    """Compact, NonCompact or Inconclusive, with the evidence behind the call."""
    q = params.exponent()
    decay = indicator_decay_diagnostic(q, params.critical, decay_radii)
    evidence = {
        "decay_radii": list(decay_radii),
        "indicator_decay": decay.tolist(),
        "holder_constant": HOLDER_CONSTANT,
        "decay_ratios": (decay / decay[0]).tolist(),
    }
    if params.ell < 1:
        reports = [finiteness_report(a, params, agree_tol=agree_tol) for a in alphas]
        evidence["finiteness"] = reports
        ok = all(r["converged"] for r in reports)
        verdict = "Compact" if ok else "Inconclusive"
    elif params.ell == 1:
        w = bump_noncompactness_witness(params.p, params.d, params.C, params.eta, n_list,
                                        safety=safety)
        evidence["bump_witness"] = w.as_dict()
        verdict = "NonCompact" if w.ok else "Inconclusive"
    else:
        verdict = "Inconclusive"
    return CompactnessVerdict(verdict, evidence, params.as_dict())
