"""Quadrature kernels shared by the norm and rearrangement code.

Everything here is vectorised over many integration ranges at once: callers
pass flat arrays of ``(lo, hi)`` pairs together with an ``owner`` index that
says which output each range contributes to.
"""

from functools import lru_cache

import numpy as np

# Gauss-Kronrod 7/15 pair (QUADPACK qk15), nodes on [0, 1) mirrored below.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss weights live on every other Kronrod node (odd positions).
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[1::2] = np.concatenate([_WG[:-1], _WG[::-1]])


@lru_cache(maxsize=None)
def gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def graded_panels(lo, hi, depth=24, breaks=()):
    """Split each ``[lo, hi]`` into panels graded geometrically toward r = 0.

    Panel ``k`` covers ``[hi 2^-(k+1), hi 2^-k]``; the last panel is closed
    off at ``lo`` (or at 0 after ``depth`` levels), so every panel except a
    possible innermost one has endpoint ratio at most 2.  Points in
    ``breaks`` (kinks of the exponent) become panel endpoints.

    Returns ``(plo, phi, owner)`` flat arrays; ``owner`` indexes the input
    pairs.  Empty ranges (``hi <= lo``) produce no panels.
    """
    lo = np.asarray(lo, dtype=float).ravel()
    hi = np.asarray(hi, dtype=float).ravel()
    keep = hi > lo
    idx = np.flatnonzero(keep)
    lo, hi = lo[keep], hi[keep]
    with np.errstate(divide="ignore", over="ignore"):
        ratio = np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.inf)
    m = np.where(np.isfinite(ratio), np.ceil(np.log2(np.maximum(ratio, 1.0))), depth)
    m = np.clip(m, 1, depth).astype(int)
    owner = np.repeat(np.arange(lo.size), m)
    start = np.repeat(np.cumsum(m) - m, m)
    k = np.arange(owner.size) - start
    phi = hi[owner] * np.exp2(-k)
    plo = hi[owner] * np.exp2(-(k + 1))
    last = k == m[owner] - 1
    plo = np.where(last, lo[owner], plo)
    plo = np.maximum(plo, lo[owner])
    for b in breaks:
        cut = (plo < b) & (b < phi)
        if np.any(cut):
            plo = np.concatenate([plo, np.full(cut.sum(), b)])
            phi = np.concatenate([np.where(cut, b, phi), phi[cut]])
            owner = np.concatenate([owner, owner[cut]])
    return plo, phi, idx[owner]


def panel_nodes(plo, phi, n=8):
    """Gauss-Legendre nodes and ``dr`` weights on each panel, shape (P, n)."""
    x, w = gauss_legendre(n)
    half = 0.5 * (phi - plo)
    mid = 0.5 * (phi + plo)
    r = mid[:, None] + half[:, None] * x[None, :]
    return r, half[:, None] * w[None, :]


def radial_nodes(lo, hi, dim, unit_volume, depth=24, breaks=(), n=8):
    """Nodes for ``int_lo^hi g(r) dnu(r)`` with ``dnu = d nu_d r^(d-1) dr``.

    Returns flat ``(r, w, owner)``.
    """
    plo, phi, owner = graded_panels(lo, hi, depth=depth, breaks=breaks)
    r, w = panel_nodes(plo, phi, n)
    w = w * (dim * unit_volume) * r ** (dim - 1)
    return r.ravel(), w.ravel(), np.repeat(owner, n)


def segment_logsumexp(z, owner, n_owner):
    """``log(sum(exp(z)))`` grouped by ``owner``; empty groups give -inf."""
    zmax = np.full(n_owner, -np.inf)
    np.maximum.at(zmax, owner, z)
    shift = np.where(np.isfinite(zmax), zmax, 0.0)
    s = np.bincount(owner, weights=np.exp(z - shift[owner]), minlength=n_owner)
    with np.errstate(divide="ignore"):
        return shift + np.log(s)


def solve_log_modular(logw, q, owner, n_owner, max_iter=200):
    """Solve ``sum_k exp(logw_k - q_k u) = 1`` for ``u`` per owner.

    ``logw`` already contains ``q_k log|f_k|`` so the unknown is
    ``u = log(lambda)`` for the Luxemburg norm ``lambda``.  The left-hand side
    is log-convex and decreasing in ``u``; Newton started left of the root
    climbs monotonically onto it.  Owners without nodes get ``-inf``.
    """
    logw = np.asarray(logw, dtype=float)
    q = np.asarray(q, dtype=float)
    g0 = segment_logsumexp(logw, owner, n_owner)
    empty = ~np.isfinite(g0)
    qmin = np.full(n_owner, np.inf)
    qmax = np.zeros(n_owner)
    np.minimum.at(qmin, owner, q)
    np.maximum.at(qmax, owner, q)
    safe_g0 = np.where(empty, 0.0, g0)
    u = np.where(safe_g0 >= 0, safe_g0 / np.where(empty, 1.0, qmax),
                 safe_g0 / np.where(empty, 1.0, qmin))
    active = ~empty
    for _ in range(max_iter):
        if not active.any():
            break
        z = logw - q * u[owner]
        zmax = np.full(n_owner, -np.inf)
        np.maximum.at(zmax, owner, z)
        shift = np.where(np.isfinite(zmax), zmax, 0.0)
        e = np.exp(z - shift[owner])
        s = np.bincount(owner, weights=e, minlength=n_owner)
        sq = np.bincount(owner, weights=e * q, minlength=n_owner)
        F = shift + np.log(np.where(active, s, 1.0))
        qbar = sq / np.where(active, s, 1.0)
        step = np.where(active, F / np.where(active, qbar, 1.0), 0.0)
        # rounding can leave F a hair below zero at the root
        step = np.where(step < 0, np.maximum(step, -1e-12 * np.maximum(1.0, np.abs(u))), step)
        u = u + step
        active = active & (np.abs(step) > 1e-14 * np.maximum(1.0, np.abs(u)))
    else:
        raise RuntimeError("Luxemburg root solve did not converge")
    return np.where(empty, -np.inf, u)


def adaptive_gk(fn, lo, hi, rtol=1e-12, atol=0.0, max_rounds=40, max_panels=200_000):
    """Vectorised adaptive Gauss-Kronrod 7/15 on a union of intervals.

    ``fn`` maps a flat array of points to integrand values.  Panels whose
    Kronrod-Gauss difference exceeds their share of the tolerance are bisected.
    Returns ``(integral, error_estimate)``.
    """
    plo = np.asarray(lo, dtype=float).ravel()
    phi = np.asarray(hi, dtype=float).ravel()
    keep = phi > plo
    plo, phi = plo[keep], phi[keep]
    if plo.size == 0:
        return 0.0, 0.0
    width_total = float(np.sum(phi - plo))
    done_val = 0.0
    done_err = 0.0
    for _ in range(max_rounds):
        half = 0.5 * (phi - plo)
        mid = 0.5 * (phi + plo)
        x = mid[:, None] + half[:, None] * GK_NODES[None, :]
        y = np.asarray(fn(x.ravel()), dtype=float).reshape(x.shape)
        kron = half * (y @ GK_WEIGHTS)
        gauss = half * (y @ G_WEIGHTS)
        err = np.abs(kron - gauss)
        estimate = done_val + float(np.sum(kron))
        tol = max(atol, rtol * abs(estimate))
        ok = (err <= tol * (phi - plo) / width_total) | (err <= rtol * np.abs(kron))
        # the global test ends rounding-noise refinement on thin panels
        if ok.all() or done_err + float(np.sum(err)) <= tol or plo.size * 2 > max_panels:
            return estimate, done_err + float(np.sum(err))
        done_val += float(np.sum(kron[ok]))
        done_err += float(np.sum(err[ok]))
        plo, phi, mid = plo[~ok], phi[~ok], mid[~ok]
        plo, phi = np.concatenate([plo, mid]), np.concatenate([mid, phi])
    return done_val + float(np.sum(kron[~ok])), done_err + float(np.sum(err[~ok]))
