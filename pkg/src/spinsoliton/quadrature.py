"""Radial integrals ``integral_{R^2} h(|k|) / (k^2 + lambda^2) dk`` on the line lambda = i mu + 0.

With ``u = k^2`` the boundary value is

    Q(i mu + 0) = pi * pv integral_0^inf H(u) / (u - mu^2) du - i pi^2 sgn(mu) h(|mu|),

``H(u) = h(sqrt(u))``.  The principal value is taken with singularity
subtraction on a symmetric window around ``u = mu^2`` and geometrically graded
Gauss-Legendre panels away from it.  ``h`` must be an even smooth function of
``k`` (a smooth function of ``u``) with Gaussian-type decay.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

U_MAX = 60.0
PANEL_NODES = 20
MAX_PANEL = 0.5


@lru_cache(maxsize=8)
def _gl(n):
    return np.polynomial.legendre.leggauss(n)


def _panels_to_nodes(breaks, n=PANEL_NODES):
    x, w = _gl(n)
    a, b = np.asarray(breaks[:-1]), np.asarray(breaks[1:])
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def _graded(start, stop, first, max_width=MAX_PANEL):
    """Breakpoints from ``start`` toward ``stop`` with widths first, 2 first, ... capped."""
    sgn = 1.0 if stop > start else -1.0
    pts = [start]
    width = first
    pos = start
    while sgn * (stop - pos) > 1e-300:
        step = min(width, max_width)
        nxt = pos + sgn * step
        if sgn * (stop - nxt) < 0.5 * step:
            nxt = stop
        pts.append(nxt)
        pos = nxt
        width *= 2.0
    return pts


def pv_nodes(m: float, u_max: float = U_MAX, n: int = PANEL_NODES):
    """Nodes/weights for ``pv integral_0^u_max H(u)/(u - m) du``.

    Returns ``(outer_nodes, outer_weights, win_nodes, win_weights)``; the window
    part integrates ``(H(u) - H(m)) / (u - m)`` over ``[m - d, m + d]``.
    """
    if m <= 0.0:
        br = [0.0] + _graded(1e-12, u_max, 1e-12)
        on, ow = _panels_to_nodes(br, n)
        return on, ow, np.empty(0), np.empty(0)
    if m >= u_max:
        br = _graded(u_max, 0.0, max(m - u_max, 1e-3))[::-1]
        on, ow = _panels_to_nodes(br, n)
        return on, ow, np.empty(0), np.empty(0)
    d = min(m, 1.0, u_max - m)
    wn, ww = _panels_to_nodes([m - d, m, m + d], n)
    right = _graded(m + d, u_max, d)
    on, ow = _panels_to_nodes(right, n)
    if m - d > 0:
        left = _graded(m - d, 0.0, d)[::-1]
        ln_, lw = _panels_to_nodes(left, n)
        on, ow = np.concatenate([ln_, on]), np.concatenate([lw, ow])
    return on, ow, wn, ww


def pv_integral(H, m: float, u_max: float = U_MAX, n: int = PANEL_NODES):
    """``pv integral_0^u_max H(u) / (u - m) du`` for vectorised ``H``.

    ``H`` may return an array with trailing axes; those are integrated together.
    """
    on, ow, wn, ww = pv_nodes(m, u_max, n)
    Ho = H(on)
    out = np.tensordot(ow / (on - m), Ho, axes=(0, 0))
    if wn.size:
        Hw = H(wn)
        Hm = H(np.array([m]))[0]
        out = out + np.tensordot(ww / (wn - m), Hw - Hm, axes=(0, 0))
    return out


def radial_boundary_value(h, mu: float, u_max: float = U_MAX, n: int = PANEL_NODES):
    """``integral_{R^2} h(|k|) / (k^2 + (i mu + 0)^2) dk``."""
    m = mu * mu
    H = lambda u: h(np.sqrt(u))
    real = np.pi * pv_integral(H, m, u_max, n)
    imag = -np.pi**2 * np.sign(mu) * h(np.array([abs(mu)]))[0] if mu != 0 else 0.0 * real
    return real + 1j * imag


def radial_offline_value(h, lam: complex, rtol=1e-12):
    """``integral_{R^2} h(|k|) / (k^2 + lambda^2) dk`` for Re lambda > 0, by adaptive quadrature.

    Independent brute-force path used as the epsilon-limit oracle.  The
    near-resonant Lorentzian around ``k = |Im lambda|`` gets its own intervals.
    """
    from scipy import integrate

    lam2 = lam * lam
    peak = abs(lam.imag)
    width = max(abs(lam.real), 1e-12)
    ub = max(12.0, 2 * peak + 12.0)
    f = lambda k: h(np.array([k]))[0] * k / (k * k + lam2)
    if peak > 0:
        cuts = [peak + s * width for s in (-1e4, -1e2, -1.0, 1.0, 1e2, 1e4)]
        cuts = [0.0] + [x for x in cuts if 0 < x < ub] + [ub]
    else:
        cuts = [0.0, ub]
    total = 0j
    for a, b in zip(cuts[:-1], cuts[1:]):
        for part, unit in ((lambda k: f(k).real, 1.0), (lambda k: f(k).imag, 1j)):
            v, _ = integrate.quad(part, a, b, limit=1000, epsabs=1e-15, epsrel=rtol)
            total += unit * v
    return 2 * np.pi * total


def radial_moment(h, p: int = 0, rtol=1e-12):
    """``integral_{R^2} h(|k|) |k|^p dk``."""
    from scipy import integrate

    v, _ = integrate.quad(lambda k: h(np.array([k]))[0] * k ** (p + 1), 0, np.inf,
                          limit=400, epsabs=0.0, epsrel=rtol)
    return 2 * np.pi * v
