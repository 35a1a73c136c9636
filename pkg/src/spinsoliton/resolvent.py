"""2D free resolvent near threshold and its charge-smoothed consequences.

Kernels are radial: ``R_pm(zeta^2, z) = +-(i/4) H0^pm(zeta |z|)``, ``H0^pm = J0 +- i Y0``, and
the logarithmic part ``P_pm(zeta, z) = -log(zeta |z|) / (2 pi) + h_pm``.

Bessel functions are computed here: power series for ``s <= 8``, Miller's
backward recurrence with Neumann series for ``8 < s <= 40``, and the
Hankel asymptotic expansion beyond.  The difference ``R - P`` is summed as a
series with the logarithm factored out so nothing cancels at small ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .charge import ChargeModel
from .fitting import DecayFit, fit_power_law, smoothness_probe
from .quadrature import _graded, _panels_to_nodes

EULER_GAMMA = float(np.euler_gamma)
S_MIN, S_MAX = 1e-8, 1e4
SERIES_MAX = 8.0
MILLER_MAX = 40.0
N_SERIES = 30

# h_+ from the small-s expansion of (i/4) H0^+: the Euler constant enters with a minus sign
H_PLUS = 0.25j + (np.log(2.0) - EULER_GAMMA) / (2 * np.pi)
H_PLUS_PRINTED = 0.25j + (np.log(2.0) + EULER_GAMMA) / (2 * np.pi)


class RangeError(ValueError):
    pass


class RefinementError(RuntimeError):
    pass


# power series ------------------------------------------------------------------


@lru_cache(maxsize=None)
def _coeffs():
    """Coefficients in powers ``s^(2m)``: ``J0 - 1`` and ``S = sum (-1)^(m+1) H_m (s/2)^(2m) / (m!)^2``."""
    m = np.arange(1, N_SERIES + 1)
    fact2 = np.cumprod(m.astype(float)) ** 2
    base = 1.0 / (4.0**m * fact2)
    harm = np.cumsum(1.0 / m)
    e = (-1.0) ** m * base
    s = (-1.0) ** (m + 1) * harm * base
    return 2 * m, e, s


def _pseries(powers, coeffs, s, d=0, shift=0):
    """``d``-th derivative of ``sum c s^(p - shift)``; negligible high-order terms are dropped."""
    s = np.asarray(s, dtype=float)
    p = powers - shift
    c = coeffs.copy()
    for _ in range(d):
        c = c * p
        p = p - 1
    if s.size:
        smax = float(np.max(s))
        bound = np.abs(c) * np.maximum(smax, 1e-300) ** p.astype(float)
        keep = np.nonzero(bound > 1e-19 * max(1.0, bound.max()))[0]
        n = keep[-1] + 1 if keep.size else 1
        c, p = c[:n], p[:n]
    out = np.zeros(s.shape)
    for ci, pi in zip(c[::-1], p[::-1]):
        out = out + ci * s**pi
    return out


def _series_JY(s):
    p, e, sc = _coeffs()
    E, E1 = _pseries(p, e, s), _pseries(p, e, s, 1)
    S, S1 = _pseries(p, sc, s), _pseries(p, sc, s, 1)
    L = np.log(s / 2) + EULER_GAMMA
    J0 = 1.0 + E
    J1 = -E1
    Y0 = (2 / np.pi) * (L * J0 + S)
    Y1 = -(2 / np.pi) * (J0 / s + L * E1 + S1)
    return J0, J1, Y0, Y1


# Miller recurrence -----------------------------------------------------------------


def _miller_JY(s):
    """``J0, J1`` by backward recurrence normalised with ``J0 + 2 sum J_2k = 1``; ``Y0, Y1`` by Neumann series."""
    s = np.asarray(s, dtype=float)
    top = int(2 * ((np.max(s) + 60) // 2) + 2)
    jp1 = np.zeros_like(s)
    jn = np.full_like(s, 1e-300)
    norm = np.zeros_like(s)
    ysum = np.zeros_like(s)     # sum_k (-1)^k J_2k / k
    dsum = np.zeros_like(s)     # sum_k (-1)^k J_2k' / k
    vals = {}
    for n in range(top, 0, -1):
        jm1 = (2 * n / s) * jn - jp1
        # jn is J_n (unnormalised); record what the sums need
        if n % 2 == 0:
            k = n // 2
            sgn = -1.0 if k % 2 else 1.0
            norm += 2 * jn
            ysum += sgn * jn / k
            # J_2k' = (J_{2k-1} - J_{2k+1}) / 2
            dsum += sgn * 0.5 * (jm1 - jp1) / k
        if n <= 2:
            vals[n] = jn
        jp1, jn = jn, jm1
        big = np.abs(jn) > 1e250
        if np.any(big):
            f = np.where(big, 1e-250, 1.0)
            jp1, jn, norm, ysum, dsum = jp1 * f, jn * f, norm * f, ysum * f, dsum * f
            vals = {key: v * f for key, v in vals.items()}
    j0 = jn
    j1 = jp1
    norm = norm + j0
    J0, J1 = j0 / norm, j1 / norm
    ys, ds = ysum / norm, dsum / norm
    L = np.log(s / 2) + EULER_GAMMA
    Y0 = (2 / np.pi) * (L * J0 - 2 * ys)
    Y0p = (2 / np.pi) * (J0 / s - L * J1 - 2 * ds)
    return J0, J1, Y0, -Y0p


# asymptotic expansion ------------------------------------------------------------------


def _asym_terms(nu, s, nterms=30):
    mu = 4.0 * nu * nu
    P = np.zeros_like(s)
    Q = np.zeros_like(s)
    term = np.ones_like(s)
    for k in range(nterms):
        if k:
            term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * s)
        if np.all(np.abs(term) < 1e-17):
            break
        if k % 2 == 0:
            P += (-1) ** (k // 2) * term
        else:
            Q += (-1) ** (k // 2) * term
    return P, Q


def _asym_JY(s):
    s = np.asarray(s, dtype=float)
    amp = np.sqrt(2 / (np.pi * s))
    out = []
    for nu in (0, 1):
        P, Q = _asym_terms(nu, s)
        chi = s - (0.5 * nu + 0.25) * np.pi
        out.append((amp * (P * np.cos(chi) - Q * np.sin(chi)), amp * (P * np.sin(chi) + Q * np.cos(chi))))
    (J0, Y0), (J1, Y1) = out
    return J0, J1, Y0, Y1


def bessel_JY(s):
    """``(J0, J1, Y0, Y1)`` for ``s`` in ``(1e-8, 1e4)``."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= S_MIN) or np.any(s >= S_MAX) or not np.all(np.isfinite(s)):
        raise RangeError(f"argument outside ({S_MIN:g}, {S_MAX:g})")
    flat = s.ravel()
    out = np.empty((4, flat.size))
    for lo, hi, fn in ((0.0, SERIES_MAX, _series_JY), (SERIES_MAX, MILLER_MAX, _miller_JY),
                       (MILLER_MAX, np.inf, _asym_JY)):
        m = (flat > lo) & (flat <= hi)
        if np.any(m):
            out[:, m] = np.array(fn(flat[m]))
    return tuple(o.reshape(s.shape) for o in out)


def hankel_H0(s, branch: int = 1):
    """``H0^pm(s) = J0(s) +- i Y0(s)``."""
    J0, _, Y0, _ = bessel_JY(s)
    return J0 + 1j * np.sign(branch) * Y0


def hankel_H1(s, branch: int = 1):
    _, J1, _, Y1 = bessel_JY(s)
    return J1 + 1j * np.sign(branch) * Y1


# kernels ------------------------------------------------------------------------


def log_kernel_constant(branch: int = 1) -> complex:
    return H_PLUS if branch > 0 else np.conj(H_PLUS)


def log_kernel(zeta, r, branch: int = 1):
    """``P_pm(zeta, r) = -log(zeta r) / (2 pi) + h_pm``."""
    return -np.log(np.asarray(zeta) * np.asarray(r)) / (2 * np.pi) + log_kernel_constant(branch)


def resolvent_kernel(zeta, r, branch: int = 1):
    """``R_pm(zeta^2, r) = +-(i/4) H0^pm(zeta r)``."""
    sg = 1 if branch > 0 else -1
    return sg * 0.25j * hankel_H0(np.asarray(zeta) * np.asarray(r), sg)


def _difference_series(s, d, sg):
    """``d``-th s-derivative of ``R - P`` for ``s <= 8``.

    ``R - P = +-(i/4) E - (L E + S) / (2 pi)``, ``E = J0 - 1``, ``L = log(s/2) + gamma``.
    """
    p, e, sc = _coeffs()
    L = np.log(s / 2) + EULER_GAMMA
    E = [_pseries(p, e, s, j) for j in range(d + 1)]
    S = _pseries(p, sc, s, d)
    if d == 0:
        LE = L * E[0]
    elif d == 1:
        LE = _pseries(p, e, s, shift=1) + L * E[1]
    else:
        LE = -_pseries(p, e, s, shift=2) + 2 * _pseries(p, e * p, s, shift=2) + L * E[2]
    return sg * 0.25j * E[d] - (LE + S) / (2 * np.pi)


def _difference_bessel(s, d, sg):
    J0, J1, Y0, Y1 = bessel_JY(s)
    H0 = J0 + 1j * sg * Y0
    H1 = J1 + 1j * sg * Y1
    c = log_kernel_constant(sg)
    if d == 0:
        return sg * 0.25j * H0 + np.log(s) / (2 * np.pi) - c
    if d == 1:
        return -sg * 0.25j * H1 + 1 / (2 * np.pi * s)
    return sg * 0.25j * (-H0 + H1 / s) - 1 / (2 * np.pi * s * s)


def difference_profile(s, d: int = 0, branch: int = 1):
    """``d^d/ds^d [(R - P)(s)]`` as a function of ``s = zeta |z|``."""
    if d not in (0, 1, 2):
        raise ValueError("derivative order must be 0, 1 or 2")
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0) or np.any(s >= S_MAX):
        raise RangeError(f"argument outside (0, {S_MAX:g})")
    sg = 1 if branch > 0 else -1
    out = np.empty(s.shape, dtype=complex)
    small = s <= SERIES_MAX
    if np.any(small):
        out[small] = _difference_series(s[small], d, sg)
    if np.any(~small):
        out[~small] = _difference_bessel(s[~small], d, sg)
    return out


def resolvent_minus_log(zeta, r, branch: int = 1, k: int = 0):
    """``d^k/dzeta^k (R_pm - P_pm)(zeta, r) = r^k D^(k)(zeta r)``."""
    r = np.asarray(r, dtype=float)
    return r**k * difference_profile(np.asarray(zeta) * r, k, branch)


# Hilbert-Schmidt surrogate ------------------------------------------------------------


@dataclass(frozen=True)
class PairDensity:
    """``Omega(r) = 2 pi r C(r)`` with ``C(r) = integral w(x) w(x - z) dx``, ``|z| = r``.

    ``w = <x>^(-2 beta)`` restricted to ``|x| <= R``; then for a radial kernel
    ``||<x>^-beta K <y>^-beta||_HS^2 = integral |K(r)|^2 Omega(r) dr``.
    """

    beta: float
    R: float
    r: np.ndarray
    weights: np.ndarray


def pair_density(beta: float, R: float = 40.0, n_r: int = 16, n_rho: int = 24,
                 n_theta: int = 96, panel: float = 1.0) -> PairDensity:
    w = lambda x2: (1.0 + x2) ** (-beta)
    r, wr = _panels_to_nodes(np.linspace(0, 2 * R, int(round(2 * R / panel)) + 1), n_r)
    rho, wrho = _panels_to_nodes(np.linspace(0, R, int(round(R / (2 * panel))) + 1), n_rho)
    # theta in [0, pi] by mirror symmetry, trapezoid (periodic, even integrand)
    th = np.linspace(0, np.pi, n_theta + 1)
    wt = np.full(n_theta + 1, np.pi / n_theta)
    wt[0] = wt[-1] = 0.5 * np.pi / n_theta
    cos = np.cos(th)
    wx = w(rho**2) * rho * wrho
    C = np.empty_like(r)
    for i, ri in enumerate(r):
        d2 = rho[:, None] ** 2 + ri * ri - 2 * ri * rho[:, None] * cos[None, :]
        inside = d2 <= R * R
        C[i] = 2 * np.sum(wx[:, None] * wt[None, :] * np.where(inside, w(d2), 0.0))
    return PairDensity(beta, R, r, 2 * np.pi * r * C * wr)


def hs_norm(kernel_values, density: PairDensity) -> float:
    return float(np.sqrt(np.sum(np.abs(kernel_values) ** 2 * density.weights)))


def hs_difference(zeta: float, k: int, density: PairDensity, branch: int = 1) -> float:
    return hs_norm(resolvent_minus_log(zeta, density.r, branch, k), density)


def threshold_exponent_fit(k: int, beta: float = 3.0, zetas=None, R: float = 40.0,
                           branch: int = 1, check_refinement: bool = True,
                           tol: float = 0.01) -> DecayFit:
    """Fitted exponent of ``zeta -> ||d^k (R - P)||_HS`` (weighted), ``zeta`` in [1e-3, 1e-1]."""
    if zetas is None:
        zetas = np.geomspace(1e-3, 1e-1, 17)
    dens = pair_density(beta, R)
    vals = np.array([hs_difference(z, k, dens, branch) for z in zetas])
    if check_refinement:
        fine = pair_density(beta, R, n_r=24, n_rho=36, n_theta=144, panel=0.5)
        for z, v in zip(zetas[[0, -1]], vals[[0, -1]]):
            vf = hs_difference(z, k, fine, branch)
            if abs(vf - v) > tol * abs(vf):
                raise RefinementError(f"HS surrogate not refinement-stable at zeta={z}: {v} vs {vf}")
    return fit_power_law(zetas, vals)


# charge-smoothed quantities --------------------------------------------------------------


def _radial_x(c: ChargeModel):
    if getattr(c, "rho_x", None) is not None:
        return c.rho_x
    return c.rho_x_radial


def log_convolution_moment(c: ChargeModel, r, s_max: float = 30.0, n: int = 24):
    """Radial factor ``U(r)`` of ``g0 varrho = U(|y|) yhat`` (exact mode-1 Green function).

    ``U(r) = (1/2) [ r^-1 integral_0^r s^3 rho ds + r integral_r^inf s rho ds ]``.
    """
    rho = _radial_x(c)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty_like(r)
    for i, ri in enumerate(r):
        a = np.unique(np.concatenate([np.linspace(0, ri, 8), [ri]]))
        b = np.unique(np.concatenate([[ri], np.linspace(ri, max(ri, s_max) + 10, 40)]))
        x1, w1 = _panels_to_nodes(a, n) if ri > 0 else (np.empty(0), np.empty(0))
        x2, w2 = _panels_to_nodes(b, n)
        inner = np.sum(w1 * x1**3 * rho(x1)) / ri if ri > 0 else 0.0
        outer = np.sum(w2 * x2 * rho(x2))
        out[i] = 0.5 * (inner + ri * outer)
    return out


def log_kernel_apply(c: ChargeModel, mu: float, y, branch: int = 1, s_max: float = 30.0,
                     n_s: int = 24, n_phi: int = 256):
    """``[P_pm(mu) varrho](y)`` by polar quadrature centred at each ``y`` (first component).

    Includes the ``(h - log|mu| / (2 pi)) integral varrho`` term numerically, so the
    mu-independence is measured, not assumed.
    """
    rho = _radial_x(c)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    e = np.stack([np.cos(phi), np.sin(phi)])
    out = np.empty(y.shape[0], dtype=complex)
    hc = log_kernel_constant(branch)
    for i, yi in enumerate(y):
        top = np.hypot(*yi) + s_max
        br = np.unique(np.concatenate([[0.0], _graded(1e-6, top, 1e-6, max_width=1.0)]))
        s, ws = _panels_to_nodes(br, n_s)
        x = yi[:, None, None] + s[None, :, None] * e[:, None, :]
        rr = np.hypot(x[0], x[1])
        vr = x[0] * rho(rr)
        ang = vr.sum(axis=1) * (2 * np.pi / n_phi)
        kern = -np.log(mu * s) / (2 * np.pi) + hc
        out[i] = np.sum(ws * s * kern * ang)
    return out


def remainder_profile(c: ChargeModel, mu: float, r, k: int = 0, s_max: float = 14.0,
                      n_s: int = 10, n_phi: int = 48):
    """Radial factor of ``d^k_mu [(g(i mu + 0) - g0) varrho]`` via the kernel ``R_-+ - P_-+``."""
    rho = _radial_x(c)
    branch = -1 if mu > 0 else 1
    m = abs(mu)
    br = np.linspace(0, s_max, int(np.ceil(s_max)) + 1)
    s, ws = _panels_to_nodes(br, n_s)
    phi = np.linspace(0, np.pi, n_phi + 1)
    wp = np.full(n_phi + 1, np.pi / n_phi)
    wp[0] = wp[-1] = 0.5 * np.pi / n_phi
    f = s * rho(s) * s * ws
    r = np.atleast_1d(np.asarray(r, dtype=float))
    cphi = np.cos(phi)
    d = np.sqrt(np.maximum(r[:, None, None] ** 2 + s[None, :, None] ** 2
                           - 2 * r[:, None, None] * s[None, :, None] * cphi, 0.0))
    d = np.maximum(d, 1e-7 / m)
    K = resolvent_minus_log(m, d, branch, k)
    out = 2 * np.einsum("s,p,rsp->r", f, wp * cphi, K)
    sign = np.sign(mu) ** k
    return sign * out


def remainder_norm(c: ChargeModel, mu: float, beta: float = 3.0, k: int = 0, R: float = 40.0,
                   n_r: int = 10, **quad) -> float:
    """``||<x>^-beta d^k_mu (g(i mu + 0) - g0) varrho||_{L^2}`` (both components)."""
    br = np.unique(np.concatenate([np.linspace(0, 8, 9), np.linspace(8, R, 9)]))
    r, wr = _panels_to_nodes(br, n_r)
    u = remainder_profile(c, mu, r, k, **quad)
    return float(np.sqrt(2 * np.pi * np.sum(wr * r * (1 + r * r) ** (-beta) * np.abs(u) ** 2)))


def g_kspace_profile(c: ChargeModel, lam: complex, r):
    """``-integral profile'(k) J1(k r) k / (k^2 + lam^2) dk``: radial factor of ``g(lam) varrho``."""
    import warnings
    from scipy import integrate, special

    r = np.atleast_1d(np.asarray(r, dtype=float))
    peak, width = abs(lam.imag), max(abs(lam.real), 1e-12)
    cuts = [0.0] + [peak + s * width for s in (-1e4, -1e2, -1.0, 1.0, 1e2, 1e4) if peak + s * width > 0] + [14.0]
    cuts = sorted(set(x for x in cuts if x <= 14.0))
    out = np.empty(r.shape, dtype=complex)
    for i, ri in enumerate(r):
        f = lambda k: -c.drho_radial(np.array([k]))[0] * special.j1(k * ri) * k / (k * k + lam * lam)
        tot = 0j
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for a, b in zip(cuts[:-1], cuts[1:]):
                tot += integrate.quad(lambda k: f(k).real, a, b, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
                tot += 1j * integrate.quad(lambda k: f(k).imag, a, b, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
        out[i] = tot
    return out


@dataclass
class SmoothedReport:
    cancellation_spread: float
    g0_error: float
    remainder_fit: DecayFit
    derivative_fits: dict


def smoothed_resolvent_asymptotics(c: ChargeModel, beta: float = 3.0, mus=None,
                                   y=None, derivatives: bool = True) -> SmoothedReport:
    if mus is None:
        mus = np.geomspace(1e-3, 1e-1, 9)
    if y is None:
        y = np.array([[0.5, 0.0], [1.0, 1.0], [2.0, -0.5], [0.0, 3.0], [4.0, 2.0]])
    p1 = log_kernel_apply(c, 1e-3, y)
    p2 = log_kernel_apply(c, 1e-2, y)
    spread = float(np.max(np.abs(p1 - p2)))
    ry = np.hypot(y[:, 0], y[:, 1])
    g0 = log_convolution_moment(c, ry) * y[:, 0] / ry
    g0_err = float(np.max(np.abs(p1 - g0)))
    vals = np.array([remainder_norm(c, m, beta) for m in mus])
    fits = {}
    if derivatives:
        for k in (1, 2):
            fits[k] = fit_power_law(mus, np.array([remainder_norm(c, m, beta, k) for m in mus]))
    return SmoothedReport(spread, g0_err, fit_power_law(mus, vals), fits)


# high energy -------------------------------------------------------------------------


@dataclass
class HighEnergyReport:
    kappa: DecayFit
    kappa_derivatives: dict
    numerator: DecayFit
    nu_tilde: DecayFit


def high_energy_decay(c: ChargeModel, I: float = 1.0, data=None, mus=None) -> HighEnergyReport:
    from .laplace import KappaEvaluator, NuEvaluator, SeparableData

    if data is None:
        data = SeparableData()
    if mus is None:
        mus = np.geomspace(20, 200, 15)
    kap = KappaEvaluator(c)
    nev = NuEvaluator(c, I, data)
    kv = np.array([abs(kap(m)) for m in mus])
    nums = np.array([abs(nev.numerator(m)) for m in mus])
    nus = np.array([abs(nev.nu_tilde(m)) for m in mus])
    der = {}
    for k in (1, 2):
        d = np.array([abs(smoothness_probe(lambda x: kap(x), m, k, 1e-2).value) for m in mus])
        der[k] = fit_power_law(mus, d)
    return HighEnergyReport(fit_power_law(mus, kv), der, fit_power_law(mus, nums),
                            fit_power_law(mus, nus))
