"""The free 2D wave group ``W(t)`` acting on ``(Lambda, Pi)``.

Two realisations are kept on purpose:

* :func:`propagate`: exact per-mode rotation with ``cos(|k| t)``, ``sin(|k| t)/|k|``;
* :func:`kernel_apply`: convolution with the retarded kernel
  ``G(z, t) = theta(t - |z|) / (2 pi sqrt(t^2 - |z|^2))``, whose transform is
  obtained by radial quadrature of ``G`` itself, never from the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .charge import ChargeModel
from .grid import Field, FieldPair, SpectralGrid, energy_norm
from .quadrature import _gl


class SupportError(ValueError):
    pass


class UndersampledError(ValueError):
    pass


class TailBudgetError(RuntimeError):
    pass


def rotation(grid: SpectralGrid, t: float):
    """``(cos(kt), sin(kt)/k, -k sin(kt))`` with the k = 0 limits ``(1, t, 0)``."""
    k = grid.kabs
    c = np.cos(k * t)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.sin(k * t) / k
    s[0, 0] = t
    return c, s, -k * np.sin(k * t)


class WavePropagator:
    """Per-mode exact rotation; coefficients cached per time."""

    def __init__(self, grid: SpectralGrid):
        self.grid = grid
        self._cache = {}

    def coefficients(self, t: float):
        key = float(t)
        if key not in self._cache:
            if len(self._cache) > 16:
                self._cache.clear()
            self._cache[key] = rotation(self.grid, key)
        return self._cache[key]

    def apply_hat(self, L, P, t: float):
        c, s, ks = self.coefficients(t)
        return c * L + s * P, ks * L + c * P

    def __call__(self, Z: FieldPair, t: float) -> FieldPair:
        Zk = Z.to_k()
        L, P = self.apply_hat(Zk.A.values, Zk.Pi.values, t)
        return FieldPair(Field(L, self.grid, "k"), Field(P, self.grid, "k"))


def propagate(Z: FieldPair, t: float) -> FieldPair:
    return WavePropagator(Z.grid)(Z, t)


# retarded kernel ---------------------------------------------------------------


def kernel_G(z, t: float):
    """``G(z, t)``; ``z`` is a distance ``|z|`` or an array of points with last axis 2."""
    if not t > 0:
        raise ValueError("t must be positive")
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1) if z.ndim and z.shape[-1] == 2 else np.abs(z)
    out = np.zeros_like(r, dtype=float)
    inside = r < t
    out[inside] = 1.0 / (2 * np.pi * np.sqrt(t * t - r[inside] ** 2))
    return out if out.ndim else float(out)


def kernel_derivative(z1, z2, t: float, alpha=(0, 0), j: int = 0):
    """``d^alpha_z d^j_t G`` inside the cone, ``|alpha| + j <= 2``, by closed-form differentiation."""
    a1, a2 = alpha
    if a1 + a2 + j > 2:
        raise ValueError("only derivatives of total order <= 2 are provided")
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    r2 = z1**2 + z2**2
    q = t * t - r2
    if np.any(q <= 0):
        raise ValueError("derivatives are only evaluated strictly inside the light cone")
    c = 1.0 / (2 * np.pi)
    g = c * q**-0.5
    g3 = c * q**-1.5       # G_r / r
    g5 = c * q**-2.5
    if (a1, a2, j) == (0, 0, 0):
        return g
    if (a1, a2, j) == (0, 0, 1):
        return -t * g3
    if (a1, a2, j) == (0, 0, 2):
        return (2 * t * t + r2) * g5
    zs = (z1, z2)
    if a1 + a2 == 1:
        zi = zs[0] if a1 else zs[1]
        return zi * g3 if j == 0 else -3 * t * zi * g5
    # second spatial derivatives: d_i d_j G = delta_ij G_r/r + z_i z_j * 3 g5
    if a1 == 2:
        return g3 + 3 * z1 * z1 * g5
    if a2 == 2:
        return g3 + 3 * z2 * z2 * g5
    return 3 * z1 * z2 * g5


def kernel_multiplier(kabs, t: float, n: int | None = None):
    """``2 pi G_hat(k, t)`` by Gauss-Legendre quadrature of the radial Hankel integral.

    With ``r = t sin(theta)``, ``integral_0^t J0(k r) r / sqrt(t^2 - r^2) dr
    = t integral_0^{pi/2} J0(k t sin theta) sin(theta) d theta``, a smooth integrand.
    """
    kabs = np.asarray(kabs, dtype=float)
    if t == 0:
        return np.zeros_like(kabs)
    if n is None:
        n = int(min(4000, 64 + 1.2 * float(np.max(kabs)) * abs(t)))
    x, w = _gl(n)
    th = 0.25 * np.pi * (x + 1)
    wt = 0.25 * np.pi * w
    flat = kabs.ravel()
    out = np.empty_like(flat)
    for i0 in range(0, flat.size, 4096):
        kk = flat[i0:i0 + 4096]
        out[i0:i0 + 4096] = t * (special.j0(np.outer(kk, t * np.sin(th))) @ (wt * np.sin(th)))
    return out.reshape(kabs.shape)


def support_radius(f: Field, rel: float = 1e-10) -> float:
    """Largest ``|x|`` where ``|f| > rel * max |f|`` (x representation)."""
    v = f.to_x().values
    mag = np.sqrt(np.sum(v**2, axis=0)) if v.ndim == 3 else np.abs(v)
    top = mag.max()
    if top == 0:
        return 0.0
    return float(f.grid.r[mag > rel * top].max())


def kernel_apply(Z: FieldPair, t: float, rel: float = 1e-10) -> FieldPair:
    """``W(t) Z`` from the kernel matrix ``[[dG/dt, G], [d2G/dt2, dG/dt]]``.

    The convolution with ``G`` uses the quadrature multiplier.  ``dG/dt`` is the
    same quadrature differentiated under the integral sign, and
    ``d2G/dt2 = Delta G`` is applied spectrally.
    """
    grid = Z.grid
    if t == 0:
        return Z.to_k()
    R0 = max(support_radius(Z.A, rel), support_radius(Z.Pi, rel))
    if R0 + abs(t) >= grid.L / 2:
        raise SupportError(f"support radius {R0:.2f} + t = {t} reaches the box edge {grid.L / 2}")
    k = grid.kabs
    kk, inv = np.unique(k.ravel(), return_inverse=True)
    m = kernel_multiplier(kk, t)[inv].reshape(k.shape)
    mt = _kernel_multiplier_dt(kk, t)[inv].reshape(k.shape)
    Zk = Z.to_k()
    L, P = Zk.A.values, Zk.Pi.values
    Lt = mt * L + m * P
    Pt = -k**2 * m * L + mt * P
    return FieldPair(Field(Lt, grid, "k"), Field(Pt, grid, "k"))


def _kernel_multiplier_dt(kabs, t: float, n: int | None = None):
    """``d/dt`` of :func:`kernel_multiplier`, differentiating under the integral sign."""
    kabs = np.asarray(kabs, dtype=float)
    if n is None:
        n = int(min(4000, 64 + 1.2 * float(np.max(kabs)) * abs(t)))
    x, w = _gl(n)
    th = 0.25 * np.pi * (x + 1)
    wt = 0.25 * np.pi * w
    s = np.sin(th)
    flat = kabs.ravel()
    out = np.empty_like(flat)
    for i0 in range(0, flat.size, 4096):
        kk = flat[i0:i0 + 4096]
        arg = np.outer(kk, t * s)
        integrand = special.j0(arg) * s - special.j1(arg) * kk[:, None] * t * s * s
        out[i0:i0 + 4096] = integrand @ wt
    return out.reshape(kabs.shape)


# Duhamel ------------------------------------------------------------------------


def _radial_groups(grid: SpectralGrid):
    k = grid.kabs
    kk, inv = np.unique(k.ravel(), return_inverse=True)
    return kk, inv.reshape(k.shape)


def _effective_k(jv, grid, rel=1e-16):
    """Largest ``|k|`` where ``|J varrho_hat|`` exceeds ``rel`` of its maximum."""
    mag = np.sqrt(np.sum(np.abs(jv) ** 2, axis=0))
    return float(grid.kabs[mag > rel * mag.max()].max())


def _radial_sum(nu, ds, t, grid, jv):
    """``(S1, S2)`` on the lattice; modes beyond the forcing's support are left at 0."""
    kk, inv = _radial_groups(grid)
    keep = kk <= _effective_k(jv, grid)
    S1 = np.zeros_like(kk)
    S2 = np.zeros_like(kk)
    S1[keep], S2[keep] = forced_response(nu, ds, t, kk[keep])
    return S1[inv], S2[inv]


def forced_response(nu, ds: float, t: float, kk):
    """Trapezoid sums ``S1 = sum w nu sin(k (t - s))/k`` and ``S2 = sum w nu cos(k (t - s))``."""
    nu = np.asarray(nu, dtype=float)
    n = nu.size - 1
    s = ds * np.arange(n + 1)
    w = np.full(n + 1, ds)
    w[0] = w[-1] = 0.5 * ds
    tau = t - s
    S1 = np.empty_like(kk)
    S2 = np.empty_like(kk)
    wn = w * nu
    for i0 in range(0, kk.size, 2048):
        kb = kk[i0:i0 + 2048]
        ph = np.outer(kb, tau)
        S2[i0:i0 + 2048] = np.cos(ph) @ wn
        with np.errstate(invalid="ignore", divide="ignore"):
            S1[i0:i0 + 2048] = np.where(kb > 0, (np.sin(ph) @ wn) / np.where(kb > 0, kb, 1), tau @ wn)
    return S1, S2


def duhamel_solve(Z0: FieldPair, nu, ds: float, c: ChargeModel, t: float,
                  max_phase: float = 0.5) -> FieldPair:
    """``Z(t) = W(t) Z0 - integral_0^t W(t - s) (0, nu(s) J varrho) ds`` by the trapezoid rule.

    ``nu`` holds samples at ``s = 0, ds, ..., t``.  The forcing is radial times
    ``J varrho_hat``, so the sum runs over distinct ``|k|`` only.  Samples are
    rejected as under-resolved when ``ds * k_eff > max_phase``, ``k_eff`` being
    the largest ``|k|`` where ``|J varrho_hat|`` exceeds 1e-12 of its maximum.
    """
    grid = Z0.grid
    nu = np.asarray(nu, dtype=float)
    if nu.size < 2 or abs((nu.size - 1) * ds - t) > 1e-9 * max(1.0, t):
        raise UndersampledError("nu samples must cover [0, t] uniformly")
    jv = c.Jvarrho_hat(grid)
    k_eff = _effective_k(jv, grid, 1e-12)
    if ds * k_eff > max_phase:
        raise UndersampledError(f"step {ds} too coarse for |k| up to {k_eff:.2f}")
    S1, S2 = _radial_sum(nu, ds, t, grid, jv)
    free = propagate(Z0, t)
    L = free.A.values - S1 * jv
    P = free.Pi.values - S2 * jv
    return FieldPair(Field(L, grid, "k"), Field(P, grid, "k"))


# scattering ---------------------------------------------------------------------


@dataclass
class ScatteringData:
    """Asymptotic free state ``Psi_plus`` and remainder norms ``r(t)``."""

    psi_plus: FieldPair
    times: np.ndarray
    r_norms: np.ndarray
    tail_bound: float
    t_cut: float

    def free_norms(self, times) -> np.ndarray:
        prop = WavePropagator(self.psi_plus.grid)
        return np.array([energy_norm(prop(self.psi_plus, float(t))) for t in times])


def scattering_state(Z0: FieldPair, nu, ds: float, c: ChargeModel, times,
                     budget: float = 1e-6, tail_exponent: float | None = None,
                     radial_nodes: int = 800, k_max: float = 8.0) -> ScatteringData:
    """``Psi_+ = Z0 - integral_0^inf W(-s) R(s) ds``, ``R = (0, nu J varrho)``, truncated at the last sample.

    ``r(t) = Z(t) - W(t) Psi_+ = integral_t^inf W(t - s) R(s) ds`` is evaluated
    from that tail representation, whose energy norm is a radial integral
    against ``|J varrho_hat|^2`` (no cancellation between large terms).
    ``tail_exponent`` (fitted decay of ``nu``) bounds the neglected piece beyond
    the cut; it must stay below ``budget * ||Psi_+||``.
    """
    from .fitting import envelope, fit_power_law

    grid = Z0.grid
    nu = np.asarray(nu, dtype=float)
    t_cut = ds * (nu.size - 1)
    jv = c.Jvarrho_hat(grid)
    # W(-s)(0, v) = (sin(k(0 - s))/k v, cos(k(0 - s)) v): the Duhamel sums evaluated at t = 0
    S1, S2 = _radial_sum(nu, ds, 0.0, grid, jv)
    Zk = Z0.to_k()
    psi = FieldPair(Field(Zk.A.values - S1 * jv, grid, "k"),
                    Field(Zk.Pi.values - S2 * jv, grid, "k"))

    s = ds * np.arange(nu.size)
    if not np.any(nu):
        tail_exponent = -np.inf
    if tail_exponent is None:
        lo = 0.5 * t_cut
        sel = s >= lo
        env = envelope(s[sel], nu[sel], 0.05 * t_cut)
        tail_exponent = fit_power_law(s[sel], np.maximum(env, 1e-300), floor_factor=0.0).exponent
    amp = np.max(np.abs(nu[s >= 0.9 * t_cut]))
    p = tail_exponent
    # radial quadrature in |k| for energy norms of forced pieces
    xg, wg = _gl(radial_nodes)
    kq = 0.5 * k_max * (xg + 1)
    wq = 0.5 * k_max * wg
    hq = c.coupling_density(kq)
    if p == -np.inf:
        tail = 0.0
    elif p < -1:
        # model tail nu = amp (s / T)^p: |integral_T^inf nu e^{iks} ds| <= amp T min(1/(-p-1), 2/(kT))
        bound = amp * t_cut * np.minimum(1.0 / (-p - 1), 2.0 / (kq * t_cut))
        tail = float(np.sqrt(2 * np.pi * np.sum(wq * hq * kq * bound**2)))
    else:
        tail = np.inf
    pn = energy_norm(psi)
    if pn > 0 and tail > budget * pn:
        raise TailBudgetError(f"scattering tail {tail:.2e} exceeds {budget:g} * ||Psi_+|| = {budget * pn:.2e}")

    times = np.asarray(times, dtype=float)
    r = np.empty_like(times)
    for i, t in enumerate(times):
        j0 = int(round(t / ds))
        if abs(j0 * ds - t) > 1e-9 * max(1.0, t):
            raise UndersampledError("remainder times must lie on the sample grid")
        sub = nu[j0:]
        A1, A2 = forced_response(sub, ds, 0.0, kq)  # s measured from t
        # integral_t W(t - s) R(s) ds -> (sin(k(t - s))/k, cos(k(t - s))) = (-A1, A2) with s' = s - t
        integrand = (kq**2 * A1**2 + A2**2) * hq * kq
        r[i] = np.sqrt(2 * np.pi * np.sum(wq * integrand))
    return ScatteringData(psi, times, r, float(tail), float(t_cut))


def dispersive_norms(Z0: FieldPair, times, beta: float) -> np.ndarray:
    """``|| W(t) Z0 ||_{E_{-beta}}`` at each time."""
    from .grid import WeightedNormSpec, weighted_norm

    prop = WavePropagator(Z0.grid)
    spec = WeightedNormSpec(-beta, "E")
    return np.array([weighted_norm(prop(Z0, float(t)), spec) for t in times])
