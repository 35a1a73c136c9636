"""Radial neutral charges defined by their k-space profile.

A charge is given by ``rho_hat(k) = profile(|k|)`` with ``profile(0) = 0``.
Its first moment ``varrho = x rho`` has ``varrho_hat = i grad_k rho_hat
= i khat profile'(|k|)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .grid import Field, SpectralGrid, inner_product

FD_STEP = 1e-4


class ChargeError(ValueError):
    pass


def apply_J(v):
    """``J = [[0, 1], [-1, 0]]`` acting on the leading axis of ``v``."""
    return np.array([v[1], -v[0]])


def richardson_derivative(f: Callable, k, h: float = FD_STEP):
    """Fourth-order derivative: Richardson extrapolation of central differences."""
    k = np.asarray(k, dtype=float)
    d1 = (f(k + h) - f(k - h)) / (2 * h)
    d2 = (f(k + h / 2) - f(k - h / 2)) / h
    return (4 * d2 - d1) / 3


@dataclass
class ChargeModel:
    """Neutral radial charge.  ``profile`` must accept arrays (and even-extend to k < 0)."""

    profile: Callable
    dprofile: Optional[Callable] = None
    name: str = "custom"
    rho_x: Optional[Callable] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.dprofile is None:
            p = self.profile
            self.dprofile = lambda k: richardson_derivative(p, k)

    # radial profiles ---------------------------------------------------------

    def rho_hat_radial(self, k):
        return self.profile(np.asarray(k, dtype=float))

    def drho_radial(self, k):
        return self.dprofile(np.asarray(k, dtype=float))

    def coupling_density(self, k):
        """``|varrho_hat(k)|^2 = profile'(k)^2`` as a radial function."""
        return self.drho_radial(k) ** 2

    def rho_x_radial(self, r):
        """x-space profile by Hankel quadrature: ``integral profile(k) J0(kr) k dk``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        for i, ri in enumerate(r):
            val, _ = integrate.quad(lambda k: self.profile(k) * special.j0(k * ri) * k,
                                    0, np.inf, limit=400, epsabs=1e-15, epsrel=1e-12)
            out[i] = val
        return out

    # grid samples -------------------------------------------------------------

    def _grid_cached(self, grid, key, build):
        ck = (grid.N, grid.L, key)
        if ck not in self._cache:
            self._cache[ck] = build()
        return self._cache[ck]

    def rho_hat(self, grid: SpectralGrid) -> np.ndarray:
        return self._grid_cached(grid, "rho_hat", lambda: grid.from_radial(self.profile))

    def varrho_hat(self, grid: SpectralGrid) -> np.ndarray:
        def build():
            d = grid.from_radial(self.dprofile)
            return 1j * grid.khat * d
        return self._grid_cached(grid, "varrho_hat", build)

    def Jvarrho_hat(self, grid: SpectralGrid) -> np.ndarray:
        return self._grid_cached(grid, "Jvarrho_hat", lambda: apply_J(self.varrho_hat(grid)))

    def rho(self, grid) -> Field:
        return Field(self.rho_hat(grid), grid, "k")

    def varrho(self, grid) -> Field:
        return Field(self.varrho_hat(grid), grid, "k")

    def Jvarrho(self, grid) -> Field:
        return Field(self.Jvarrho_hat(grid), grid, "k")

    def scaled(self, c: float) -> "ChargeModel":
        p, dp = self.profile, self.dprofile
        rx = None if self.rho_x is None else (lambda r, f=self.rho_x: c * f(r))
        return ChargeModel(lambda k: c * p(k), lambda k: c * dp(k), f"{self.name}*{c}", rx)


def build_charge(profile: Callable, grid: SpectralGrid | None = None,
                 dprofile: Callable | None = None, name: str = "custom",
                 rho_x: Callable | None = None) -> ChargeModel:
    """Validate neutrality and (optionally) populate the grid caches.

    ``rho_x`` is an optional closed-form x-space radial profile.
    """
    p0 = float(profile(np.array(0.0)))
    if p0 != 0.0:
        raise ChargeError(f"profile(0) = {p0} != 0: charge is not neutral")
    c = ChargeModel(profile, dprofile, name, rho_x)
    if grid is not None:
        c.rho_hat(grid)
        c.Jvarrho_hat(grid)
    return c


# named profiles ---------------------------------------------------------------


def _quadratic(amplitude=1.0, width=1.0):
    a, w = amplitude, width

    def f(k):
        u = (w * k) ** 2
        return a * u * np.exp(-u)

    def df(k):
        u = (w * k) ** 2
        return a * (2 * w**2 * k - 2 * w**4 * k**3) * np.exp(-u)

    def rx(r):
        # -(a/2) Laplacian of exp(-r^2 / (4 w^2))
        q = np.asarray(r, dtype=float) ** 2 / (4 * w**2)
        return 0.5 * a / w**2 * (1 - q) * np.exp(-q)

    return f, df, rx


def _quartic(amplitude=1.0, width=1.0):
    a, w = amplitude, width

    def f(k):
        u = (w * k) ** 2
        return a * u**2 * np.exp(-u)

    def df(k):
        u = (w * k) ** 2
        return a * (4 * w**4 * k**3 - 2 * w**6 * k**5) * np.exp(-u)

    def rx(r):
        # (a w^2 / 2) Laplacian^2 of exp(-alpha r^2), alpha = 1 / (4 w^2)
        al = 1 / (4 * w**2)
        r2 = np.asarray(r, dtype=float) ** 2
        return 0.5 * a * w**2 * (32 * al**2 - 64 * al**3 * r2 + 16 * al**4 * r2**2) * np.exp(-al * r2)

    return f, df, rx


PROFILES = {"reference": _quadratic, "quartic": _quartic}


def named_charge(name: str = "reference", grid=None, **params) -> ChargeModel:
    """``reference``: ``a (w k)^2 exp(-(w k)^2)``; ``quartic``: ``a (w k)^4 exp(-(w k)^2)``."""
    try:
        factory = PROFILES[name]
    except KeyError:
        raise ChargeError(f"unknown charge profile {name!r}; known: {sorted(PROFILES)}") from None
    f, df, rx = factory(**params)
    return build_charge(f, grid, df, name, rx)


def reference_charge(grid=None) -> ChargeModel:
    return named_charge("reference", grid)


# potentials and pairings -----------------------------------------------------------


def coulomb_potential(c: ChargeModel, grid: SpectralGrid) -> Field:
    """``Phi_hat = rho_hat / k^2`` with the k = 0 mode set to zero; x representation."""
    rh = c.rho_hat(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        ph = rh / grid.k2
    ph[0, 0] = 0.0
    return Field(ph, grid, "k").to_x()


def moment_pairing(f: Field, c: ChargeModel) -> float:
    """``<f, J varrho>``."""
    return inner_product(f.to_k(), c.Jvarrho(f.grid))
