"""Rotating solitons ``(A_omega, 0)`` and the momentum map ``M = omega (I + kappa0)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .charge import ChargeModel
from .grid import Field, SpectralGrid


class QuadratureError(RuntimeError):
    pass


def kappa_zero(c: ChargeModel, rtol: float = 1e-12) -> float:
    """``kappa0 = integral |varrho_hat|^2 / k^2 dk = 2 pi integral profile'(k)^2 / k dk``."""
    f = lambda k: c.coupling_density(k) / k if k > 0 else 0.0
    val, err = integrate.quad(f, 0, np.inf, epsabs=0.0, epsrel=rtol, limit=500)
    if not np.isfinite(val) or err > 1e-10 * abs(val):
        raise QuadratureError(f"kappa0 quadrature did not converge (err={err:.2e})")
    return 2 * np.pi * val


def kappa_zero_grid(c: ChargeModel, grid: SpectralGrid) -> float:
    """Lattice sum of the same integral.

    ``h(k) / k^2`` is smooth at the origin; the k = 0 cell takes its limit,
    read off at ``k = 1e-4 dk``.
    """
    jv = c.Jvarrho_hat(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.sum(np.abs(jv) ** 2, axis=0) / grid.k2
    k0 = 1e-4 * grid.dk
    w[0, 0] = float(c.coupling_density(np.array(k0))) / k0**2
    return float(np.sum(w) * grid.dk**2)


@dataclass
class SolitonState:
    omega: float
    A: Field
    M: float
    kappa0: float
    I: float

    @property
    def grid(self):
        return self.A.grid


def soliton_potential_hat(omega: float, c: ChargeModel, grid: SpectralGrid) -> np.ndarray:
    """``A_hat = -omega J varrho_hat / k^2``; k = 0 mode zero."""
    jv = c.Jvarrho_hat(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = -omega * jv / grid.k2
    a[:, 0, 0] = 0.0
    return a


def build_soliton(omega: float, c: ChargeModel, I: float, grid: SpectralGrid,
                  kappa0: float | None = None) -> SolitonState:
    if not I > 0:
        raise ValueError("moment of inertia must be positive")
    if kappa0 is None:
        kappa0 = kappa_zero(c)
    A = Field(soliton_potential_hat(omega, c, grid), grid, "k")
    return SolitonState(float(omega), A, float(omega * (I + kappa0)), float(kappa0), float(I))


def limit_frequency(M: float, I: float, c: ChargeModel | None = None,
                    kappa0: float | None = None) -> float:
    """``omega_* = M / (I + kappa0)``."""
    if kappa0 is None:
        kappa0 = kappa_zero(c)
    return M / (I + kappa0)
