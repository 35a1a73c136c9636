"""Laplace-domain coupling on the boundary line lambda = i mu + 0.

For the separable data family

    Lambda0_hat = a J varrho_hat phi_L(|k|),   Pi0_hat = b J varrho_hat phi_P(|k|)

every pairing reduces to a radial integral against ``h = profile'^2``:

    kappa(lam)    = Q[h](lam)
    numerator(lam) = a lam Q[h phi_L](lam) + b Q[h phi_P](lam)
    nu_tilde(lam)  = numerator / (I + kappa)

where ``Q[g](lam) = integral g(|k|) / (k^2 + lam^2) dk``.
"""

from __future__ import annotations

import warnings
from math import comb, factorial
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .charge import ChargeModel
from .grid import Field, FieldPair, SpectralGrid
from .quadrature import (PANEL_NODES, U_MAX, _graded, _panels_to_nodes, pv_integral,
                         radial_moment, radial_offline_value)


class DegenerateError(ValueError):
    pass


class TruncationError(RuntimeError):
    pass


def gaussian_profile(width: float) -> Callable:
    return lambda k: np.exp(-((width * k) ** 2))


@dataclass
class SeparableData:
    """Radial separable initial deviation from the soliton."""

    a: float = 0.0
    b: float = 0.5
    width_L: float = 1.0
    width_P: float = 1.0

    @property
    def phi_L(self):
        return gaussian_profile(self.width_L)

    @property
    def phi_P(self):
        return gaussian_profile(self.width_P)

    def fields(self, charge: ChargeModel, grid: SpectralGrid) -> FieldPair:
        jv = charge.Jvarrho_hat(grid)
        lam = self.a * jv * grid.from_radial(self.phi_L)
        pi = self.b * jv * grid.from_radial(self.phi_P)
        return FieldPair(Field(lam, grid, "k"), Field(pi, grid, "k"))


class KappaEvaluator:
    """``kappa(i mu + 0)`` by singularity-subtracted principal value."""

    def __init__(self, charge: ChargeModel, u_max: float = U_MAX, nodes: int = PANEL_NODES):
        self.charge = charge
        self.u_max = u_max
        self.nodes = nodes

    def h(self, k):
        return self.charge.coupling_density(k)

    def __call__(self, mu: float) -> complex:
        return self.line(mu)

    def line(self, mu: float) -> complex:
        m = mu * mu
        re = np.pi * pv_integral(lambda u: self.h(np.sqrt(u)), m, self.u_max, self.nodes)
        im = -np.pi**2 * np.sign(mu) * self.h(np.array([abs(mu)]))[0]
        return complex(re, im)

    def offline(self, lam: complex) -> complex:
        """Direct evaluation at Re lambda > 0 (adaptive quadrature)."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return radial_offline_value(self.h, lam)

    def imag_closed_form(self, mu: float) -> float:
        return float(-np.pi**2 * np.sign(mu) * self.h(np.array([abs(mu)]))[0])


def kappa_line(charge: ChargeModel, mu: float) -> complex:
    return KappaEvaluator(charge).line(mu)


@dataclass
class NondegeneracyReport:
    I: float
    min_abs: float
    mu_at_min: float
    threshold: float

    @property
    def holds(self) -> bool:
        return self.min_abs > self.threshold


def check_nondegeneracy(charge: ChargeModel, I: float, mu_grid=None,
                        threshold: float = 1e-6) -> NondegeneracyReport:
    """Minimum of ``|I + kappa(i mu + 0)|`` over ``mu_grid`` (default [-50, 50])."""
    if mu_grid is None:
        mu_grid = np.linspace(-50, 50, 2001)
    ev = KappaEvaluator(charge)
    vals = np.array([abs(I + ev.line(float(m))) for m in mu_grid])
    i = int(np.argmin(vals))
    return NondegeneracyReport(float(I), float(vals[i]), float(mu_grid[i]), threshold)


class NuEvaluator:
    """``nu_tilde(i mu + 0)`` for separable data, plus its inverse transform."""

    def __init__(self, charge: ChargeModel, I: float, data: SeparableData,
                 u_max: float = U_MAX, nodes: int = PANEL_NODES):
        self.charge = charge
        self.I = float(I)
        self.data = data
        self.u_max = u_max
        self.nodes = nodes

    def _stack(self, k):
        h = self.charge.coupling_density(k)
        return np.stack([h, h * self.data.phi_L(k), h * self.data.phi_P(k)], axis=-1)

    def transforms(self, mu: float) -> np.ndarray:
        """``[Q[h], Q[h phi_L], Q[h phi_P]]`` at ``i mu + 0``."""
        m = mu * mu
        re = np.pi * pv_integral(lambda u: self._stack(np.sqrt(u)), m, self.u_max, self.nodes)
        im = -np.pi**2 * np.sign(mu) * self._stack(np.array([abs(mu)]))[0]
        return re + 1j * im

    def parts(self, mu: float):
        q = self.transforms(mu)
        lam = 1j * mu
        num = self.data.a * lam * q[1] + self.data.b * q[2]
        return num, q[0]

    def numerator(self, mu: float) -> complex:
        return complex(self.parts(mu)[0])

    def nu_tilde(self, mu: float, threshold: float = 1e-12) -> complex:
        num, kap = self.parts(mu)
        den = self.I + kap
        if abs(den) < threshold:
            raise DegenerateError(f"I + kappa vanishes near mu = {mu}")
        return complex(num / den)

    __call__ = nu_tilde

    def nu_tilde_offline(self, lam: complex) -> complex:
        d = self.data
        h = self.charge.coupling_density
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            kap = radial_offline_value(h, lam)
            qL = radial_offline_value(lambda k: h(k) * d.phi_L(k), lam) if d.a else 0.0
            qP = radial_offline_value(lambda k: h(k) * d.phi_P(k), lam) if d.b else 0.0
        return (d.a * lam * qL + d.b * qP) / (self.I + kap)

    def threshold_leading(self, mu: float) -> complex:
        """Leading small-mu behaviour: ``(N_P + i mu N_L) / (I + kappa0)``."""
        q0 = self.transforms(0.0).real
        return (self.data.b * q0[2] + 1j * mu * self.data.a * q0[1]) / (self.I + q0[0])

    # time domain ------------------------------------------------------------

    def initial_derivatives(self):
        """``nu(0), nu'(0), nu''(0), nu'''(0)`` from radial moments of the data."""
        h = self.charge.coupling_density
        d = self.data
        mom = lambda phi, p: radial_moment(lambda k: h(k) * phi(k), p)
        mL0, mL2 = (mom(d.phi_L, 0), mom(d.phi_L, 2)) if d.a else (0.0, 0.0)
        mP0, mP2 = (mom(d.phi_P, 0), mom(d.phi_P, 2)) if d.b else (0.0, 0.0)
        h0 = radial_moment(h, 0)
        n0 = d.a * mL0 / self.I
        n1 = d.b * mP0 / self.I
        n2 = (-d.a * mL2 - n0 * h0) / self.I
        n3 = (-d.b * mP2 - n1 * h0) / self.I
        return n0, n1, n2, n3

    def _reference(self):
        """``exp(-t) sum c_j t^j / j!`` matching the first four derivatives at t = 0."""
        n = np.array(self.initial_derivatives())
        T = np.array([[comb(i, j) * (-1.0) ** (i - j) if j <= i else 0.0 for j in range(4)]
                      for i in range(4)])
        c = np.linalg.solve(T, n)
        lap = lambda lam: sum(c[j] / (lam + 1) ** (j + 1) for j in range(4))
        time = lambda t: np.exp(-t) * sum(c[j] * t**j / factorial(j) for j in range(4))
        return lap, time

    def mu_nodes(self, mu_max: float = 200.0, panel: float = 0.25, n: int = 16):
        br = [0.0] + _graded(1e-9, panel, 1e-9, max_width=panel)
        br += list(np.arange(2 * panel, mu_max + 0.5 * panel, panel))
        br = np.unique(np.clip(br, 0, mu_max))
        return _panels_to_nodes(br, n)

    def invert(self, t, mu_max: float = 200.0, budget: float = 1e-8, n: int = 16):
        """``nu(t) = (1/pi) Re integral_0^inf exp(i mu t) nu_tilde(i mu + 0) d mu``.

        A rational reference with the same ``nu(0), nu'(0), nu''(0)`` is subtracted
        in the Laplace domain and added back in closed form, so the truncated
        remainder decays like ``mu^-5``.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        nodes, weights = self.mu_nodes(mu_max, n=n)
        lap, time = self._reference()
        vals = np.array([self.nu_tilde(float(m)) for m in nodes]) - lap(1j * nodes)
        scale = max(np.max(np.abs(vals)), 1e-300)
        tail = abs(vals[-1]) * mu_max / 3.0
        if tail > budget * scale and tail > 1e-14:
            raise TruncationError(f"inversion tail {tail:.2e} exceeds budget at mu_max={mu_max}")
        if not np.allclose(self.nu_tilde(-float(nodes[-1])), np.conj(self.nu_tilde(float(nodes[-1]))),
                           rtol=1e-10, atol=1e-300):
            raise RuntimeError("nu_tilde lacks conjugate symmetry")
        out = np.empty_like(t)
        for i0 in range(0, t.size, 256):
            tt = t[i0:i0 + 256]
            ph = np.exp(1j * np.outer(tt, nodes))
            out[i0:i0 + 256] = (ph @ (weights * vals)).real / np.pi
        return out + time(t)


def invert_nu(charge: ChargeModel, I: float, data: SeparableData, t, **kw):
    return NuEvaluator(charge, I, data).invert(t, **kw)
