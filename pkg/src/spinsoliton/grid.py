"""Periodic 2D spectral grid with a unitary Fourier convention.

Forward transform: ``f_hat(k) = (2*pi)**-1 * integral f(x) exp(-i k.x) dx``,
approximated on the box ``[-L/2, L/2)^2``.  With this normalisation the
x-side and k-side pairings agree (discrete Plancherel).

Arrays are stored in numpy FFT order; vector fields carry a leading axis of
length 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


class GridError(ValueError):
    pass


class SpectralGrid:
    """Square periodic box of side ``L`` with ``N`` modes per axis."""

    def __init__(self, N: int, L: float):
        if int(N) != N or N < 16 or N % 2:
            raise GridError(f"N must be an even integer >= 16, got {N}")
        if not L > 0:
            raise GridError(f"L must be positive, got {L}")
        self.N = int(N)
        self.L = float(L)
        self.dx = self.L / self.N
        self.dk = TWO_PI / self.L
        self.x = -self.L / 2 + self.dx * np.arange(self.N)
        n = np.fft.fftfreq(self.N, d=1.0 / self.N)
        self.k1d = self.dk * n
        self._n1d = n.astype(int)

    def __repr__(self):
        return f"SpectralGrid(N={self.N}, L={self.L})"

    def __eq__(self, other):
        return isinstance(other, SpectralGrid) and (self.N, self.L) == (other.N, other.L)

    def __hash__(self):
        return hash((self.N, self.L))

    @cached_property
    def X(self):
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def r(self):
        x1, x2 = self.X
        return np.hypot(x1, x2)

    @cached_property
    def K(self):
        """Wave-vector components ``(k1, k2)`` on the FFT-ordered grid."""
        return np.meshgrid(self.k1d, self.k1d, indexing="ij")

    @cached_property
    def k2(self):
        k1, k2 = self.K
        return k1**2 + k2**2

    @cached_property
    def kabs(self):
        return np.sqrt(self.k2)

    @cached_property
    def khat(self):
        k1, k2 = self.K
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.array([k1, k2]) / self.kabs
        out[:, 0, 0] = 0.0
        return out

    @cached_property
    def _phase(self):
        n1, n2 = np.meshgrid(self._n1d, self._n1d, indexing="ij")
        return np.where((n1 + n2) % 2 == 0, 1.0, -1.0)

    @cached_property
    def nyquist(self):
        """Boolean mask of modes with a Nyquist index (no Hermitian partner)."""
        n1, n2 = np.meshgrid(self._n1d, self._n1d, indexing="ij")
        h = -self.N // 2
        return (n1 == h) | (n2 == h)

    @cached_property
    def kmag_index(self):
        """``(unique |k|^2 in units of dk^2, inverse index)`` for radial sums."""
        n1, n2 = np.meshgrid(self._n1d, self._n1d, indexing="ij")
        return np.unique((n1**2 + n2**2).ravel(), return_inverse=True)

    # transforms -----------------------------------------------------------

    def fft(self, f):
        f = np.asarray(f)
        return (self.dx**2 / TWO_PI) * self._phase * np.fft.fft2(f, axes=(-2, -1))

    def ifft(self, fh, real=True):
        out = np.fft.ifft2(np.asarray(fh) * self._phase, axes=(-2, -1)) * (TWO_PI / self.dx**2)
        return out.real if real else out

    def from_radial(self, profile):
        """Sample a radial k-space profile ``profile(|k|)``; Nyquist modes zeroed."""
        out = np.asarray(profile(self.kabs), dtype=complex)
        out[self.nyquist] = 0.0
        return out

    # weights --------------------------------------------------------------

    def japanese(self, beta: float):
        """``<x>^beta = (1 + |x|^2)^(beta/2)`` on the box-centred nodes."""
        return (1.0 + self.r**2) ** (0.5 * beta)


def make_grid(N: int, L: float) -> SpectralGrid:
    return SpectralGrid(N, L)


# fields -------------------------------------------------------------------


@dataclass
class Field:
    """Scalar ``(N, N)`` or vector ``(2, N, N)`` samples in one representation."""

    values: np.ndarray
    grid: SpectralGrid
    space: str = "x"

    def __post_init__(self):
        if self.space not in ("x", "k"):
            raise ValueError("space must be 'x' or 'k'")
        if self.values.shape[-2:] != (self.grid.N, self.grid.N):
            raise GridError("field shape does not match grid")

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 3

    def to_k(self) -> "Field":
        if self.space == "k":
            return self
        return Field(self.grid.fft(self.values), self.grid, "k")

    def to_x(self) -> "Field":
        if self.space == "x":
            return self
        return Field(self.grid.ifft(self.values), self.grid, "x")

    def __add__(self, other):
        _check_compatible(self, other)
        return Field(self.values + other.values, self.grid, self.space)

    def __sub__(self, other):
        _check_compatible(self, other)
        return Field(self.values - other.values, self.grid, self.space)

    def __mul__(self, c):
        return Field(self.values * c, self.grid, self.space)

    __rmul__ = __mul__


@dataclass
class FieldPair:
    """Vector potential (or its soliton-frame deviation) and its momentum."""

    A: Field
    Pi: Field

    @property
    def grid(self):
        return self.A.grid

    def to_k(self):
        return FieldPair(self.A.to_k(), self.Pi.to_k())

    def to_x(self):
        return FieldPair(self.A.to_x(), self.Pi.to_x())

    def __add__(self, other):
        return FieldPair(self.A + other.A, self.Pi + other.Pi)

    def __sub__(self, other):
        return FieldPair(self.A - other.A, self.Pi - other.Pi)

    def __mul__(self, c):
        return FieldPair(self.A * c, self.Pi * c)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid, space="k"):
        dt = complex if space == "k" else float
        z = np.zeros((2, grid.N, grid.N), dtype=dt)
        return cls(Field(z, grid, space), Field(z.copy(), grid, space))


def _check_compatible(f, g):
    if f.grid != g.grid:
        raise GridError("fields live on different grids")
    if f.space != g.space:
        raise GridError("fields are in different representations")


def inner_product(f: Field, g: Field) -> float:
    """Quadrature of ``integral f . g dx`` (k side: Hermitian pairing, real part)."""
    _check_compatible(f, g)
    grid = f.grid
    if f.space == "x":
        return float(np.sum(f.values * g.values) * grid.dx**2)
    return float(np.real(np.sum(f.values * np.conj(g.values))) * grid.dk**2)


def gradient(f: Field) -> Field:
    """Spectral gradient; vector input gives shape ``(2, 2, N, N)`` with [j, i] = d_j f_i."""
    fk = f.to_k()
    k1, k2 = f.grid.K
    vals = np.array([1j * k1 * fk.values, 1j * k2 * fk.values])
    return Field(vals, f.grid, "k")


def divergence(f: Field) -> Field:
    fk = f.to_k()
    k1, k2 = f.grid.K
    return Field(1j * (k1 * fk.values[0] + k2 * fk.values[1]), f.grid, "k")


def max_divergence_ratio(f: Field) -> float:
    """``max |k . f_hat| / max |f_hat|`` (0 for the zero field)."""
    fk = f.to_k().values
    top = np.max(np.abs(fk))
    if top == 0:
        return 0.0
    return float(np.max(np.abs(divergence(f).values)) / top)


def helmholtz_project(f: Field) -> Field:
    """Leray projection ``(1 - khat khat^T) f_hat``; the k = 0 mode passes through."""
    fk = f.to_k().values
    kh = f.grid.khat
    dot = kh[0] * fk[0] + kh[1] * fk[1]
    out = fk - kh * dot
    res = Field(out, f.grid, "k")
    return res if f.space == "k" else res.to_x()


# weighted norms -------------------------------------------------------------

VARIANTS = ("E", "E+", "H", "L2")


@dataclass(frozen=True)
class WeightedNormSpec:
    """``variant``: 'E' (E_beta), 'E+' (E_beta^+), 'H' (H^s_beta), 'L2' (L^2_beta)."""

    beta: float
    variant: str = "E"
    s: int = 0

    def __post_init__(self):
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.s not in (0, 1, 2):
            raise ValueError("s must be 0, 1 or 2")


def _wl2(values_x, w, dx):
    return float(np.sqrt(np.sum((values_x * w) ** 2) * dx**2))


def weighted_field_norm(f: Field, beta: float, s: int = 0) -> float:
    """``|| <x>^beta <grad>^s f ||_{L^2}``."""
    grid = f.grid
    fk = f.to_k().values
    if s:
        fk = fk * (1.0 + grid.k2) ** (0.5 * s)
    return _wl2(grid.ifft(fk), grid.japanese(beta), grid.dx)


def weighted_norm(Z, spec: WeightedNormSpec) -> float:
    """Weighted energy-type norms of a :class:`FieldPair` (or a single field for H/L2)."""
    if spec.variant in ("H", "L2"):
        if isinstance(Z, FieldPair):
            raise ValueError("H/L2 variants take a single field")
        return weighted_field_norm(Z, spec.beta, spec.s if spec.variant == "H" else 0)
    grid = Z.grid
    w = grid.japanese(spec.beta)
    gA = grid.ifft(gradient(Z.A).values)
    out = _wl2(gA, w, grid.dx) + _wl2(Z.Pi.to_x().values, w, grid.dx)
    if spec.variant == "E+":
        out += _wl2(Z.A.to_x().values, w, grid.dx)
    return out


def energy_norm(Z: FieldPair) -> float:
    """Hilbert norm of the energy space, ``sqrt(||grad A||^2 + ||Pi||^2)``, on the k side."""
    grid = Z.grid
    A = Z.A.to_k().values
    P = Z.Pi.to_k().values
    total = np.sum(grid.k2 * np.abs(A) ** 2) + np.sum(np.abs(P) ** 2)
    return float(np.sqrt(total * grid.dk**2))
