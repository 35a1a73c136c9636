import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinsoliton.grid import (Field, FieldPair, GridError, WeightedNormSpec, energy_norm, gradient,
                              helmholtz_project, inner_product, make_grid, max_divergence_ratio,
                              weighted_norm)

GRIDS = [(16, 16.0), (32, 10.0), (64, 40.0), (128, 25.0)]


def test_k_spacing():
    g = make_grid(16, 16)
    assert g.dk == pytest.approx(2 * np.pi / 16)
    assert g.dk == pytest.approx(0.3927, abs=1e-4)


@pytest.mark.parametrize("N", [15, 8, 0])
def test_bad_N(N):
    with pytest.raises(GridError):
        make_grid(N, 16)


def test_round_trip_white_noise(rng):
    g = make_grid(256, 128)
    f = rng.standard_normal((256, 256))
    assert np.max(np.abs(g.ifft(g.fft(f)) - f)) < 1e-12


def test_gaussian_transform():
    # unitary convention: exp(-|x|^2 / 2) <-> exp(-|k|^2 / 2)
    g = make_grid(128, 40)
    fh = g.fft(np.exp(-g.r**2 / 2))
    assert np.max(np.abs(fh - np.exp(-g.k2 / 2))) < 1e-13


@given(st.sampled_from(GRIDS), st.integers(0, 2**32 - 1))
def test_plancherel_property(shape, seed):
    N, L = shape
    g = make_grid(N, L)
    r = np.random.default_rng(seed)
    f = Field(r.standard_normal((2, N, N)), g, "x")
    h = Field(r.standard_normal((2, N, N)), g, "x")
    xs = inner_product(f, h)
    ks = inner_product(f.to_k(), h.to_k())
    assert abs(xs - ks) <= 1e-12 * np.sqrt(inner_product(f, f) * inner_product(h, h))
    assert np.max(np.abs(f.to_k().to_x().values - f.values)) < 1e-12
    assert inner_product(f, h) == pytest.approx(inner_product(h, f), rel=1e-14)


def test_zero_inner_product(grid128):
    z = Field(np.zeros((128, 128)), grid128)
    assert inner_product(z, z) == 0.0


def test_spectral_derivative_of_plane_wave(grid128):
    g = grid128
    n1, n2 = 3, -5
    k0 = g.dk * np.array([n1, n2])
    x1, x2 = g.X
    f = Field(np.sin(k0[0] * x1 + k0[1] * x2), g)
    d = g.ifft(gradient(f).values)
    c = np.cos(k0[0] * x1 + k0[1] * x2)
    assert np.max(np.abs(d[0] - k0[0] * c)) < 1e-10
    assert np.max(np.abs(d[1] - k0[1] * c)) < 1e-10


def _smooth_vector(g, r, m=6):
    # band-limited random vector field
    vals = np.zeros((2, g.N, g.N), dtype=complex)
    idx = r.integers(-m, m + 1, size=(8, 2))
    for i, j in idx:
        vals[:, i % g.N, j % g.N] += r.standard_normal(2) + 1j * r.standard_normal(2)
    return Field(vals, g, "k").to_x()


@given(st.integers(0, 2**32 - 1))
def test_helmholtz_properties(seed):
    g = make_grid(32, 10.0)
    r = np.random.default_rng(seed)
    f = _smooth_vector(g, r)
    h = _smooth_vector(g, r)
    P = helmholtz_project
    pf = P(f)
    assert np.max(np.abs(P(pf).values - pf.values)) <= 1e-10 * max(1.0, np.max(np.abs(pf.values)))
    assert max_divergence_ratio(pf) < 1e-10
    lhs, rhs = inner_product(P(f), h), inner_product(f, P(h))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_helmholtz_kills_gradients(grid128):
    g = grid128
    phi = Field(np.exp(-g.r**2), g)
    grad = Field(g.ifft(gradient(phi).values), g)
    assert np.max(np.abs(helmholtz_project(grad).values)) < 1e-10


def test_helmholtz_keeps_transverse():
    # Nyquist content must be negligible: the x representation drops its odd part
    g = make_grid(128, 20)
    psi = Field(np.exp(-g.r**2), g)
    d = gradient(psi).values
    f = Field(np.array([d[1], -d[0]]), g, "k").to_x()  # (d2 psi, -d1 psi)
    assert max_divergence_ratio(f) < 1e-10
    assert np.max(np.abs(helmholtz_project(f).values - f.values)) < 1e-12


def test_weighted_norm_zero_and_beta0(grid128):
    g = grid128
    assert weighted_norm(FieldPair.zeros(g), WeightedNormSpec(-3.0)) == 0.0
    r = np.random.default_rng(0)
    Z = FieldPair(_smooth_vector(g, r), _smooth_vector(g, r))
    gA = g.ifft(gradient(Z.A).values)
    manual = np.sqrt(np.sum(gA**2) * g.dx**2) + np.sqrt(np.sum(Z.Pi.values**2) * g.dx**2)
    assert weighted_norm(Z, WeightedNormSpec(0.0)) == pytest.approx(manual, rel=1e-12)


def test_weighted_norm_gaussian_oracle():
    # A = (exp(-r^2), 0), Pi = 0: ||<x>^-3 grad A||^2 = integral 4 r^2 exp(-2 r^2) (1 + r^2)^-3 2 pi r dr.
    # The weight's poles at r = +-i limit the lattice sum, hence dx = 0.156.
    from scipy import integrate
    g = make_grid(256, 40)
    A = Field(np.array([np.exp(-g.r**2), 0 * g.r]), g)
    Z = FieldPair(A, Field(np.zeros((2, 256, 256)), g))
    val, _ = integrate.quad(lambda r: 4 * r**2 * np.exp(-2 * r**2) * (1 + r**2) ** -3 * 2 * np.pi * r,
                            0, np.inf, epsabs=0, epsrel=1e-13)
    assert weighted_norm(Z, WeightedNormSpec(-3.0)) == pytest.approx(np.sqrt(val), rel=1e-8)


def test_energy_norm_matches_x_side(grid128):
    g = grid128
    r = np.random.default_rng(1)
    Z = FieldPair(_smooth_vector(g, r), _smooth_vector(g, r))
    gA = g.ifft(gradient(Z.A).values)
    x_side = np.sqrt(np.sum(gA**2) * g.dx**2 + np.sum(Z.Pi.values**2) * g.dx**2)
    assert energy_norm(Z) == pytest.approx(x_side, rel=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        WeightedNormSpec(np.inf)
    with pytest.raises(ValueError):
        WeightedNormSpec(1.0, "bogus")
