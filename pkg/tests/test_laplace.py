import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from spinsoliton.charge import reference_charge
from spinsoliton.dynamics import radial_nu_history
from spinsoliton.fitting import fit_power_law, smoothness_probe
from spinsoliton.laplace import (DegenerateError, KappaEvaluator, NuEvaluator, SeparableData,
                                 TruncationError, check_nondegeneracy, invert_nu, kappa_line)
from spinsoliton.quadrature import pv_integral, radial_moment, radial_offline_value


@pytest.mark.parametrize("m", [0.01, 0.7, 2.5, 9.0])
def test_pv_exponential_oracle(m):
    # pv integral_0^inf exp(-u) / (u - m) du = -exp(-m) Ei(m)
    got = pv_integral(lambda u: np.exp(-u), m)
    assert got == pytest.approx(-np.exp(-m) * special.expi(m), rel=1e-10)


def test_radial_moment_closed_form(ref):
    assert radial_moment(ref.coupling_density, 0) == pytest.approx(np.pi / 2, rel=1e-12)


def test_kappa_at_zero(ref):
    assert kappa_line(ref, 0.0) == pytest.approx(np.pi, rel=1e-10)
    assert kappa_line(ref, 0.0).imag == 0.0


def test_imag_part_vanishes_at_one(ref):
    ev = KappaEvaluator(ref)
    assert abs(ev.line(1.0).imag) < 1e-15
    assert ev.imag_closed_form(0.5) == pytest.approx(-np.pi**2 * ref.coupling_density(0.5), rel=1e-14)


@pytest.mark.parametrize("mu", [0.4, 1.0, 2.15, 3.5])
def test_kappa_epsilon_limit(ref, mu):
    eps = 1e-5
    ev = KappaEvaluator(ref)
    assert abs(ev.line(mu) - ev.offline(eps + 1j * mu)) < 100 * eps


def test_kappa_conjugate_symmetry(ref):
    ev = KappaEvaluator(ref)
    for mu in (0.3, 1.7, 6.0):
        assert ev.line(-mu) == pytest.approx(np.conj(ev.line(mu)), rel=1e-13)


def test_kappa_c1_through_zero(ref):
    # one-sided difference quotients at 0 approach each other linearly in h
    ev = KappaEvaluator(ref)
    gaps = []
    for h in (1e-2, 1e-3, 1e-4):
        right = (ev.line(h) - ev.line(0.0)) / h
        left = (ev.line(0.0) - ev.line(-h)) / h
        gaps.append(abs(right - left))
    assert gaps[1] < 0.2 * gaps[0] and gaps[2] < 0.2 * gaps[1]
    # the odd imaginary part -pi^2 sgn(mu) h(|mu|) ~ -4 pi^2 mu |mu| has central quotient -> 0
    d3 = smoothness_probe(ev.line, 0.0, 1, 1e-3).value
    d4 = smoothness_probe(ev.line, 0.0, 1, 1e-4).value
    assert abs(d3) == pytest.approx(2 * np.pi**2 * 1e-3, rel=1e-2)
    assert abs(d4) < 0.2 * abs(d3)


def test_kappa_second_difference_bounded(ref):
    ev = KappaEvaluator(ref)
    mus = [m for m in np.linspace(-10, 10, 41) if abs(m) > 0.2]
    vals = [smoothness_probe(ev.line, m, 2, 1e-2) for m in mus]
    assert max(abs(v.value) for v in vals) < 100
    assert max(v.error for v in vals) < 1e-2


def test_nondegeneracy_reference(ref):
    rep = check_nondegeneracy(ref, 1.0)
    assert rep.holds
    # frozen from the sweep: the closest approach sits on the resonance shoulder
    assert rep.min_abs == pytest.approx(0.352, abs=2e-3)
    assert abs(rep.mu_at_min) == pytest.approx(2.15, abs=0.06)


def test_nondegeneracy_limits(ref):
    assert abs(1.0 + kappa_line(ref, 0.0)) == pytest.approx(1 + np.pi)
    big = check_nondegeneracy(ref, 1e6, np.linspace(-50, 50, 101))
    assert big.min_abs == pytest.approx(1e6, rel=1e-5)


def test_degenerate_raises(ref):
    ev = NuEvaluator(ref, -np.pi, SeparableData())
    with pytest.raises(DegenerateError):
        ev.nu_tilde(0.0)


def test_zero_data(ref):
    ev = NuEvaluator(ref, 1.0, SeparableData(0.0, 0.0))
    assert ev.nu_tilde(1.3) == 0
    assert np.all(invert_nu(ref, 1.0, SeparableData(0.0, 0.0), np.linspace(0, 5, 11)) == 0)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 20))
def test_nu_tilde_conjugate_symmetry(a, b, mu):
    ev = NuEvaluator(reference_charge(), 1.0, SeparableData(a, b))
    assert abs(ev.nu_tilde(-mu) - np.conj(ev.nu_tilde(mu))) <= 1e-10 * max(1.0, abs(ev.nu_tilde(mu)))


@pytest.mark.parametrize("mu", [0.3, 1.2, 4.0])
def test_nu_tilde_epsilon_limit(ref, mu):
    ev = NuEvaluator(ref, 1.0, SeparableData(0.3, 0.5))
    eps = 1e-6
    assert abs(ev.nu_tilde(mu) - ev.nu_tilde_offline(eps + 1j * mu)) < 1e3 * eps


def test_threshold_asymptotics(ref):
    ev = NuEvaluator(ref, 1.0, SeparableData(0.3, 0.5))
    mus = np.geomspace(1e-3, 1e-1, 9)
    dev = [abs(ev.nu_tilde(m) - ev.threshold_leading(m)) for m in mus]
    assert fit_power_law(mus, dev).exponent >= 1.4


def test_high_energy_nu_tilde(ref):
    mus = np.geomspace(20, 200, 12)
    ev = NuEvaluator(ref, 1.0, SeparableData(0.0, 0.5))
    assert fit_power_law(mus, [abs(ev.nu_tilde(m)) for m in mus]).exponent <= -1.8


def test_high_energy_with_initial_jump(ref):
    # nu(0) != 0 adds the exact term nu(0) / lambda; the remainder keeps the mu^-2 rate
    ev = NuEvaluator(ref, 1.0, SeparableData(0.3, 0.5))
    n0 = ev.initial_derivatives()[0]
    mus = np.geomspace(20, 200, 12)
    raw = [abs(ev.nu_tilde(m)) for m in mus]
    rest = [abs(ev.nu_tilde(m) - n0 / (1j * m)) for m in mus]
    assert fit_power_law(mus, raw).exponent == pytest.approx(-1.0, abs=0.05)
    assert fit_power_law(mus, rest).exponent <= -1.8


def test_initial_derivatives_against_volterra(ref):
    data = SeparableData(0.3, 0.5)
    ev = NuEvaluator(ref, 1.0, data)
    n0, n1, n2, n3 = ev.initial_derivatives()
    t, v = radial_nu_history(ref, 1.0, data, 1e-3, 0.01)
    assert v[0] == pytest.approx(n0, rel=1e-10)
    taylor = n0 + n1 * t + n2 * t**2 / 2 + n3 * t**3 / 6
    assert np.max(np.abs(v - taylor)) < 1e-6


def test_inversion_against_volterra(ref):
    data = SeparableData(0.3, 0.5)
    t, v = radial_nu_history(ref, 1.0, data, 0.005, 15.0)
    sel = t >= 1.0
    inv = invert_nu(ref, 1.0, data, t[sel][::20])
    assert np.max(np.abs(inv - v[sel][::20])) < 1e-4 * np.max(np.abs(v))


def test_truncation_budget(ref):
    with pytest.raises(TruncationError):
        NuEvaluator(ref, 1.0, SeparableData(0.3, 0.5)).invert([1.0], mu_max=3.0)


def test_offline_value_real_axis(ref):
    # lambda real: plain positive integral, compare with radial quadrature of h / (k^2 + lam^2)
    from scipy import integrate
    lam = 0.8
    val, _ = integrate.quad(lambda k: ref.coupling_density(k) * k / (k * k + lam * lam), 0, np.inf,
                            epsabs=0, epsrel=1e-12)
    assert radial_offline_value(ref.coupling_density, complex(lam)) == pytest.approx(2 * np.pi * val,
                                                                                     rel=1e-10)
