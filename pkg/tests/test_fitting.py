import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinsoliton.fitting import FitError, envelope, fit_power_law, smoothness_probe

T = np.linspace(10, 40, 61)


def test_exact_power_law():
    f = fit_power_law(T, T**-2.0)
    assert f.exponent == pytest.approx(-2.0, abs=1e-12)
    assert f.residual < 1e-12


def test_amplitude():
    f = fit_power_law(T, 5 / T)
    assert f.exponent == pytest.approx(-1.0, abs=1e-12)
    assert f.amplitude == pytest.approx(5.0, rel=1e-12)


def test_perturbed_power_law():
    f = fit_power_law(T, T**-2.0 * (1 + 0.1 * np.sin(T)))
    assert -2.1 <= f.exponent <= -1.9


def test_window_and_errors():
    t = np.linspace(1, 100, 200)
    y = np.where(t < 50, t**-1.0, t**-3.0)
    assert fit_power_law(t, y, (60, 100)).exponent == pytest.approx(-3.0, abs=1e-10)
    with pytest.raises(FitError):
        fit_power_law(t, y, (200, 300))
    with pytest.raises(FitError):
        fit_power_law(t[:5], y[:5])
    with pytest.raises(FitError):
        fit_power_law(t, np.where(t > 90, 0.0, y))


@given(st.floats(-4, 1), st.floats(1e-6, 1e6), st.floats(0.1, 10))
def test_scale_and_time_equivariance(p, c, a):
    y = T**p
    base = fit_power_law(T, y)
    assert fit_power_law(T, c * y).exponent == pytest.approx(base.exponent, abs=1e-12)
    # rescaled abscissa: y(t) sampled at t' = a t is a power law in t' with the same exponent
    assert fit_power_law(a * T, y).exponent == pytest.approx(base.exponent, abs=1e-11)


def test_envelope():
    t = np.linspace(0, 10, 1001)
    y = np.sin(5 * t) * np.exp(-t)
    e = envelope(t, y, 0.7)
    assert np.all(e >= np.abs(y))
    assert np.all(np.diff(e[100:-100]) <= 1e-15)
    assert np.array_equal(envelope(t, y, 0.0), np.abs(y))


def test_probe_quadratic():
    r = smoothness_probe(lambda x: x * x, 0.3, 2, 1e-2)
    assert abs(r.value - 2.0) < 1e-10


def test_probe_corner_diverges():
    f = lambda x: abs(x) ** 1.5
    vals = [abs(smoothness_probe(f, m, 2, m / 20).value) for m in (1e-2, 1e-3, 1e-4)]
    assert vals[0] == pytest.approx(0.75 * 1e-2**-0.5, rel=1e-2)
    assert vals[0] < vals[1] < vals[2]


def test_probe_domain():
    with pytest.raises(ValueError):
        smoothness_probe(np.sqrt, 0.0, 1, 1e-3, domain=(0.0, 1.0))
    with pytest.raises(ValueError):
        smoothness_probe(np.sqrt, 0.5, 3)
