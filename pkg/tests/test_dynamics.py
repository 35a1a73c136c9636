import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinsoliton.charge import coulomb_potential
from spinsoliton.dynamics import (DynamicsConfig, FrameMismatchError, SimState, Stepper, WrapAroundError,
                                  angular_momentum, evolve, from_soliton_frame, hamiltonian,
                                  maxwell_fields, nu, omega, radial_nu_history, run, step,
                                  to_soliton_frame)
from spinsoliton.grid import (Field, FieldPair, WeightedNormSpec, divergence, energy_norm, gradient,
                              inner_product, make_grid, max_divergence_ratio, weighted_norm)
from spinsoliton.laplace import SeparableData
from spinsoliton.soliton import build_soliton

PI = np.pi


def state(grid, charge, Z=None, M=1 + PI, I=1.0):
    if Z is None:
        Z = FieldPair.zeros(grid)
    return SimState(0.0, Z, M, I, charge, PI)


def data_pair(grid, charge, a=0.3, b=0.5):
    return SeparableData(a, b).fields(charge, grid)


def test_soliton_is_stationary(grid128, ref):
    s = state(grid128, ref)
    out = step(s, 0.01)
    assert energy_norm(out.Z) == 0.0
    assert omega(out) == pytest.approx(1.0, rel=1e-14)


def test_zero_state_stays_zero(grid128, ref):
    s = state(grid128, ref, M=0.0)
    assert s.omega_star == 0.0
    out = evolve(s, 0.1, 50)
    assert energy_norm(out.Z) == 0.0 and omega(out) == 0.0
    assert hamiltonian(out) == 0.0


def test_free_mode_phase(grid128, ref):
    g = grid128
    off = ref.scaled(0.0)
    Z = FieldPair.zeros(g)
    Z.A.values[0, 3, 5] = 1.0
    out = step(state(g, off, Z, M=0.0), 0.07)
    kabs = g.kabs[3, 5]
    assert out.Z.A.values[0, 3, 5] == pytest.approx(np.cos(kabs * 0.07), abs=1e-15)
    assert out.Z.Pi.values[0, 3, 5] == pytest.approx(-kabs * np.sin(kabs * 0.07), abs=1e-15)


def test_omega_identities(grid128, ref, rng):
    g = grid128
    s = state(g, ref)
    assert omega(s) == pytest.approx(s.omega_star)
    # A = 0 means Lambda = -A_{omega*}; the lattice pairing misses the k = 0 cell h/k^2 -> 4
    sol = build_soliton(s.omega_star, ref, 1.0, g, PI)
    s0 = s.with_Z(FieldPair(sol.A * -1.0, Field(np.zeros((2, 128, 128), complex), g, "k")), 0.0)
    assert omega(s0) == pytest.approx((s.M - s.omega_star * 4 * g.dk**2) / s.I, rel=1e-12)
    Z = FieldPair(Field(rng.standard_normal((2, 128, 128)), g), Field(rng.standard_normal((2, 128, 128)), g))
    sr = s.with_Z(Z, 0.0)
    assert angular_momentum(sr) == s.M


def test_hamiltonian_of_soliton(grid128, ref):
    s = state(grid128, ref, M=2 * (1 + PI))
    w = s.omega_star
    expect = 0.5 * w * w * PI + 0.5 * w * w
    assert hamiltonian(s) == pytest.approx(expect, rel=1e-14)
    assert hamiltonian(evolve(s, 0.05, 100)) == pytest.approx(expect, rel=1e-14)
    with pytest.raises(ValueError):
        hamiltonian(s, "bogus")


def test_energy_drift_long_run(ref):
    g = make_grid(128, 40)
    s = state(g, ref, data_pair(g, ref))
    H0 = hamiltonian(s)
    st_ = Stepper(g, ref, 1.0, 0.005)
    L, P = s.Z.A.values, s.Z.Pi.values
    worst = 0.0
    for _ in range(100):
        L, P = st_.advance(L, P, 100)
        cur = s.with_Z(FieldPair(Field(L, g, "k"), Field(P, g, "k")), 0.0)
        worst = max(worst, abs(hamiltonian(cur) - H0))
    assert worst < 1e-6 * abs(H0)


def test_drift_is_second_order(ref):
    g = make_grid(128, 40)
    s = state(g, ref, data_pair(g, ref, 1.0, 1.0))
    drifts = []
    for dt in (0.1, 0.05, 0.025):
        st_ = Stepper(g, ref, 1.0, dt)
        L, P = s.Z.A.values, s.Z.Pi.values
        H0 = hamiltonian(s, "H0")
        worst = 0.0
        for _ in range(int(round(5 / dt))):
            L, P = st_.advance(L, P, 1)
            worst = max(worst, abs(hamiltonian(s.with_Z(FieldPair(Field(L, g, "k"), Field(P, g, "k")), 0), "H0") - H0))
        drifts.append(worst)
    for a, b in zip(drifts, drifts[1:]):
        assert 3.5 <= a / b <= 4.5


def test_frames(grid128, ref):
    g = grid128
    s = state(g, ref)
    sol = build_soliton(1.0, ref, 1.0, g, PI)
    fr = to_soliton_frame(s, sol)
    assert energy_norm(fr.Z) == 0.0
    back = from_soliton_frame(fr, sol, s.M, s.I, ref)
    assert energy_norm(back.Z - s.Z) == 0.0 and back.M == s.M
    with pytest.raises(FrameMismatchError):
        to_soliton_frame(s, build_soliton(1.1, ref, 1.0, g, PI))
    with pytest.raises(FrameMismatchError):
        from_soliton_frame(fr, sol, 2.0, s.I, ref)


def test_nu_of_bump(grid128, ref):
    g = grid128
    eps = 1e-3
    jv = ref.Jvarrho(g)
    s = state(g, ref, FieldPair(jv * eps, Field(np.zeros((2, 128, 128), complex), g, "k")), I=2.0)
    vr = ref.varrho(g)
    assert nu(s) == pytest.approx(eps * inner_product(vr, vr) / 2.0, rel=1e-13)


def test_gauss_law_and_static_fields(grid512, ref):
    g = grid512
    s = state(g, ref, data_pair(g, ref) * 0.1)
    later = evolve(s, 0.05, 40)
    E, B = maxwell_fields(later)
    rho = ref.rho(g).to_x().values
    res = divergence(E).to_x().values - rho
    assert np.sqrt(np.sum(res**2)) <= 1e-10 * np.sqrt(np.sum(rho**2))
    zero = state(g, ref, M=0.0)
    E0, B0 = maxwell_fields(zero)
    gphi = Field(gradient(coulomb_potential(ref, g)).values, g, "k").to_x()
    assert np.max(np.abs(E0.values + gphi.values)) < 1e-14 and np.max(np.abs(B0.values)) == 0.0
    sol = state(g, ref)
    _, B1 = maxwell_fields(sol)
    _, B2 = maxwell_fields(evolve(sol, 0.05, 20))
    assert np.max(np.abs(B2.values - B1.values)) < 1e-8


def test_transversality_preserved(ref):
    g = make_grid(128, 40)
    s = state(g, ref, data_pair(g, ref))
    out = evolve(s, 0.05, 2000)
    assert max_divergence_ratio(out.Z.A) < 1e-10 and max_divergence_ratio(out.Z.Pi) < 1e-10


@given(st.floats(-10, 10).filter(lambda a: abs(a) > 1e-6))
def test_linearity(alpha):
    from spinsoliton.charge import reference_charge
    c = reference_charge()
    g = make_grid(64, 30)
    s = state(g, c, data_pair(g, c))
    one = evolve(s, 0.05, 40).Z
    scaled = evolve(s.with_Z(s.Z * alpha, 0.0), 0.05, 40).Z
    assert energy_norm(scaled - one * alpha) <= 1e-12 * energy_norm(scaled)


def test_config_validation():
    with pytest.raises(WrapAroundError):
        DynamicsConfig(T=70.0).validate()
    with pytest.raises(ValueError):
        DynamicsConfig(I=0.0).validate()
    with pytest.raises(ValueError):
        DynamicsConfig(T=1.005, dt=0.01).validate()


def test_run_soliton_data():
    res = run(DynamicsConfig(N=256, L=80, dt=0.02, T=4.0, eps=0.0, support_rel=1e-10))
    assert np.max(res.z_norm) < 1e-8
    assert np.max(res.err_omega) < 1e-14
    assert np.all(res.M_residual == 0.0)


def test_box_dynamics_match_box_free_volterra(ref):
    cfg = DynamicsConfig(N=256, L=80, dt=0.01, T=10.0, eps=0.01, support_rel=1e-10,
                         data=SeparableData(0.3, 0.5), sample_every=100)
    res = run(cfg)
    _, v = radial_nu_history(ref, 1.0, cfg.data, 0.01, 10.0, eps=0.01)
    assert np.max(np.abs(res.nu_steps - v)) < 1e-10 * np.max(np.abs(v))
    spec = WeightedNormSpec(-3.0)
    assert res.z_norm[0] == pytest.approx(weighted_norm(res.Z0, spec))
