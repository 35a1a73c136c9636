"""Reduced field + spin dynamics, evolved in the frame of the limit soliton.

The state is stored as ``Z = (Lambda, Pi)`` with ``Lambda = A - A_{omega*}``;
``A`` itself is available on demand.  Pairings of the soliton part use the
closed forms ``<A_omega, J varrho> = -omega kappa0`` and
``||grad A_omega||^2 = omega^2 kappa0`` rather than lattice sums, because
``A_omega_hat ~ 1/|k|`` at the origin and the lattice sum drops its k = 0 cell.
The deviation obeys the linear system

    dLambda/dt = Pi,   dPi/dt = Delta Lambda - nu J varrho,   nu = <Lambda, J varrho> / I,

integrated by Strang splitting into a rank-one kick (exact, leaves Lambda fixed)
and the exact per-mode free rotation.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .charge import ChargeModel, coulomb_potential, named_charge
from .freewave import WavePropagator
from .grid import (Field, FieldPair, SpectralGrid, WeightedNormSpec, energy_norm, gradient,
                   make_grid, weighted_norm)
from .laplace import SeparableData
from .quadrature import _gl
from .soliton import SolitonState, build_soliton, kappa_zero


class WrapAroundError(ValueError):
    pass


class FrameMismatchError(ValueError):
    pass


def _pair(Lhat, jv, grid):
    return float(np.real(np.sum(Lhat * np.conj(jv))) * grid.dk**2)


@dataclass
class SimState:
    """Deviation ``Z`` from the soliton ``A_{omega*}``, ``omega* = M / (I + kappa0)``."""

    t: float
    Z: FieldPair
    M: float
    I: float
    charge: ChargeModel
    kappa0: float

    @property
    def grid(self) -> SpectralGrid:
        return self.Z.grid

    @property
    def omega_star(self) -> float:
        return self.M / (self.I + self.kappa0)

    @property
    def soliton(self) -> SolitonState:
        return build_soliton(self.omega_star, self.charge, self.I, self.grid, self.kappa0)

    @property
    def Y(self) -> FieldPair:
        """``(A, Pi)`` on the grid (k representation)."""
        A = self.Z.A.to_k() + self.soliton.A
        return FieldPair(A, self.Z.Pi.to_k())

    @property
    def A(self) -> Field:
        return self.Y.A

    @property
    def Pi(self) -> Field:
        return self.Z.Pi

    @classmethod
    def from_fields(cls, A: Field, Pi: Field, M: float, I: float, charge: ChargeModel,
                    t: float = 0.0, kappa0: float | None = None) -> "SimState":
        """Build from ``(A, Pi)``; the soliton part is subtracted on the grid."""
        if kappa0 is None:
            kappa0 = kappa_zero(charge)
        ws = M / (I + kappa0)
        sol = build_soliton(ws, charge, I, A.grid, kappa0)
        Z = FieldPair(A.to_k() - sol.A, Pi.to_k())
        return cls(t, Z, float(M), float(I), charge, float(kappa0))

    def with_Z(self, Z: FieldPair, t: float) -> "SimState":
        return replace(self, Z=Z, t=t)


def nu(state: SimState) -> float:
    """``<Lambda, J varrho> / I``."""
    g = state.grid
    return _pair(state.Z.A.to_k().values, state.charge.Jvarrho_hat(g), g) / state.I


def moment_of_A(state: SimState) -> float:
    """``<A, J varrho>`` with the soliton part in closed form."""
    return state.I * nu(state) - state.omega_star * state.kappa0


def omega(state: SimState) -> float:
    """``(M + <A, J varrho>) / I``."""
    return (state.M + moment_of_A(state)) / state.I


def angular_momentum(state: SimState, w: float | None = None) -> float:
    """``I omega - <A, J varrho>``; equals ``M`` by construction."""
    if w is None:
        w = omega(state)
    return state.I * w - moment_of_A(state)


def hamiltonian(state: SimState, variant: str = "Hp") -> float:
    """``Hp = (||Pi||^2 + ||grad A||^2)/2 + I omega^2 / 2`` or the deviation energy ``H0``.

    ``H0 = (||Pi||^2 + ||grad Lambda||^2)/2 + I nu^2 / 2``; the two differ by the
    constant ``omega*^2 (I + kappa0) / 2``.
    """
    n = nu(state)
    h0 = 0.5 * energy_norm(state.Z) ** 2 + 0.5 * state.I * n * n
    if variant == "H0":
        return h0
    if variant != "Hp":
        raise ValueError("variant must be 'Hp' or 'H0'")
    ws = state.omega_star
    return h0 + 0.5 * ws * ws * (state.I + state.kappa0)


@dataclass
class SolitonFrameState:
    Z: FieldPair
    nu: float
    omega_star: float


def to_soliton_frame(state: SimState, s: SolitonState) -> SolitonFrameState:
    if abs(s.omega - state.omega_star) > 1e-12 * max(1.0, abs(s.omega)):
        raise FrameMismatchError(f"soliton frequency {s.omega} != omega* {state.omega_star}")
    return SolitonFrameState(state.Z, nu(state), s.omega)


def from_soliton_frame(frame: SolitonFrameState, s: SolitonState, M: float, I: float,
                       charge: ChargeModel, t: float = 0.0) -> SimState:
    if abs(s.omega - frame.omega_star) > 1e-12 * max(1.0, abs(s.omega)):
        raise FrameMismatchError("frame and soliton frequencies differ")
    st = SimState(t, frame.Z, float(M), float(I), charge, float(s.kappa0))
    if abs(st.omega_star - s.omega) > 1e-12 * max(1.0, abs(s.omega)):
        raise FrameMismatchError(f"M = {M} selects omega* = {st.omega_star}, not {s.omega}")
    return st


def maxwell_fields(state: SimState):
    """``E = -Pi - grad Phi`` (vector, x representation) and ``B = d1 A2 - d2 A1`` (scalar)."""
    g = state.grid
    phi = coulomb_potential(state.charge, g)
    gphi = gradient(phi).values
    E = Field(-state.Pi.to_k().values - gphi, g, "k").to_x()
    A = state.A.to_k().values
    k1, k2 = g.K
    B = Field(1j * (k1 * A[1] - k2 * A[0]), g, "k").to_x()
    return E, B


class Stepper:
    """Strang splitting: half kick, exact rotation, half kick."""

    def __init__(self, grid: SpectralGrid, charge: ChargeModel, I: float, dt: float):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.dt = float(dt)
        self.I = float(I)
        self.jv = charge.Jvarrho_hat(grid)
        self.rot = WavePropagator(grid).coefficients(self.dt)
        self._w = grid.dk**2 / self.I

    def nu_hat(self, L) -> float:
        return float(np.real(np.vdot(self.jv, L))) * self._w

    def advance(self, L, P, n: int, nu_out: Optional[list] = None):
        """``n`` steps on k-space arrays; returns new ``(L, P)``.

        ``nu_out`` receives ``nu`` after each step.  Consecutive half kicks share
        the same ``nu`` because the kick leaves ``Lambda`` fixed.
        """
        c, s, ks = self.rot
        h = 0.5 * self.dt
        v = self.nu_hat(L)
        for _ in range(n):
            P = P - (h * v) * self.jv
            L, P = c * L + s * P, ks * L + c * P
            v = self.nu_hat(L)
            P = P - (h * v) * self.jv
            if nu_out is not None:
                nu_out.append(v)
        return L, P


def step(state: SimState, dt: float) -> SimState:
    st = Stepper(state.grid, state.charge, state.I, dt)
    Zk = state.Z.to_k()
    L, P = st.advance(Zk.A.values, Zk.Pi.values, 1)
    g = state.grid
    return state.with_Z(FieldPair(Field(L, g, "k"), Field(P, g, "k")), state.t + dt)


def evolve(state: SimState, dt: float, n: int) -> SimState:
    st = Stepper(state.grid, state.charge, state.I, dt)
    Zk = state.Z.to_k()
    L, P = st.advance(Zk.A.values, Zk.Pi.values, n)
    g = state.grid
    return state.with_Z(FieldPair(Field(L, g, "k"), Field(P, g, "k")), state.t + n * dt)


# configuration and runs --------------------------------------------------------------


@dataclass
class DynamicsConfig:
    """Desk-scale defaults; the perturbation is ``eps`` times the separable data."""

    N: int = 512
    L: float = 160.0
    dt: float = 0.01
    T: float = 40.0
    I: float = 1.0
    M: float = 1.0 + np.pi
    beta: float = 3.0
    sample_every: int = 10
    charge: str = "reference"
    charge_params: dict = field(default_factory=dict)
    data: SeparableData = field(default_factory=SeparableData)
    eps: float = 1.0
    snapshot_times: tuple = ()
    support_rel: float = 1e-12

    def validate(self, charge: ChargeModel | None = None):
        if self.I <= 0:
            raise ValueError("I must be positive")
        if self.dt <= 0 or self.T <= 0:
            raise ValueError("dt and T must be positive")
        n = self.T / self.dt
        if abs(n - round(n)) > 1e-9 * n:
            raise ValueError("T must be a multiple of dt")
        grid = make_grid(self.N, self.L)
        if charge is None:
            charge = named_charge(self.charge, **self.charge_params)
        R_rho = charge_radius(charge, grid, self.support_rel)
        R_data = data_radius(self.data, charge, grid, self.support_rel)
        limit = self.L / 2 - R_data - R_rho
        if not self.T < limit:
            raise WrapAroundError(
                f"T = {self.T} must be below L/2 - R_data - R_rho = {limit:.2f}")
        return grid, charge


def _radius(values_x, grid, rel):
    mag = np.sqrt(np.sum(values_x**2, axis=0)) if values_x.ndim == 3 else np.abs(values_x)
    top = mag.max()
    if top == 0:
        return 0.0
    return float(grid.r[mag > rel * top].max())


def charge_radius(c: ChargeModel, grid: SpectralGrid, rel: float = 1e-12) -> float:
    return _radius(grid.ifft(c.rho_hat(grid)), grid, rel)


def data_radius(d: SeparableData, c: ChargeModel, grid: SpectralGrid, rel: float = 1e-12) -> float:
    Z = d.fields(c, grid)
    r = 0.0
    for f in (Z.A, Z.Pi):
        if np.any(f.values):
            r = max(r, _radius(f.to_x().values, grid, rel))
    return r


@dataclass
class RunResult:
    t: np.ndarray
    omega: np.ndarray
    omega_star: float
    z_norm: np.ndarray
    energy: np.ndarray
    nu: np.ndarray
    M_residual: np.ndarray
    nu_steps: np.ndarray
    dt: float
    Z0: FieldPair
    final: SimState
    snapshots: dict
    elapsed: float

    @property
    def err_omega(self):
        return np.abs(self.omega - self.omega_star)

    COLUMNS = ("t", "omega", "err_omega", "z_norm_wminus", "energy", "nu", "M_residual")

    def rows(self):
        for i in range(self.t.size):
            yield (self.t[i], self.omega[i], self.err_omega[i], self.z_norm[i],
                   self.energy[i], self.nu[i], self.M_residual[i])


def initial_state(cfg: DynamicsConfig, grid: SpectralGrid, charge: ChargeModel,
                  kappa0: float | None = None) -> SimState:
    if kappa0 is None:
        kappa0 = kappa_zero(charge)
    Z0 = cfg.data.fields(charge, grid) * cfg.eps
    return SimState(0.0, Z0, float(cfg.M), float(cfg.I), charge, float(kappa0))


def run(cfg: DynamicsConfig, state: SimState | None = None) -> RunResult:
    """Evolve to ``cfg.T``; diagnostics every ``sample_every`` steps, ``nu`` every step."""
    t0 = _time.perf_counter()
    grid, charge = cfg.validate()
    if state is None:
        state = initial_state(cfg, grid, charge)
    stepper = Stepper(grid, charge, state.I, cfg.dt)
    spec = WeightedNormSpec(-cfg.beta, "E")
    nsteps = int(round(cfg.T / cfg.dt))
    snap_steps = {int(round(s / cfg.dt)): s for s in cfg.snapshot_times}
    Zk = state.Z.to_k()
    L, P = Zk.A.values.copy(), Zk.Pi.values.copy()
    rec = {k: [] for k in ("t", "omega", "z", "H", "nu", "Mres")}
    nu_steps = [stepper.nu_hat(L)]
    snapshots = {}

    def record(cur: SimState):
        w = omega(cur)
        rec["t"].append(cur.t)
        rec["omega"].append(w)
        rec["z"].append(weighted_norm(cur.Z, spec))
        rec["H"].append(hamiltonian(cur))
        rec["nu"].append(nu(cur))
        rec["Mres"].append(angular_momentum(cur, w) - cur.M)

    def snap(L, P, n):
        return state.with_Z(FieldPair(Field(L, grid, "k"), Field(P, grid, "k")), n * cfg.dt)

    record(snap(L, P, 0))
    if 0 in snap_steps:
        snapshots[snap_steps[0]] = snap(L.copy(), P.copy(), 0)
    n = 0
    marks = sorted(set(range(cfg.sample_every, nsteps + 1, cfg.sample_every)) | set(snap_steps) | {nsteps})
    for m in marks:
        if m <= n:
            continue
        L, P = stepper.advance(L, P, m - n, nu_steps)
        n = m
        cur = snap(L, P, n)
        if n % cfg.sample_every == 0 or n == nsteps:
            record(cur)
        if n in snap_steps:
            snapshots[snap_steps[n]] = cur
    final = snap(L, P, n)
    return RunResult(
        t=np.array(rec["t"]), omega=np.array(rec["omega"]), omega_star=state.omega_star,
        z_norm=np.array(rec["z"]), energy=np.array(rec["H"]), nu=np.array(rec["nu"]),
        M_residual=np.array(rec["Mres"]), nu_steps=np.array(nu_steps), dt=cfg.dt,
        Z0=state.Z, final=final, snapshots=snapshots, elapsed=_time.perf_counter() - t0)


# box-free radial history ----------------------------------------------------------


def radial_nu_history(charge: ChargeModel, I: float, data: SeparableData, dt: float, T: float,
                      eps: float = 1.0, k_max: float = 8.0, nodes: int | None = None):
    """``nu`` on ``[0, T]`` from the Volterra equation in R^2, no box involved.

    ``nu(t) = f(t) - integral_0^t K(t - s) nu(s) ds`` with
    ``K(tau) = (2 pi / I) integral h(k) sin(k tau) dk`` and ``f`` the pairing of
    the freely evolved data; trapezoid rule in time, Gauss-Legendre in ``k``.
    """
    n = int(round(T / dt))
    t = dt * np.arange(n + 1)
    if nodes is None:
        nodes = int(min(20000, 200 + 0.7 * k_max * T))
    x, w = _gl(nodes) if nodes <= 4000 else np.polynomial.legendre.leggauss(nodes)
    k = 0.5 * k_max * (x + 1)
    wk = 0.5 * k_max * w
    h = charge.coupling_density(k)
    fL = eps * data.a * data.phi_L(k) * h * k * wk
    fP = eps * data.b * data.phi_P(k) * h * wk
    hk = h * wk
    K = np.empty(n + 1)
    f = np.empty(n + 1)
    for i0 in range(0, n + 1, 1024):
        tt = t[i0:i0 + 1024]
        ph = np.outer(tt, k)
        sn, cs = np.sin(ph), np.cos(ph)
        K[i0:i0 + 1024] = sn @ hk
        f[i0:i0 + 1024] = cs @ fL + sn @ fP
    K *= 2 * np.pi / I
    f *= 2 * np.pi / I
    v = np.zeros(n + 1)
    v[0] = f[0]
    Kr = K[::-1]
    for j in range(1, n + 1):
        # sum_{i<j} w_i K(t_j - t_i) v_i, with K(0) = 0 removing the implicit term
        conv = np.dot(Kr[n - j:n - j + j], v[:j]) - 0.5 * K[j] * v[0]
        v[j] = f[j] - dt * conv
    return t, v
