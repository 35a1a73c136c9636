"""Experiment runner: configuration, the five canonical experiments, CSV output and the CLI.

Every physical constant lives in an INI profile.  The built-in ``default``
profile is the desk-scale setup; a user file is layered on top of it, so it
only needs the keys it changes.

Random perturbations use ``numpy.random.Generator(PCG64(seed))``.  The stream
is consumed in a fixed order: two uniform draws on [-1, 1] shifting the
separable coefficients ``a`` and ``b`` by ``jitter`` times the draw.  With the
default ``jitter = 0`` the seed has no effect.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .charge import ChargeError, named_charge
from .dynamics import DynamicsConfig, RunResult, Stepper, WrapAroundError, radial_nu_history, run
from .fitting import DecayFit, FitError, envelope, fit_power_law
from .freewave import (dispersive_norms, duhamel_solve, kernel_apply, kernel_G, propagate,
                       scattering_state, support_radius)
from .grid import Field, FieldPair, energy_norm, make_grid
from .laplace import NuEvaluator, SeparableData, check_nondegeneracy
from .resolvent import (H_PLUS, H_PLUS_PRINTED, high_energy_decay, log_kernel_constant,
                        resolvent_kernel, resolvent_minus_log, smoothed_resolvent_asymptotics,
                        threshold_exponent_fit)
from .soliton import build_soliton, kappa_zero, kappa_zero_grid, soliton_potential_hat

CSV_VERSION = 1

DEFAULT_PROFILE = """
[charge]
name = reference
amplitude = 1.0
width = 1.0

[particle]
I = 1.0
M = 4.141592653589793

[grid]
N = 512
L = 160.0
support_rel = 1e-12

[time]
dt = 0.01
T_max = 40.0
sample_every = 10

[data]
eps = 0.01
a = 0.0
b = 0.5
width_L = 1.0
width_P = 1.0
jitter = 0.0
bump_width = 1.0

[attract]
beta = 3.0
window = 10, 40
envelope = 2.0
fixed_point_T = 10.0

[freewave]
beta = 2.5
T = 60.0
window = 10, 60
n_times = 51

[scatter]
ds = 0.025
t_cut = 1000.0
window = 10, 40
budget = 1e-6

[laplace]
window = 1, 20
mu_max = 200.0

[resolvent]
beta = 3.0
zeta_min = 1e-3
zeta_max = 1e-1
n_zeta = 17

[output]
dir = results
"""


class ConfigError(ValueError):
    pass


def _window(text: str):
    parts = [float(p) for p in text.replace(",", " ").split()]
    if len(parts) != 2 or not parts[0] < parts[1]:
        raise ConfigError(f"bad window {text!r}")
    return tuple(parts)


# (section, key) -> attribute, parser
_SCHEMA = {
    ("charge", "name"): ("charge", str),
    ("charge", "amplitude"): ("charge_amplitude", float),
    ("charge", "width"): ("charge_width", float),
    ("particle", "I"): ("I", float),
    ("particle", "M"): ("M", float),
    ("grid", "N"): ("N", int),
    ("grid", "L"): ("L", float),
    ("grid", "support_rel"): ("support_rel", float),
    ("time", "dt"): ("dt", float),
    ("time", "T_max"): ("T_max", float),
    ("time", "sample_every"): ("sample_every", int),
    ("data", "eps"): ("eps", float),
    ("data", "a"): ("a", float),
    ("data", "b"): ("b", float),
    ("data", "width_L"): ("width_L", float),
    ("data", "width_P"): ("width_P", float),
    ("data", "jitter"): ("jitter", float),
    ("data", "bump_width"): ("bump_width", float),
    ("attract", "beta"): ("beta_attract", float),
    ("attract", "window"): ("attract_window", _window),
    ("attract", "envelope"): ("envelope_half_width", float),
    ("attract", "fixed_point_T"): ("fixed_point_T", float),
    ("freewave", "beta"): ("beta_free", float),
    ("freewave", "T"): ("free_T", float),
    ("freewave", "window"): ("free_window", _window),
    ("freewave", "n_times"): ("free_n_times", int),
    ("scatter", "ds"): ("scatter_ds", float),
    ("scatter", "t_cut"): ("scatter_t_cut", float),
    ("scatter", "window"): ("scatter_window", _window),
    ("scatter", "budget"): ("scatter_budget", float),
    ("laplace", "window"): ("laplace_window", _window),
    ("laplace", "mu_max"): ("laplace_mu_max", float),
    ("resolvent", "beta"): ("beta_resolvent", float),
    ("resolvent", "zeta_min"): ("zeta_min", float),
    ("resolvent", "zeta_max"): ("zeta_max", float),
    ("resolvent", "n_zeta"): ("n_zeta", int),
    ("output", "dir"): ("out", str),
}


@dataclass(frozen=True)
class ExperimentConfig:
    charge: str
    charge_amplitude: float
    charge_width: float
    I: float
    M: float
    N: int
    L: float
    support_rel: float
    dt: float
    T_max: float
    sample_every: int
    eps: float
    a: float
    b: float
    width_L: float
    width_P: float
    jitter: float
    bump_width: float
    beta_attract: float
    attract_window: tuple
    envelope_half_width: float
    fixed_point_T: float
    beta_free: float
    free_T: float
    free_window: tuple
    free_n_times: int
    scatter_ds: float
    scatter_t_cut: float
    scatter_window: tuple
    scatter_budget: float
    laplace_window: tuple
    laplace_mu_max: float
    beta_resolvent: float
    zeta_min: float
    zeta_max: float
    n_zeta: int
    out: str
    seed: int = 0
    quick: bool = False

    # derived objects --------------------------------------------------------

    def charge_model(self):
        return named_charge(self.charge, amplitude=self.charge_amplitude, width=self.charge_width)

    def data(self) -> SeparableData:
        a, b = self.a, self.b
        if self.jitter:
            rng = np.random.Generator(np.random.PCG64(self.seed))
            da, db = rng.uniform(-1.0, 1.0, size=2)
            a, b = a + self.jitter * da, b + self.jitter * db
        return SeparableData(a, b, self.width_L, self.width_P)

    def dynamics(self, T: float | None = None, eps: float | None = None, **kw) -> DynamicsConfig:
        return DynamicsConfig(
            N=self.N, L=self.L, dt=self.dt, T=self.T_max if T is None else T, I=self.I, M=self.M,
            beta=self.beta_attract, sample_every=self.sample_every, charge=self.charge,
            charge_params=dict(amplitude=self.charge_amplitude, width=self.charge_width),
            data=self.data(), eps=self.eps if eps is None else eps,
            support_rel=self.support_rel, **kw)

    @property
    def soliton_data(self) -> bool:
        return self.eps == 0.0

    def halved(self) -> "ExperimentConfig":
        """Smoke mode: half the lattice points and twice the time steps.

        The free-wave grid and the resolvent quadratures are left alone (they are
        cheap, and halving N there puts the data spectrum above the Nyquist floor).
        """
        return replace(self, N=self.N // 2, dt=2 * self.dt, support_rel=max(self.support_rel, 1e-10),
                       sample_every=max(1, self.sample_every // 2), scatter_ds=2 * self.scatter_ds,
                       n_zeta=max(9, self.n_zeta // 2 + 1), quick=True)

    # validation ----------------------------------------------------------------

    def validate(self):
        if self.beta_attract <= 2.5:
            raise ConfigError("attraction weight beta must exceed 5/2")
        if self.beta_free <= 2.0:
            raise ConfigError("free-wave weight beta must exceed 2")
        if self.I <= 0:
            raise ConfigError("I must be positive")
        if self.N < 16 or self.N % 2:
            raise ConfigError("N must be an even integer >= 16")
        if self.L <= 0 or self.dt <= 0 or self.T_max <= 0:
            raise ConfigError("L, dt and T_max must be positive")
        if self.eps < 0 or self.jitter < 0:
            raise ConfigError("eps and jitter must be non-negative")
        if not 0 < self.zeta_min < self.zeta_max:
            raise ConfigError("need 0 < zeta_min < zeta_max")
        try:
            self.dynamics().validate()
        except WrapAroundError as exc:
            raise ConfigError(str(exc)) from exc
        except ChargeError as exc:
            raise ConfigError(f"unknown charge {self.charge!r}") from exc
        return self

    def canonical(self) -> str:
        d = asdict(self)
        return "\n".join(f"{k}={d[k]!r}" for k in sorted(d))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def load_config(source: str = "default", seed: int = 0, quick: bool = False) -> ExperimentConfig:
    """Parse a profile.  ``source`` is ``"default"`` or a path to an INI file."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string(DEFAULT_PROFILE)
    if source != "default":
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"config file not found: {source}")
        try:
            cp.read_string(path.read_text(), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
    known = {(s, k) for s, k in _SCHEMA}
    values = {}
    for section in cp.sections():
        for key, text in cp.items(section):
            if (section, key) not in known:
                raise ConfigError(f"unknown key [{section}] {key}")
            attr, parse = _SCHEMA[(section, key)]
            try:
                values[attr] = parse(text)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
    cfg = ExperimentConfig(**values, seed=int(seed))
    if quick:
        cfg = cfg.halved()
    return cfg.validate()


# reports and output ------------------------------------------------------------------


@dataclass
class Report:
    name: str
    metrics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def fit(self, key: str, fit: DecayFit):
        self.metrics[f"{key}_exponent"] = fit.exponent
        self.metrics[f"{key}_residual"] = fit.residual


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, columns, rows, config_hash: str):
    with open(path, "w") as fh:
        fh.write(f"# spinsoliton csv v{CSV_VERSION} config={config_hash}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_outputs(reports, cfg: ExperimentConfig, out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    for rep in reports:
        for stem, (columns, rows) in rep.tables.items():
            write_csv(out / f"{rep.name}_{stem}.csv", columns, rows, cfg.hash)
    lines = [f"config_hash={cfg.hash}", f"seed={cfg.seed}", f"quick={_fmt(cfg.quick)}"]
    for rep in reports:
        lines.append(f"{rep.name}.elapsed={rep.elapsed:.2f}")
        for k in sorted(rep.metrics):
            lines.append(f"{rep.name}.{k}={_fmt(rep.metrics[k])}")
        for k in sorted(rep.checks):
            lines.append(f"{rep.name}.check.{k}={'PASS' if rep.checks[k] else 'FAIL'}")
    lines.append(f"overall={'PASS' if all(r.passed for r in reports) else 'FAIL'}")
    path = out / "summary.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def _columns(*arrays):
    return list(zip(*arrays))


def envelope_fit(t, y, window, half_width) -> DecayFit:
    """Power-law fit of the running maximum of ``|y|`` (oscillating decays)."""
    return fit_power_law(t, envelope(t, y, half_width), window)


# dynamics shared across experiments --------------------------------------------------


def attraction_run(cfg: ExperimentConfig, T: float | None = None) -> RunResult:
    T = cfg.T_max if T is None else T
    snaps = tuple(s for s in (20.0, 40.0) if s <= T)
    return run(cfg.dynamics(T=T, snapshot_times=snaps))


def soliton_fixed_point(cfg: ExperimentConfig) -> dict:
    """Evolve the soliton ``(A_{omega*}, 0)`` with ``M = M_{omega*}``.

    The lattice soliton's stationarity residual ``Delta A_omega - omega J varrho``
    is measured separately, since the frame itself subtracts ``A_{omega*}``.
    """
    dyn = cfg.dynamics(T=cfg.fixed_point_T, eps=0.0)
    grid, charge = dyn.validate()
    k0 = kappa_zero(charge)
    ws = cfg.M / (cfg.I + k0)
    sol = build_soliton(ws, charge, cfg.I, grid, k0)
    jv = charge.Jvarrho_hat(grid)
    resid = -grid.k2 * sol.A.values - ws * jv
    res_rel = float(np.sqrt(np.sum(np.abs(resid) ** 2)) / np.sqrt(np.sum(np.abs(ws * jv) ** 2)))
    grad_norm = abs(ws) * np.sqrt(k0)
    # full field A_lattice minus the frame reference A_{omega*}
    L = sol.A.values - soliton_potential_hat(ws, charge, grid)
    P = np.zeros_like(L)
    stepper = Stepper(grid, charge, cfg.I, dyn.dt)
    n = int(round(dyn.T / dyn.dt))
    worst = 0.0
    for _ in range(0, n, dyn.sample_every):
        L, P = stepper.advance(L, P, dyn.sample_every)
        Z = FieldPair(Field(L, grid, "k"), Field(P, grid, "k"))
        worst = max(worst, energy_norm(Z))
    return dict(max_z=worst, grad_A=grad_norm, stationarity_residual=res_rel,
                M_soliton=sol.M, omega_star=ws)


# the five experiments ----------------------------------------------------------------


def exp_attraction(cfg: ExperimentConfig, result: RunResult | None = None) -> Report:
    t0 = time.perf_counter()
    rep = Report("attract")
    charge = cfg.charge_model()
    nd = check_nondegeneracy(charge, cfg.I)
    rep.metrics.update(nondegeneracy_min=nd.min_abs, nondegeneracy_mu=nd.mu_at_min)
    if not nd.holds:
        from .laplace import DegenerateError
        raise DegenerateError(f"|I + kappa| reaches {nd.min_abs:.2e} at mu = {nd.mu_at_min}")

    fp = soliton_fixed_point(cfg)
    rep.metrics.update({f"fixed_point_{k}": v for k, v in fp.items()})
    rep.checks["soliton_fixed_point"] = bool(
        fp["max_z"] <= 1e-8 * fp["grad_A"] and fp["stationarity_residual"] <= 1e-8)

    k0 = kappa_zero(charge)
    rep.metrics.update(kappa0=k0, kappa0_grid=kappa_zero_grid(charge, make_grid(cfg.N, cfg.L)),
                       M=cfg.M, I=cfg.I)
    if cfg.charge == "reference" and cfg.charge_amplitude == 1.0 and cfg.charge_width == 1.0:
        rep.metrics["kappa0_closed_form_error"] = abs(k0 - np.pi)
        kappa_ok = abs(k0 - np.pi) <= 1e-8
    else:
        kappa_ok = abs(k0 - rep.metrics["kappa0_grid"]) <= 1e-8 * abs(k0)

    res = attraction_run(cfg) if result is None else result
    ws = res.omega_star
    rep.metrics.update(omega_star=ws, run_seconds=res.elapsed,
                       energy_drift=float(np.max(np.abs(res.energy - res.energy[0]))),
                       M_residual=float(np.max(np.abs(res.M_residual))))
    rep.tables["series"] = (RunResult.COLUMNS, list(res.rows()))
    err_end = abs(res.omega[-1] - ws)
    rep.metrics.update(omega_final=res.omega[-1], omega_final_error=err_end,
                       omega_final_envelope=float(envelope(res.t, res.err_omega,
                                                           cfg.envelope_half_width)[-1]))
    rep.checks["limit_frequency"] = bool(err_end <= 1e-4 * abs(ws) and kappa_ok)

    if cfg.soliton_data:
        floor = max(np.max(res.err_omega), np.max(res.z_norm))
        rep.metrics["error_floor"] = floor
        rep.checks["soliton_error_floor"] = bool(floor <= 1e-12 * max(1.0, abs(ws)))
    else:
        fo = envelope_fit(res.t, res.err_omega, cfg.attract_window, cfg.envelope_half_width)
        fz = envelope_fit(res.t, res.z_norm, cfg.attract_window, cfg.envelope_half_width)
        rep.fit("omega_error", fo)
        rep.fit("z_weighted", fz)
        for key, y in (("omega_error_raw", res.err_omega), ("z_weighted_raw", res.z_norm)):
            try:
                rep.fit(key, fit_power_law(res.t, y, cfg.attract_window))
            except FitError:
                rep.metrics[f"{key}_exponent"] = float("nan")
        rep.checks["attraction_rate"] = bool(fo.within(-2.4, -1.6) and fz.within(-2.4, -1.6))
    rep.elapsed = time.perf_counter() - t0
    return rep


def exp_scattering(cfg: ExperimentConfig, result: RunResult | None = None) -> Report:
    t0 = time.perf_counter()
    rep = Report("scatter")
    grid = make_grid(cfg.N, cfg.L)
    charge = cfg.charge_model()
    data = cfg.data()
    Z0 = data.fields(charge, grid) * cfg.eps
    ds = cfg.scatter_ds
    _, nu_long = radial_nu_history(charge, cfg.I, data, ds, cfg.scatter_t_cut, eps=cfg.eps)
    rep.metrics["nu_at_cut"] = float(abs(nu_long[-1]))
    lo, hi = cfg.scatter_window
    times = np.arange(lo, hi + 0.5, 1.0)
    if cfg.soliton_data:
        rep.metrics["psi_plus_norm"] = 0.0
        rep.checks["soliton_psi_zero"] = bool(np.all(nu_long == 0))
        rep.elapsed = time.perf_counter() - t0
        return rep
    sd = scattering_state(Z0, nu_long, ds, charge, times, budget=cfg.scatter_budget)
    pn = energy_norm(sd.psi_plus)
    free = sd.free_norms(np.concatenate([[0.0], times]))
    rep.metrics.update(psi_plus_norm=pn, tail_bound=sd.tail_bound, t_cut=sd.t_cut,
                       free_norm_spread=float(np.ptp(free) / pn))
    fr = envelope_fit(times, sd.r_norms, cfg.scatter_window, 2.0)
    rep.fit("r", fr)
    rep.fit("r_raw", fit_power_law(times, sd.r_norms, cfg.scatter_window))
    rep.tables["remainder"] = (("t", "r_norm", "free_norm"),
                               _columns(times, sd.r_norms, free[1:]))
    if result is not None:
        # dual route: r(t) = Z(t) - W(t) Psi_+ per mode, against the box dynamics
        for t_s, snap in sorted(result.snapshots.items()):
            Zt = snap.Z.to_k()
            direct = energy_norm(Zt - propagate(sd.psi_plus, t_s))
            i = int(np.argmin(np.abs(times - t_s)))
            rep.metrics[f"r_direct_rel_diff_t{int(t_s)}"] = abs(direct - sd.r_norms[i]) / sd.r_norms[i]
    rep.checks["scattering"] = bool(fr.within(-1.4, -0.6) and rep.metrics["free_norm_spread"] <= 1e-10)
    rep.elapsed = time.perf_counter() - t0
    return rep


def compact_pair(grid, width: float) -> FieldPair:
    """Two offset Gaussians (``A`` along e1, ``Pi`` tilted); numerically compact."""
    x1, x2 = grid.X
    g1 = np.exp(-((x1 - 0.5) ** 2 + x2**2) / width**2)
    g2 = np.exp(-(x1**2 + (x2 + 0.3) ** 2) / (1.5 * width**2))
    return FieldPair(Field(np.stack([g1, 0 * g1]), grid, "x"),
                     Field(np.stack([0.3 * g2, g2]), grid, "x"))


def exp_freewave(cfg: ExperimentConfig) -> Report:
    t0 = time.perf_counter()
    rep = Report("freewave")
    # full lattice even in quick mode, see ExperimentConfig.halved
    N = cfg.N * 2 if cfg.quick else cfg.N
    grid = make_grid(N, cfg.L)
    Z = compact_pair(grid, cfg.bump_width)
    R0 = max(support_radius(Z.A, 1e-12), support_radius(Z.Pi, 1e-12))
    if R0 + cfg.free_T >= cfg.L / 2:
        raise ConfigError(f"free-wave window reaches the box edge: R0 + T = {R0 + cfg.free_T:.1f}")
    lo, hi = cfg.free_window
    times = np.linspace(lo, hi, cfg.free_n_times)
    norms = dispersive_norms(Z, times, cfg.beta_free)
    fit = fit_power_law(times, norms, cfg.free_window)
    rep.fit("decay", fit)
    e0 = energy_norm(Z)
    energy = np.array([energy_norm(propagate(Z, float(t))) for t in times])
    drift = float(np.max(np.abs(energy / e0 - 1)))
    rep.metrics.update(energy_rel_drift=drift, R0=R0)
    rep.tables["decay"] = (("t", "wave_norm_wminus", "energy"), _columns(times, norms, energy))

    # Huygens: the closed-form kernel vanishes identically outside the cone
    zz = np.linspace(0, 2 * hi, 401)
    kern_out = max(float(np.max(np.abs(kernel_G(np.stack([zz, 0 * zz], axis=-1), float(t))[zz >= t])))
                   for t in (1.0, lo, hi))
    tails = []
    for t in (lo, 0.5 * (lo + hi), hi):
        Wt = kernel_apply(Z, float(t), 1e-12).to_x()
        for comp in (Wt.A, Wt.Pi):
            mag = np.sqrt(np.sum(comp.values**2, axis=0))
            tails.append(float(mag[grid.r > R0 + t].max() / mag.max()))
    rep.metrics.update(kernel_outside_cone=kern_out, convolution_tail=max(tails))
    rep.checks["free_wave"] = bool(fit.within(-2.3, -1.7) and drift <= 1e-12 and kern_out == 0.0
                                   and max(tails) <= 1e-10)
    rep.elapsed = time.perf_counter() - t0
    return rep


def exp_laplace(cfg: ExperimentConfig, result: RunResult | None = None) -> Report:
    t0 = time.perf_counter()
    rep = Report("laplace")
    charge = cfg.charge_model()
    data = cfg.data()
    nd = check_nondegeneracy(charge, cfg.I)
    rep.metrics.update(nondegeneracy_min=nd.min_abs, nondegeneracy_mu=nd.mu_at_min)
    ev = NuEvaluator(charge, cfg.I, data)
    mus = np.linspace(-10, 10, 201)
    q = np.array([ev.transforms(float(m)) for m in mus])
    nut = np.array([ev.nu_tilde(float(m)) for m in mus]) * cfg.eps
    rep.tables["line"] = (("mu", "kappa_re", "kappa_im", "abs_I_plus_kappa", "nu_tilde_re", "nu_tilde_im"),
                          _columns(mus, q[:, 0].real, q[:, 0].imag, np.abs(cfg.I + q[:, 0]),
                                   nut.real, nut.imag))
    small = np.geomspace(1e-3, 1e-1, 9)
    dev = np.array([abs(ev.nu_tilde(float(m)) - ev.threshold_leading(float(m))) for m in small])
    if np.all(dev > 0):
        rep.fit("threshold_remainder", fit_power_law(small, dev))

    res = attraction_run(cfg, T=20.0) if result is None else result
    lo, hi = cfg.laplace_window
    nsteps = int(round(hi / res.dt))
    ts = res.dt * np.arange(nsteps + 1)
    nu_dyn = res.nu_steps[:nsteps + 1]
    sel = (ts >= lo) & (ts <= hi)
    if cfg.soliton_data:
        rel = float(np.max(np.abs(nu_dyn)))
    else:
        nu_inv = cfg.eps * ev.invert(ts[sel], mu_max=cfg.laplace_mu_max)
        rel = float(np.max(np.abs(nu_inv - nu_dyn[sel])) / np.max(np.abs(nu_dyn[sel])))
        rep.tables["nu"] = (("t", "nu_dynamics", "nu_inversion"),
                            _columns(ts[sel][::10], nu_dyn[sel][::10], nu_inv[::10]))
    rep.metrics["nu_sup_rel_error"] = rel

    snap = res.snapshots.get(20.0)
    if snap is None:
        raise ValueError("dynamics run lacks the t = 20 snapshot")
    Zd = duhamel_solve(res.Z0, nu_dyn[:int(round(20.0 / res.dt)) + 1], res.dt, charge, 20.0)
    ref = energy_norm(snap.Z)
    duh = energy_norm(Zd - snap.Z.to_k()) / ref if ref > 0 else energy_norm(Zd)
    rep.metrics["duhamel_rel_error"] = duh
    rep.checks["dual_pipeline"] = bool(rel <= 1e-2 and duh <= 1e-4)
    rep.elapsed = time.perf_counter() - t0
    return rep


def exp_resolvent(cfg: ExperimentConfig) -> Report:
    t0 = time.perf_counter()
    rep = Report("resolvent")
    charge = cfg.charge_model()
    beta = cfg.beta_resolvent
    zetas = np.geomspace(cfg.zeta_min, cfg.zeta_max, cfg.n_zeta)
    bands = {0: (1.3, 1.7), 1: (0.3, 0.7), 2: (-0.7, -0.3)}
    ok = True
    for k, (a, b) in bands.items():
        fit = threshold_exponent_fit(k, beta, zetas)
        rep.fit(f"threshold_k{k}", fit)
        ok &= fit.within(a, b)
    rep.checks["threshold_resolvent"] = bool(ok)

    sm = smoothed_resolvent_asymptotics(charge, beta, mus=np.geomspace(cfg.zeta_min, cfg.zeta_max, 9))
    rep.metrics.update(cancellation_spread=sm.cancellation_spread, g0_error=sm.g0_error)
    rep.fit("remainder", sm.remainder_fit)
    for k, f in sm.derivative_fits.items():
        rep.fit(f"remainder_d{k}", f)
    rep.checks["log_cancellation"] = bool(sm.cancellation_spread <= 1e-10 and sm.g0_error <= 1e-8
                                          and sm.remainder_fit.within(1.3, 1.7))

    he = high_energy_decay(charge, cfg.I, cfg.data())
    rep.fit("kappa_high", he.kappa)
    rep.fit("nu_tilde_high", he.nu_tilde)
    rep.fit("numerator_high", he.numerator)
    for k, f in he.kappa_derivatives.items():
        rep.fit(f"kappa_high_d{k}", f)
    rep.checks["high_energy"] = bool(he.kappa.exponent <= -0.7 and he.nu_tilde.exponent <= -1.7)

    rep.metrics.update(h_plus_re=H_PLUS.real, h_plus_printed_re=H_PLUS_PRINTED.real,
                       log_constant_re=log_kernel_constant(1).real)
    r10 = np.array([10.0])
    rep.metrics.update(kernel_zeta1_r10_abs=abs(resolvent_kernel(1.0, r10)[0]),
                       difference_zeta1_r10_abs=abs(resolvent_minus_log(1.0, r10)[0]),
                       log10_over_2pi=np.log(10.0) / (2 * np.pi))
    rep.elapsed = time.perf_counter() - t0
    return rep


def structural_invariants(cfg: ExperimentConfig) -> Report:
    """Round trips, Gauss law, transversality, energy drift order, linearity, M identity."""
    from .dynamics import SimState, angular_momentum, evolve, hamiltonian, maxwell_fields
    from .grid import divergence, max_divergence_ratio

    t0 = time.perf_counter()
    rep = Report("invariants")
    N, L = cfg.N // 2, cfg.L / 2
    grid = make_grid(N, L)
    charge = cfg.charge_model()
    k0 = kappa_zero(charge)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    f = rng.standard_normal((N, N))
    rt = float(np.max(np.abs(grid.ifft(grid.fft(f)) - f)))
    pl = abs(np.sum(f**2) * grid.dx**2 - np.sum(np.abs(grid.fft(f)) ** 2) * grid.dk**2)
    pl /= np.sum(f**2) * grid.dx**2
    rep.metrics.update(round_trip=rt, plancherel=pl)

    data = cfg.data()
    Z0 = data.fields(charge, grid)
    st = SimState(0.0, Z0, cfg.M, cfg.I, charge, k0)
    later = evolve(st, 0.05, 100)
    E, _ = maxwell_fields(later)
    rho = charge.rho(grid).to_x().values
    gauss = float(np.max(np.abs(divergence(Field(E.values, grid, "x")).to_x().values - rho))
                  / np.max(np.abs(rho)))
    div = max(max_divergence_ratio(later.Z.A), max_divergence_ratio(later.Z.Pi))
    rep.metrics.update(gauss_law=gauss, divergence_ratio=div)

    drifts = []
    for dt in (0.1, 0.05):
        H0 = hamiltonian(st)
        worst = 0.0
        stepper = Stepper(grid, charge, cfg.I, dt)
        Lh, Ph = Z0.A.values.copy(), Z0.Pi.values.copy()
        for _ in range(int(round(10.0 / dt))):
            Lh, Ph = stepper.advance(Lh, Ph, 1)
            s = st.with_Z(FieldPair(Field(Lh, grid, "k"), Field(Ph, grid, "k")), 0.0)
            worst = max(worst, abs(hamiltonian(s) - H0))
        drifts.append(worst)
    ratio = drifts[0] / drifts[1]
    rep.metrics.update(energy_drift_dt=drifts[0], energy_drift_dt_half=drifts[1], drift_ratio=ratio)

    Z1 = Z0
    Z2 = SeparableData(0.7, -0.2, 1.3, 0.8).fields(charge, grid)
    al, be = 0.37, -1.9
    lhs = evolve(st.with_Z(Z1 * al + Z2 * be, 0.0), 0.05, 50).Z
    rhs = evolve(st.with_Z(Z1, 0.0), 0.05, 50).Z * al + evolve(st.with_Z(Z2, 0.0), 0.05, 50).Z * be
    lin = energy_norm(lhs - rhs) / energy_norm(lhs)
    m_res = abs(angular_momentum(later) - cfg.M)
    rep.metrics.update(linearity=lin, M_identity=m_res)
    rep.checks["structural_invariants"] = bool(
        rt <= 1e-12 and pl <= 1e-12 and gauss <= 1e-10 and div <= 1e-10
        and 3.5 <= ratio <= 4.5 and lin <= 1e-12 and m_res <= 1e-12 * max(1.0, abs(cfg.M)))
    rep.elapsed = time.perf_counter() - t0
    return rep


# CLI ----------------------------------------------------------------------------------

COMMANDS = ("attract", "scatter", "freewave", "laplace", "resolvent", "all")


def run_experiments(command: str, cfg: ExperimentConfig):
    reports = []
    shared = None
    if command in ("attract", "scatter", "laplace", "all"):
        shared = attraction_run(cfg)
    if command in ("attract", "all"):
        reports.append(exp_attraction(cfg, shared))
    if command in ("scatter", "all"):
        reports.append(exp_scattering(cfg, shared))
    if command in ("freewave", "all"):
        reports.append(exp_freewave(cfg))
    if command in ("laplace", "all"):
        reports.append(exp_laplace(cfg, shared))
    if command in ("resolvent", "all"):
        reports.append(exp_resolvent(cfg))
    if command == "all":
        reports.append(structural_invariants(cfg))
    return reports


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinsoliton", description="Run the soliton stability experiments.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", default="default", help="INI profile path, or 'default'")
    p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    p.add_argument("--seed", type=int, default=0, help="seed for random perturbations")
    p.add_argument("--quick", action="store_true", help="halved-resolution smoke mode")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, quick=args.quick)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out if args.out is not None else cfg.out)
    reports = run_experiments(args.command, cfg)
    path = write_outputs(reports, cfg, out)
    for rep in reports:
        for k, v in sorted(rep.checks.items()):
            print(f"{'PASS' if v else 'FAIL'}  {rep.name}.{k}")
    print(f"summary: {path}")
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
