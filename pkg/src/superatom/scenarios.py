"""Scenario orchestration: build the model from a configuration and run it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import params
from .basis import SPHERICAL, enumerate_basis, laser_coupling_matrix
from .config import ScenarioConfig
from .dynamics import (
    MAPPING,
    TRAJECTORY_COLUMNS,
    PulseShape,
    RateSet,
    Trajectory,
    build_liouvillian,
    evolve,
    ground_state,
    photon_emission_number,
    potential_table,
)
from .interactions import Z0_SPHERICAL, CloudGeometry, dos, effective_potential, z_peak
from .oracle import ENSEMBLE_SUMMARY_COLUMNS, ENSEMBLE_TRAJ_COLUMNS, ensemble_run
from .output import provenance_line, write_csv

MHZ = params.TWO_PI


def geometry(cfg: ScenarioConfig) -> CloudGeometry:
    sz = cfg.cloud.sigma_um if cfg.model.symmetry == SPHERICAL else cfg.cloud.sigma_z
    return CloudGeometry(cfg.cloud.sigma_um, sz, cfg.model.C6)


def rates(cfg: ScenarioConfig) -> RateSet:
    r = cfg.rates
    return RateSet(
        gamma_r=r.gamma_r_MHz * MHZ,
        omega0=r.omega0_MHz * MHZ,
        gamma=r.gamma_MHz * MHZ,
        kappa=r.kappa_MHz * MHZ,
        kappa0=r.kappa0_MHz * MHZ,
        g=r.g_MHz * MHZ,
        eta_mm=r.eta_mm,
        tau_r=r.tau_r_us,
    )


def _scaled(shape, amp):
    t, v = zip(*shape)
    return (np.array(t), amp * np.array(v))


def pulses(cfg: ScenarioConfig, omega1_MHz: float | None = None) -> PulseShape:
    """Constant collective drive if ``omega_MHz`` is set, otherwise two-photon pulses."""
    p = cfg.pulses
    om_m = _scaled(p.omega_m_shape, p.omega_m_MHz * MHZ) if p.omega_m_MHz > 0 else None
    if p.omega_MHz is not None and omega1_MHz is None:
        om = p.omega_MHz * MHZ
        t_end = t_end_default(cfg)
        return PulseShape(omega=((0.0, t_end), (om, om)), omega_m=om_m)
    o1 = p.omega1_MHz if omega1_MHz is None else omega1_MHz
    return PulseShape(
        omega1=_scaled(p.omega1_shape, o1 * MHZ),
        omega2=_scaled(p.omega2_shape, p.omega2_MHz * MHZ),
        delta=p.delta_MHz * MHZ,
        n0=cfg.cloud.N0,
        omega_m=om_m,
    )


def t_end_default(cfg: ScenarioConfig) -> float:
    """Two Rabi periods for a constant drive, else the end of the pulse tables."""
    if cfg.time.t_end_us is not None:
        return cfg.time.t_end_us
    p = cfg.pulses
    if p.omega_MHz is not None and p.omega_MHz != 0:
        return 2.0 / abs(p.omega_MHz)
    ends = [p.omega1_shape[-1][0], p.omega2_shape[-1][0]]
    if cfg.model.stage == MAPPING:
        ends.append(p.omega_m_shape[-1][0])
    return max(ends)


def drive_end(cfg: ScenarioConfig) -> float:
    p = cfg.pulses
    return max(p.omega1_shape[-1][0], p.omega2_shape[-1][0])


def z_energy(cfg: ScenarioConfig, geo: CloudGeometry) -> float | None:
    """Fixed ``z_e``, or None when it follows the drive amplitude."""
    mode = cfg.model.z_e
    if mode == "z0":
        beta = 0.0 if cfg.model.symmetry == SPHERICAL else geo.beta
        return Z0_SPHERICAL if beta == 0.0 else z_peak(beta)
    if mode == "z_omega":
        return None
    return float(mode)


def potential(cfg: ScenarioConfig, basis, geo: CloudGeometry, pulse: PulseShape):
    if not basis.doubles:
        return None
    z = z_energy(cfg, geo)
    chans = basis.symmetry == SPHERICAL
    if z is not None:
        return effective_potential(basis, geo, z, with_channels=chans)
    if pulse.omega is not None and np.ptp(pulse.omega[1]) == 0:
        om = abs(float(pulse.omega[1][0]))
        if om > 0:
            return effective_potential(basis, geo, geo.z_drive(om), with_channels=chans)
    peak = pulse.omega_peak()
    if peak <= 0:
        return effective_potential(basis, geo, Z0_SPHERICAL, with_channels=chans)
    return potential_table(basis, geo, peak, cfg.model.omega_grid)


@dataclass
class SimulationResult:
    trajectory: Trajectory
    n_phot: float | None
    basis: object
    generator: object


def time_grid(cfg: ScenarioConfig, extra=()) -> np.ndarray:
    """Uniform grid plus ``extra`` instants; an extra point within 1e-9 of the
    spacing of a grid point replaces it."""
    t = np.linspace(0.0, t_end_default(cfg), cfg.time.n_points)
    tol = 1e-9 * (t[1] - t[0])
    for x in np.asarray(extra, dtype=float):
        k = int(np.argmin(np.abs(t - x)))
        if abs(t[k] - x) <= tol:
            t[k] = x
        else:
            t = np.insert(t, np.searchsorted(t, x), x)
    return t


def simulate(
    cfg: ScenarioConfig, omega1_MHz: float | None = None, pot=None, keep_states: bool = False, t_extra=()
) -> SimulationResult:
    geo = geometry(cfg)
    basis = enumerate_basis(cfg.model.n_max, cfg.model.symmetry)
    cm = laser_coupling_matrix(basis)
    pulse = pulses(cfg, omega1_MHz)
    if pot is None:
        pot = potential(cfg, basis, geo, pulse)
    rs = rates(cfg)
    gen = build_liouvillian(
        basis, cm, pot, pulse, rs, stage=cfg.model.stage, decay=cfg.model.decay, leak=cfg.model.leak
    )
    t = time_grid(cfg, t_extra)
    traj = evolve(gen, ground_state(gen), t, basis, rtol=cfg.time.rtol, atol=cfg.time.rtol * 1e-2, keep_states=keep_states)
    n_phot = None
    if cfg.model.stage == MAPPING:
        n_phot = photon_emission_number(traj, rs.kappa0, rs.eta_mm)
    return SimulationResult(traj, n_phot, basis, gen)


# --------------------------------------------------------------------------
# scenario kinds


def run_basis(cfg: ScenarioConfig, out: Path | None) -> dict:
    b = enumerate_basis(cfg.model.n_max, cfg.model.symmetry)
    cm = laser_coupling_matrix(b)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        head = provenance_line(cfg.digest()) + "\n"
        (out / "basis.csv").write_text(head + b.to_csv())
        (out / "coupling.csv").write_text(head + cm.to_csv())
    return {"states": b.count(), "singles": len(b.singles), "doubles": len(b.doubles), "with_c": b.count(True)}


def run_dos(cfg: ScenarioConfig, out: Path | None) -> dict:
    d = cfg.dos
    z = np.geomspace(d.z_min, d.z_max, d.n_points)
    p = dos(z, d.beta)
    if out is not None:
        write_csv(out / "dos.csv", ("z", "p"), zip(z.tolist(), p.tolist()), cfg.digest())
    return {"z_peak": z_peak(d.beta), "z_grid_argmax": float(z[np.argmax(p)])}


def run_effective(cfg: ScenarioConfig, out: Path | None) -> dict:
    geo = geometry(cfg)
    b = enumerate_basis(cfg.model.n_max, cfg.model.symmetry)
    z = z_energy(cfg, geo)
    if z is None:
        om = (cfg.pulses.omega_MHz or 0.0) * MHZ
        if om <= 0:
            raise ValueError("z_e = z_omega needs a constant drive omega_MHz")
        z = geo.z_drive(om)
    pot = effective_potential(b, geo, z, with_channels=b.symmetry == SPHERICAL)
    off = b.double_slice.start
    if out is not None:
        for name, mat in (("Lambda", pot.Lambda), ("Gamma", pot.Gamma)):
            r, c = np.nonzero(mat)
            rows = [(int(i) + off, int(j) + off, float(mat[i, j])) for i, j in zip(r, c)]
            write_csv(out / f"{name}.csv", ("row", "col", "value"), rows, cfg.digest())
        if pot.channels:
            rows = []
            for ch in pot.channels:
                for p, v in zip(ch.positions, ch.zeta):
                    rows.append((ch.n_c, ch.l, float(ch.rate), int(p) + off, float(v)))
            write_csv(out / "channels.csv", ("n_c", "l", "rate", "state_id", "zeta"), rows, cfg.digest())
    w = np.linalg.eigvalsh(pot.Gamma)
    return {"z_e": z, "doubles": len(b.doubles), "max_Lambda": float(np.abs(pot.Lambda).max()),
            "max_Gamma_eig": float(w.max()), "min_Gamma_eig": float(w.min())}


def run_simulate(cfg: ScenarioConfig, out: Path | None) -> dict:
    res = simulate(cfg)
    if out is not None:
        write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, res.trajectory.rows(), cfg.digest())
    obs = res.trajectory.observables
    info = {"P_R_final": float(obs["P_R"][-1]), "P_exc_final": float(obs["P_exc_total"][-1])}
    if res.n_phot is not None:
        info["n_phot"] = res.n_phot
    return info


@dataclass
class Comparison:
    t: np.ndarray
    model: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    ensemble: object
    model_trajectory: Trajectory

    @property
    def max_abs_diff(self) -> float:
        return float(np.abs(self.model - self.mean).max())

    @property
    def fraction_within_2std(self) -> float:
        return float(np.mean(np.abs(self.model - self.mean) <= 2.0 * self.std))


def compare(cfg: ScenarioConfig) -> Comparison:
    """Effective model against an ensemble of brute-force realizations."""
    res = simulate(cfg)
    pulse = pulses(cfg)
    t = res.trajectory.t
    if pulse.omega is not None and np.ptp(pulse.omega[1]) == 0:
        omega = float(pulse.omega[1][0])
    else:
        omega = pulse.Omega
    o = cfg.oracle
    seeds = [o.seed + k for k in range(o.realizations)]
    ens = ensemble_run(
        cfg.cloud.N, cfg.cloud.sigma_um, cfg.cloud.sigma_z, cfg.model.C6, omega, t, seeds,
        omega_peak=pulse.omega_peak(), cutoff_multiple=o.cutoff_multiple, tol=o.tol,
    )
    return Comparison(t, res.trajectory.observables["P_R"], ens.mean("P_R"), ens.std("P_R"), ens, res.trajectory)


def run_validate(cfg: ScenarioConfig, out: Path | None) -> dict:
    cmp_ = compare(cfg)
    if out is not None:
        dg = cfg.digest()
        rows = zip(cmp_.t.tolist(), cmp_.model.tolist(), cmp_.mean.tolist(), cmp_.std.tolist(),
                   np.abs(cmp_.model - cmp_.mean).tolist())
        write_csv(out / "comparison.csv", ("t_us", "model_P_R", "mean_P_R", "std_P_R", "abs_diff_P_R"), rows, dg)
        write_csv(out / "oracle_trajectories.csv", ENSEMBLE_TRAJ_COLUMNS, cmp_.ensemble.trajectory_rows(), dg)
        write_csv(out / "oracle_summary.csv", ENSEMBLE_SUMMARY_COLUMNS, cmp_.ensemble.summary_rows(), dg)
        write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, cmp_.model_trajectory.rows(), dg)
    return {"max_abs_dP_R": cmp_.max_abs_diff, "fraction_within_2std": cmp_.fraction_within_2std,
            "realizations": cfg.oracle.realizations}


SWEEP_COLUMNS = ("state", "n_max", "omega1_MHz", "Omega_peak_MHz", "not_G", "P_doubles", "n_phot")


def sweep(cfg: ScenarioConfig) -> list:
    """Drive-strength sweep of not(G) and of the mapped photon number per Rydberg state."""
    sw = cfg.sweep
    rows = []
    measure = sw.measurement
    stage = MAPPING if measure in ("photons", "both") else "drive"
    t_drive = drive_end(cfg)
    omega1s = np.linspace(sw.omega1_min_MHz, sw.omega1_max_MHz, sw.n_values)
    for state, n_max in zip(sw.states, sw.n_max):
        sc = cfg.replace("model", state=state, C6_MHz_um6=None, n_max=int(n_max), stage=stage, symmetry=SPHERICAL)
        if stage == MAPPING and sc.pulses.omega_m_MHz <= 0:
            sc = sc.replace("pulses", omega_m_MHz=params.OMEGA_M_MAX / MHZ)
        sc = sc.replace("pulses", omega_MHz=None)
        if sc.time.t_end_us is None:
            sc = sc.replace("time", t_end_us=t_end_default(sc))
        geo = geometry(sc)
        basis = enumerate_basis(sc.model.n_max, SPHERICAL)
        z = z_energy(sc, geo)
        pot = effective_potential(basis, geo, z, with_channels=True) if z is not None else None
        for o1 in omega1s:
            res = simulate(sc, omega1_MHz=float(o1), pot=pot, t_extra=[t_drive])
            obs = res.trajectory.observables
            k_drive = int(np.searchsorted(res.trajectory.t, t_drive))
            pulse = pulses(sc, float(o1))
            rows.append((
                state, int(n_max), float(o1), pulse.omega_peak() / MHZ,
                float(sw.not_g_correction * obs["P_exc_total"][k_drive]),
                float(obs["P_doubles"][k_drive]), float(res.n_phot) if res.n_phot is not None else float("nan"),
            ))
    return rows


def run_sweep(cfg: ScenarioConfig, out: Path | None) -> dict:
    rows = sweep(cfg)
    if out is not None:
        write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows, cfg.digest())
    return {"runs": len(rows)}


RUNNERS = {
    "basis": run_basis,
    "dos": run_dos,
    "effective": run_effective,
    "simulate": run_simulate,
    "validate": run_validate,
    "sweep": run_sweep,
}


def run_scenario(cfg: ScenarioConfig, out=None) -> dict:
    out = Path(out) if out is not None else None
    return RUNNERS[cfg.kind](cfg, out)
