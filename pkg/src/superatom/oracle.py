"""Brute-force microscopic simulation of a driven Rydberg ensemble.

Atoms sit at random static positions drawn from the Gaussian density; the
state space is truncated to the vacuum, all singly-excited states and the
doubly-excited pairs whose interaction energy lies below a cutoff.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import integrate
from scipy.sparse.linalg import expm_multiply
from scipy.spatial.distance import pdist

from .dynamics import IntegrationError

DEFAULT_CUTOFF = 32.0
NORM_TOL = 1e-8


@dataclass(frozen=True)
class CloudSample:
    """Atom positions in reduced coordinates ``(x/sigma, y/sigma, z/sigma_z)``."""

    positions: np.ndarray
    sigma: float
    sigma_z: float
    seed: int

    @property
    def N(self) -> int:
        return self.positions.shape[0]

    def physical(self) -> np.ndarray:
        """Positions in um."""
        return self.positions * np.array([self.sigma, self.sigma, self.sigma_z])

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.positions).tobytes()).hexdigest()


def sample_cloud(N: int, sigma: float, sigma_z: float, seed: int) -> CloudSample:
    """Draw ``N`` atoms from the Gaussian density with a counter-based generator."""
    if N < 2:
        raise ValueError("need at least two atoms")
    if sigma <= 0 or sigma_z <= 0:
        raise ValueError("cloud radii must be positive")
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    rng = np.random.Generator(np.random.Philox(seed))
    return CloudSample(rng.standard_normal((N, 3)), float(sigma), float(sigma_z), seed)


@dataclass(frozen=True)
class MicroHamiltonian:
    """``H(t) = H_int + Omega(t) H_drive`` on vacuum, singles and kept pairs."""

    N: int
    pairs: np.ndarray
    energies: np.ndarray
    h_int: sp.csr_matrix
    h_drive: sp.csr_matrix
    cutoff: float

    @property
    def dim(self) -> int:
        return 1 + self.N + self.pairs.shape[0]

    def hamiltonian(self, omega: float) -> sp.csr_matrix:
        return (self.h_int + omega * self.h_drive).tocsr()


def build_micro(sample: CloudSample, C6: float, omega_peak: float, cutoff_multiple: float = DEFAULT_CUTOFF) -> MicroHamiltonian:
    """Keep pair states with ``|V_ij| <= cutoff_multiple * omega_peak / 2``.

    ``cutoff_multiple = inf`` keeps every pair.
    """
    if omega_peak <= 0 and math.isfinite(cutoff_multiple):
        raise ValueError("a positive drive amplitude is needed to set the cutoff")
    N = sample.N
    r = pdist(sample.physical())
    with np.errstate(divide="ignore"):
        v = C6 / r**6
    i, j = np.triu_indices(N, k=1)
    e_max = cutoff_multiple * abs(omega_peak) / 2.0
    keep = np.abs(v) <= e_max
    pairs = np.stack([i[keep], j[keep]], axis=1)
    energies = v[keep]
    M = pairs.shape[0]
    dim = 1 + N + M
    h_int = sp.diags(np.concatenate([np.zeros(1 + N), energies]), format="csr")
    amp = 0.5 / math.sqrt(N)
    rows = np.concatenate([np.zeros(N, dtype=int), 1 + pairs[:, 0], 1 + pairs[:, 1]])
    cols = np.concatenate([1 + np.arange(N), 1 + N + np.arange(M), 1 + N + np.arange(M)])
    up = sp.csr_matrix((np.full(rows.size, amp), (rows, cols)), shape=(dim, dim))
    h_drive = (up + up.T).tocsr()
    return MicroHamiltonian(N, pairs, energies, h_int, h_drive, e_max)


def _check_norm(states: np.ndarray):
    dev = np.abs(np.linalg.norm(states, axis=1) - 1.0).max()
    if dev > NORM_TOL:
        raise IntegrationError(f"norm drift {dev:.3g} exceeds {NORM_TOL:g}")


def evolve_schrodinger(
    micro: MicroHamiltonian,
    omega: float | Callable[[float], float],
    t_grid: Sequence[float],
    tol: float = 1e-10,
) -> np.ndarray:
    """State vectors on ``t_grid`` starting from the vacuum, shape ``(n_t, dim)``.

    A constant ``omega`` on a uniform grid uses the exact propagator action;
    otherwise an adaptive Runge-Kutta scheme with relative tolerance ``tol``.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be increasing with at least two points")
    psi0 = np.zeros(micro.dim, dtype=complex)
    psi0[0] = 1.0
    uniform = np.allclose(np.diff(t), t[1] - t[0], rtol=1e-12, atol=0)
    if not callable(omega) and uniform:
        h = micro.hamiltonian(float(omega))
        out = expm_multiply(-1j * h, psi0, start=t[0], stop=t[-1], num=t.size, endpoint=True)
    else:
        f = omega if callable(omega) else (lambda _t, w=float(omega): w)
        h_int, h_drive = micro.h_int, micro.h_drive

        def rhs(tt, y):
            return -1j * (h_int @ y + f(tt) * (h_drive @ y))

        sol = integrate.solve_ivp(
            rhs, (t[0], t[-1]), psi0, method="DOP853", t_eval=t, rtol=tol, atol=tol * 1e-3,
            max_step=float(np.min(np.diff(t))),
        )
        if sol.status != 0:
            t_fail = sol.t[-1] if sol.t.size else t[0]
            raise IntegrationError(f"Schrodinger integration failed at t={t_fail:.6g} us: {sol.message}")
        out = sol.y.T
    _check_norm(out)
    return out


def symmetric_projections(states: np.ndarray, micro: MicroHamiltonian) -> dict:
    """Overlaps with ``|R>``, the uniform pair state and the excited sector."""
    states = np.atleast_2d(states)
    N = micro.N
    singles = states[:, 1 : 1 + N]
    pairs = states[:, 1 + N :]
    p_r = np.abs(singles.sum(axis=1)) ** 2 / N
    p_sym2 = np.abs(pairs.sum(axis=1)) ** 2 / (N * (N - 1) / 2.0)
    p_exc = 1.0 - np.abs(states[:, 0]) ** 2
    return {"P_R": p_r, "P_sym2": p_sym2, "P_exc_total": p_exc}


@dataclass(frozen=True)
class EnsembleResult:
    """Per-realization series and their pointwise mean and sample std."""

    t: np.ndarray
    seeds: tuple
    series: dict
    digests: tuple

    def mean(self, key: str) -> np.ndarray:
        return self.series[key].mean(axis=0)

    def std(self, key: str) -> np.ndarray:
        # shifting by one realization keeps identical runs at exactly zero
        x = self.series[key]
        return (x - x[0]).std(axis=0, ddof=1)

    def trajectory_rows(self):
        """Rows in the trajectory schema, prefixed by the realization index.

        The microscopic model has no sinks or cavity, so those columns are 0.
        """
        for r in range(len(self.seeds)):
            p_r, p2, pe = (self.series[k][r] for k in ("P_R", "P_sym2", "P_exc_total"))
            for k in range(self.t.size):
                yield (r, float(self.t[k]), float(1.0 - pe[k]), float(p_r[k]), float(p2[k]), float(pe[k]), 0.0, 0.0, 0.0)

    def summary_rows(self):
        keys = ("P_R", "P_sym2", "P_exc_total")
        means = [self.mean(k) for k in keys]
        stds = [self.std(k) for k in keys]
        for k in range(self.t.size):
            row = [float(self.t[k])]
            for m, s in zip(means, stds):
                row += [float(m[k]), float(s[k])]
            yield tuple(row)


ENSEMBLE_TRAJ_COLUMNS = ("realization_id", "t_us", "P_G", "P_R", "P_Psi000", "P_exc_total", "P_C", "P_c", "n_cav")
ENSEMBLE_SUMMARY_COLUMNS = (
    "t_us", "mean_P_R", "std_P_R", "mean_P_Psi000", "std_P_Psi000", "mean_P_exc_total", "std_P_exc_total",
)


def run_realization(N, sigma, sigma_z, C6, omega, t_grid, seed, omega_peak=None, cutoff_multiple=DEFAULT_CUTOFF, tol=1e-10):
    sample = sample_cloud(N, sigma, sigma_z, seed)
    peak = omega_peak if omega_peak is not None else abs(float(omega))
    micro = build_micro(sample, C6, peak, cutoff_multiple)
    states = evolve_schrodinger(micro, omega, t_grid, tol)
    return symmetric_projections(states, micro), sample.digest()


def ensemble_run(
    N: int,
    sigma: float,
    sigma_z: float,
    C6: float,
    omega,
    t_grid,
    seeds: Sequence[int],
    omega_peak: float | None = None,
    cutoff_multiple: float = DEFAULT_CUTOFF,
    tol: float = 1e-10,
    executor=None,
) -> EnsembleResult:
    """Run one brute-force realization per seed.

    ``executor`` may be any object with a ``map`` method (for instance a
    process pool) to run realizations concurrently.
    """
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) < 2:
        raise ValueError("need at least two realizations")
    t = np.asarray(t_grid, dtype=float)
    args = [(N, sigma, sigma_z, C6, omega, t, s, omega_peak, cutoff_multiple, tol) for s in seeds]
    mapper = executor.map if executor is not None else map
    results = list(mapper(_run_star, args))
    keys = results[0][0].keys()
    series = {k: np.stack([r[0][k] for r in results]) for k in keys}
    return EnsembleResult(t, seeds, series, tuple(r[1] for r in results))


def _run_star(args):
    return run_realization(*args)
