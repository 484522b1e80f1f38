"""Driven-dissipative master equation of the reduced superatom model.

The generator is kept in the form

    d rho/dt = -i (H_eff rho - rho H_eff^dag) + sum_j r_j L_j rho L_j^dag
               + sum_k r_k |t_k><t_k| Tr(K_k rho)

with ``H_eff = H - (i/2) sum r L^dag L``. The last family collects decays of
a whole subspace into a single sink state (``C`` or ``c``), for which
``K_k = L^dag L`` is all that is needed. The density matrix is never
vectorised into a superoperator; the right-hand side works with d x d
matrix products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.stats import poisson

from .basis import SPHERICAL, BasisIndex, CouplingMatrix
from .interactions import GAMMA_CLAMP_RTOL, CloudGeometry, EffectivePotential, effective_potential
from .specfun import double_factorial

DRIVE = "drive"
MAPPING = "drive+mapping"
SPECTRAL = "spectral"
DOUBLE_SUM = "double_sum"

TRAJECTORY_COLUMNS = ("t_us", "P_G", "P_R", "P_Psi000", "P_exc_total", "P_C", "P_c", "n_cav")


class IntegrationError(RuntimeError):
    """The ODE integrator gave up."""


# --------------------------------------------------------------------------
# pulses and rates


def _table(times, values):
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != v.shape or t.size < 2:
        raise ValueError("pulse table needs matching 1-d arrays of at least two samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("pulse table times must be strictly increasing")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise ValueError("pulse table must be finite")
    return t, v


def _sampled(table):
    """Monotone-cubic interpolant of a table, held constant outside its range."""
    if table is None:
        return lambda t: 0.0
    t, v = table
    f = PchipInterpolator(t, v, extrapolate=False)
    lo, hi = t[0], t[-1]

    def g(x):
        return float(f(min(max(x, lo), hi)))

    return g


@dataclass(frozen=True)
class PulseShape:
    """Time dependence of the drive and mapping Rabi frequencies (rad/us).

    Either ``omega`` is given directly as a ``(times, values)`` table, or the
    collective Rabi frequency is the two-photon product
    ``sqrt(N0) Omega_1 Omega_2 / (2 Delta)``.
    """

    omega: tuple | None = None
    omega1: tuple | None = None
    omega2: tuple | None = None
    delta: float | None = None
    n0: float | None = None
    omega_m: tuple | None = None
    _fns: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        fns = {}
        if self.omega is not None:
            if self.omega1 is not None or self.omega2 is not None:
                raise ValueError("give either omega or the two-photon tables, not both")
            object.__setattr__(self, "omega", _table(*self.omega))
            f = _sampled(self.omega)
            fns["omega"] = f
        elif self.omega1 is not None and self.omega2 is not None:
            if not self.delta or not self.n0 or self.n0 <= 0:
                raise ValueError("two-photon drive needs a nonzero delta and a positive n0")
            object.__setattr__(self, "omega1", _table(*self.omega1))
            object.__setattr__(self, "omega2", _table(*self.omega2))
            f1, f2 = _sampled(self.omega1), _sampled(self.omega2)
            pre = math.sqrt(self.n0) / (2.0 * self.delta)
            fns["omega"] = lambda t: pre * f1(t) * f2(t)
        else:
            fns["omega"] = lambda t: 0.0
        if self.omega_m is not None:
            object.__setattr__(self, "omega_m", _table(*self.omega_m))
        fns["omega_m"] = _sampled(self.omega_m)
        object.__setattr__(self, "_fns", fns)

    @classmethod
    def constant(cls, omega: float, t_end: float) -> "PulseShape":
        return cls(omega=((0.0, t_end), (omega, omega)))

    def Omega(self, t: float) -> float:
        return self._fns["omega"](t)

    def Omega_m(self, t: float) -> float:
        return self._fns["omega_m"](t)

    def knots(self) -> np.ndarray:
        ts = [tab[0] for tab in (self.omega, self.omega1, self.omega2, self.omega_m) if tab is not None]
        return np.unique(np.concatenate(ts)) if ts else np.zeros(0)

    def omega_peak(self, samples: int = 2001) -> float:
        """Largest ``|Omega(t)|`` over the table range."""
        k = self.knots()
        if k.size == 0:
            return 0.0
        ts = np.union1d(k, np.linspace(k[0], k[-1], samples))
        return max(abs(self.Omega(t)) for t in ts)


@dataclass(frozen=True)
class RateSet:
    """Dissipative and cavity parameters (rad/us; ``tau_r`` in us)."""

    gamma_r: float = 0.0
    omega0: float = 0.0
    gamma: float = 0.0
    kappa: float = 0.0
    kappa0: float = 0.0
    g: float = 0.0
    eta_mm: float = 1.0
    tau_r: float = math.inf

    def __post_init__(self):
        for name in ("gamma_r", "omega0", "gamma", "kappa", "kappa0", "g", "eta_mm", "tau_r"):
            v = getattr(self, name)
            if not v >= 0:
                raise ValueError(f"{name} must be non-negative, got {v}")
        if self.kappa0 > self.kappa:
            raise ValueError("kappa0 cannot exceed kappa")


# --------------------------------------------------------------------------
# thermal ladder


@dataclass(frozen=True)
class LadderSpec:
    """Dicke ladder ``phi_0 = psi_0``, ``phi_n`` DFT combinations of the others.

    ``vectors[n]`` holds the components of ``phi_n`` on ``psi_0..psi_L``.
    """

    length: int
    omega0: float
    vectors: np.ndarray
    gamma_T: float

    @property
    def lowering(self) -> np.ndarray:
        """``a_T = sum_n sqrt(n) |phi_{n-1}><phi_n|`` on the psi basis."""
        v = self.vectors
        a = np.zeros((self.length + 1, self.length + 1), dtype=complex)
        for n in range(1, self.length + 1):
            a += math.sqrt(n) * np.outer(v[n - 1], v[n].conj())
        return a


def thermal_ladder(n_max: int, omega0: float) -> LadderSpec:
    """Ladder of length ``n_max`` with terminal decay rate ``gamma_T``."""
    if n_max < 1:
        raise ValueError("ladder length must be >= 1")
    L = n_max
    v = np.zeros((L + 1, L + 1), dtype=complex)
    v[0, 0] = 1.0
    idx = np.arange(1, L + 1)
    v[1:, 1:] = np.exp(2j * np.pi * np.outer(idx, idx) / L) / math.sqrt(L)
    gamma_T = omega0 * (2.0 / math.pi) ** ((-1) ** L / 2.0) * double_factorial(L) / double_factorial(L - 1)
    return LadderSpec(L, omega0, v, gamma_T)


# --------------------------------------------------------------------------
# effective potential sampled along a pulse


@dataclass(frozen=True)
class PotentialTable:
    """``Lambda`` and ``Gamma`` sampled at drive amplitudes ``omegas``.

    Between samples both are linearly interpolated, which keeps ``Gamma``
    positive semidefinite.
    """

    omegas: np.ndarray
    potentials: tuple

    def weights(self, omega: float) -> list:
        """Non-zero ``(sample, weight)`` pairs at ``|omega|``."""
        w = self.omegas
        x = min(max(abs(omega), w[0]), w[-1])
        i = int(np.searchsorted(w, x, side="right")) - 1
        if i >= w.size - 1:
            return [(w.size - 1, 1.0)]
        f = (x - w[i]) / (w[i + 1] - w[i])
        return [(k, c) for k, c in ((i, 1.0 - f), (i + 1, f)) if c != 0.0]


def potential_table(
    basis: BasisIndex, geometry: CloudGeometry, omega_peak: float, n_grid: int = 64
) -> PotentialTable:
    """Effective potential at ``z_e = z_Omega`` on ``n_grid`` amplitudes up to the peak.

    Below ``omega_peak / n_grid`` the lowest sample is used.
    """
    if omega_peak <= 0:
        raise ValueError("omega_peak must be positive")
    omegas = np.linspace(omega_peak / n_grid, omega_peak, n_grid)
    pots = tuple(
        effective_potential(basis, geometry, geometry.z_drive(o), with_channels=basis.symmetry == SPHERICAL)
        for o in omegas
    )
    return PotentialTable(omegas, pots)


# --------------------------------------------------------------------------
# generator


def _const(_t):
    return 1.0


def _memo(fn: Callable) -> Callable:
    """Cache the last evaluation; the integrator calls many terms at one time."""
    last = [None, None]

    def g(t):
        if last[0] != t:
            last[0], last[1] = t, fn(t)
        return last[1]

    return g


def _selector(pos: np.ndarray):
    if pos.size and np.all(np.diff(pos) == 1):
        return slice(int(pos[0]), int(pos[-1]) + 1)
    return pos


@dataclass
class Generator:
    """Time-dependent GKSL generator acting on d x d density matrices.

    Hamiltonian pieces sharing a coefficient function are summed once at
    assembly. The right-hand side assumes a Hermitian ``rho``, which the
    generator preserves.
    """

    labels: tuple
    heff_groups: dict = field(default_factory=dict)
    jumps: list = field(default_factory=list)
    transfers: list = field(default_factory=list)
    channels: list = field(default_factory=list)
    dephasing: np.ndarray | None = None
    pulses: PulseShape | None = None
    n_ops: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        return self.labels.index(label)

    def add_hamiltonian(self, matrix, coef: Callable = _const):
        m = np.asarray(matrix, dtype=complex)
        if coef in self.heff_groups:
            self.heff_groups[coef] = self.heff_groups[coef] + m
        else:
            self.heff_groups[coef] = m.copy()

    def add_jump(self, op: sp.spmatrix, rate: float, coef: Callable = _const):
        """``rate * coef(t) * L[op]``."""
        op = sp.csr_matrix(op, dtype=complex)
        op.eliminate_zeros()
        coo = op.tocoo()
        if np.unique(coo.row).size == coo.row.size:
            # distinct targets: L rho L^dag is a gather-scatter
            kind = ("indexed", coo.row.copy(), coo.col.copy(), coo.data.copy())
        else:
            kind = ("sparse", op, op.conj().T.tocsr())
        self.jumps.append((coef, rate, kind))
        self.add_hamiltonian(-0.5j * rate * (op.conj().T @ op).toarray(), coef)

    def add_transfer(self, target: int, positions, kmat, rate: float, coef: Callable = _const):
        """``rate * coef(t)`` times a dissipator with ``L^dag L = kmat`` feeding ``target``."""
        pos = np.asarray(positions, dtype=int)
        kmat = np.asarray(kmat, dtype=complex)
        full = np.zeros((self.dim, self.dim), dtype=complex)
        full[np.ix_(pos, pos)] = kmat
        self.transfers.append((coef, rate, target, _selector(pos), kmat.T.copy()))
        self.add_hamiltonian(-0.5j * rate * full, coef)

    def add_channels(self, target: int, positions, rates, vectors, coef: Callable = _const):
        """Rank-one decays ``sum_i rates[i] L[|target><v_i|]`` with ``v_i`` the rows of ``vectors``."""
        pos = np.asarray(positions, dtype=int)
        rates = np.asarray(rates, dtype=float)
        vecs = np.atleast_2d(np.asarray(vectors, dtype=complex))
        if rates.size == 0:
            return
        k = (vecs.T * rates) @ vecs.conj()
        full = np.zeros((self.dim, self.dim), dtype=complex)
        full[np.ix_(pos, pos)] = k
        self.channels.append((coef, rates, target, _selector(pos), vecs))
        self.add_hamiltonian(-0.5j * full, coef)

    def heff(self, t: float) -> np.ndarray:
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for coef, m in self.heff_groups.items():
            c = coef(t)
            if c != 0.0:
                h += c * m
        return h

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        x = self.heff(t) @ rho
        out = -1j * x
        out += out.conj().T
        if self.dephasing is not None:
            out -= self.dephasing * rho
        for coef, rate, kind in self.jumps:
            c = coef(t) * rate
            if c == 0.0:
                continue
            if kind[0] == "indexed":
                _, tg, src, amp = kind
                out[np.ix_(tg, tg)] += c * (amp[:, None] * amp.conj()[None, :]) * rho[np.ix_(src, src)]
            else:
                out += c * ((kind[1] @ rho) @ kind[2])
        for coef, rate, target, sel, kt in self.transfers:
            c = coef(t) * rate
            if c != 0.0:
                out[target, target] += c * np.sum(kt * rho[sel][:, sel])
        for coef, rates, target, sel, vecs in self.channels:
            c = coef(t)
            if c != 0.0:
                sub = rho[sel][:, sel]
                pops = np.real(np.sum((vecs.conj() @ sub) * vecs, axis=1))
                out[target, target] += c * float(rates @ pops)
        return out

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        d = self.dim
        return self(t, y.reshape(d, d)).ravel()


def _dense(op) -> np.ndarray:
    return op.toarray() if sp.issparse(op) else np.asarray(op)


def _extended_labels(basis: BasisIndex, stage: str) -> tuple:
    labels = list(basis.states)
    if stage == MAPPING:
        labels += ["1", "2", "e", "E", "e1"]
        labels += [("e", s) for s in basis.singles]
        labels += [("1", s) for s in basis.singles]
    return tuple(labels)


def _spectral_channels(pot: EffectivePotential, basis: BasisIndex) -> list:
    """``(rate, vector)`` pairs with ``Gamma = sum rate v v^T`` (full doubles space)."""
    dim = len(basis.doubles)
    out = []
    if pot.channels:
        for ch in pot.channels:
            v = np.zeros(dim)
            v[list(ch.positions)] = ch.zeta
            if ch.rate < 0:
                top = max(abs(c.rate) for c in pot.channels)
                if ch.rate < -GAMMA_CLAMP_RTOL * top:
                    raise ValueError(f"negative decay rate {ch.rate:g} in block ({ch.n_c}, {ch.l})")
                continue
            out.append((ch.rate, v))
        return out
    for key, pos in basis.double_blocks().items():
        blk = pot.Gamma[np.ix_(pos, pos)]
        w, vecs = np.linalg.eigh(blk)
        top = max(float(np.max(np.abs(w))), 0.0) if w.size else 0.0
        if w.size and w.min() < -GAMMA_CLAMP_RTOL * max(top, 1e-300):
            raise ValueError(f"Gamma block {key} has a negative eigenvalue {w.min():g}")
        for k in range(w.size):
            if w[k] > GAMMA_CLAMP_RTOL * top:
                v = np.zeros(dim)
                v[pos] = vecs[:, k]
                out.append((float(w[k]), v))
    return out


def build_liouvillian(
    basis: BasisIndex,
    coupling: CouplingMatrix,
    potential,
    pulses: PulseShape,
    rates: RateSet = RateSet(),
    stage: str = DRIVE,
    decay: str = SPECTRAL,
    leak: bool = True,
    include_doubles: bool = True,
) -> Generator:
    """Assemble the generator of the drive (or drive + photon mapping) stage.

    ``potential`` is an :class:`EffectivePotential` (fixed ``z_e``) or a
    :class:`PotentialTable` (``z_e`` following the drive amplitude). With
    ``include_doubles=False`` the doubly-excited sector is disconnected.
    """
    if stage not in (DRIVE, MAPPING):
        raise ValueError(f"unknown stage {stage!r}")
    if decay not in (SPECTRAL, DOUBLE_SUM):
        raise ValueError(f"unknown decay representation {decay!r}")
    labels = _extended_labels(basis, stage)
    gen = Generator(labels, pulses=pulses)
    d = gen.dim
    b = basis
    sl_s, sl_d = b.single_slice, b.double_slice
    singles = list(range(sl_s.start, sl_s.stop))
    doubles = list(range(sl_d.start, sl_d.stop))
    iC, ic = b.i_cont_double, b.i_cont_single

    # collective annihilation operator S
    S = sp.lil_matrix((d, d))
    S[b.i_ground, b.i_rydberg] = 1.0
    if include_doubles:
        coo = coupling.matrix.tocoo()
        for di, si, v in zip(coo.row, coo.col, coo.data):
            S[sl_s.start + si, sl_d.start + di] = v
    n_r = np.zeros(d)
    n_r[sl_s] = 1.0
    n_r[sl_d] = 2.0
    n_r[ic] = 1.0
    n_r[iC] = 2.0
    n_cav = np.zeros(d)
    if stage == MAPPING:
        i1, i2, ie, iE, ie1 = (gen.index(k) for k in ("1", "2", "e", "E", "e1"))
        i_se = [gen.index(("e", s)) for s in b.singles]
        i_s1 = [gen.index(("1", s)) for s in b.singles]
        S[i1, i_s1[0]] = 1.0
        S[ie, i_se[0]] = 1.0
        T = sp.lil_matrix((d, d))
        a = sp.lil_matrix((d, d))
        T[b.i_ground, ie] = 1.0
        T[i1, ie1] = 1.0
        T[ie, iE] = math.sqrt(2.0)
        a[b.i_ground, i1] = 1.0
        a[ie, ie1] = 1.0
        a[i1, i2] = math.sqrt(2.0)
        for k, s in enumerate(singles):
            T[s, i_se[k]] = 1.0
            a[s, i_s1[k]] = 1.0
        n_r[i_se] = 1.0
        n_r[i_s1] = 1.0
        n_cav[[i1, ie1] + i_s1] = 1.0
        n_cav[i2] = 2.0
        T, a = T.tocsr(), a.tocsr()
    S = S.tocsr()
    gen.n_ops = {"n_r": n_r, "n_cav": n_cav}

    # laser drive
    drive = _dense(S + S.T)
    omega = _memo(pulses.Omega)
    omega_m = _memo(pulses.Omega_m)
    gen.add_hamiltonian(0.5 * drive, omega)

    # interactions
    if include_doubles and b.doubles:
        if potential is None:
            raise ValueError("an effective potential is required when doubles are included")
        _add_interactions(gen, b, potential, omega, decay, doubles, iC)

    # pure Rydberg dephasing: 2 gamma_r L[n_r]
    if rates.gamma_r > 0:
        gen.dephasing = rates.gamma_r * (n_r[:, None] - n_r[None, :]) ** 2

    # thermal ladder on the singly-excited sector
    if rates.omega0 > 0 and len(singles) > 1:
        lad = thermal_ladder(len(singles) - 1, rates.omega0)
        h = np.zeros((d, d), dtype=complex)
        aT = lad.lowering
        h[np.ix_(singles, singles)] = rates.omega0 * (aT + aT.conj().T)
        gen.add_hamiltonian(h)
        vL = lad.vectors[-1]
        gen.add_transfer(ic, singles, np.outer(vL, vL.conj()), 2.0 * lad.gamma_T)

    if stage == MAPPING:
        ts = _dense(T.T @ S)
        gen.add_hamiltonian(0.5 * (ts + ts.conj().T), omega_m)
        gen.add_hamiltonian(rates.g * _dense(a.T @ T + T.T @ a))
        if rates.gamma > 0:
            gen.add_jump(T, 2.0 * rates.gamma)
        if rates.kappa > 0:
            gen.add_jump(a, 2.0 * rates.kappa)
        if leak and rates.gamma > 0:
            _add_leaks(gen, b, coupling, omega_m, rates, singles, doubles, i_se, i_s1, iC, ic, include_doubles)
    return gen


def _add_interactions(gen, b, potential, omega, decay, doubles, iC):
    d = gen.dim
    if isinstance(potential, EffectivePotential):
        samples = [(potential, _const)]
    elif isinstance(potential, PotentialTable):
        weights = _memo(lambda t: dict(potential.weights(omega(t))))
        samples = []
        for k, pot in enumerate(potential.potentials):

            def coef(t, k=k):
                return weights(t).get(k, 0.0)

            samples.append((pot, coef))
    else:
        raise TypeError("potential must be an EffectivePotential or a PotentialTable")
    for pot, coef in samples:
        lam = np.zeros((d, d))
        lam[np.ix_(doubles, doubles)] = pot.Lambda
        gen.add_hamiltonian(lam, coef)
        if decay == DOUBLE_SUM:
            w = np.linalg.eigvalsh(pot.Gamma) if pot.Gamma.size else np.zeros(1)
            if w.min() < -GAMMA_CLAMP_RTOL * max(abs(w).max(), 1e-300):
                raise ValueError(f"Gamma has a negative eigenvalue {w.min():g}")
            gen.add_transfer(iC, doubles, pot.Gamma, 2.0, coef)
        else:
            chans = _spectral_channels(pot, b)
            if chans:
                rates_, vecs = zip(*chans)
                gen.add_channels(iC, doubles, 2.0 * np.array(rates_), np.array(vecs), coef)


def _add_leaks(gen, b, coupling, omega_m, rates, singles, doubles, i_se, i_s1, iC, ic, include_doubles):
    """Decay of non-symmetric excitations addressed by the mapping beam."""
    d = gen.dim
    g_e = rates.gamma

    @_memo
    def leak_rate(t):
        return omega_m(t) ** 2 / (4.0 * g_e)

    iG, ie, i1 = b.i_ground, gen.index("e"), gen.index("1")
    for k in range(1, len(singles)):
        op = sp.lil_matrix((d, d))
        op[iG, singles[k]] = 1.0
        op[ie, i_se[k]] = 1.0
        op[i1, i_s1[k]] = 1.0
        gen.add_jump(op, 2.0, leak_rate)
    gen.add_transfer(iG, [ic], np.ones((1, 1)), 2.0, leak_rate)
    gen.add_transfer(ic, [iC], np.ones((1, 1)), 4.0, leak_rate)
    if b.doubles:
        s = coupling.matrix.toarray() if include_doubles else np.zeros((len(doubles), len(singles)))
        m = 2.0 * np.eye(len(doubles)) - s @ s.T
        gen.add_transfer(ic, doubles, m, 2.0, leak_rate)


# --------------------------------------------------------------------------
# integration and observables


@dataclass(frozen=True)
class Trajectory:
    """Density-matrix snapshots and observable series on a time grid (us)."""

    t: np.ndarray
    observables: dict
    rho: np.ndarray | None = None

    def column(self, name: str) -> np.ndarray:
        return self.t if name == "t_us" else self.observables[name]

    def invariants(self) -> dict:
        """Worst trace drift, anti-Hermitian part and negative eigenvalue."""
        if self.rho is None:
            raise ValueError("trajectory was integrated without keeping states")
        tr = np.abs(np.trace(self.rho, axis1=1, axis2=2) - 1.0).max()
        herm = np.abs(self.rho - np.conj(np.swapaxes(self.rho, 1, 2))).max()
        mins = min(np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min() for r in self.rho)
        return {"trace_drift": float(tr), "anti_hermitian": float(herm), "min_eig": float(mins)}

    def rows(self, columns=TRAJECTORY_COLUMNS):
        cols = [self.column(c) for c in columns]
        return [tuple(float(c[i]) for c in cols) for i in range(self.t.size)]


def observables(rho: np.ndarray, basis: BasisIndex, gen: Generator | None = None) -> dict:
    """Populations of ``G``, ``R``, ``Psi_000``, the sinks and the cavity photon number."""
    diag = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    p_g = diag[..., basis.i_ground]
    out = {
        "P_G": p_g,
        "P_R": diag[..., basis.i_rydberg],
        "P_Psi000": diag[..., basis.i_psi000] if basis.doubles else np.zeros_like(p_g),
        "P_exc_total": 1.0 - p_g,
        "P_C": diag[..., basis.i_cont_double],
        "P_c": diag[..., basis.i_cont_single],
        "P_doubles": diag[..., basis.double_slice].sum(axis=-1) + diag[..., basis.i_cont_double],
    }
    if gen is not None and np.any(gen.n_ops.get("n_cav", 0)):
        out["n_cav"] = diag @ gen.n_ops["n_cav"]
    else:
        out["n_cav"] = np.zeros_like(p_g)
    return out


def evolve(
    gen: Generator,
    rho0: np.ndarray,
    t_grid,
    basis: BasisIndex,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    keep_states: bool = True,
    max_step: float | None = None,
) -> Trajectory:
    """Integrate the master equation with an embedded 8(5,3) Runge-Kutta scheme."""
    t_grid = np.asarray(t_grid, dtype=float)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (gen.dim, gen.dim):
        raise ValueError(f"rho0 must be {gen.dim}x{gen.dim}")
    if abs(np.trace(rho0) - 1.0) > 1e-10 or np.abs(rho0 - rho0.conj().T).max() > 1e-12:
        raise ValueError("rho0 must be a unit-trace Hermitian matrix")
    if t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be increasing with at least two points")
    if max_step is None:
        # median rather than minimum: an inserted instant must not throttle the solver
        max_step = float(np.median(np.diff(t_grid)))
    sol = integrate.solve_ivp(
        gen.rhs,
        (t_grid[0], t_grid[-1]),
        rho0.ravel(),
        method="DOP853",
        t_eval=t_grid,
        rtol=rtol,
        atol=atol,
        max_step=max_step,
    )
    if sol.status != 0:
        t_fail = sol.t[-1] if sol.t.size else t_grid[0]
        raise IntegrationError(f"integration failed at t={t_fail:.6g} us: {sol.message}")
    rho = sol.y.T.reshape(-1, gen.dim, gen.dim)
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))
    obs = observables(rho, basis, gen)
    return Trajectory(t_grid, obs, rho if keep_states else None)


def ground_state(gen: Generator) -> np.ndarray:
    rho = np.zeros((gen.dim, gen.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def photon_emission_number(traj: Trajectory, kappa0: float, eta_mm: float = 1.0) -> float:
    """``eta_mm * 2 kappa0 * int n_cav dt`` by the trapezoid rule."""
    return float(eta_mm * 2.0 * kappa0 * integrate.trapezoid(traj.observables["n_cav"], traj.t))


def not_g(traj: Trajectory, correction: float = 1.0) -> np.ndarray:
    """not(G) probability, optionally scaled by a decay-correction factor."""
    return correction * traj.observables["P_exc_total"]


def eit_count_distributions(phi_G: float, phi_r: float, tau_r: float, t_i: float, n_max_counts: int):
    """Photon-count distributions ``(P_G(n), P_R(n))`` for ``n = 0..n_max_counts``.

    ``P_R`` accounts for the Rydberg excitation decaying at a random time
    during the integration window, after which the flux returns to ``phi_G``.
    """
    if phi_G < 0 or phi_r < 0:
        raise ValueError("photon fluxes must be non-negative")
    if t_i <= 0 or tau_r < 0:
        raise ValueError("t_i must be positive and tau_r non-negative")
    n = np.arange(n_max_counts + 1)
    p_g = poisson.pmf(n, t_i * phi_G)
    if tau_r == 0:
        return p_g, p_g.copy()
    if math.isinf(tau_r):
        return p_g, poisson.pmf(n, t_i * phi_r)
    p_r = poisson.pmf(n, t_i * phi_r) * math.exp(-t_i / tau_r)
    for k in n:
        val, _ = integrate.quad(
            lambda t: poisson.pmf(k, t * phi_r + (t_i - t) * phi_G) * math.exp(-t / tau_r) / tau_r,
            0.0,
            t_i,
            epsabs=1e-13,
            epsrel=1e-11,
            limit=200,
        )
        p_r[k] += val
    return p_g, p_r
