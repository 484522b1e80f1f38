"""Resolvent of the van-der-Waals interaction and the effective potential.

The interaction is folded into a non-Hermitian potential ``V_e = Lambda - i Gamma``
acting on the retained doubly-excited states. All energies ``z`` are
dimensionless (units of ``V0 = C6 / sigma**6``); returned matrices are in
rad/us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy.optimize import brentq
from scipy.special import erf, erfi, eval_genlaguerre

from .basis import SPHERICAL, BasisIndex, norm_N
from .specfun import double_factorial, faddeeva, gen_binomial, legendre_p, quad01, wigner3j

Z0_SPHERICAL = (3.0 * math.sqrt(2.0)) ** -6
GAMMA_CLAMP_RTOL = 1e-10
_ROT = np.exp(-2j * np.pi / 3)


class SingularBlockError(np.linalg.LinAlgError):
    """The resolvent block cannot be inverted at the requested energy."""


@dataclass(frozen=True)
class CloudGeometry:
    """Gaussian cloud: rms radii in um and van-der-Waals C6 in rad/us um^6."""

    sigma: float
    sigma_z: float
    C6: float

    def __post_init__(self):
        if self.sigma <= 0 or self.sigma_z <= 0:
            raise ValueError("cloud radii must be positive")

    @property
    def beta(self) -> float:
        return 1.0 - self.sigma_z**2 / self.sigma**2

    @property
    def V0(self) -> float:
        return self.C6 / self.sigma**6

    @property
    def blockade_radius(self) -> float:
        return 3.0 * math.sqrt(2.0) * self.sigma

    @property
    def omega_blockade(self) -> float:
        """``Omega_B = 2 C6 / R_e**6`` in rad/us."""
        return 2.0 * self.C6 / self.blockade_radius**6

    def z_drive(self, omega: float) -> float:
        """Power-broadened energy ``z_Omega = Omega / (2 V0)``."""
        return abs(omega) / (2.0 * abs(self.V0))


def c6_from_blockade(omega_b: float, sigma: float) -> float:
    """Invert ``Omega_B = 2 C6 / (3 sqrt2 sigma)**6``."""
    return 0.5 * omega_b * (3.0 * math.sqrt(2.0) * sigma) ** 6


# --------------------------------------------------------------------------
# T and Q functions


# The forward recursions lose about 2 j log10|x| digits; beyond this modulus
# the table is rebuilt in extended precision.
X_FLOAT_MAX = 3.0


def t00_table(x, l_max: int) -> np.ndarray:
    """``T_{0,0,l}(x)`` for ``l = 0..l_max``; trailing axis indexes l."""
    x = np.asarray(x, dtype=complex)
    sx = np.sqrt(x)
    out = np.empty(x.shape + (l_max + 1,), dtype=complex)
    out[..., 0] = 2.0 * x * (1.0 - 1j * np.sqrt(np.pi) * sx * faddeeva(-sx))
    for l in range(l_max):
        out[..., l + 1] = 2.0 * x * (out[..., l] + double_factorial(2 * l + 1))
    return out


def _t_recursion(t, x, j_max, l, inv_norm2):
    for jp in range(j_max + 1):
        if jp > 0:
            t[0][jp] = t[jp][0]
        for j in range(j_max):
            prev = t[j - 1][jp] if j > 0 else 0.0
            val = (2 * j + l + 1.5 - x) * t[j][jp] - (j + l + 0.5) * prev
            if j == jp:
                val = val - x * inv_norm2[j]
            t[j + 1][jp] = val / (j + 1)
    return t


@lru_cache(maxsize=65536)
def _t_table_mp(x: complex, j_max: int, l: int) -> np.ndarray:
    dps = 25 + int(math.ceil(2.0 * (j_max + l / 4.0 + 2) * math.log10(max(abs(x), 1.0))))
    with mpmath.workdps(dps):
        xm = mpmath.mpc(x.real, x.imag)
        sx = mpmath.sqrt(xm)
        # w(-s) = exp(-s^2) erfc(i s)
        w = mpmath.exp(-xm) * mpmath.erfc(1j * sx)
        t00 = 2 * xm * (1 - 1j * mpmath.sqrt(mpmath.pi * xm) * w)
        for k in range(l):
            t00 = 2 * xm * (t00 + mpmath.fac2(2 * k + 1))
        inv_norm2 = [mpmath.fac2(2 * j + 2 * l + 1) / (2**j * mpmath.factorial(j)) for j in range(j_max + 1)]
        t = [[mpmath.mpc(0)] * (j_max + 1) for _ in range(j_max + 1)]
        t[0][0] = t00
        half, three_half = mpmath.mpf(1) / 2, mpmath.mpf(3) / 2
        for jp in range(j_max + 1):
            if jp > 0:
                t[0][jp] = t[jp][0]
            for j in range(j_max):
                prev = t[j - 1][jp] if j > 0 else 0
                val = (2 * j + l + three_half - xm) * t[j][jp] - (j + l + half) * prev
                if j == jp:
                    val -= xm * inv_norm2[j]
                t[j + 1][jp] = val / (j + 1)
        out = np.array([[complex(v) for v in row] for row in t])
    out.setflags(write=False)
    return out


def t_table(x, j_max: int, l: int) -> np.ndarray:
    """Matrix ``T_{j,j',l}(x)`` for ``0 <= j, j' <= j_max``.

    ``x`` may be an array; the two trailing axes of the result are
    ``(j, j')``. Real ``x`` is understood as the limit ``Im(x) -> 0-``.
    """
    x = np.asarray(x, dtype=complex)
    big = np.abs(x) > X_FLOAT_MAX
    t = np.zeros(x.shape + (j_max + 1, j_max + 1), dtype=complex)
    small = ~big
    if np.any(small):
        xs = x[small]
        ts = np.zeros(xs.shape + (j_max + 1, j_max + 1), dtype=complex)
        ts[..., 0, 0] = t00_table(xs, l)[..., l]
        inv_norm2 = [1.0 / norm_N(j, l) ** 2 for j in range(j_max + 1)]
        rows = [[ts[..., j, k] for k in range(j_max + 1)] for j in range(j_max + 1)]
        rows = _t_recursion(rows, xs, j_max, l, inv_norm2)
        for j in range(j_max + 1):
            for k in range(j_max + 1):
                ts[..., j, k] = rows[j][k]
        t[small] = ts
    if np.any(big):
        t[big] = np.stack([_t_table_mp(complex(v), j_max, l) for v in x[big]])
    return t


def q_table(x, j_max: int, l: int) -> np.ndarray:
    """``Q_{j,j',l}(x)`` for real ``x > 0`` (or an array of them)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("q_table requires x > 0")
    return t_table(x, j_max, l) / 3.0 + (2.0 / 3.0) * t_table(x * _ROT, j_max, l).real


def q_function(x: float, j: int, jp: int, l: int) -> complex:
    return complex(q_table(x, max(j, jp), l)[j, jp])


# --------------------------------------------------------------------------
# resolvent blocks


def resolvent_block_spherical(z: float, l: int, n_d_max: int) -> np.ndarray:
    """``<Psi_{n_c,n_d',l}| G(z) |Psi_{n_c,n_d,l}>`` for ``n_d, n_d' <= n_d_max``."""
    if z <= 0:
        raise ValueError("z must be positive")
    x = z ** (-1.0 / 3.0) / 4.0
    nn = np.array([norm_N(n, 2 * l) for n in range(n_d_max + 1)])
    zg = np.eye(n_d_max + 1) + np.outer(nn, nn) * q_table(x, n_d_max, 2 * l)
    return zg / z


@lru_cache(maxsize=256)
def _angular_coefficients(l: int, lp: int, m: int) -> tuple:
    """``(l'', weight)`` pairs of the Legendre expansion of ``Y*_{2l'} Y_{2l}``."""
    out = []
    for lpp in range(abs(l - lp), l + lp + 1):
        w = (
            (4 * lpp + 1)
            * wigner3j(2 * l, 2 * lp, 2 * lpp, -m, m, 0)
            * wigner3j(2 * l, 2 * lp, 2 * lpp, 0, 0, 0)
        )
        if w != 0.0:
            out.append((lpp, w))
    return tuple(out)


def _u_integrals(z: float, beta: float, j_max: int, big_l: int, lpp_max: int, tol: float) -> np.ndarray:
    """``int_0^1 du P_{2l''}(u) Q_{j,j',L}(x(u))`` as an array ``[l'', j, j']``."""
    x0 = z ** (-1.0 / 3.0) / 4.0

    def integrand(u):
        q = q_table(x0 / (1.0 - beta * u**2), j_max, big_l)
        p = np.stack([legendre_p(2 * k, u) for k in range(lpp_max + 1)], axis=1)
        return p[:, :, None, None] * q[:, None, :, :]

    return quad01(integrand, tol=tol)


def resolvent_block_elliptic(z: float, beta: float, m: int, index_set, tol: float = 1e-11) -> np.ndarray:
    """Resolvent block over relative-coordinate labels ``index_set = [(n_d, l_d), ...]``.

    The block is shared by every ``(n_c, l_c)`` with the same ``m``.
    """
    if z <= 0:
        raise ValueError("z must be positive")
    if beta >= 1:
        raise ValueError("beta must be < 1")
    index_set = [tuple(k) for k in index_set]
    j_max = max(n for n, _ in index_set)
    l_max = max(l for _, l in index_set)
    ints = {}
    for big_l in range(2 * l_max + 1):
        ints[big_l] = _u_integrals(z, beta, j_max, big_l, big_l, tol)
    dim = len(index_set)
    zg = np.eye(dim, dtype=complex)
    sign_m = -1.0 if m % 2 else 1.0
    for a, (n, l) in enumerate(index_set):
        for b, (n_p, l_p) in enumerate(index_set):
            if b < a:
                continue
            coeffs = _angular_coefficients(l, l_p, m)
            if not coeffs:
                continue
            big_l = l + l_p
            bj = np.array([gen_binomial(l - l_p + n - j - 1, n - j) for j in range(n + 1)])
            bjp = np.array([gen_binomial(l_p - l + n_p - j - 1, n_p - j) for j in range(n_p + 1)])
            acc = 0.0
            for lpp, w in coeffs:
                blk = ints[big_l][lpp, : n + 1, : n_p + 1]
                acc += w * (bj @ blk @ bjp)
            val = sign_m * norm_N(n, 2 * l) * norm_N(n_p, 2 * l_p) * math.sqrt((4 * l + 1) * (4 * l_p + 1)) * acc
            zg[a, b] += val
            if b != a:
                zg[b, a] += val
    return zg / z


def resolvent_blocks(basis: BasisIndex, z: float, beta: float = 0.0) -> dict:
    """Resolvent block for every conserved-label block of ``basis``.

    Returns ``{key: (positions, G)}`` where positions index ``basis.doubles``.
    """
    out = {}
    cache = {}
    for key, pos in basis.double_blocks().items():
        if basis.symmetry == SPHERICAL:
            nds = [basis.doubles[p].n_d for p in pos]
            g = resolvent_block_spherical(z, key[1], max(nds))
            g = g[np.ix_(nds, nds)]
        else:
            labels = tuple((basis.doubles[p].n_d, basis.doubles[p].l_d) for p in pos)
            ck = (key[2], labels)
            if ck not in cache:
                cache[ck] = resolvent_block_elliptic(z, beta, key[2], labels)
            g = cache[ck]
        out[key] = (pos, g)
    return out


# --------------------------------------------------------------------------
# effective potential


@dataclass(frozen=True)
class DecayChannel:
    """Rank-one decay ``rate |zeta><zeta|`` of one spherical ``(n_c, l)`` block."""

    n_c: int
    l: int
    rate: float
    zeta: np.ndarray
    positions: tuple


@dataclass(frozen=True)
class EffectivePotential:
    """``V_e = Lambda - i Gamma`` on the doubly-excited states (rad/us)."""

    Lambda: np.ndarray
    Gamma: np.ndarray
    z_e: float
    channels: tuple = field(default=())

    @property
    def V_e(self) -> np.ndarray:
        return self.Lambda - 1j * self.Gamma


def _clamp_psd(gamma: np.ndarray, key) -> np.ndarray:
    w, v = np.linalg.eigh(gamma)
    top = max(float(np.max(np.abs(w))), 0.0)
    if w.min() >= 0:
        return gamma
    if w.min() < -GAMMA_CLAMP_RTOL * top:
        # left for the master-equation builder to reject
        return gamma
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.T


def effective_potential(
    basis: BasisIndex,
    geometry: CloudGeometry,
    z_e: float,
    with_channels: bool = False,
) -> EffectivePotential:
    """Block-wise ``V0 [z_e - G(z_e)^-1]`` over the doubly-excited states.

    A negative ``C6`` is handled by evaluating at ``|V0|`` and flipping the
    sign of ``Lambda`` (experimental).
    """
    if not basis.doubles:
        raise ValueError("basis has no doubly-excited states")
    if z_e <= 0:
        raise ValueError("z_e must be positive")
    v0 = abs(geometry.V0)
    flip = -1.0 if geometry.V0 < 0 else 1.0
    beta = 0.0 if basis.symmetry == SPHERICAL else geometry.beta
    dim = len(basis.doubles)
    lam = np.zeros((dim, dim))
    gam = np.zeros((dim, dim))
    for key, (pos, g) in resolvent_blocks(basis, z_e, beta).items():
        try:
            ginv = np.linalg.inv(g)
        except np.linalg.LinAlgError as exc:
            raise SingularBlockError(f"resolvent block {key} singular at z={z_e:g}") from exc
        if not np.all(np.isfinite(ginv)) or np.linalg.cond(g) > 1e14:
            raise SingularBlockError(f"resolvent block {key} singular at z={z_e:g}")
        ve = v0 * (z_e * np.eye(len(pos)) - ginv)
        ve = 0.5 * (ve + ve.T)
        ix = np.ix_(pos, pos)
        lam[ix] = flip * ve.real
        gam[ix] = _clamp_psd(-ve.imag, key)
    channels = ()
    if with_channels:
        channels = spherical_decay_channels(basis, geometry, z_e)
    return EffectivePotential(lam, gam, z_e, channels)


def radial_function(n: int, l: int, r):
    """Normalised radial oscillator function ``R_{n,l}(r)``."""
    r = np.asarray(r, dtype=float)
    return (
        (2.0 / np.pi) ** 0.25
        * norm_N(n, l)
        * r**l
        * np.exp(-(r**2) / 4.0)
        * eval_genlaguerre(n, l + 0.5, r**2 / 2.0)
    )


def spherical_decay_channels(basis: BasisIndex, geometry: CloudGeometry, z_e: float) -> tuple:
    """Rank-one decay channel of each ``(n_c, l)`` block of a spherical basis."""
    if basis.symmetry != SPHERICAL:
        raise ValueError("decay channels are defined for a spherical cloud")
    v0 = abs(geometry.V0)
    r_c = 1.0 / (math.sqrt(2.0) * z_e ** (1.0 / 6.0))
    out = []
    for key, (pos, g) in resolvent_blocks(basis, z_e).items():
        n_c, l = key
        nds = [basis.doubles[p].n_d for p in pos]
        rad = np.array([float(radial_function(nd, 2 * l, r_c)) for nd in nds])
        norm2 = float(rad @ rad)
        alpha = -4.0 * math.pi * r_c**9 / 3.0 * norm2
        chi = rad / math.sqrt(norm2)
        g_r = g.real
        try:
            v = np.linalg.solve(g_r, chi)
        except np.linalg.LinAlgError as exc:
            raise SingularBlockError(f"real resolvent block {key} singular at z={z_e:g}") from exc
        if np.linalg.cond(g_r) > 1e14:
            raise SingularBlockError(f"real resolvent block {key} singular at z={z_e:g}")
        c1 = float(chi @ v)
        c2 = float(v @ v)
        rate = -v0 * alpha * c2 / (1.0 + alpha**2 * c1**2)
        zeta = v / math.sqrt(c2)
        if zeta[np.argmax(np.abs(zeta))] < 0:
            zeta = -zeta
        out.append(DecayChannel(n_c, l, rate, zeta, tuple(pos)))
    return tuple(out)


# --------------------------------------------------------------------------
# density of pair-interaction energies


def dos(z, beta: float = 0.0):
    """Density ``p(z)`` of dimensionless pair-interaction energies."""
    z = np.asarray(z, dtype=float)
    if beta >= 1:
        raise ValueError("beta must be < 1")
    pre = np.exp(-1.0 / (4.0 * np.cbrt(z)))
    if beta == 0.0:
        out = pre / (12.0 * math.sqrt(math.pi) * z**1.5)
    elif beta > 0:
        c = math.sqrt(beta / (1.0 - beta))
        out = pre / (12.0 * math.sqrt(beta) * z ** (4.0 / 3.0)) * erf(c / (2.0 * z ** (1.0 / 6.0)))
    else:
        c = math.sqrt(-beta / (1.0 - beta))
        out = pre / (12.0 * math.sqrt(-beta) * z ** (4.0 / 3.0)) * erfi(c / (2.0 * z ** (1.0 / 6.0)))
    return out if out.ndim else float(out)


def _dlogp_dy(y: float, beta: float) -> float:
    # y = z^(-1/6)
    if beta == 0.0:
        return -y / 2.0 + 9.0 / y
    if beta > 0:
        c = math.sqrt(beta / (1.0 - beta))
        a = c * y / 2.0
        return -y / 2.0 + 8.0 / y + (c / math.sqrt(math.pi)) * math.exp(-a * a) / math.erf(a)
    c = math.sqrt(-beta / (1.0 - beta))
    a = c * y / 2.0
    return -y / 2.0 + 8.0 / y + (c / math.sqrt(math.pi)) * math.exp(a * a) / float(erfi(a))


def z_peak(beta: float = 0.0, rtol: float = 1e-8) -> float:
    """Energy maximising :func:`dos`, located on ``y = z^(-1/6)`` in [1, 20]."""
    y = brentq(_dlogp_dy, 1.0, 20.0, args=(beta,), xtol=1e-14, rtol=rtol * 1e-3)
    return y**-6.0
