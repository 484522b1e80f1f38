import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from superatom.basis import ELLIPTIC, SPHERICAL, enumerate_basis
from superatom.interactions import (
    X_FLOAT_MAX,
    Z0_SPHERICAL,
    CloudGeometry,
    c6_from_blockade,
    dos,
    effective_potential,
    q_table,
    radial_function,
    resolvent_block_elliptic,
    resolvent_block_spherical,
    resolvent_blocks,
    t_table,
    z_peak,
)

from oracles import q_direct, t_direct, zg_spherical_direct

z0 = Z0_SPHERICAL

# Reference values from the direct radial quadratures in oracles.py.
T_REF = [
    (0.7, 0, 0, 0, 0.14272785214557945 - 1.0309695885690493j),
    (0.7, 1, 2, 0, -0.7417525557649082 - 0.30516699821643883j),
    (0.7, 2, 2, 2, 33.82353655000297 - 49.91311835215906j),
    (2.5, 0, 0, 0, -1.4073035110881156 - 1.1502142407124716j),
    (2.5, 2, 2, 2, 14.363588263924802 - 1.7972097511132494j),
    (2.9 - 0.4j, 1, 2, 0, -1.239705139286749 - 0.9129703577637527j),
    (2.9 - 0.4j, 2, 2, 2, 22.35314166238906 - 50.33800194482907j),
    (4.5, 0, 0, 0, -1.6155057375054929 - 0.375922685144737j),
    (4.5, 1, 2, 0, -3.1151120906126417 + 0.8458260415756578j),
    (4.5, 2, 2, 2, -39.77082148584605 - 154.1517960771637j),
    (9.0, 0, 0, 0, -1.2532713059402951 - 0.011811861854618265j),
    (9.0, 2, 2, 2, 120.31632028503081 - 237.33647848621004j),
]

Q_REF = [
    (0.7, 0, 0, 0, -0.21236350269784365 - 0.34365652952301645j),
    (0.7, 1, 1, 2, 1.9010645438167837 - 5.280763695262479j),
    (4.5, 0, 0, 0, -1.0834558396953187 - 0.1253075617149123j),
    (4.5, 1, 1, 2, -3.0612112348931513 - 10.149912498907897j),
]

ZG_REF = [
    (1, 0, 0, 0, -0.08345583969531845 - 0.1253075617149123j),
    (1, 1, 3, 0, -0.06205633567221051 + 0.5707048555865415j),
    (1, 2, 1, 1, -0.19262002186502372 - 0.28999749996879703j),
    (1, 3, 3, 1, 0.632940138342793 - 0.026363409088072418j),
    (10, 0, 0, 0, 0.1654561156304527 - 0.44175864784471347j),
    (10, 1, 3, 0, -0.17112497039101057 - 0.11982540525307624j),
    (10, 3, 3, 1, 0.9052480002407916 - 0.030893666470245613j),
    (100, 0, 0, 0, 0.6471668958537277 - 0.4278148486850603j),
    (100, 2, 1, 1, -0.04014565182283677 - 0.2058213771668208j),
    (100, 3, 3, 1, 0.8491491367181226 - 0.1763597875042115j),
]

# beta = 0.5 zG elements at z0 from Sobol angular sampling (2^18 points)
ELL_REF = [
    (0, (0, 0), (0, 0), -0.06859117790321712 - 0.07383408018471321j),
    (0, (0, 0), (0, 1), -0.002649960813450243 + 0.08809774448223569j),
    (1, (0, 1), (0, 1), -0.10587013783772603 - 0.44891041203208176j),
    (2, (1, 1), (0, 1), -0.5311101247639813 + 0.42958709486193924j),
]


@pytest.mark.parametrize("x,j,jp,L,ref", T_REF)
def test_t_table_frozen(x, j, jp, L, ref):
    val = t_table(x, 2, L)[j, jp]
    assert abs(val - ref) <= 1e-9 * max(1.0, abs(ref))


@pytest.mark.parametrize("x,j,jp,L,ref", Q_REF)
def test_q_table_frozen(x, j, jp, L, ref):
    assert abs(q_table(x, 1, L)[j, jp] - ref) <= 1e-9 * max(1.0, abs(ref))


def test_t_table_symmetric_and_vectorised():
    xs = np.array([0.5, 2.0, 5.0])
    t = t_table(xs, 3, 1)
    assert t.shape == (3, 4, 4)
    assert np.allclose(t, np.swapaxes(t, -1, -2), rtol=1e-12)
    for k, x in enumerate(xs):
        assert np.allclose(t[k], t_table(x, 3, 1), rtol=1e-14)


def test_t_table_continuous_across_precision_switch():
    lo = t_table(X_FLOAT_MAX * (1 - 1e-9), 4, 2)
    hi = t_table(X_FLOAT_MAX * (1 + 1e-9), 4, 2)
    assert np.abs(lo - hi).max() <= 1e-7 * np.abs(lo).max()


def test_t_table_live_oracle_lower_half_plane():
    x = 1.3 - 0.8j
    assert abs(t_table(x, 1, 0)[1, 1] - t_direct(x, 1, 1, 0)) < 1e-9


def test_q_requires_positive():
    with pytest.raises(ValueError):
        q_table(-1.0, 1, 0)


@pytest.mark.parametrize("zf,a,b,l,ref", ZG_REF)
def test_spherical_resolvent_frozen(zf, a, b, l, ref):
    z = zf * z0
    g = resolvent_block_spherical(z, l, 3) * z
    assert abs(g[a, b] - ref) <= 1e-6 * abs(ref)


@pytest.mark.parametrize("l", [0, 1])
def test_spherical_resolvent_live(l):
    z = 3.0 * z0
    g = resolvent_block_spherical(z, l, 1) * z
    for a in range(2):
        for b in range(2):
            ref = zg_spherical_direct(z, a, b, l)
            assert abs(g[a, b] - ref) <= 1e-6 * abs(ref)


@pytest.mark.parametrize("m,a,b,ref", ELL_REF)
def test_elliptic_resolvent_frozen(m, a, b, ref):
    g = resolvent_block_elliptic(z0, 0.5, m, [a, b] if a != b else [a]) * z0
    val = g[0, -1]
    assert abs(val - ref) <= 1e-3 * max(abs(ref), 0.1)


def test_elliptic_reduces_to_spherical():
    idx = [(0, 0), (1, 0), (0, 1), (1, 1)]
    g = resolvent_block_elliptic(2 * z0, 0.0, 0, idx)
    s0 = resolvent_block_spherical(2 * z0, 0, 1)
    s1 = resolvent_block_spherical(2 * z0, 1, 1)
    assert np.allclose(g[:2, :2], s0, atol=1e-10 / z0)
    assert np.allclose(g[2:, 2:], s1, atol=1e-10 / z0)
    assert np.abs(g[:2, 2:]).max() < 1e-8 / z0


def test_resolvent_rejects_bad_energy():
    with pytest.raises(ValueError):
        resolvent_block_spherical(0.0, 0, 1)
    with pytest.raises(ValueError):
        resolvent_block_elliptic(z0, 1.0, 0, [(0, 0)])


def _geo():
    return CloudGeometry(5.0, 5.0, 2 * math.pi * 1.5e8)


@pytest.mark.parametrize("n_max", [2, 4, 6])
def test_effective_potential_structure(n_max):
    b = enumerate_basis(n_max, SPHERICAL)
    ve = effective_potential(b, _geo(), z0, with_channels=True)
    assert np.allclose(ve.Lambda, ve.Lambda.T, atol=1e-12 * np.abs(ve.Lambda).max())
    assert np.allclose(ve.Gamma, ve.Gamma.T, atol=1e-12 * np.abs(ve.Gamma).max())
    w = np.linalg.eigvalsh(ve.Gamma)
    assert w.min() >= -1e-10 * w.max()
    for ch in ve.channels:
        ix = np.ix_(ch.positions, ch.positions)
        blk = ve.Gamma[ix]
        ev = np.linalg.eigvalsh(blk)
        if ev.size > 1:
            assert abs(ev[-2]) < 1e-8 * ev[-1]
        rec = ch.rate * np.outer(ch.zeta, ch.zeta)
        assert np.abs(rec - blk).max() <= 1e-8 * max(1.0, np.abs(blk).max())
        assert ch.rate > 0 and np.linalg.norm(ch.zeta) == pytest.approx(1.0)


def test_effective_potential_block_diagonal():
    b = enumerate_basis(3, SPHERICAL)
    ve = effective_potential(b, _geo(), 5 * z0)
    keys = {p: k for k, pos in b.double_blocks().items() for p in pos}
    v = np.abs(ve.V_e)
    for p in range(len(b.doubles)):
        for q in range(len(b.doubles)):
            if keys[p] != keys[q]:
                assert v[p, q] == 0.0


def test_effective_potential_elliptic_psd():
    b = enumerate_basis(2, ELLIPTIC)
    ve = effective_potential(b, CloudGeometry(5.0, 3.5, 2 * math.pi * 1.5e8), 2 * z0)
    w = np.linalg.eigvalsh(ve.Gamma)
    assert w.min() >= -1e-10 * w.max()
    assert np.allclose(ve.Lambda, ve.Lambda.T)


def test_attractive_interaction_flips_shift():
    b = enumerate_basis(2, SPHERICAL)
    rep = effective_potential(b, _geo(), z0)
    geo = _geo()
    att = effective_potential(b, CloudGeometry(geo.sigma, geo.sigma_z, -geo.C6), z0)
    assert np.allclose(att.Lambda, -rep.Lambda)
    assert np.allclose(att.Gamma, rep.Gamma)


def test_resolvent_blocks_cover_doubles():
    b = enumerate_basis(4, SPHERICAL)
    blocks = resolvent_blocks(b, z0)
    covered = sorted(p for pos, _ in blocks.values() for p in pos)
    assert covered == list(range(len(b.doubles)))


def test_radial_function_normalised():
    for n, l in [(0, 0), (2, 0), (1, 2), (3, 4)]:
        val, _ = integrate.quad(lambda r: (r * radial_function(n, l, r)) ** 2, 0, 40)
        assert val == pytest.approx(1.0, abs=1e-10)


def test_geometry_blockade_scale():
    geo = CloudGeometry(5.0, 5.0, c6_from_blockade(2.0, 5.0))
    assert geo.omega_blockade == pytest.approx(2.0)
    assert geo.beta == 0.0
    assert geo.z_drive(2 * geo.V0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        CloudGeometry(0.0, 1.0, 1.0)


def test_dos_peak_values():
    assert z_peak(0.0) == pytest.approx((3 * math.sqrt(2)) ** -6, rel=1e-8)
    assert z_peak(0.9999) == pytest.approx(4.0**-6, rel=1e-2)


@pytest.mark.parametrize("beta", [0.0, 0.5, -0.5, 0.9])
def test_dos_normalised(beta):
    # substitute z = y^-6 to spread the mass
    val, _ = integrate.quad(lambda y: dos(y**-6, beta) * 6 * y**-7, 1e-3, 80, limit=400)
    assert val == pytest.approx(1.0, abs=1e-8)


@given(st.floats(-0.9, 0.95))
def test_dos_peak_is_maximum(beta):
    zp = z_peak(beta)
    assert dos(zp, beta) >= dos(zp * 1.05, beta)
    assert dos(zp, beta) >= dos(zp / 1.05, beta)


def test_dos_continuous_in_beta():
    z = np.geomspace(1e-6, 1e-2, 9)
    assert np.allclose(dos(z, 1e-7), dos(z, 0.0), rtol=1e-5)
    assert np.allclose(dos(z, -1e-7), dos(z, 0.0), rtol=1e-5)
