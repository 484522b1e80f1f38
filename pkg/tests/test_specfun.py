import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import eval_legendre
from sympy.physics.wigner import wigner_3j

from superatom.specfun import (
    QuadratureError,
    double_factorial,
    faddeeva,
    gen_binomial,
    legendre_p,
    log_double_factorial,
    quad01,
    wigner3j,
)


def _w_mp(z):
    z = mpmath.mpc(z)
    return complex(mpmath.exp(-z * z) * mpmath.erfc(-1j * z))


@pytest.mark.parametrize("z", [0.3 + 0.2j, 2.0 - 0.5j, -1.5 + 0.01j, 5.0 + 4.0j, 0.5 - 3.0j, 1e-3 + 0j])
def test_faddeeva_matches_mpmath(z):
    assert abs(faddeeva(z) - _w_mp(z)) <= 1e-13 * max(1.0, abs(_w_mp(z)))


def test_faddeeva_at_origin_and_array():
    assert faddeeva(0.0) == pytest.approx(1.0)
    out = faddeeva(np.array([0.0, 1.0j]))
    assert out.shape == (2,)
    assert out[1] == pytest.approx(math.exp(1) * math.erfc(1))


def test_faddeeva_overflow_raises():
    with pytest.raises(OverflowError):
        faddeeva(0.1 - 40j)
    with pytest.raises(ValueError):
        faddeeva(complex("nan"))


@pytest.mark.parametrize(
    "args,expected",
    [
        ((1, 1, 0, 0, 0, 0), -1 / math.sqrt(3)),
        ((1, 1, 2, 0, 0, 0), math.sqrt(2 / 15)),
        ((2, 2, 2, 0, 0, 0), -math.sqrt(2 / 35)),
        ((1, 1, 1, 1, -1, 0), 1 / math.sqrt(6)),
    ],
)
def test_wigner3j_values(args, expected):
    assert wigner3j(*args) == pytest.approx(expected, abs=1e-14)


def test_wigner3j_selection_rules():
    assert wigner3j(1, 1, 3, 0, 0, 0) == 0.0
    assert wigner3j(1, 1, 1, 1, 1, -1) == 0.0
    assert wigner3j(2, 1, 1, 3, -3, 0) == 0.0


small = st.integers(min_value=0, max_value=8)


@given(small, small, small, st.integers(-8, 8), st.integers(-8, 8))
def test_wigner3j_matches_sympy(l1, l2, l3, m1, m2):
    m3 = -m1 - m2
    ref = float(wigner_3j(l1, l2, l3, m1, m2, m3)) if abs(m1) <= l1 and abs(m2) <= l2 and abs(m3) <= l3 else 0.0
    assert wigner3j(l1, l2, l3, m1, m2, m3) == pytest.approx(ref, abs=1e-13)


@given(small, small, st.integers(-8, 8))
def test_wigner3j_orthogonality(l1, l2, m1):
    # sum over l3 of (2 l3 + 1) (3j)^2 = 1 for allowed m1, m2 = -m1
    if abs(m1) > min(l1, l2):
        return
    total = sum((2 * l3 + 1) * wigner3j(l1, l2, l3, m1, -m1, 0) ** 2 for l3 in range(abs(l1 - l2), l1 + l2 + 1))
    assert total == pytest.approx(1.0, abs=1e-12)


@given(small, small, small, st.integers(-8, 8), st.integers(-8, 8))
def test_wigner3j_odd_permutation_sign(l1, l2, l3, m1, m2):
    m3 = -m1 - m2
    s = -1 if (l1 + l2 + l3) % 2 else 1
    assert wigner3j(l2, l1, l3, m2, m1, m3) == pytest.approx(s * wigner3j(l1, l2, l3, m1, m2, m3), abs=1e-13)


@pytest.mark.parametrize("l", range(0, 13))
def test_legendre_matches_scipy(l):
    u = np.linspace(-1, 1, 41)
    assert np.allclose(legendre_p(l, u), eval_legendre(l, u), atol=1e-13)
    assert isinstance(legendre_p(l, 0.3), float)


def test_double_factorial():
    assert [double_factorial(k) for k in (-1, 0, 1, 2, 5, 6, 7)] == [1, 1, 1, 2, 15, 48, 105]
    assert math.exp(log_double_factorial(41)) == pytest.approx(double_factorial(41), rel=1e-12)
    # large argument stays finite through the log
    assert math.isfinite(log_double_factorial(500))
    with pytest.raises(ValueError):
        double_factorial(-3)


@given(st.floats(-5, 5), st.integers(0, 12))
def test_gen_binomial_matches_scipy(alpha, k):
    assert gen_binomial(alpha, k) == pytest.approx(float(mpmath.binomial(alpha, k)), rel=1e-10, abs=1e-12)


def test_quad01_exact_for_polynomials():
    assert quad01(lambda u: u**5) == pytest.approx(1 / 6, abs=1e-14)
    assert quad01(lambda u: u) == pytest.approx(0.5, abs=1e-15)
    assert quad01(np.exp) == pytest.approx(math.e - 1, abs=1e-14)
    # (3u^2 - 1)/2 integrates to zero over [0, 1] as well as over [-1, 1]
    assert quad01(lambda u: legendre_p(2, u)) == pytest.approx(0.0, abs=1e-14)
    assert quad01(lambda u: legendre_p(2, 2 * u - 1)) == pytest.approx(0.0, abs=1e-14)
    assert legendre_p(2, 0.5) == pytest.approx(-0.125)


def test_quad01_vector_valued():
    out = quad01(lambda u: np.stack([np.sin(u), np.exp(u)], axis=1))
    assert np.allclose(out, [1 - math.cos(1), math.e - 1], atol=1e-13)


def test_quad01_raises_with_estimates():
    with pytest.raises(QuadratureError) as err:
        quad01(lambda u: u**-0.5, nodes=8, max_nodes=64)
    assert err.value.previous != err.value.last
