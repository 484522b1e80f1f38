"""Special functions and quadrature shared by the rest of the package.

Everything here is a pure function of its arguments. Factorial-like
quantities go through ``math.lgamma`` so that the normalisation constants of
high radial quantum numbers never overflow.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import wofz

__all__ = [
    "QuadratureError",
    "faddeeva",
    "wigner3j",
    "legendre_p",
    "double_factorial",
    "log_double_factorial",
    "gen_binomial",
    "gauss_legendre01",
    "quad01",
]

# |w| stays representable only while exp(-Im(z)^2 ... ) does; beyond this the
# lower half-plane values overflow.
_FADDEEVA_MAX_EXPONENT = 700.0


class QuadratureError(RuntimeError):
    """Raised when :func:`quad01` fails to converge.

    The last two estimates are kept on the exception for diagnosis.
    """

    def __init__(self, message, previous, last):
        super().__init__(message)
        self.previous = previous
        self.last = last


def faddeeva(zeta):
    """Faddeeva function ``w(z) = exp(-z**2) erfc(-i z)``.

    Accepts scalars or arrays. Raises ``OverflowError`` instead of returning
    an infinite value when the argument lies so deep in the lower half-plane
    that ``w`` is not representable.
    """
    z = np.asarray(zeta, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise ValueError("faddeeva: argument must be finite")
    # In the lower half-plane w(z) ~ 2 exp(-z^2) = 2 exp(y^2 - x^2) for large |z|.
    growth = np.where(z.imag < 0, z.imag**2 - z.real**2, 0.0)
    if np.any(growth > _FADDEEVA_MAX_EXPONENT):
        raise OverflowError(f"faddeeva: w(z) overflows for z with Im(z)^2-Re(z)^2 up to {growth.max():.1f}")
    out = wofz(z)
    if not np.all(np.isfinite(out)):
        raise OverflowError("faddeeva: non-finite result")
    if out.ndim == 0:
        return complex(out)
    return out


@lru_cache(maxsize=4096)
def _log_factorial(n: int) -> float:
    return math.lgamma(n + 1.0)


def wigner3j(l1: int, l2: int, l3: int, m1: int, m2: int, m3: int) -> float:
    """Wigner 3j symbol for integer momenta via Racah's formula.

    Returns 0 for any combination violating the selection rules
    (``|m_i| <= l_i``, ``m1+m2+m3 == 0``, triangle inequality).
    """
    if m1 + m2 + m3 != 0:
        return 0.0
    if abs(m1) > l1 or abs(m2) > l2 or abs(m3) > l3:
        return 0.0
    if l3 < abs(l1 - l2) or l3 > l1 + l2:
        return 0.0
    lf = _log_factorial
    log_delta = 0.5 * (
        lf(l1 + l2 - l3) + lf(l1 - l2 + l3) + lf(-l1 + l2 + l3) - lf(l1 + l2 + l3 + 1)
    )
    log_pref = 0.5 * (
        lf(l1 + m1) + lf(l1 - m1) + lf(l2 + m2) + lf(l2 - m2) + lf(l3 + m3) + lf(l3 - m3)
    )
    kmin = max(0, l2 - l3 - m1, l1 - l3 + m2)
    kmax = min(l1 + l2 - l3, l1 - m1, l2 + m2)
    total = 0.0
    for k in range(kmin, kmax + 1):
        log_den = (
            lf(k)
            + lf(l1 + l2 - l3 - k)
            + lf(l1 - m1 - k)
            + lf(l2 + m2 - k)
            + lf(l3 - l2 + m1 + k)
            + lf(l3 - l1 - m2 + k)
        )
        term = math.exp(log_delta + log_pref - log_den)
        total += -term if k % 2 else term
    if (l1 - l2 - m3) % 2:
        total = -total
    return total


def legendre_p(l: int, u):
    """Legendre polynomial ``P_l(u)`` from the three-term recurrence."""
    u = np.asarray(u, dtype=float)
    p_prev = np.ones_like(u)
    if l == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = u.copy()
    for k in range(1, l):
        p_prev, p = p, ((2 * k + 1) * u * p - k * p_prev) / (k + 1)
    return p if p.ndim else float(p)


def log_double_factorial(k: int) -> float:
    """Natural log of ``k!!`` for ``k >= -1``."""
    if k < -1:
        raise ValueError(f"double factorial undefined for k={k}")
    if k <= 0:
        return 0.0
    if k % 2 == 0:
        h = k // 2
        return h * math.log(2.0) + math.lgamma(h + 1.0)
    # (2h+1)!! = (2h+1)! / (2^h h!)
    h = (k - 1) // 2
    return math.lgamma(k + 1.0) - h * math.log(2.0) - math.lgamma(h + 1.0)


def double_factorial(k: int) -> float:
    """``k!!`` with the convention ``(-1)!! = 0!! = 1``."""
    if k < -1:
        raise ValueError(f"double factorial undefined for k={k}")
    if k <= 1:
        return 1.0
    if k <= 30:
        out = 1
        for j in range(k, 0, -2):
            out *= j
        return float(out)
    return math.exp(log_double_factorial(k))


def gen_binomial(alpha: float, k: int) -> float:
    """Binomial coefficient ``alpha*(alpha-1)*...*(alpha-k+1)/k!`` for real alpha."""
    if k < 0:
        raise ValueError("k must be non-negative")
    out = 1.0
    for i in range(k):
        out *= (alpha - i) / (i + 1)
    return out


@lru_cache(maxsize=32)
def gauss_legendre01(nodes: int):
    """Gauss-Legendre nodes and weights mapped onto [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def quad01(
    f: Callable[[np.ndarray], np.ndarray],
    nodes: int = 64,
    max_nodes: int = 1024,
    tol: float = 1e-11,
):
    """Integrate a vectorised ``f`` over [0, 1] by Gauss-Legendre doubling.

    ``f`` receives an array of nodes and may return an array of shape
    ``(n,)`` or ``(n, ...)``; the result has the trailing shape. The node
    count doubles from ``nodes`` until two successive estimates agree to
    ``tol`` (relative to the larger magnitude, or absolute below 1).
    """
    def estimate(n):
        u, w = gauss_legendre01(n)
        vals = np.asarray(f(u))
        return np.tensordot(w, vals, axes=(0, 0))

    prev = cur = estimate(nodes)
    n = nodes
    while n < max_nodes:
        n *= 2
        prev, cur = cur, estimate(n)
        scale = max(1.0, float(np.max(np.abs(cur))))
        if np.max(np.abs(cur - prev)) <= tol * scale:
            return cur if np.ndim(cur) else cur.item()
    raise QuadratureError(
        f"quad01 did not converge with {max_nodes} nodes", previous=prev, last=cur
    )
