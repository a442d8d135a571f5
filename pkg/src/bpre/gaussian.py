"""Standard normal kernel: phi, Phi, Phi^-1 and the pieces needed for exact L1 integrals.

Functions accept scalars or numpy arrays.  Phi is built on ``erfc`` and
evaluated from the tail that keeps relative accuracy (Phi(x) for x < 0,
1 - Phi(-x) otherwise).
"""

import math

import numpy as np
from scipy.special import erfc

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
LOG_2PI = math.log(2.0 * math.pi)


def _out(value, like):
    return float(value) if np.ndim(like) == 0 else value


def phi(x):
    x = np.asarray(x, dtype=float)
    return _out(INV_SQRT_2PI * np.exp(-0.5 * x * x), x)


def sf(x):
    """Upper tail 1 - Phi(x), accurate in relative terms for large x."""
    x = np.asarray(x, dtype=float)
    return _out(Phi(-x), x)


def Phi(x):
    x = np.asarray(x, dtype=float)
    lower = 0.5 * erfc(-x / SQRT2)
    upper = 1.0 - 0.5 * erfc(x / SQRT2)
    return _out(np.where(x < 0.0, lower, upper), x)


# Acklam's rational approximation, |relative error| < 1.15e-9
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _initial_quantile(p):
    out = np.empty_like(p)
    low = p < _P_LOW
    high = p > 1.0 - _P_LOW
    mid = ~(low | high)

    q = np.sqrt(-2.0 * np.log(p[low]))
    out[low] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
        (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)

    q = np.sqrt(-2.0 * np.log1p(-p[high]))
    out[high] = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
        (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)

    q = p[mid] - 0.5
    r = q * q
    out[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    return out


def Phi_inv(p):
    """Quantile of the standard normal.

    Rational initial guess followed by two Newton steps on
    ``Phi(x) - p``; the residual is taken on the lower tail (``p <= 1/2``)
    or the upper tail so it stays accurate near 0 and 1.  A step that would
    leave the bracket falls back to bisection.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0.0) & (p_arr < 1.0))):
        raise ValueError("Phi_inv needs 0 < p < 1")
    p1 = np.atleast_1d(p_arr)
    x = _initial_quantile(p1)
    lower_side = p1 <= 0.5
    for _ in range(2):
        resid = np.where(lower_side, Phi(x) - p1, (1.0 - p1) - sf(x))
        dens = phi(x)
        step = resid / dens
        cand = x - step
        bad = ~np.isfinite(cand) | (np.abs(step) > 1.0)
        if np.any(bad):
            cand[bad] = _bisect(p1[bad])
        x = cand
    x = np.where(p1 == 0.5, 0.0, x)
    return float(x[0]) if np.ndim(p_arr) == 0 else x


def _bisect(p):
    lo = np.full_like(p, -40.0)
    hi = np.full_like(p, 40.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = Phi(mid) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def quantile_expansion(p: float) -> float:
    """-sqrt(log(1/p^2) - log log(1/p^2) - log 2 pi): small-p quantile asymptotics."""
    if not 0.0 < p < 0.5:
        raise ValueError(f"quantile_expansion needs 0 < p < 0.5, got {p}")
    ell = -2.0 * math.log(p)
    radicand = ell - math.log(ell) - LOG_2PI
    if radicand <= 0.0:
        threshold = _expansion_threshold()
        raise ValueError(f"radicand {radicand:.6g} <= 0 at p={p}; the expansion needs p < {threshold:.6g}")
    return -math.sqrt(radicand)


def _expansion_threshold():
    # largest p with positive radicand, by bisection on log p
    lo, hi = math.log(1e-300), math.log(0.5)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        ell = -2.0 * mid
        if ell - math.log(ell) - LOG_2PI > 0.0:
            lo = mid
        else:
            hi = mid
    return math.exp(lo)


def int_Phi(a):
    """Integral of Phi over (-inf, a] = a Phi(a) + phi(a)."""
    a = np.asarray(a, dtype=float)
    return _out(a * Phi(a) + phi(a), a)


def int_one_minus_Phi(b):
    """Integral of 1 - Phi over [b, inf) = phi(b) - b (1 - Phi(b))."""
    b = np.asarray(b, dtype=float)
    return _out(phi(b) - b * sf(b), b)


def tail_sandwich(x: float) -> tuple[float, float]:
    """Bounds e^{-x^2/2}/(sqrt(2 pi)(1+x)) <= 1 - Phi(x) <= e^{-x^2/2}/(sqrt(pi)(1+x))."""
    if x < 0.0:
        raise ValueError(f"tail_sandwich needs x >= 0, got {x}")
    g = math.exp(-0.5 * x * x) / (1.0 + x)
    return g / math.sqrt(2.0 * math.pi), g / math.sqrt(math.pi)
