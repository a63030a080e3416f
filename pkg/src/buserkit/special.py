"""Scalar special functions behind the Buser bound calculus.

All functions accept Python floats; ``j_K``, ``J_K_closed``,
``gaussian_isoperimetric_I``, ``f1``, ``f2``, ``g1`` and ``g2`` also accept
numpy arrays and broadcast elementwise.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericalError

__all__ = [
    "j_K",
    "J_K_closed",
    "J_K_quadrature",
    "lambert_w_m1",
    "norm_ppf",
    "gaussian_isoperimetric_I",
    "f1",
    "f2",
    "g1",
    "g2",
    "arccosh_exp",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# below this |2Kt| the closed form K/(e^{2Kt}-1) is replaced by its Taylor expansion
_JK_SERIES_CUTOFF = 1e-6
_JK_CLOSED_SERIES_CUTOFF = 1e-8
_G_SERIES_CUTOFF = 0.1


def _as_output(value, scalar):
    return float(value) if scalar else value


def _check_positive_time(t):
    if np.any(~(np.asarray(t, dtype=float) > 0)):
        raise DomainError(f"time must be strictly positive, got {t!r}")


def j_K(K: float, t):
    """Return ``K / (e^{2Kt} - 1)``, or ``1/(2t)`` when ``K == 0``.

    For ``|2Kt| < 1e-6`` a three-term Taylor expansion
    ``(1 - x/2 + x^2/12) / (2t)`` with ``x = 2Kt`` is used, which keeps the
    function continuous across ``K = 0``.
    """
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    _check_positive_time(t)
    x = 2.0 * K * t
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        series = (1.0 - x / 2.0 + x * x / 12.0) / (2.0 * t)
        if K == 0:
            out = 1.0 / (2.0 * t)
        else:
            # expm1 overflows for x > ~709; K e^{-x} is the exact limit there
            big = x > 700.0
            closed = np.where(big, K * np.exp(-np.where(big, x, 0.0)),
                              K / np.expm1(np.where(big, 1.0, x)))
            out = np.where(np.abs(x) < _JK_SERIES_CUTOFF, series, closed)
    return _as_output(out, scalar)


def arccosh_exp(a):
    """``log(e^a + sqrt(e^{2a} - 1))`` for ``a >= 0`` without overflow."""
    a = np.asarray(a, dtype=float)
    return a + np.log1p(np.sqrt(-np.expm1(-2.0 * a)))


def J_K_closed(K: float, t):
    """Closed form of ``sqrt(2/pi) * int_0^t sqrt(j_K(s)) ds``.

    The ``K < 0`` branch is evaluated through the logarithmic form of
    ``arctanh(sqrt(1 - e^{2Kt}))``, which stays accurate when the arctanh
    argument approaches 1.
    """
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    _check_positive_time(t)
    zero = 2.0 * np.sqrt(t) / math.sqrt(math.pi)
    if K == 0:
        return _as_output(zero, scalar)
    # first-order series in Kt; the neglected term is O((Kt)^2)
    series = zero * (1.0 - K * t / 6.0)
    small = np.abs(K * t) < _JK_CLOSED_SERIES_CUTOFF
    with np.errstate(over="ignore", invalid="ignore"):
        if K > 0:
            y = np.sqrt(np.expm1(np.minimum(2.0 * K * t, 1400.0)))
            out = math.sqrt(2.0 / (math.pi * K)) * np.arctan(y)
        else:
            out = math.sqrt(-2.0 / (math.pi * K)) * arccosh_exp(-K * t)
    return _as_output(np.where(small, series, out), scalar)


def J_K_quadrature(K: float, t: float, tol: float = 1e-12) -> float:
    """Integrate ``sqrt(2/pi) sqrt(j_K(s))`` over ``(0, t]`` numerically.

    The ``1/sqrt(s)`` singularity at the origin is removed by substituting
    ``s = u^2``; the smooth integrand ``2u sqrt(j_K(u^2))`` is then handed to
    QUADPACK's adaptive Gauss-Kronrod routine.

    Raises
    ------
    NumericalError
        If the error estimate exceeds ``tol`` after the subdivision budget.
    """
    if not t > 0:
        raise DomainError(f"time must be strictly positive, got {t!r}")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol!r}")

    def integrand(u):
        return 2.0 * u * math.sqrt(j_K(K, u * u))

    with warnings.catch_warnings():
        # failure is reported through NumericalError below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(integrand, 0.0, math.sqrt(t), epsabs=tol,
                                    epsrel=0.0, limit=500)
    if err > tol:
        raise NumericalError(
            f"quadrature of J_K(K={K}, t={t}) reached only {err:.3e} > {tol:.3e}",
            achieved=err)
    return SQRT_2_OVER_PI * value


def _bisect_lambert(x, lo, hi):
    # w e^w - x is positive at lo and nonpositive at hi on (-inf, -1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if mid * math.exp(mid) - x > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambert_w_m1(x: float, max_halley: int = 50) -> float:
    """Lower real branch ``W_{-1}`` of the Lambert function.

    Parameters
    ----------
    x : float
        Argument in ``[-1/e, 0)``.
    max_halley : int
        Halley iteration cap; bisection takes over if it is reached.

    Returns
    -------
    float
        ``w <= -1`` with ``w * exp(w) == x``.
    """
    x = float(x)
    branch = -math.exp(-1.0)
    # accept the float nearest to -1/e
    if not (branch - 4e-17 <= x < 0.0):
        raise DomainError(f"lambert_w_m1 needs -1/e <= x < 0, got {x!r}")
    if x <= branch:
        return -1.0

    if x < -0.25:
        p = -math.sqrt(max(2.0 * (1.0 + math.e * x), 0.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    else:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    w = min(w, -1.0)

    # bracket: g(lo) > 0 >= g(hi), g(w) = w e^w - x
    lo, hi = -1.0, -1.0
    step = 1.0
    while lo * math.exp(lo) - x <= 0:
        lo -= step
        step *= 2.0
    if not lo < w < hi:
        w = 0.5 * (lo + hi)

    for _ in range(max_halley):
        ew = math.exp(w)
        g = w * ew - x
        if g > 0:
            lo = w
        else:
            hi = w
        if g == 0:
            return w
        wp1 = w + 1.0
        if wp1 == 0.0:
            w_new = 0.5 * (lo + hi)
        else:
            w_new = w - g / (ew * wp1 - (w + 2.0) * g / (2.0 * wp1))
        if not lo <= w_new <= hi or not math.isfinite(w_new):
            w_new = 0.5 * (lo + hi)
        if abs(w_new - w) <= 4.0 * np.finfo(float).eps * abs(w):
            w = w_new
            if abs(w * math.exp(w) - x) <= 1e-14 * abs(x):
                return w
            break
        w = w_new

    return _bisect_lambert(x, lo, hi)


# Rational approximation of the normal quantile (P. J. Acklam), relative error ~1.2e-9.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _ppf_initial(p):
    p = np.asarray(p, dtype=float)
    z = np.empty_like(p)
    low = p < _P_LOW
    high = p > 1.0 - _P_LOW
    mid = ~(low | high)

    q = np.sqrt(-2.0 * np.log(p[low]))
    z[low] = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))

    q = np.sqrt(-2.0 * np.log1p(-p[high]))
    z[high] = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))

    q = p[mid] - 0.5
    r = q * q
    z[mid] = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
              / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    return z


def norm_ppf(p):
    """Standard normal quantile for ``0 < p < 1``.

    Rational initial approximation followed by one Newton step on
    ``Phi(z) = p``. Upper-tail arguments are reflected so the Newton residual
    is always formed in the lower tail, where ``Phi`` is computed with full
    relative accuracy.
    """
    scalar = np.ndim(p) == 0
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("norm_ppf needs 0 < p < 1")
    upper = p > 0.5
    q = np.where(upper, 1.0 - p, p)
    z = _ppf_initial(q)
    resid = 0.5 * special.erfc(-z / math.sqrt(2.0)) - q
    with np.errstate(over="ignore", invalid="ignore"):
        density = INV_SQRT_2PI * np.exp(-0.5 * z * z)
        step = np.where(density > 0, resid / density, 0.0)
    z = z - step
    z = np.where(upper, -z, z)
    return _as_output(z, scalar)


def gaussian_isoperimetric_I(x):
    """Gaussian isoperimetric profile ``phi(Phi^{-1}(x))`` on ``[0, 1]``.

    ``I(0) = I(1) = 0`` and ``I(1/2) = 1/sqrt(2 pi)``. The profile is evaluated
    at ``min(x, 1 - x)``, so the reflection symmetry holds by construction.
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise DomainError("gaussian_isoperimetric_I needs 0 <= x <= 1")
    q = np.minimum(x, 1.0 - x)
    out = np.zeros_like(q)
    inside = q > 0
    if np.any(inside):
        z = norm_ppf(q[inside])
        out[inside] = INV_SQRT_2PI * np.exp(-0.5 * z * z)
    return _as_output(out, scalar)


def _check_f_args(x, T):
    if np.any(~(np.asarray(x, dtype=float) > 0)):
        raise DomainError("x must be strictly positive")
    if not T > 0:
        raise DomainError("T must be strictly positive")


def f1(x, T: float):
    """``sqrt(x) / arctan(sqrt(e^{Tx} - 1))``; nondecreasing in x, infimum ``1/sqrt(T)``."""
    scalar = np.ndim(x) == 0
    _check_f_args(x, T)
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        y = np.sqrt(np.expm1(np.minimum(T * x, 1400.0)))
    return _as_output(np.sqrt(x) / np.arctan(y), scalar)


def f2(x, T: float):
    """``sqrt(x) / log(e^{Tx} + sqrt(e^{2Tx} - 1))``; nonincreasing in x."""
    scalar = np.ndim(x) == 0
    _check_f_args(x, T)
    x = np.asarray(x, dtype=float)
    return _as_output(np.sqrt(x) / arccosh_exp(T * x), scalar)


def _g_series(z, terms: int = 10):
    # sum_{n>=2} (n - 1) / (n (2n - 1)) z^n, Horner from the top term
    acc = np.zeros_like(z)
    for n in range(terms + 1, 1, -1):
        acc = acc * z + (n - 1) / (n * (2 * n - 1))
    return acc * z * z


def g1(y):
    """``y arctan(y) - log(1 + y^2)``, nonnegative for ``y >= 0``."""
    y = np.asarray(y, dtype=float)
    y2 = y * y
    # the two terms cancel to O(y^4) near zero
    series = _g_series(-y2)
    out = np.where(np.abs(y) < _G_SERIES_CUTOFF, series, y * np.arctan(y) - np.log1p(y2))
    return float(out) if out.ndim == 0 else out


def g2(y):
    """``(1 + y/2) log(1 + y) + (1 - y/2) log(1 - y)``, nonpositive on ``(0, 1)``."""
    y = np.asarray(y, dtype=float)
    y2 = y * y
    series = -_g_series(y2)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (1.0 + y / 2.0) * np.log1p(y) + (1.0 - y / 2.0) * np.log1p(-y)
    out = np.where(np.abs(y) < _G_SERIES_CUTOFF, series, direct)
    return float(out) if out.ndim == 0 else out
