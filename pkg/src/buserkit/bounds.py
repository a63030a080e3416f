"""Buser-type upper bounds and the Cheeger lower bound on the spectral gap.

The implicit bound is the supremum functional

    F_K(lam) = sup_{t > 0} (1 - exp(-lam t)) / J_K(t),

with ``h >= F_K(lambda_1)`` on normalized spaces and ``h >= 2 F_K(lambda_0)``
on spaces of infinite measure. The explicit constants follow from particular
choices of ``t``; ``explicit_upper`` returns them for every sign of ``K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DomainError, InfeasibleBoundError
from .special import J_K_closed, arccosh_exp, lambert_w_m1

__all__ = [
    "MeasureRegime",
    "BoundReport",
    "ExplicitBound",
    "buser_functional",
    "implicit_h_lower_bound",
    "lambda_upper_from_h",
    "explicit_upper",
    "explicit_h_lower",
    "constant_M",
    "neg_c_supremum",
    "cheeger_lower",
    "sandwich",
    "KNEG_LINEAR",
    "KNEG_QUADRATIC",
    "KNEG_LINEAR_MAJORANT",
    "KNEG_QUADRATIC_MAJORANT",
]

_LOG_E_BRANCH = math.log(math.e + math.sqrt(math.e ** 2 - 1.0))
_ONE_MINUS_INV_E = 1.0 - math.exp(-1.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

KNEG_LINEAR = math.sqrt(2.0) * _LOG_E_BRANCH / (math.sqrt(math.pi) * _ONE_MINUS_INV_E)
KNEG_QUADRATIC = 2.0 * _LOG_E_BRANCH ** 2 / (math.pi * _ONE_MINUS_INV_E ** 2)
KNEG_LINEAR_MAJORANT = 21.0 / 10.0
KNEG_QUADRATIC_MAJORANT = 22.0 / 5.0

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_COARSE_POINTS = 400


class MeasureRegime(str, Enum):
    FINITE = "finite_normalized"
    INFINITE = "infinite"

    @classmethod
    def parse(cls, value) -> "MeasureRegime":
        if isinstance(value, cls):
            return value
        aliases = {"finite": cls.FINITE, "finite_normalized": cls.FINITE,
                   "infinite": cls.INFINITE}
        try:
            return aliases[str(value)]
        except KeyError:
            raise DomainError(f"unknown measure regime {value!r}") from None

    @property
    def factor(self) -> float:
        return 2.0 if self is MeasureRegime.INFINITE else 1.0


@dataclass(frozen=True)
class ExplicitBound:
    """Closed-form spectral upper bound in terms of the Cheeger constant.

    ``majorant`` is the looser companion form: ``pi h^2`` for ``K = 0`` and the
    decimal constants for ``K < 0``. ``neg_c_value`` is only set when the
    ``K/lambda >= -c`` variant for negative curvature was requested.
    """

    value: float
    regime: str
    c: Optional[float] = None
    majorant: Optional[float] = None
    neg_c_value: Optional[float] = None


@dataclass(frozen=True)
class BoundReport:
    regime: MeasureRegime
    K: float
    input_kind: str
    input_value: float
    cheeger_lower: float
    implicit_value: float
    implicit_argmax_t: float
    explicit_value: float
    explicit_regime: str
    c_used: Optional[float] = None
    extras: dict = field(default_factory=dict, compare=False)

    def as_row(self) -> dict:
        """Row keyed by the frozen bounds column schema."""
        return {
            "regime": self.regime.value,
            "K": self.K,
            "input_kind": self.input_kind,
            "input": self.input_value,
            "cheeger_lower": self.cheeger_lower,
            "implicit": self.implicit_value,
            "argmax_t": self.implicit_argmax_t,
            "explicit": self.explicit_value,
            "explicit_regime": self.explicit_regime,
            "c": self.c_used,
        }


def _kpos_q(K, t):
    # 1 - (2/pi) arctan(sqrt(e^{2Kt} - 1)) == (2/pi) arcsin(e^{-Kt})
    return (2.0 / math.pi) * np.arcsin(np.exp(-K * t))


def _kpos_excess(lam, K, t):
    """Relative excess of the ratio over its t -> inf limit, for K > 0."""
    t = np.asarray(t, dtype=float)
    x = K * t
    with np.errstate(over="ignore"):
        # 1 - q without cancellation when Kt is small
        gap = (2.0 / math.pi) * np.arctan(np.sqrt(np.expm1(np.minimum(2.0 * x, 1400.0))))
    # leading term for tiny Kt; survives when K t underflows
    gap = np.where(x < 1e-16, (2.0 / math.pi) * math.sqrt(2.0) * math.sqrt(K) * np.sqrt(t), gap)
    # q itself keeps its relative accuracy when Kt is large
    numer = np.where(x > 1.0, _kpos_q(K, t) - np.exp(-lam * t), -np.expm1(-lam * t) - gap)
    return numer / gap


def _ratio(lam, K, t):
    return -np.expm1(-lam * t) / J_K_closed(K, t)


def _golden_max(fun, a, b, tol=1e-7):
    """Maximize a unimodal ``fun`` on ``[a, b]`` (log-time coordinates)."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    if fc >= fd:
        return c, fc
    return d, fd


def _sup_over_log_time(fun, t_lo, t_hi):
    """Grid scan on log t followed by golden-section refinement."""
    grid = np.linspace(math.log(t_lo), math.log(t_hi), _COARSE_POINTS)
    values = fun(np.exp(grid))
    i = int(np.argmax(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid.size - 1)]
    s, v = _golden_max(lambda s: float(fun(math.exp(s))), a, b)
    if values[i] > v:
        s, v = grid[i], float(values[i])
    return math.exp(s), v


def _time_window(lam, K):
    scale = 1.0 / lam
    t_lo = 1e-8 * min(1.0, scale)
    t_hi = 1e3 * max(1.0, scale)
    if K > 0:
        # maximizer sits near log(pi/2)/(lam - K); beyond ~745/K exp(-Kt) underflows
        t_hi = min(max(t_hi, 1e3 / (lam - K)), 740.0 / K)
        t_hi = max(t_hi, 10.0 * t_lo)
    return t_lo, t_hi


def buser_functional(lam: float, K: float):
    """Supremum over ``t > 0`` of ``(1 - e^{-lam t}) / J_K(t)``.

    Returns
    -------
    (value, argmax_t)
        ``argmax_t`` is ``math.inf`` when the supremum is the ``t -> inf``
        limit ``sqrt(2K/pi)``, which happens for ``K > 0`` exactly when
        ``lam <= K``.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    lam = float(lam)
    K = float(K)
    if K > 0 and lam <= K:
        return _SQRT_2_OVER_PI * math.sqrt(K), math.inf
    t_lo, t_hi = _time_window(lam, K)
    if K > 0:
        limit = _SQRT_2_OVER_PI * math.sqrt(K)
        t_star, excess = _sup_over_log_time(lambda t: _kpos_excess(lam, K, t), t_lo, t_hi)
        if not excess > 0:
            return limit, math.inf
        return limit * (1.0 + excess), t_star
    t_star, value = _sup_over_log_time(lambda t: _ratio(lam, K, t), t_lo, t_hi)
    return value, t_star


def implicit_h_lower_bound(lam: float, K: float, regime="finite") -> float:
    """Lower bound on the Cheeger constant implied by the spectral gap."""
    regime = MeasureRegime.parse(regime)
    value, _ = buser_functional(lam, K)
    return regime.factor * value


def _admissible(lam, K, h, factor):
    """True when ``factor * F_K(lam) <= h``; K > 0 is compared through the excess."""
    if K > 0:
        floor = factor * _SQRT_2_OVER_PI * math.sqrt(K)
        if lam <= K:
            return floor <= h
        t_lo, t_hi = _time_window(lam, K)
        _, excess = _sup_over_log_time(lambda t: _kpos_excess(lam, K, t), t_lo, t_hi)
        return max(excess, 0.0) <= h / floor - 1.0
    return factor * buser_functional(lam, K)[0] <= h


def lambda_upper_from_h(h: float, K: float, regime="finite", rtol: float = 1e-8) -> float:
    """Largest spectral gap compatible with the implicit bound for Cheeger constant ``h``.

    Bisection on ``lam`` using monotonicity of the functional. For ``K > 0`` the
    functional never drops below ``sqrt(2K/pi)`` (times the regime factor); an
    ``h`` below that floor admits no eigenvalue and raises
    ``InfeasibleBoundError``. At the floor itself the answer is exactly ``K``.
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h!r}")
    regime = MeasureRegime.parse(regime)
    factor = regime.factor
    h = float(h)
    K = float(K)

    if K > 0:
        floor = factor * _SQRT_2_OVER_PI * math.sqrt(K)
        if h < floor * (1.0 - 8.0 * np.finfo(float).eps):
            raise InfeasibleBoundError(
                f"h={h} is below the curvature floor {floor} for K={K}; "
                "no spectral gap is compatible")
        if h <= floor * (1.0 + 8.0 * np.finfo(float).eps):
            return K
        lo = K
        hi = max(1.0, 2.0 * K)
    else:
        lo, hi = 1e-8, 1.0
        while not _admissible(lo, K, h, factor):
            hi = lo
            lo /= 10.0
            if lo < 1e-300:
                return 0.0
    while _admissible(hi, K, h, factor):
        lo = hi
        hi *= 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _admissible(mid, K, h, factor):
            lo = mid
        else:
            hi = mid
    return lo


def constant_M():
    """``M = sup_T (1 - e^{-T}) / sqrt(T)`` and its maximizer, via ``W_{-1}``.

    With ``w = W_{-1}(-1/(2 sqrt(e)))`` the maximizer is ``T* = -w - 1/2``
    and ``M = sqrt(-4w - 2) / (-2w)``.
    """
    w = lambert_w_m1(-0.5 * math.exp(-0.5))
    M = math.sqrt(-4.0 * w - 2.0) / (-2.0 * w)
    return M, -w - 0.5


def neg_c_supremum(c: float) -> float:
    """``sup_T (1 - e^{-T}) / log(e^{cT} + sqrt(e^{2cT} - 1))`` for ``c > 0``."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c!r}")

    def fun(T):
        return -np.expm1(-T) / arccosh_exp(c * T)

    _, value = _sup_over_log_time(fun, 1e-8, 1e3 * max(1.0, 1.0 / c))
    return value


def explicit_upper(h: float, K: float, regime="finite", c: Optional[float] = None,
                   neg_c: Optional[float] = None) -> ExplicitBound:
    """Explicit upper bound on the spectral gap from the Cheeger constant.

    Parameters
    ----------
    h : float
        Cheeger constant, positive.
    K : float
        Curvature lower bound.
    regime : MeasureRegime or str
        On infinite-measure spaces every formula is applied to ``h/2``.
    c : float, optional
        Required for ``K > 0``: a lower bound on ``K / lambda``.
    neg_c : float, optional
        For ``K < 0`` only: a ``c > 0`` with ``K / lambda >= -c``; enables the
        alternative bound reported in ``neg_c_value``.
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h!r}")
    regime = MeasureRegime.parse(regime)
    h_eff = h / regime.factor

    if K > 0:
        if c is None or not c > 0:
            raise DomainError("K > 0 requires a positive c with K/lambda >= c")
        return ExplicitBound(math.pi / (2.0 * c) * h_eff ** 2, "Kpos_with_c", c=c)
    if c is not None:
        raise DomainError("c only applies when K > 0")

    if K == 0:
        M, _ = constant_M()
        return ExplicitBound(4.0 / math.pi * h_eff ** 2 / M ** 2, "Kzero",
                             majorant=math.pi * h_eff ** 2)

    root = math.sqrt(-K)
    value = max(root * KNEG_LINEAR * h_eff, KNEG_QUADRATIC * h_eff ** 2)
    majorant = max(root * KNEG_LINEAR_MAJORANT * h_eff, KNEG_QUADRATIC_MAJORANT * h_eff ** 2)
    neg_c_value = None
    if neg_c is not None:
        s = neg_c_supremum(neg_c)
        neg_c_value = 2.0 * h_eff ** 2 / (math.pi * neg_c * s ** 2)
    return ExplicitBound(value, "Kneg_max_form", majorant=majorant, neg_c_value=neg_c_value)


def explicit_h_lower(lam: float, K: float, regime="finite", c: Optional[float] = None):
    """Invert ``explicit_upper`` in ``h``: the smallest ``h`` it allows for a given gap.

    Returns ``(h_lower, regime_tag)``.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    regime = MeasureRegime.parse(regime)
    if K > 0:
        if c is None or not c > 0:
            raise DomainError("K > 0 requires a positive c with K/lambda >= c")
        h_eff = math.sqrt(2.0 * c * lam / math.pi)
        tag = "Kpos_with_c"
    elif K == 0:
        M, _ = constant_M()
        h_eff = math.sqrt(math.pi * lam) * M / 2.0
        tag = "Kzero"
    else:
        h_eff = min(lam / (math.sqrt(-K) * KNEG_LINEAR), math.sqrt(lam / KNEG_QUADRATIC))
        tag = "Kneg_max_form"
    return regime.factor * h_eff, tag


def cheeger_lower(h: float) -> float:
    """Cheeger's inequality: ``lambda >= h^2 / 4``."""
    if not h >= 0:
        raise DomainError(f"h must be nonnegative, got {h!r}")
    return h * h / 4.0


def sandwich(input_kind: str, input_value: float, K: float, regime="finite",
             c: Optional[float] = None) -> BoundReport:
    """Assemble Cheeger, implicit and explicit bounds into one report.

    ``from_h``: every value is a bound on the spectral gap. ``cheeger_lower`` is
    ``h^2/4``, ``implicit_value`` the largest gap allowed by the implicit
    inequality, ``explicit_value`` the explicit closed-form bound. For ``K > 0`` without a
    caller-supplied ``c``, ``c = K / implicit_value`` is used (a valid lower bound
    on ``K/lambda`` for every admissible gap) and the ``K = 0`` bound, which also
    holds, is taken when it is smaller.

    ``from_lambda``: every value is a bound on the Cheeger constant.
    ``cheeger_lower`` holds Cheeger's upper bound ``2 sqrt(lambda)``,
    ``implicit_value`` the implicit lower bound and ``explicit_value`` the
    explicit lower bound (``c`` defaults to ``K/lambda``).
    """
    regime = MeasureRegime.parse(regime)
    if not input_value > 0:
        raise DomainError(f"input value must be positive, got {input_value!r}")
    K = float(K)

    if input_kind == "from_h":
        h = float(input_value)
        lower = cheeger_lower(h)
        lam_impl = lambda_upper_from_h(h, K, regime)
        _, t_star = buser_functional(lam_impl, K) if lam_impl > 0 else (0.0, math.inf)
        extras = {}
        if K > 0 and c is None:
            c_used = K / lam_impl
            kpos = explicit_upper(h, K, regime, c=c_used)
            kzero = explicit_upper(h, 0.0, regime)
            extras["kzero_fallback"] = kzero.value
            best = kpos if kpos.value <= kzero.value else kzero
            explicit_value, tag = best.value, best.regime
        else:
            c_used = c
            bound = explicit_upper(h, K, regime, c=c)
            explicit_value, tag = bound.value, bound.regime
            if bound.majorant is not None:
                extras["majorant"] = bound.majorant
        if lower > explicit_value + 1e-12:
            raise AssertionError(
                f"Cheeger lower bound {lower} exceeds explicit upper bound {explicit_value}")
        return BoundReport(regime, K, "from_h", h, lower, lam_impl, t_star,
                           explicit_value, tag, c_used, extras)

    if input_kind == "from_lambda":
        lam = float(input_value)
        value, t_star = buser_functional(lam, K)
        c_used = c
        if K > 0 and c is None:
            c_used = K / lam
        h_expl, tag = explicit_h_lower(lam, K, regime, c=c_used if K > 0 else None)
        return BoundReport(regime, K, "from_lambda", lam, 2.0 * math.sqrt(lam),
                           regime.factor * value, t_star, h_expl, tag, c_used)

    raise DomainError(f"input_kind must be 'from_h' or 'from_lambda', got {input_kind!r}")
