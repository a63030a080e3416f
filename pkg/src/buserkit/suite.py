"""Per-space verification suite: spectrum, Cheeger constant, sandwich and heat checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bounds import cheeger_lower, explicit_upper, implicit_h_lower_bound
from .errors import BuserKitError, DomainError, NumericalError
from .heat import (
    HeatEngine,
    VerificationRecord,
    refinement_record,
    verify_bgl,
    verify_l1_smoothing,
    verify_l2_decay,
    verify_linf_gradient,
    verify_mass,
    verify_max_principle,
    verify_perimeter_chain,
    verify_savare,
    verify_self_adjoint,
    verify_semigroup,
)
from .isoperimetry import CutFamily, cheeger_constant, coarea_check
from .spaces import CIRCLE, SpaceConfig, WeightedLine, build_space
from .spectral import lambda0, lambda1, rayleigh

__all__ = ["SuiteResult", "TOLERANCE_C", "default_t_grid", "run_suite", "test_functions"]

# multipliers of dx in the pointwise tolerances
TOLERANCE_C = {
    "bgl": 1.0,
    "linf_gradient": 1.0,
    "l1_smoothing": 1.0,
    "perimeter_chain": 1.0,
    "savare": 1.0,
}
_REFINED = tuple(TOLERANCE_C)
SANDWICH_TOL = 1e-6


@dataclass
class SuiteResult:
    space: WeightedLine
    records: list = field(default_factory=list)
    eigenvalue: float = math.nan
    h: float = math.nan

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)


def default_t_grid(t_min: float = 1e-2, t_max: float = 10.0, points: int = 24) -> np.ndarray:
    if points <= 0:
        return np.zeros(0)
    if points == 1:
        return np.array([t_min])
    return np.geomspace(t_min, t_max, points)


def _center_and_width(space: WeightedLine):
    x = space.nodes
    if space.topology == CIRCLE:
        return x[0] + 0.5 * space.period, space.period
    return 0.5 * (x[0] + x[-1]), x[-1] - x[0]


def test_functions(space: WeightedLine) -> dict:
    """Deterministic test profiles: smooth ``[0,1]`` profile, ramp and sign-like ramp."""
    from scipy.special import ndtr

    x = space.nodes
    c, width = _center_and_width(space)
    if space.topology == CIRCLE:
        phase = 2.0 * math.pi * (x - x[0]) / space.period
        profile = 0.5 * (1.0 + np.sin(phase))
        frac = np.mod((x - x[0]) / space.period, 1.0)
        ramp = 1.0 - np.abs(2.0 * frac - 1.0)
    else:
        scale = 1.0 if space.name in ("gaussian", "convex_perturbed", "double_well",
                                      "inverted_gaussian") else width / 8.0
        profile = ndtr((x - c) / scale)
        ramp = np.clip(0.5 + (x - c) / (0.25 * width), 0.0, 1.0)
    return {"profile": profile, "ramp": ramp, "sign_ramp": 2.0 * ramp - 1.0}


def _failed(name: str, space: WeightedLine, err: Exception) -> VerificationRecord:
    return VerificationRecord(name, -math.inf, 0.0, space.N, space.dx, math.nan,
                              f"error: {err}")


def _spectral_records(space: WeightedLine, result: SuiteResult) -> list:
    records = []
    try:
        eig = lambda1(space) if space.finite else lambda0(space)
    except BuserKitError as err:
        return [_failed("eigen_residual", space, err)]
    lam = eig.eigenvalue
    result.eigenvalue = lam
    label = "lambda1" if space.finite else "lambda0"
    records.append(VerificationRecord(
        "eigen_residual", -eig.residual_norm, 1e-8 * max(1.0, lam), space.N, space.dx,
        math.nan, f"{label}={lam:.12g}"))
    rq = rayleigh(space, eig.eigenfunction, mean_zero=space.finite)
    records.append(VerificationRecord(
        "rayleigh_consistency", -abs(rq - lam), 1e-10 * max(1.0, lam), space.N, space.dx,
        math.nan, f"rayleigh={rq:.12g}"))

    try:
        ch = cheeger_constant(space)
    except NumericalError as err:
        records.append(_failed("cheeger_single_cut", space, err))
        return records
    h = ch.h
    result.h = h
    records.append(VerificationRecord(
        "cheeger_single_cut", ch.brute_force_h - h * (1.0 - 1e-3), 0.0, space.N, space.dx,
        math.nan, f"h={h:.12g}; union search={ch.brute_force_h:.12g}"))

    regime = "finite" if space.finite else "infinite"
    K = space.K_BE
    records.append(VerificationRecord(
        "cheeger_lower", lam - cheeger_lower(h), SANDWICH_TOL, space.N, space.dx, math.nan,
        f"h^2/4={cheeger_lower(h):.12g}; {label}={lam:.12g}"))
    c = K / lam if K > 0 else None
    bound = explicit_upper(h, K, regime, c=c)
    upper = bound.value
    notes = f"explicit={upper:.12g} ({bound.regime}); {label}={lam:.12g}"
    if K > 0:
        kzero = explicit_upper(h, 0.0, regime).value
        notes += f"; K=0 form={kzero:.12g}"
    records.append(VerificationRecord(
        "buser_explicit", upper - lam, SANDWICH_TOL, space.N, space.dx, math.nan, notes))
    implicit = implicit_h_lower_bound(lam, K, regime)
    records.append(VerificationRecord(
        "buser_implicit", h - implicit, SANDWICH_TOL, space.N, space.dx, math.nan,
        f"implicit h bound={implicit:.12g}; h={h:.12g}"))
    return records


def _coarea_records(space: WeightedLine, seed: int, samples: int = 5) -> list:
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(samples):
        knots = rng.uniform(0.0, 1.0, size=9)
        u = np.interp(np.linspace(0.0, 1.0, space.N), np.linspace(0.0, 1.0, 9), knots)
        lhs, rhs, _ = coarea_check(space, u)
        scale = max(1.0, abs(rhs))
        worst = min(worst, (rhs - lhs) / scale)
    return [VerificationRecord("coarea", worst, 1e-9, space.N, space.dx, math.nan,
                               f"{samples} random piecewise-linear u (relative)")]


def _heat_records(space: WeightedLine, t_grid, seed: int, lam: Optional[float],
                  C: Optional[dict] = None) -> list:
    C = dict(TOLERANCE_C if C is None else C)
    engine = HeatEngine(space)
    fns = test_functions(space)
    records = []
    if space.finite:
        lam = lambda1(space).eigenvalue
        records.append(verify_mass(space, fns["profile"], t_grid, engine))
    elif lam is None:
        lam = lambda0(space).eigenvalue
    records.append(verify_max_principle(space, fns["ramp"], t_grid, engine))
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(space.N)
    g = rng.standard_normal(space.N)
    records.append(verify_semigroup(space, fns["profile"], 0.3, 0.7, engine))
    records.append(verify_self_adjoint(space, f, g, 0.5, engine))
    if not space.finite:
        bump = np.exp(-space.nodes ** 2)
        records.append(verify_l2_decay(space, bump, t_grid, engine, lam=lam))
        return records
    records.append(verify_l2_decay(space, fns["profile"], t_grid, engine, lam=lam))
    records.append(verify_bgl(space, fns["profile"], t_grid, engine, C=C["bgl"]))
    records.append(verify_linf_gradient(space, fns["sign_ramp"], t_grid, engine,
                                        C=C["linf_gradient"]))
    records.append(verify_l1_smoothing(space, fns["ramp"], t_grid, engine,
                                       C=C["l1_smoothing"]))
    cut = _chain_cut(space)
    records.extend(verify_perimeter_chain(space, cut, t_grid, engine,
                                          C=C["perimeter_chain"], lam=lam))
    records.append(verify_savare(space, fns["profile"], t_grid, engine,
                                 C=C["savare"]))
    return records


def _chain_cut(space: WeightedLine) -> CutFamily:
    """Half-mass set whose grid indicator has mass at most one half."""
    x = space.nodes
    if space.topology == CIRCLE:
        return CutFamily("interval", (x[0], x[0] + 0.5 * space.period))
    F = space.cumulative_mass
    k = int(np.searchsorted(F + 0.5 * space.masses, 0.5 * space.total_mass, side="right"))
    return CutFamily("single_cut", (x[min(k, space.N - 1)],))


def run_suite(config: SpaceConfig, t_grid: Optional[Sequence[float]] = None,
              heat_n: Optional[int] = 401, seed: int = 0,
              refine: bool = True, tolerance_c: Optional[dict] = None) -> SuiteResult:
    """All checks on one preset.

    Spectral, isoperimetric and sandwich records use ``config.N``. Heat checks
    run on ``heat_n`` nodes and, with ``refine``, again on ``2 heat_n - 1``
    nodes; the pointwise checks then carry a refinement record each.
    ``tolerance_c`` overrides entries of ``TOLERANCE_C``.
    """
    C = dict(TOLERANCE_C)
    for key, value in (tolerance_c or {}).items():
        if key not in C:
            raise DomainError(f"unknown tolerance {key!r}; choose from {sorted(C)}")
        if not value >= 0:
            raise DomainError(f"tolerance multiplier must be nonnegative, got {value!r}")
        C[key] = float(value)
    space = build_space(config)
    result = SuiteResult(space)
    t_grid = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    result.records.extend(_spectral_records(space, result))
    result.records.extend(_coarea_records(space, seed))
    if heat_n is None:
        return result
    coarse_space = build_space(config.with_N(heat_n))
    try:
        coarse = _heat_records(coarse_space, t_grid, seed, None, C)
    except NumericalError as err:
        result.records.append(_failed("heat_suite", coarse_space, err))
        return result
    result.records.extend(coarse)
    if refine and coarse_space.finite:
        fine_space = build_space(config.with_N(2 * heat_n - 1))
        try:
            fine_records = _heat_records(fine_space, t_grid, seed, None, C)
        except NumericalError as err:
            result.records.append(_failed("heat_suite", fine_space, err))
            return result
        fine = {r.inequality_id: r for r in fine_records}
        for rec in coarse:
            if rec.inequality_id in _REFINED:
                result.records.append(refinement_record(rec, fine[rec.inequality_id]))
    return result
