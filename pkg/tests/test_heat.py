import math

import numpy as np
import pytest

from buserkit.errors import DomainError
from buserkit.heat import (
    HeatEngine,
    VerificationRecord,
    cell_total_variation,
    evolve,
    grid_indicator,
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
from buserkit.isoperimetry import CutFamily
from buserkit.spaces import PRESETS, SpaceConfig, build_space
from buserkit.suite import _chain_cut, default_t_grid, test_functions as profiles

FINITE = [n for n in sorted(PRESETS) if PRESETS[n].finite]
T_GRID = default_t_grid(1e-2, 5.0, 8)


# evolution ----------------------------------------------------------------------

def test_ou_flow_of_x():
    sp = build_space(SpaceConfig("gaussian", 801))
    res = evolve(sp, sp.nodes, 1.0)
    inner = np.abs(sp.nodes) < 4
    err = np.abs(np.asarray(res.final) - math.exp(-1.0) * sp.nodes)[inner]
    assert err.max() < 1e-4
    assert abs(res.mass_drift) < 1e-10


@pytest.mark.parametrize("name", FINITE)
def test_constants_are_fixed(name, space_cache):
    sp = space_cache(name, 401)
    res = evolve(sp, np.full(sp.N, 3.0), 0.7)
    assert np.max(np.abs(np.asarray(res.final) - 3.0)) < 1e-12
    assert res.min_overshoot == 0.0 or res.min_overshoot < 1e-12


def test_circle_sine():
    sp = build_space(SpaceConfig("flat_circle", 801))
    res = evolve(sp, np.sin(sp.nodes), 0.5)
    assert np.max(np.abs(np.asarray(res.final) - math.exp(-0.5) * np.sin(sp.nodes))) < 1e-4


def test_step_guard(space_cache):
    sp = space_cache("gaussian", 401)
    with pytest.raises(DomainError):
        evolve(sp, sp.nodes, 1.0, steps=3)
    with pytest.raises(DomainError):
        evolve(sp, sp.nodes, 0.0)
    with pytest.raises(DomainError):
        evolve(sp, np.full(sp.N, np.inf), 1.0)


def test_powers_match_stepping(space_cache):
    for name in ("gaussian", "inverted_gaussian", "flat_circle"):
        sp = space_cache(name, 201)
        f = np.random.default_rng(1).standard_normal(sp.N)
        eng = HeatEngine(sp)
        stepped = f.copy()
        for _ in range(37):
            stepped = eng.step(stepped)
        (powered,) = HeatEngine(sp).propagate(np.column_stack([f] * 40), [37])
        assert np.allclose(powered[:, 0], stepped, rtol=0, atol=1e-12)


def test_engine_space_mismatch(space_cache):
    a, b = space_cache("gaussian", 401), space_cache("flat_interval", 401)
    with pytest.raises(DomainError):
        verify_mass(a, np.ones(a.N), T_GRID, HeatEngine(b))


# structural checks ---------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(PRESETS))
def test_structure(name, space_cache):
    sp = space_cache(name, 401)
    eng = HeatEngine(sp)
    fns = profiles(sp)
    rng = np.random.default_rng(2)
    recs = [verify_max_principle(sp, fns["ramp"], T_GRID, eng),
            verify_semigroup(sp, fns["profile"], 0.3, 0.7, eng),
            verify_self_adjoint(sp, rng.standard_normal(sp.N), rng.standard_normal(sp.N),
                                0.5, eng)]
    if sp.finite:
        recs.append(verify_mass(sp, fns["profile"], T_GRID, eng))
    for rec in recs:
        assert rec.passed, rec


# inequality checks ----------------------------------------------------------------

@pytest.mark.parametrize("name", FINITE)
def test_pointwise_inequalities(name, space_cache):
    sp = space_cache(name, 401)
    eng = HeatEngine(sp)
    fns = profiles(sp)
    for rec in (verify_bgl(sp, fns["profile"], T_GRID, eng),
                verify_linf_gradient(sp, fns["sign_ramp"], T_GRID, eng),
                verify_l1_smoothing(sp, fns["ramp"], T_GRID, eng),
                verify_savare(sp, fns["profile"], T_GRID, eng),
                verify_l2_decay(sp, fns["profile"], T_GRID, eng),
                *verify_perimeter_chain(sp, _chain_cut(sp), T_GRID, eng)):
        assert rec.passed, rec
        assert rec.N == sp.N and rec.dt == eng.dt


def test_l2_decay_eigenfunction_equality(space_cache):
    sp = space_cache("gaussian", 801)
    rec = verify_l2_decay(sp, sp.nodes, T_GRID, lam=1.0)
    assert abs(rec.worst_slack) < 1e-3
    cubic = verify_l2_decay(sp, sp.nodes ** 3, [1.0, 2.0], lam=1.0)
    assert cubic.worst_slack > 1e-2


def test_l2_decay_time_zero(space_cache):
    sp = space_cache("gaussian", 401)
    rec = verify_l2_decay(sp, sp.nodes, [0.0])
    assert rec.worst_slack == pytest.approx(0.0, abs=1e-15)


def test_l2_decay_constant_rejected(space_cache):
    sp = space_cache("gaussian", 401)
    with pytest.raises(DomainError):
        verify_l2_decay(sp, np.ones(sp.N), T_GRID)


def test_l2_decay_infinite(space_cache):
    sp = space_cache("inverted_gaussian", 401)
    assert verify_l2_decay(sp, np.exp(-sp.nodes ** 2), T_GRID).passed


def test_bgl_requires_unit_range(space_cache):
    sp = space_cache("gaussian", 401)
    with pytest.raises(DomainError):
        verify_bgl(sp, sp.nodes, T_GRID)


def test_linf_constant_is_sharper(space_cache):
    sp = space_cache("gaussian", 401)
    rec = verify_linf_gradient(sp, profiles(sp)["sign_ramp"], T_GRID)
    assert "constant below sqrt(j_K)" in rec.notes


def test_l1_requires_finite_measure(space_cache):
    sp = space_cache("inverted_gaussian", 401)
    with pytest.raises(Exception):
        verify_l1_smoothing(sp, np.ones(sp.N), T_GRID)


def test_perimeter_chain_rejects_large_set(space_cache):
    sp = space_cache("gaussian", 401)
    with pytest.raises(DomainError):
        verify_perimeter_chain(sp, CutFamily("single_cut", (1.0,)), T_GRID)


def test_chain_cut_mass(space_cache):
    for name in FINITE:
        sp = space_cache(name, 401)
        chi = grid_indicator(sp, _chain_cut(sp))
        m = sp.masses @ chi
        assert 0.4 * sp.total_mass < m <= 0.5 * sp.total_mass * (1 + 1e-12)


def test_total_variation_of_ramp(space_cache):
    sp = space_cache("flat_interval", 401)
    x = sp.nodes
    ramp = (x - x[0]) / (x[-1] - x[0])
    assert cell_total_variation(sp, ramp) == pytest.approx(1 / (x[-1] - x[0]), rel=1e-12)


# records --------------------------------------------------------------------------

def test_record_pass_rule():
    assert VerificationRecord("a", -1e-3, 1e-3, 1, 0.1, 0.1).passed
    assert not VerificationRecord("a", -2e-3, 1e-3, 1, 0.1, 0.1).passed
    assert not VerificationRecord("a", math.nan, 1.0, 1, 0.1, 0.1).passed
    row = VerificationRecord("a", 0.0, 0.0, 3, 0.1, 0.2, "x").as_row()
    assert list(row) == ["inequality_id", "worst_slack", "tolerance", "pass", "N", "dx",
                         "dt", "notes"]


def test_refinement_record():
    coarse = VerificationRecord("bgl", -4e-4, 1e-2, 401, 0.02, 0.02)
    good = VerificationRecord("bgl", -1e-4, 1e-2, 801, 0.01, 0.01)
    bad = VerificationRecord("bgl", -3e-4, 1e-2, 801, 0.01, 0.01)
    clean = VerificationRecord("bgl", 0.5, 1e-2, 801, 0.01, 0.01)
    assert refinement_record(coarse, good).passed
    assert not refinement_record(coarse, bad).passed
    assert refinement_record(coarse, clean).passed
    assert refinement_record(coarse, good).inequality_id == "bgl_refinement"


@pytest.mark.parametrize("name", ["gaussian", "double_well"])
def test_violations_shrink_under_refinement(name):
    coarse_sp = build_space(SpaceConfig(name, 401))
    fine_sp = build_space(SpaceConfig(name, 801))
    c = verify_bgl(coarse_sp, profiles(coarse_sp)["profile"], T_GRID)
    f = verify_bgl(fine_sp, profiles(fine_sp)["profile"], T_GRID)
    assert refinement_record(c, f).passed
