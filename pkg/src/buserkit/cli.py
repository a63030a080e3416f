"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a verification fails, 2 on
usage or configuration errors.
"""

from __future__ import annotations

import functools
import math
import os
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import bounds as B
from .errors import BuserKitError, InfeasibleBoundError, NumericalError
from .isoperimetry import cheeger_constant
from .report import (
    BOUNDS_COLUMNS,
    INVERT_COLUMNS,
    KEY_VALUE_COLUMNS,
    RECORD_COLUMNS,
    SWEEP_COLUMNS,
    render,
)
from .spaces import PRESETS, SpaceConfig, build_space
from .spectral import lambda1
from .suite import default_t_grid, run_suite

OUTPUT_DIR_ENV = "BUSERKIT_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _usage_errors(fn):
    """Map library errors to exit codes: numerical failures 1, everything else 2."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NumericalError as err:
            # a solver that misses its tolerance is a failed check, not bad input
            click.echo(f"Error: {err}", err=True)
            raise click.exceptions.Exit(EXIT_FAIL) from err
        except (BuserKitError, ValueError) as err:
            raise click.UsageError(str(err)) from err

    return wrapper


def _emit(text: str, output: Optional[str]) -> None:
    if output is None or output == "-":
        click.echo(text, nl=False)
        return
    path = Path(output)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _parse_pairs(pairs, what: str) -> dict:
    out = {}
    for item in pairs:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"expected NAME=VALUE, got {item!r}", param_hint=what)
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise click.BadParameter(f"{value!r} is not a number", param_hint=what) from None
    return out


def parse_grid(text: str) -> np.ndarray:
    """``"start:stop:count"`` (linear, endpoints included) or a single number."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            start, stop = float(parts[0]), float(parts[1])
            count = int(parts[2])
            if count < 0 or not (math.isfinite(start) and math.isfinite(stop)):
                raise ValueError
            return np.linspace(start, stop, count)
    except ValueError:
        pass
    raise click.BadParameter(f"malformed grid {text!r}; use start:stop:count or a number")


def _regime_option(fn):
    return click.option("--regime", type=click.Choice(["finite", "infinite"]),
                        default="finite", show_default=True,
                        help="Finite normalized measure or infinite measure.")(fn)


def _output_options(fn):
    fn = click.option("--output", "-o", default=None,
                      help=f"Output file (relative paths go under ${OUTPUT_DIR_ENV}); "
                           "standard output by default.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                      show_default=True)(fn)
    return fn


def _one_input(h, lam):
    if bool(h) == bool(lam):
        raise click.UsageError("give exactly one of --h or --lambda")
    return ("from_h", h) if h else ("from_lambda", lam)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Spectral gap and Cheeger constant bounds under a curvature lower bound."""


@main.command()
@click.option("--K", "K", type=float, required=True, help="Curvature lower bound.")
@click.option("--h", "h", type=float, multiple=True, help="Cheeger constant (repeatable).")
@click.option("--lambda", "lam", type=float, multiple=True, help="Spectral gap (repeatable).")
@click.option("--c", "c", type=float, default=None, help="Lower bound on K/lambda (K > 0).")
@_regime_option
@_output_options
@_usage_errors
def bounds(K, h, lam, c, regime, fmt, output):
    """Cheeger, implicit and explicit bounds for each input."""
    kind, values = _one_input(h, lam)
    rows = [B.sandwich(kind, v, K, regime, c=c).as_row() for v in values]
    _emit(render(rows, BOUNDS_COLUMNS, fmt), output)


@main.command()
@click.option("--K", "K", type=float, required=True, help="Curvature lower bound.")
@click.option("--h", "h", type=float, multiple=True,
              help="Cheeger constant: report the largest admissible gap.")
@click.option("--lambda", "lam", type=float, multiple=True,
              help="Spectral gap: report the implicit lower bound on h.")
@_regime_option
@_output_options
@_usage_errors
def invert(K, h, lam, regime, fmt, output):
    """Invert the implicit inequality in either direction."""
    kind, values = _one_input(h, lam)
    rows = []
    for v in values:
        if kind == "from_h":
            out_kind, out = "lambda_upper", B.lambda_upper_from_h(v, K, regime)
        else:
            out_kind, out = "h_lower", B.implicit_h_lower_bound(v, K, regime)
        rows.append({"regime": B.MeasureRegime.parse(regime).value, "K": K, "input_kind": kind,
                     "input": v, "output_kind": out_kind, "output": out})
    _emit(render(rows, INVERT_COLUMNS, fmt), output)


@main.command()
@click.option("--space", "space", required=True,
              type=click.Choice(sorted(PRESETS) + ["all"]), help="Model space preset.")
@click.option("--n", "n", type=int, default=2001, show_default=True,
              help="Nodes for the spectral and isoperimetric checks.")
@click.option("--radius", type=float, default=None, help="Truncation radius R.")
@click.option("--param", "params", multiple=True, help="Preset parameter NAME=VALUE.")
@click.option("--heat-n", type=int, default=401, show_default=True,
              help="Nodes of the coarse heat grid (fine grid: 2n-1; 0 skips heat checks).")
@click.option("--t-min", type=float, default=1e-2, show_default=True)
@click.option("--t-max", type=float, default=10.0, show_default=True)
@click.option("--t-points", type=int, default=24, show_default=True)
@click.option("--tol", "tols", multiple=True,
              help="Override a dx multiplier, e.g. bgl=2.0.")
@click.option("--seed", type=int, default=0, show_default=True)
@_output_options
@click.pass_context
def verify(ctx, space, n, radius, params, heat_n, t_min, t_max, t_points, tols, seed,
           fmt, output):
    """Run every check on one preset (or all) and exit 1 on any failure."""
    try:
        if not (0 < t_min < t_max) or t_points < 1:
            raise click.UsageError("need 0 < t-min < t-max and t-points >= 1")
        names = sorted(PRESETS) if space == "all" else [space]
        if space == "all" and params:
            raise click.UsageError("--param needs a single --space")
        param_map = _parse_pairs(params, "--param")
        tol_map = _parse_pairs(tols, "--tol")
        grid = default_t_grid(t_min, t_max, t_points)
        rows = []
        ok = True
        for name in names:
            config = SpaceConfig(name, n, radius, param_map)
            result = run_suite(config, grid, heat_n=heat_n or None, seed=seed,
                               tolerance_c=tol_map)
            ok &= result.passed
            for rec in result.records:
                row = rec.as_row()
                if len(names) > 1:
                    row["notes"] = f"[{name}] {row['notes']}".rstrip()
                rows.append(row)
    except (BuserKitError, ValueError) as err:
        raise click.UsageError(str(err)) from err
    _emit(render(rows, RECORD_COLUMNS, fmt), output)
    ctx.exit(EXIT_OK if ok else EXIT_FAIL)


@main.command()
@click.option("--n", "n", type=int, default=4001, show_default=True)
@click.option("--radius", type=float, default=8.0, show_default=True)
@click.option("--c", "c", type=float, default=1.0, show_default=True,
              help="Lower bound on K/lambda used in the explicit bound.")
@_output_options
@_usage_errors
def sharpness(n, radius, c, fmt, output):
    """Equality case on the Gaussian space (K = 1)."""
    space = build_space(SpaceConfig("gaussian", n, radius))
    K = space.K_BE
    lam = lambda1(space).eigenvalue
    h = cheeger_constant(space, brute_force=False).h
    exact_h = math.sqrt(2.0 * K / math.pi)
    functional, t_star = B.buser_functional(1.0, K)
    functional_num, _ = B.buser_functional(lam, K)
    explicit = B.explicit_upper(h, K, "finite", c=c).value
    derived = B.explicit_upper(h, K, "finite", c=K / lam).value
    rows = [
        {"quantity": "lambda1", "value": lam, "notes": f"N={space.N}; R={space.R:g}"},
        {"quantity": "h", "value": h, "notes": "computed; exact value sqrt(2K/pi)"},
        {"quantity": "K", "value": K, "notes": ""},
        {"quantity": "implicit_at_lambda_eq_K", "value": functional,
         "notes": f"argmax_t={t_star}; t->inf limit"},
        {"quantity": "implicit_at_lambda1", "value": functional_num, "notes": ""},
        {"quantity": "explicit", "value": explicit, "notes": f"c={c:g}"},
        {"quantity": "explicit_c_derived", "value": derived, "notes": f"c=K/lambda1={K / lam:.12g}"},
        {"quantity": "gap_h", "value": abs(h - exact_h) / exact_h, "notes": "relative"},
        {"quantity": "gap_implicit", "value": abs(functional - exact_h) / exact_h,
         "notes": "relative"},
        {"quantity": "gap_explicit", "value": abs(explicit - lam) / lam, "notes": "relative"},
    ]
    _emit(render(rows, KEY_VALUE_COLUMNS, fmt), output)


def _sweep_row(kind, value, K, regime, c):
    try:
        row = B.sandwich(kind, value, K, regime, c=c if K > 0 else None).as_row()
    except InfeasibleBoundError:
        row = {col: math.nan for col in BOUNDS_COLUMNS}
        row.update(regime=B.MeasureRegime.parse(regime).value, K=K, input_kind=kind,
                   input=value, explicit_regime="infeasible", c=None)
        row["ratio"] = math.nan
        return row
    # weaker over sharper: upper bounds on lambda for h inputs, lower bounds on h otherwise
    if kind == "from_h":
        row["ratio"] = row["explicit"] / row["implicit"]
    else:
        row["ratio"] = row["implicit"] / row["explicit"]
    return row


@main.command()
@click.option("--K", "K", required=True, help="Curvature grid start:stop:count or a number.")
@click.option("--h", "h", default=None, help="Cheeger constant grid.")
@click.option("--lambda", "lam", default=None, help="Spectral gap grid.")
@click.option("--c", "c", type=float, default=None, help="Lower bound on K/lambda (K > 0).")
@_regime_option
@_output_options
@_usage_errors
def sweep(K, h, lam, c, regime, fmt, output):
    """Bound table over a (K, h) or (K, lambda) grid; rows ordered K-major."""
    kind, grid_text = _one_input(h, lam)
    Ks = parse_grid(K)
    values = parse_grid(grid_text)
    if np.any(values <= 0):
        raise click.BadParameter("inputs must be positive")
    rows = [_sweep_row(kind, float(v), float(k), regime, c) for k in Ks for v in values]
    _emit(render(rows, SWEEP_COLUMNS, fmt), output)


@main.command()
@_output_options
@click.pass_context
def constants(ctx, fmt, output):
    """Exact constants of the explicit bounds and their strict comparisons."""
    M, T = B.constant_M()
    kzero = 4.0 / (math.pi * M ** 2)
    checks = [M > 2.0 / math.pi, kzero < math.pi,
              B.KNEG_LINEAR < B.KNEG_LINEAR_MAJORANT,
              B.KNEG_QUADRATIC < B.KNEG_QUADRATIC_MAJORANT]
    rows = [
        {"quantity": "M", "value": M, "notes": "Lambert W formula"},
        {"quantity": "T_star", "value": T, "notes": "maximizer"},
        {"quantity": "two_over_pi", "value": 2.0 / math.pi, "notes": f"M > 2/pi: {checks[0]}"},
        {"quantity": "kzero_constant", "value": kzero,
         "notes": f"4/(pi M^2) < pi: {checks[1]}"},
        {"quantity": "pi", "value": math.pi, "notes": ""},
        {"quantity": "kneg_linear", "value": B.KNEG_LINEAR,
         "notes": f"< 21/10: {checks[2]}"},
        {"quantity": "kneg_linear_majorant", "value": B.KNEG_LINEAR_MAJORANT, "notes": "21/10"},
        {"quantity": "kneg_quadratic", "value": B.KNEG_QUADRATIC,
         "notes": f"< 22/5: {checks[3]}"},
        {"quantity": "kneg_quadratic_majorant", "value": B.KNEG_QUADRATIC_MAJORANT,
         "notes": "22/5"},
    ]
    _emit(render(rows, KEY_VALUE_COLUMNS, fmt), output)
    ctx.exit(EXIT_OK if all(checks) else EXIT_FAIL)


if __name__ == "__main__":  # pragma: no cover
    main()
