"""Discretized one-dimensional weighted model spaces.

A ``WeightedLine`` carries a uniform grid, a potential ``V`` and the density
``w ∝ exp(-V)`` with respect to Lebesgue measure. Masses are lumped on nodes
with trapezoidal cell lengths (half cells at the two ends of an interval,
full cells on a circle), so the total mass is the trapezoidal integral of the
piecewise-linear density.

Spaces of infinite measure are truncated to ``[-R, R]`` with a homogeneous
Dirichlet closure: the grid function is extended by zero at one ghost node on
either side. This is what makes the bottom of the spectrum visible on a
bounded domain; a reflecting closure would give the constants eigenvalue 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, RegimeError

__all__ = [
    "PRESETS",
    "SpaceConfig",
    "WeightedLine",
    "GridFunction",
    "build_space",
    "measure_of_sublevel",
    "point_of_mass",
    "slope",
    "as_values",
]

INTERVAL = "interval_neumann"
CIRCLE = "circle"
TRUNCATED = "truncated_line"

_MIN_DENSITY = 1e-290
_K_SLACK = 1e-6


@dataclass(frozen=True)
class _Preset:
    topology: str
    finite: bool
    defaults: Mapping[str, float]
    potential: Callable[..., np.ndarray]
    curvature: Callable[..., float]
    default_radius: float = 8.0


def _check_convex_a(a):
    if not 0.0 <= a < 1.0:
        raise DomainError(f"convex_perturbed requires 0 <= a < 1, got a={a}")


def _check_b(b):
    if not b > 0:
        raise DomainError(f"double_well requires b > 0, got b={b}")


def _check_L(L):
    if not L > 0:
        raise DomainError(f"length L must be positive, got L={L}")


PRESETS: dict[str, _Preset] = {
    "gaussian": _Preset(TRUNCATED, True, {},
                        lambda x: 0.5 * x * x, lambda: 1.0),
    "flat_interval": _Preset(INTERVAL, True, {"L": math.pi},
                             lambda x, L: np.zeros_like(x), lambda L: 0.0),
    "flat_circle": _Preset(CIRCLE, True, {"L": 2.0 * math.pi},
                           lambda x, L: np.zeros_like(x), lambda L: 0.0),
    "convex_perturbed": _Preset(TRUNCATED, True, {"a": 0.5},
                                lambda x, a: 0.5 * x * x + a * np.cos(x),
                                lambda a: 1.0 - a),
    "double_well": _Preset(TRUNCATED, True, {"b": 1.0},
                           lambda x, b: 0.25 * x ** 4 - 0.5 * b * x * x,
                           lambda b: -b, default_radius=6.0),
    "inverted_gaussian": _Preset(TRUNCATED, False, {},
                                 lambda x: -0.5 * x * x, lambda: -1.0),
}

_PARAM_CHECKS = {"a": _check_convex_a, "b": _check_b, "L": _check_L}


@dataclass(frozen=True)
class SpaceConfig:
    """Name, resolution and parameters of a model space.

    ``R`` is ignored for the interval and circle presets; ``None`` selects the
    preset default (8, or 6 for the double well).
    """

    preset: str
    N: int = 2001
    R: Optional[float] = None
    params: Mapping[str, float] = field(default_factory=dict)

    def resolved_params(self) -> dict:
        try:
            preset = PRESETS[self.preset]
        except KeyError:
            raise DomainError(
                f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}") from None
        unknown = set(self.params) - set(preset.defaults)
        if unknown:
            raise DomainError(f"preset {self.preset!r} takes no parameter(s) {sorted(unknown)}")
        out = dict(preset.defaults)
        out.update({k: float(v) for k, v in self.params.items()})
        return out

    def with_N(self, N: int) -> "SpaceConfig":
        return SpaceConfig(self.preset, N, self.R, dict(self.params))


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedLine:
    """Uniform grid with a positive density.

    Attributes
    ----------
    nodes : ndarray
        Grid points, uniform spacing ``dx``.
    topology : str
        ``interval_neumann``, ``circle`` or ``truncated_line``.
    potential : ndarray
        ``V`` at the nodes.
    log_density : ndarray
        ``log w`` at the nodes; ``w`` is ``exp`` of it.
    normalized : bool
        Whether the total mass has been scaled to one.
    finite : bool
        False for spaces of infinite measure (Dirichlet truncation).
    K_BE : float
        Bakry-Emery curvature lower bound from the preset formula.
    R : float or None
        Truncation radius for line presets.
    period : float or None
        Circumference of a circle.
    """

    nodes: np.ndarray
    topology: str
    potential: np.ndarray
    log_density: np.ndarray
    normalized: bool
    finite: bool
    K_BE: float
    R: Optional[float] = None
    name: str = "custom"
    ghost_log_density: tuple = ()
    period: Optional[float] = None

    def __post_init__(self):
        for attr in ("nodes", "potential", "log_density"):
            object.__setattr__(self, attr, _readonly(getattr(self, attr)))

    @property
    def N(self) -> int:
        return self.nodes.size

    @cached_property
    def dx(self) -> float:
        if self.topology == CIRCLE:
            return float(self.period / self.N)
        return float(self.nodes[1] - self.nodes[0])

    @property
    def dirichlet(self) -> bool:
        return not self.finite

    @cached_property
    def density(self) -> np.ndarray:
        return _readonly(np.exp(self.log_density))

    @cached_property
    def cell_lengths(self) -> np.ndarray:
        """Trapezoidal lumping lengths ``mu_i``."""
        mu = np.full(self.N, self.dx)
        if self.topology == INTERVAL or (self.topology == TRUNCATED and self.finite):
            mu[0] = mu[-1] = 0.5 * self.dx
        return _readonly(mu)

    @cached_property
    def masses(self) -> np.ndarray:
        """Node masses ``mu_i w_i``."""
        return _readonly(self.cell_lengths * self.density)

    @cached_property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @cached_property
    def log_masses(self) -> np.ndarray:
        return _readonly(np.log(self.cell_lengths) + self.log_density)

    @cached_property
    def cells(self) -> tuple:
        """Pairs ``(i, j)`` of nodes joined by a cell, as two index arrays."""
        left = np.arange(self.N - 1)
        right = left + 1
        if self.topology == CIRCLE:
            left = np.append(left, self.N - 1)
            right = np.append(right, 0)
        return left, right

    @cached_property
    def cumulative_mass(self) -> np.ndarray:
        """Trapezoidal mass of ``[x_0, x_i]`` (along the circle from node 0)."""
        w = self.density
        inc = 0.5 * self.dx * (w[:-1] + w[1:])
        return _readonly(np.concatenate([[0.0], np.cumsum(inc)]))

    @cached_property
    def tail_mass(self) -> np.ndarray:
        """Mass from node ``i`` to the right end (to ``x_0 + period`` on a circle).

        Summed from the right so that small tails keep full relative precision.
        """
        w = self.density
        inc = 0.5 * self.dx * (w[:-1] + w[1:])
        last = 0.5 * self.dx * (w[-1] + w[0]) if self.topology == CIRCLE else 0.0
        tail = np.concatenate([np.cumsum(inc[::-1])[::-1], [0.0]]) + last
        return _readonly(tail)

    def require_finite(self, what: str) -> None:
        if not self.finite:
            raise RegimeError(f"{what} needs a space of finite measure; "
                              f"{self.name!r} has infinite measure (use the lambda0 branch)")

    def require_infinite(self, what: str) -> None:
        if self.finite:
            raise RegimeError(f"{what} needs a space of infinite measure; "
                              f"{self.name!r} has finite measure (use the lambda1 branch)")

    def scaled(self, factor: float) -> "WeightedLine":
        """Copy with the density multiplied by ``factor`` (no longer normalized)."""
        if not factor > 0:
            raise DomainError("scaling factor must be positive")
        shift = math.log(factor)
        out = WeightedLine(self.nodes, self.topology, self.potential - shift,
                           self.log_density + shift, False, self.finite, self.K_BE,
                           self.R, self.name,
                           tuple(g + shift for g in self.ghost_log_density), self.period)
        return out

    def density_at(self, s) -> np.ndarray:
        """Linear interpolation of the density (periodic on a circle)."""
        s = np.asarray(s, dtype=float)
        w = self.density
        if self.topology == CIRCLE:
            u = np.mod(s - self.nodes[0], self.period) / self.dx
            i = np.minimum(np.floor(u).astype(int), self.N - 1)
            tau = u - i
            return w[i] * (1.0 - tau) + w[(i + 1) % self.N] * tau
        return np.interp(s, self.nodes, w)

    def function(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def evaluate(self, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return GridFunction(self, f(self.nodes))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values on the nodes of a ``WeightedLine``."""

    space: WeightedLine
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(_node_array(self.space, self.values)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.space.N

    def integral(self) -> float:
        return float(self.space.masses @ self.values)

    def l1(self) -> float:
        return float(self.space.masses @ np.abs(self.values))

    def l2(self) -> float:
        return float(math.sqrt(self.space.masses @ self.values ** 2))

    def mean_zero(self) -> "GridFunction":
        sp = self.space
        sp.require_finite("weighted mean")
        return GridFunction(sp, self.values - self.integral() / sp.total_mass)


def as_values(space: WeightedLine, f) -> np.ndarray:
    """Node values from a ``GridFunction``, array or callable."""
    if isinstance(f, GridFunction):
        if f.space is not space and f.space.N != space.N:
            raise DomainError("grid function belongs to a different space")
        return np.asarray(f.values)
    if callable(f):
        f = f(space.nodes)
    return _node_array(space, f)


def _node_array(space: WeightedLine, values) -> np.ndarray:
    """Scalar or length-``N`` input as a length-``N`` float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return np.full(space.N, float(arr))
    if arr.shape != (space.N,):
        raise DomainError(f"expected {space.N} node values, got shape {arr.shape}")
    return arr


def build_space(config: SpaceConfig) -> WeightedLine:
    """Realize a preset on a grid.

    Raises
    ------
    DomainError
        For ``N < 16``, ``R < 4`` on line presets, parameters out of range, or
        a density that underflows double precision inside the window.
    """
    params = config.resolved_params()
    preset = PRESETS[config.preset]
    for k, v in params.items():
        _PARAM_CHECKS[k](v)
    N = int(config.N)
    if N < 16:
        raise DomainError(f"N must be at least 16, got {N}")

    period = None
    R = None
    if preset.topology == TRUNCATED:
        R = preset.default_radius if config.R is None else float(config.R)
        if not R >= 4:
            raise DomainError(f"truncation radius must be at least 4, got R={R}")
        nodes = np.linspace(-R, R, N)
    elif preset.topology == INTERVAL:
        nodes = np.linspace(0.0, params["L"], N)
    else:
        period = params["L"]
        nodes = np.arange(N) * (period / N)

    V = np.asarray(preset.potential(nodes, **params), dtype=float)
    K = float(preset.curvature(**params))
    dx = period / N if period is not None else float(nodes[1] - nodes[0])

    if V.size >= 3:
        second = (V[2:] - 2.0 * V[1:-1] + V[:-2]) / dx ** 2
        if K > second.min() + _K_SLACK + dx ** 2 * 10.0:
            raise DomainError("curvature bound exceeds the discrete second derivative of V")

    log_w = -V
    ghost = ()
    if preset.finite:
        mu = np.full(N, dx)
        if preset.topology != CIRCLE:
            mu[0] = mu[-1] = 0.5 * dx
        log_w = log_w - logsumexp(np.log(mu) - V)
    else:
        log_w = log_w - 0.5 * math.log(2.0 * math.pi)
        edge = np.array([nodes[0] - dx, nodes[-1] + dx])
        ghost = tuple(float(g) for g in
                      -np.asarray(preset.potential(edge, **params)) - 0.5 * math.log(2.0 * math.pi))

    if log_w.min() < math.log(_MIN_DENSITY):
        raise DomainError(
            f"density underflows on [{nodes[0]}, {nodes[-1]}] for preset {config.preset!r}; "
            "reduce the truncation radius")

    space = WeightedLine(nodes, preset.topology, V, log_w, preset.finite, preset.finite,
                         K, R, config.preset, ghost, period)
    if preset.finite and abs(space.total_mass - 1.0) > 1e-12:
        raise DomainError("normalization failed")
    return space


def _invert_cell_mass(w0, w1, dx, target):
    """Offset ``tau`` in ``[0, 1]`` with ``dx*(w0*tau + (w1-w0)*tau^2/2) = target``."""
    a = 0.5 * (w1 - w0) * dx
    b = w0 * dx
    if abs(a) <= 1e-14 * abs(b):
        return min(max(target / b, 0.0), 1.0)
    disc = max(b * b + 4.0 * a * target, 0.0)
    tau = 2.0 * target / (b + math.sqrt(disc))
    return min(max(tau, 0.0), 1.0)


def measure_of_sublevel(space: WeightedLine, s: float) -> float:
    """Mass of ``{x <= s}`` under the piecewise-linear density.

    On a circle this is the mass of the arc from the first node to ``s``.
    """
    x = space.nodes
    if space.topology == CIRCLE:
        s = x[0] + (float(s) - x[0]) % space.period
        upper = x[0] + space.period
    else:
        upper = x[-1]
    if s <= x[0]:
        return 0.0
    if s >= upper:
        return space.total_mass if space.topology != CIRCLE else float(space.cumulative_mass[-1]
                                                                      + _wrap_cell_mass(space))
    u = (s - x[0]) / space.dx
    i = min(int(math.floor(u)), space.N - 1)
    tau = u - i
    w = space.density
    w0 = w[i]
    w1 = w[(i + 1) % space.N]
    base = space.cumulative_mass[i]
    return float(base + space.dx * (w0 * tau + 0.5 * (w1 - w0) * tau * tau))


def _wrap_cell_mass(space):
    w = space.density
    return 0.5 * space.dx * (w[-1] + w[0])


def point_of_mass(space: WeightedLine, target: float, start: int = 0) -> float:
    """Position ``s`` where the mass accumulated from node ``start`` reaches ``target``.

    Walks forward (around the circle when periodic).
    """
    w = space.density
    dx = space.dx
    N = space.N
    n_cells = N if space.topology == CIRCLE else N - 1 - start
    acc = 0.0
    for k in range(n_cells):
        i = (start + k) % N
        j = (i + 1) % N
        cell = 0.5 * dx * (w[i] + w[j])
        if acc + cell >= target:
            tau = _invert_cell_mass(w[i], w[j], dx, target - acc)
            return float(space.nodes[start] + (k + tau) * dx)
        acc += cell
    return float(space.nodes[start] + n_cells * dx)


def slope(space: WeightedLine, f) -> GridFunction:
    """Discrete slope ``|f'|``: central differences inside, one-sided at interval ends."""
    v = as_values(space, f)
    dx = space.dx
    out = np.empty(space.N)
    if space.topology == CIRCLE:
        out[:] = (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * dx)
    else:
        out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
        out[0] = (v[1] - v[0]) / dx
        out[-1] = (v[-1] - v[-2]) / dx
    return GridFunction(space, np.abs(out))
