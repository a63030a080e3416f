"""Weighted Laplacian on a ``WeightedLine`` and its bottom eigenvalues.

The generator is the finite-volume discretization of ``(w f')' / w`` with
face weights ``sqrt(w_i w_{i+1})``:

    (L f)_i = [a_{i+1/2} (f_{i+1} - f_i) - a_{i-1/2} (f_i - f_{i-1})] / (dx mu_i w_i)

It is self-adjoint for ``<f, g> = sum_i mu_i w_i f_i g_i``. Conjugating by
``sqrt(mu_i w_i)`` gives a symmetric matrix whose off-diagonal entries are
``1 / (dx sqrt(mu_i mu_{i+1}))``, independent of the weight. Eigenvalues are
isolated by Sturm-sequence bisection and the eigenvectors by inverse
iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lapack

from .errors import DomainError, NumericalError
from .spaces import CIRCLE, GridFunction, WeightedLine, as_values

__all__ = [
    "TridiagonalOperator",
    "EigenResult",
    "assemble",
    "lambda1",
    "lambda0",
    "rayleigh",
    "sturm_count",
    "dirichlet_energy",
]

_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Tridiagonal matrix with optional periodic corners.

    ``lower[i]`` is entry ``(i+1, i)`` and ``upper[i]`` is entry ``(i, i+1)``.
    ``corner_lower`` is entry ``(N-1, 0)``, ``corner_upper`` entry ``(0, N-1)``.
    """

    diagonal: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    symmetrized: bool
    periodic: bool = False
    corner_lower: float = 0.0
    corner_upper: float = 0.0
    scaling: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return self.diagonal.size

    @property
    def off_diagonal(self) -> np.ndarray:
        if not self.symmetrized:
            raise DomainError("off_diagonal is only defined for the symmetrized operator")
        return self.upper

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Matrix product; ``f`` may carry extra trailing columns."""
        f = np.asarray(f, dtype=float)
        d = self.diagonal.reshape((-1,) + (1,) * (f.ndim - 1))
        up = self.upper.reshape((-1,) + (1,) * (f.ndim - 1))
        lo = self.lower.reshape((-1,) + (1,) * (f.ndim - 1))
        out = d * f
        out[:-1] += up * f[1:]
        out[1:] += lo * f[:-1]
        if self.periodic:
            out[0] += self.corner_upper * f[-1]
            out[-1] += self.corner_lower * f[0]
        return out

    def to_dense(self) -> np.ndarray:
        A = np.diag(self.diagonal) + np.diag(self.upper, 1) + np.diag(self.lower, -1)
        if self.periodic:
            A[0, -1] += self.corner_upper
            A[-1, 0] += self.corner_lower
        return A

    def symmetrize(self) -> "TridiagonalOperator":
        """Similarity transform by ``sqrt(mu_i w_i)`` (the ``scaling`` vector)."""
        if self.symmetrized:
            return self
        if self.scaling is None:
            raise DomainError("operator carries no scaling for symmetrization")
        s = self.scaling
        off = self.upper * s[:-1] / s[1:]
        corner = self.corner_upper * s[0] / s[-1] if self.periodic else 0.0
        return TridiagonalOperator(self.diagonal.copy(), off.copy(), off.copy(), True,
                                   self.periodic, corner, corner, s)


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Eigenpair of ``-Delta`` with ``Delta u = -lambda u``.

    ``eigenfunction`` is normalized to unit weighted ``L2`` norm;
    ``residual_norm`` is ``||(Delta + lambda) u||`` in the same norm.
    """

    eigenvalue: float
    eigenfunction: GridFunction
    residual_norm: float
    truncation_radius: Optional[float] = None


def _scaling(space: WeightedLine) -> np.ndarray:
    # sqrt(mu w) relative to its maximum, so tiny weights never underflow to 0 here
    lm = space.log_masses
    return np.exp(0.5 * (lm - lm.max()))


def assemble(space: WeightedLine) -> TridiagonalOperator:
    """Unsymmetrized generator of the weighted Laplacian on ``space``."""
    lw = space.log_density
    dx = space.dx
    mu = space.cell_lengths
    up_ratio = np.exp(0.5 * (lw[1:] - lw[:-1]))
    upper = up_ratio / (dx * mu[:-1])
    lower = 1.0 / (up_ratio * dx * mu[1:])
    diag = np.zeros(space.N)
    diag[:-1] -= upper
    diag[1:] -= lower
    corner_up = corner_lo = 0.0
    periodic = space.topology == CIRCLE
    if periodic:
        r = math.exp(0.5 * (lw[0] - lw[-1]))
        corner_lo = r / (dx * mu[-1])
        corner_up = 1.0 / (r * dx * mu[0])
        diag[-1] -= corner_lo
        diag[0] -= corner_up
    if space.dirichlet:
        g_left, g_right = space.ghost_log_density
        diag[0] -= math.exp(0.5 * (g_left - lw[0])) / (dx * mu[0])
        diag[-1] -= math.exp(0.5 * (g_right - lw[-1])) / (dx * mu[-1])
    return TridiagonalOperator(diag, lower, upper, False, periodic, corner_lo, corner_up,
                               _scaling(space))


def sturm_count(a, b, x: float, corner: float = 0.0, periodic: bool = False,
                pivmin: float = 0.0) -> int:
    """Number of eigenvalues below ``x`` of the symmetric matrix (a, b[, corner]).

    Counts negative pivots of the LDL^T factorization of ``A - x I``. In the
    periodic case the last row and column are kept as a border and eliminated
    last, which tracks the fill created by the corner entry. Pivots smaller
    than ``pivmin`` (default: eps times the largest entry) become ``-pivmin``.
    """
    n = len(a)
    if pivmin <= 0.0:
        pivmin = np.finfo(float).eps * max(max(abs(v) for v in a),
                                           max(abs(v) for v in b), abs(corner))
    tiny = -pivmin
    b2 = [bi * bi for bi in b]
    if not periodic:
        count = 0
        q = a[0] - x
        if abs(q) < pivmin:
            q = tiny
        if q < 0:
            count += 1
        for i in range(1, n):
            q = a[i] - x - b2[i - 1] / q
            if abs(q) < pivmin:
                q = tiny
            if q < 0:
                count += 1
        return count

    # bordered elimination of rows 0..n-2, last row/col accumulated in s
    count = 0
    q = a[0] - x
    if abs(q) < pivmin:
        q = tiny
    if q < 0:
        count += 1
    c = corner
    s = a[n - 1] - x - c * c / q
    for i in range(1, n - 1):
        border = (b[n - 2] if i == n - 2 else 0.0) - b[i - 1] * c / q
        q = a[i] - x - b2[i - 1] / q
        if abs(q) < pivmin:
            q = tiny
        if q < 0:
            count += 1
        s -= border * border / q
        c = border
    if s < 0:
        count += 1
    return count


def _kth_eigenvalue(op: TridiagonalOperator, k: int) -> float:
    """Bisection for the ``k``-th smallest eigenvalue (0-based) of ``-op``."""
    a = (-op.diagonal).tolist()
    b = (-op.upper).tolist()
    corner = -op.corner_upper
    absb = np.abs(op.upper)
    radius = np.zeros(op.N)
    radius[:-1] += absb
    radius[1:] += absb
    if op.periodic:
        radius[0] += abs(corner)
        radius[-1] += abs(corner)
    lo = float(np.min(-op.diagonal - radius))
    hi = float(np.max(-op.diagonal + radius))
    scale = max(abs(lo), abs(hi))
    tol = 4.0 * np.finfo(float).eps * scale
    pivmin = np.finfo(float).eps * scale
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if sturm_count(a, b, mid, corner, op.periodic, pivmin) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _solve_shifted(op: TridiagonalOperator, sigma: float, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(-op - sigma I) y = rhs``; Sherman-Morrison for the periodic corner."""
    d = -op.diagonal - sigma
    e = -op.upper
    if not op.periodic:
        _, _, _, y, info = lapack.dgtsv(e.copy(), d.copy(), e.copy(), rhs.copy())
        if info < 0:
            raise NumericalError("tridiagonal solve failed")
        return y
    c = -op.corner_upper
    gamma = -d[0] if d[0] != 0 else 1.0
    dd = d.copy()
    dd[0] -= gamma
    dd[-1] -= c * c / gamma
    u = np.zeros(op.N)
    u[0] = gamma
    u[-1] = c
    rhs2 = np.column_stack([rhs, u])
    _, _, _, sol, info = lapack.dgtsv(e.copy(), dd, e.copy(), rhs2)
    if info < 0:
        raise NumericalError("tridiagonal solve failed")
    y, z = sol[:, 0], sol[:, 1]
    vy = y[0] + c / gamma * y[-1]
    vz = z[0] + c / gamma * z[-1]
    return y - z * (vy / (1.0 + vz))


def _eigenpair(space: WeightedLine, k: int, deflate: bool):
    op = assemble(space).symmetrize()
    null = op.scaling / np.linalg.norm(op.scaling)
    lam = _kth_eigenvalue(op, k)
    scale = max(float(np.max(np.abs(op.diagonal))), 1.0)
    sigma = lam - 1e-12 * scale
    y = 1.0 + (np.arange(op.N) % 7) / 7.0
    y = y + np.linspace(-1.0, 1.0, op.N)
    best = None
    for _ in range(8):
        if deflate:
            y = y - null * (null @ y)
        y = y / np.linalg.norm(y)
        y = _solve_shifted(op, sigma, y)
        if not np.all(np.isfinite(y)):
            sigma -= 1e-10 * scale
            y = 1.0 + np.linspace(-1.0, 1.0, op.N)
            continue
        if deflate:
            y = y - null * (null @ y)
        y = y / np.linalg.norm(y)
        Ay = -op.apply(y)
        rq = float(y @ Ay)
        res = float(np.linalg.norm(Ay - rq * y))
        best = (rq, y, res)
        if res <= 1e-3 * _RESIDUAL_TOL * max(abs(rq), 1.0):
            break
    if best is None:
        raise NumericalError("inverse iteration did not produce a finite vector")
    rq, y, res = best
    if res > _RESIDUAL_TOL * max(abs(rq), 1.0):
        raise NumericalError(f"eigen residual {res:.3e} above tolerance", achieved=res)
    centered = np.arange(op.N) - 0.5 * (op.N - 1)
    corr = float(centered @ y)
    if corr < 0 or (corr == 0 and y[np.argmax(np.abs(y))] < 0):
        y = -y
    f = y / op.scaling
    f = f / math.sqrt(space.masses @ f ** 2)
    return rq, GridFunction(space, f), res


def lambda1(space: WeightedLine) -> EigenResult:
    """Spectral gap of a finite-measure space (first nonzero eigenvalue)."""
    space.require_finite("lambda1")
    lam, f, res = _eigenpair(space, 1, deflate=True)
    return EigenResult(lam, f, res)


def lambda0(space: WeightedLine) -> EigenResult:
    """Bottom of the spectrum of an infinite-measure space on its truncation window."""
    space.require_infinite("lambda0")
    lam, f, res = _eigenpair(space, 0, deflate=False)
    return EigenResult(lam, f, res, truncation_radius=space.R)


def dirichlet_energy(space: WeightedLine, f) -> float:
    """``sum over cells of a (f_j - f_i)^2 / dx`` (plus ghost terms), in the unit of
    ``exp(max log w)``; pair with ``_scaled_norm2``."""
    v = as_values(space, f)
    lw = space.log_density
    ref = float(lw.max())
    i, j = space.cells
    a = np.exp(0.5 * (lw[i] + lw[j]) - ref)
    e = float(a @ (v[j] - v[i]) ** 2) / space.dx
    if space.dirichlet:
        gl, gr = space.ghost_log_density
        e += (math.exp(0.5 * (gl + lw[0]) - ref) * v[0] ** 2
              + math.exp(0.5 * (gr + lw[-1]) - ref) * v[-1] ** 2) / space.dx
    return e


def _scaled_norm2(space: WeightedLine, v: np.ndarray) -> float:
    lw = space.log_density
    return float((space.cell_lengths * np.exp(lw - lw.max())) @ v ** 2)


def rayleigh(space: WeightedLine, f, mean_zero: bool = False) -> float:
    """Discrete Rayleigh quotient ``E(f) / ||f||^2`` on the grid."""
    v = np.array(as_values(space, f), dtype=float)
    floor = 0.0
    if mean_zero:
        space.require_finite("mean-zero projection")
        # a constant leaves only roundoff after projection
        floor = 1e-24 * _scaled_norm2(space, v)
        v = v - (space.masses @ v) / space.total_mass
    denom = _scaled_norm2(space, v)
    if not denom > floor:
        raise DomainError("Rayleigh quotient of the zero function")
    return dirichlet_energy(space, v) / denom
