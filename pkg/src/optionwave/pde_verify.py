"""Finite-difference residual checks of sampled fields against the NLS and linear equations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import UsageError
from .numerics import Field2D, Grid1D, diff_ss_interior, diff_t_interior


@dataclass(frozen=True, eq=False)
class ResidualField:
    """Complex residuals at interior nodes; ``residuals[j-1, i-1]`` belongs to node (s_i, t_j)."""

    residuals: np.ndarray
    max_abs: float
    l2: float
    grid_steps: tuple[float, float]

    @classmethod
    def from_residuals(cls, residuals: np.ndarray, h_s: float, h_t: float) -> "ResidualField":
        mod = np.abs(residuals)
        # discrete L2 norm over the interior, weighted by the cell area
        l2 = float(np.sqrt(np.sum(mod * mod) * h_s * h_t))
        return cls(residuals, float(mod.max()), l2, (h_s, h_t))


def _check(field: Field2D, sigma: float) -> None:
    if field.s_grid.count < 3 or field.t_grid.count < 3:
        raise UsageError("residual checks need at least a 3x3 grid")
    if not sigma > 0:
        raise UsageError(f"sigma must be positive, got {sigma}")


def nls_residual(field: Field2D, sigma: float, beta: float) -> ResidualField:
    """i psi_t + (sigma/2) psi_ss + beta |psi|^2 psi at every interior node."""
    _check(field, sigma)
    psi = field.values[1:-1, 1:-1]
    mod2 = psi.real**2 + psi.imag**2
    res = 1j * diff_t_interior(field) + 0.5 * sigma * diff_ss_interior(field) + beta * mod2 * psi
    return ResidualField.from_residuals(res, field.s_grid.step, field.t_grid.step)


def linear_residual(field: Field2D, sigma: float) -> ResidualField:
    """i sigma psi_t + (sigma^2/2) psi_ss at every interior node."""
    _check(field, sigma)
    res = 1j * sigma * diff_t_interior(field) + 0.5 * sigma * sigma * diff_ss_interior(field)
    return ResidualField.from_residuals(res, field.s_grid.step, field.t_grid.step)


def convergence_order(residuals_at: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(max_abs) against log(h)."""
    if len(residuals_at) < 2:
        raise UsageError("convergence order needs at least two refinement levels")
    h = np.array([r[0] for r in residuals_at], dtype=float)
    err = np.array([r[1] for r in residuals_at], dtype=float)
    if np.any(np.diff(h) >= 0):
        raise UsageError("step sizes must be strictly decreasing")
    if np.any(err <= 0):
        # an exact zero residual has no measurable order
        return float("nan")
    slope, _ = np.polyfit(np.log(h), np.log(err), 1)
    return float(slope)


@dataclass
class RefinementStudy:
    levels: list  # of (h_s, h_t, max_abs, l2)
    order: float


def refinement_study(
    fn: Callable,
    s_grid: Grid1D,
    t_grid: Grid1D,
    residual: Callable[[Field2D], ResidualField],
    levels: int = 3,
) -> RefinementStudy:
    """Sample ``fn`` on successively halved grids and fit the residual decay rate."""
    if levels < 2:
        raise UsageError("need at least two refinement levels")
    rows = []
    for _ in range(levels):
        r = residual(Field2D.sample(fn, s_grid, t_grid))
        rows.append((s_grid.step, t_grid.step, r.max_abs, r.l2))
        s_grid, t_grid = s_grid.refined(), t_grid.refined()
    order = convergence_order([(row[0], row[2]) for row in rows])
    return RefinementStudy(rows, order)
