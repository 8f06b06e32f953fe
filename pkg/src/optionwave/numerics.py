"""Uniform grids, complex fields on (s, t) rectangles, stencils and special functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import UsageError

__all__ = [
    "Grid1D",
    "Field2D",
    "erf",
    "erfc",
    "sech",
    "tanh",
    "central_diff_t",
    "second_diff_s",
    "diff_t_interior",
    "diff_ss_interior",
]


def erf(x):
    """Gauss error function (scalar or array)."""
    return special.erf(x)


def erfc(x):
    """Complementary error function, accurate in the far tail where 1 - erf(x) cancels."""
    return special.erfc(x)


def sech(x):
    """Hyperbolic secant, written as 2e^{-|x|}/(1+e^{-2|x|}) so large |x| underflows to 0."""
    e = np.exp(-np.abs(x))
    return 2.0 * e / (1.0 + e * e)


def tanh(x):
    return np.tanh(x)


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``start + i*step`` for ``0 <= i < count``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not np.isfinite(self.start) or not np.isfinite(self.step):
            raise UsageError("grid start and step must be finite")
        if self.step <= 0:
            raise UsageError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 1:
            raise UsageError(f"grid count must be a positive integer, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def linspace(cls, start: float, stop: float, count: int) -> "Grid1D":
        """Grid from ``start`` to ``stop`` inclusive with ``count`` points."""
        count = int(count)
        if count == 1:
            if start != stop:
                raise UsageError("a one-point grid needs start == stop")
            return cls(float(start), 1.0, 1)
        if stop <= start:
            raise UsageError(f"grid stop {stop} must exceed start {start}")
        return cls(float(start), (float(stop) - float(start)) / (count - 1), count)

    @classmethod
    def parse(cls, text: str) -> "Grid1D":
        """Parse ``start:stop:count``."""
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be 'start:stop:count', got {text!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise UsageError(f"grid must be 'start:stop:count', got {text!r}") from exc
        return cls.linspace(start, stop, count)

    @property
    def stop(self) -> float:
        return self.point(self.count - 1)

    def point(self, i: int) -> float:
        if not 0 <= i < self.count:
            raise UsageError(f"grid index {i} outside [0, {self.count})")
        return self.start + i * self.step

    def points(self) -> np.ndarray:
        return self.start + np.arange(self.count) * self.step

    def refined(self) -> "Grid1D":
        """Same interval with the step halved."""
        return Grid1D(self.start, self.step / 2.0, 2 * (self.count - 1) + 1)

    def __str__(self) -> str:
        return f"{self.start!r}:{self.stop!r}:{self.count}"


@dataclass(frozen=True, eq=False)
class Field2D:
    """Complex samples on an (s, t) grid, stored t-major: ``values[j, i]`` is psi(s_i, t_j)."""

    s_grid: Grid1D
    t_grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.t_grid.count, self.s_grid.count):
            raise UsageError(
                f"field shape {values.shape} does not match grids "
                f"(t={self.t_grid.count}, s={self.s_grid.count})"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, fn: Callable, s_grid: Grid1D, t_grid: Grid1D) -> "Field2D":
        """Evaluate a vectorised ``fn(s, t)`` on the grid."""
        s = s_grid.points()[np.newaxis, :]
        t = t_grid.points()[:, np.newaxis]
        values = np.broadcast_to(fn(s, t), (t_grid.count, s_grid.count))
        return cls(s_grid, t_grid, values)

    def __getitem__(self, idx) -> complex:
        i, j = idx
        return complex(self.values[j, i])

    def scaled(self, c: complex) -> "Field2D":
        return Field2D(self.s_grid, self.t_grid, c * self.values)


def central_diff_t(field: Field2D, i: int, j: int) -> complex:
    """Second-order central difference of psi in t at grid node (s_i, t_j)."""
    if not 0 <= i < field.s_grid.count or not 1 <= j <= field.t_grid.count - 2:
        raise UsageError(f"central_diff_t needs an interior t index, got (i={i}, j={j})")
    v = field.values
    return complex((v[j + 1, i] - v[j - 1, i]) / (2.0 * field.t_grid.step))


def second_diff_s(field: Field2D, i: int, j: int) -> complex:
    """Three-point second difference of psi in s at grid node (s_i, t_j)."""
    if not 1 <= i <= field.s_grid.count - 2 or not 0 <= j < field.t_grid.count:
        raise UsageError(f"second_diff_s needs an interior s index, got (i={i}, j={j})")
    v = field.values
    h = field.s_grid.step
    return complex((v[j, i + 1] - 2.0 * v[j, i] + v[j, i - 1]) / (h * h))


def diff_t_interior(field: Field2D) -> np.ndarray:
    """central_diff_t over every interior node, shape (nt-2, ns-2)."""
    v = field.values
    return (v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * field.t_grid.step)


def diff_ss_interior(field: Field2D) -> np.ndarray:
    """second_diff_s over every interior node, shape (nt-2, ns-2)."""
    v = field.values
    h = field.s_grid.step
    return (v[1:-1, 2:] - 2.0 * v[1:-1, 1:-1] + v[1:-1, :-2]) / (h * h)
