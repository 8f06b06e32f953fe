"""Black-Scholes reference prices, Greeks and price surfaces on (s, t) grids.

Time is calendar time ``t`` with time-to-expiry ``tau = T - t`` so that price
surfaces share the (s, t) axes of the wave function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .errors import DomainError, ValidationError
from .numerics import Grid1D, erfc

SQRT2 = math.sqrt(2.0)


def norm_cdf(x):
    # erfc keeps full relative precision in the lower tail
    return 0.5 * erfc(-np.asarray(x) / SQRT2)


def norm_pdf(x):
    x = np.asarray(x)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class BsParams:
    strike: float
    rate: float
    vol: float
    expiry: float
    kind: str = "call"

    def __post_init__(self):
        if self.kind not in ("call", "put"):
            raise DomainError(f"option kind must be 'call' or 'put', got {self.kind!r}")
        for name in ("strike", "vol", "expiry"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")
        if not np.isfinite(self.rate):
            raise DomainError("rate must be finite")


class BsGreeks(NamedTuple):
    delta: Any
    gamma: Any
    vega: Any
    theta: Any
    rho: Any


def _tau(p: BsParams, s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t >= p.expiry):
        raise DomainError(f"t must be earlier than expiry {p.expiry}")
    if np.any(s <= 0):
        raise DomainError("stock price s must be positive")
    return s, p.expiry - t


def _d1_d2(p: BsParams, s, tau):
    vol_sqrt = p.vol * np.sqrt(tau)
    d1 = (np.log(s / p.strike) + (p.rate + 0.5 * p.vol * p.vol) * tau) / vol_sqrt
    return d1, d1 - vol_sqrt


def bs_price(p: BsParams, s, t):
    s, tau = _tau(p, s, t)
    d1, d2 = _d1_d2(p, s, tau)
    disc = p.strike * np.exp(-p.rate * tau)
    if p.kind == "call":
        price = s * norm_cdf(d1) - disc * norm_cdf(d2)
    else:
        price = disc * norm_cdf(-d2) - s * norm_cdf(-d1)
    return np.maximum(price, 0.0)[()]


def bs_greeks(p: BsParams, s, t) -> BsGreeks:
    """Closed-form Greeks; theta is d price / d t in calendar time."""
    s, tau = _tau(p, s, t)
    d1, d2 = _d1_d2(p, s, tau)
    sqrt_tau = np.sqrt(tau)
    disc = p.strike * np.exp(-p.rate * tau)
    phi = norm_pdf(d1)
    gamma = phi / (s * p.vol * sqrt_tau)
    vega = s * phi * sqrt_tau
    decay = -s * phi * p.vol / (2.0 * sqrt_tau)
    if p.kind == "call":
        delta = norm_cdf(d1)
        theta = decay - p.rate * disc * norm_cdf(d2)
        rho = tau * disc * norm_cdf(d2)
    else:
        delta = norm_cdf(d1) - 1.0
        theta = decay + p.rate * disc * norm_cdf(-d2)
        rho = -tau * disc * norm_cdf(-d2)
    return BsGreeks(*(np.asarray(g)[()] for g in (delta, gamma, vega, theta, rho)))


@dataclass(frozen=True, eq=False)
class PriceSurface:
    """Option prices on an (s, t) grid, t-major like :class:`~optionwave.numerics.Field2D`.

    ``prices[j, i]`` is the price at ``(s_i, t_j)``. ``meta`` is a :class:`BsParams`
    for generated surfaces or a dict source descriptor for ingested ones.
    """

    s_grid: Grid1D
    t_grid: Grid1D
    prices: np.ndarray
    meta: Any = field(default=None)

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        if prices.shape != (self.t_grid.count, self.s_grid.count):
            raise ValidationError(
                f"price array shape {prices.shape} does not match grids "
                f"(t={self.t_grid.count}, s={self.s_grid.count})"
            )
        if not np.all(np.isfinite(prices)):
            raise ValidationError("prices must be finite")
        if np.any(prices < 0):
            j, i = np.argwhere(prices < 0)[0]
            raise ValidationError(f"negative price at s={self.s_grid.point(i)}, t={self.t_grid.point(j)}")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcast s and t arrays matching ``prices``."""
        s, t = np.meshgrid(self.s_grid.points(), self.t_grid.points())
        return s, t

    def equals(self, other: "PriceSurface", rtol: float = 1e-12) -> bool:
        """Same prices exactly and grid points equal to ``rtol`` (grids rebuilt from CSV may differ by an ulp)."""
        for mine, theirs in ((self.s_grid, other.s_grid), (self.t_grid, other.t_grid)):
            if mine.count != theirs.count:
                return False
            if not np.allclose(mine.points(), theirs.points(), rtol=rtol, atol=rtol):
                return False
        return np.array_equal(self.prices, other.prices)


def generate_surface(p: BsParams, s_grid: Grid1D, t_grid: Grid1D) -> PriceSurface:
    s = s_grid.points()
    t = t_grid.points()
    bad_s = [i for i, v in enumerate(s) if not v > 0]
    bad_t = [j for j, v in enumerate(t) if not v < p.expiry]
    if bad_s or bad_t:
        raise DomainError(
            f"grid outside the pricing domain: s indices {bad_s} (need s > 0), "
            f"t indices {bad_t} (need t < {p.expiry})"
        )
    prices = bs_price(p, s[np.newaxis, :], t[:, np.newaxis])
    return PriceSurface(s_grid, t_grid, np.atleast_2d(prices), p)
