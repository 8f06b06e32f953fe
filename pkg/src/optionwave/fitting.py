"""Calibrate the superposed wave model against an option-price surface.

Residuals are ``target(psi(s, t)) - price(s, t) / max(price)`` over every grid
node, where ``target`` is ``|psi|`` (default) or ``|psi|^2``. Parameters that
are not listed as free keep their template values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .blackscholes import BsParams, PriceSurface
from .errors import DomainError, UsageError
from .lm import FitProblem, FitReport, LmConfig, lm_fit
from .waves import (
    COMPONENTS,
    AdaptiveWeights,
    PacketParams,
    RogonParams,
    SolitaryParams,
    WaveParams,
    adaptive_beta,
    eval_general,
    flatten,
    unflatten,
)

AMPLITUDE = {name: f"A{i}" for i, name in enumerate(COMPONENTS, start=1)}
TARGETS = ("modulus", "pdf")


def _rogon2_zero() -> float:
    # first positive X where 1 + G/D vanishes at T = 0: 16/3 X^6 - 12 X^4 - 15 X^2 + 15/4 = 0
    roots = np.roots([16.0 / 3.0, -12.0, -15.0, 3.75])
    x2 = min(r.real for r in roots if abs(r.imag) < 1e-12 and r.real > 0)
    return math.sqrt(x2)


ROGON1_ZERO = math.sqrt(0.75)  # |1 - 4/(1 + 4X^2)| = 0 at X^2 = 3/4
ROGON2_ZERO = _rogon2_zero()


@dataclass(frozen=True)
class ModelSpec:
    """What to fit: enabled components, fixed sigma/beta, target transform and free parameters.

    ``free`` overrides the default free-parameter list. With ``shared_k`` the
    pseudo-parameter ``"k"`` drives the wave number of every enabled component
    (``packet.k0`` for the packet).
    """

    components: tuple = COMPONENTS
    sigma: float = 1.0
    beta: Union[float, AdaptiveWeights] = 1.0
    target: str = "modulus"
    shared_k: bool = False
    packet_terms: int = 2
    free: Optional[tuple] = None

    def __post_init__(self):
        comps = tuple(self.components)
        unknown = [c for c in comps if c not in COMPONENTS]
        if unknown:
            raise UsageError(f"unknown components {unknown}; choose from {COMPONENTS}")
        if not comps:
            raise UsageError("enable at least one component")
        object.__setattr__(self, "components", tuple(c for c in COMPONENTS if c in comps))
        if self.target not in TARGETS:
            raise UsageError(f"target must be one of {TARGETS}, got {self.target!r}")
        if not self.sigma > 0:
            raise UsageError("sigma must be positive")
        if self.packet_terms < 1:
            raise UsageError("packet needs at least one term")
        if not isinstance(self.beta, AdaptiveWeights) and self.beta == 0:
            raise UsageError("beta must be nonzero")
        if self.free is not None:
            object.__setattr__(self, "free", tuple(self.free))


def _k_names(spec: ModelSpec) -> list[str]:
    out = []
    for c in spec.components:
        out.append("packet.k0" if c == "packet" else f"{c}.k")
    return out


def default_free(spec: ModelSpec) -> list[str]:
    names: list[str] = []
    for c in spec.components:
        names.append(AMPLITUDE[c])
        if c == "packet":
            names += [f"packet.c{i}" for i in range(1, spec.packet_terms)]
            names += [f"packet.k{i}" for i in range(spec.packet_terms)]
        elif c in ("shock", "soliton"):
            names.append(f"{c}.k")
        else:
            names += [f"{c}.alpha", f"{c}.k"]
    if spec.shared_k:
        tied = set(_k_names(spec))
        names = [n for n in names if n not in tied] + ["k"]
    return names


def _beta_mag(spec: ModelSpec, s_mid: float) -> float:
    if isinstance(spec.beta, AdaptiveWeights):
        return abs(float(adaptive_beta(spec.beta, s_mid))) or abs(spec.beta.r) or 1.0
    return abs(spec.beta)


def default_initial(surface: PriceSurface, spec: ModelSpec) -> WaveParams:
    """Heuristic starting point scaled to the surface's s range."""
    s = surface.s_grid.points()
    s_lo, s_hi = float(s[0]), float(s[-1])
    span = max(s_hi - s_lo, 1e-12)
    sigma = spec.sigma
    b = _beta_mag(spec, 0.5 * (s_lo + s_hi))

    if s_lo < 0 < s_hi:
        s_zero = 1.0
    else:
        # put the rogue-wave zero a quarter of the way into the window, where payoffs kink
        s_zero = abs(s_lo + 0.25 * span)
    alpha1 = math.sqrt(2.0) * ROGON1_ZERO / s_zero
    alpha2 = math.sqrt(2.0) * ROGON2_ZERO / s_zero

    terms = [(1.0, 0.0)] + [(0.5 / i, i * math.pi / span) for i in range(1, spec.packet_terms)]
    packet = PacketParams(1.0, terms, sigma)
    enabled = set(spec.components)
    amps = (
        0.5 if "packet" in enabled else 0.0,
        0.5 * math.sqrt(b / sigma) if "shock" in enabled else 0.0,
        0.5 * math.sqrt(b / sigma) if "soliton" in enabled else 0.0,
        1.0 / (alpha1 * math.sqrt(sigma / (2.0 * b))) if "rogon1" in enabled else 0.0,
        1.0 / (alpha2 * math.sqrt(sigma / (2.0 * b))) if "rogon2" in enabled else 0.0,
    )
    return WaveParams(
        amps,
        packet,
        SolitaryParams(sigma, -b, 0.0),
        SolitaryParams(sigma, b, 0.0),
        RogonParams(alpha1, 0.0, sigma, b),
        RogonParams(alpha2, 0.0, sigma, b),
        spec.beta,
    )


def _bounds(name: str) -> tuple[float, float]:
    if name.startswith("A"):
        return 0.0, np.inf
    if name.endswith(".alpha"):
        return 1e-8, np.inf
    return -np.inf, np.inf


@dataclass
class ModelProblem:
    """A :class:`FitProblem` plus the bookkeeping to map free vectors back to WaveParams."""

    problem: FitProblem
    x0: np.ndarray
    flat_names: list
    flat_base: np.ndarray
    slots: list  # per free parameter, indices into the flat vector
    scale: float
    target: np.ndarray = field(repr=False)

    def params_at(self, x: np.ndarray) -> WaveParams:
        flat = self.flat_base.copy()
        for value, idx in zip(x, self.slots):
            flat[idx] = value
        return unflatten(self.flat_names, flat)


def model_values(p: WaveParams, s, t, target: str = "modulus"):
    psi = eval_general(p, s, t)
    mod2 = psi.real**2 + psi.imag**2
    return np.sqrt(mod2) if target == "modulus" else mod2


def build_problem(
    surface: PriceSurface, spec: ModelSpec, initial: Optional[WaveParams] = None
) -> ModelProblem:
    template = initial if initial is not None else default_initial(surface, spec)
    enabled = set(spec.components)
    amps = tuple(a if c in enabled else 0.0 for c, a in zip(COMPONENTS, template.amplitudes))
    template = replace(template, amplitudes=amps)

    flat_names, flat = flatten(template)
    index = {n: i for i, n in enumerate(flat_names)}
    free = list(spec.free) if spec.free is not None else default_free(spec)
    slots = []
    for name in free:
        if name == "k":
            slots.append([index[n] for n in _k_names(spec)])
        elif name in index:
            slots.append([index[name]])
        else:
            raise UsageError(f"unknown free parameter {name!r}")
    x0 = np.array([flat[idx[0]] for idx in slots], dtype=float)
    lower = np.array([_bounds(n)[0] for n in free])
    upper = np.array([_bounds(n)[1] for n in free])
    x0 = np.minimum(np.maximum(x0, lower), upper)

    peak = float(surface.prices.max())
    scale = peak if peak > 0 else 1.0
    target = (surface.prices / scale).ravel()
    s, t = surface.mesh()
    s, t = s.ravel(), t.ravel()

    if len(free) > target.size:
        raise UsageError(f"over-parameterised model: {len(free)} parameters for {target.size} prices")

    mp = ModelProblem(None, x0, flat_names, flat, slots, scale, target)

    def residuals(x):
        try:
            p = mp.params_at(x)
        except UsageError as exc:
            raise DomainError(str(exc)) from exc
        return model_values(p, s, t, spec.target) - target

    mp.problem = FitProblem(residuals, len(free), target.size, lower, upper, free)
    return mp


def fit_general_model(
    surface: PriceSurface,
    spec: ModelSpec,
    cfg: LmConfig = LmConfig(),
    initial: Optional[WaveParams] = None,
    x0: Optional[Sequence[float]] = None,
) -> tuple[FitReport, WaveParams]:
    """Run LM on the surface; ``x0`` optionally replaces the template's free values."""
    mp = build_problem(surface, spec, initial)
    start = mp.x0 if x0 is None else mp.problem.clip(np.asarray(x0, dtype=float))
    report = lm_fit(mp.problem, start, cfg)
    return report, mp.params_at(report.params)


def spec_for_surface(surface: PriceSurface, **kwargs) -> ModelSpec:
    """ModelSpec with sigma and beta taken from a Black-Scholes surface (beta = r)."""
    meta = surface.meta
    if isinstance(meta, BsParams):
        kwargs.setdefault("sigma", meta.vol)
        if meta.rate != 0:
            kwargs.setdefault("beta", meta.rate)
    return ModelSpec(**kwargs)
