"""Closed-form wave components of the adaptive NLS option-pricing model.

Every evaluator accepts scalars or broadcastable numpy arrays for ``s`` and ``t``
and returns complex values of psi(s, t). The governing equation in defect form is

    i psi_t + (sigma/2) psi_ss + beta |psi|^2 psi = 0

and the linear wave packet solves ``i sigma psi_t + (sigma^2/2) psi_ss = 0``.

Both rogue-wave solutions are the canonical rational solutions of
``i u_T + u_XX/2 + |u|^2 u = 0`` carried over by

    X = alpha (s - sigma k t) / sqrt(2),    T = sigma alpha^2 t / 2,
    psi = alpha sqrt(sigma / (2 beta)) u(X, T) exp(i (k s - sigma k^2 t / 2)).

First order (Peregrine): ``u = [1 - 4(1 + 2iT)/(1 + 4X^2 + 4T^2)] e^{iT}``.
Second order: ``u = [1 + (G + i T H)/D] e^{iT}`` with

    G = 3/8 - 3X^2 - 2X^4 - 9T^2 - 10T^4 - 12X^2 T^2
    H = 15/4 + 6X^2 - 4X^4 - 2T^2 - 4T^4 - 8X^2 T^2
    D = (3/4 + 9X^2 + 4X^4 + 16/3 X^6 + 33T^2 + 36T^4 + 16/3 T^6
         - 24X^2 T^2 + 16X^4 T^2 + 16X^2 T^4) / 8

D >= 3/32 everywhere, and |u| peaks at 5 at the origin (3 for first order). The
coefficients of H follow from substituting this ansatz into the canonical equation
and matching monomials; the test suite re-checks the residual symbolically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, UsageError
from .numerics import erf, sech, tanh

COMPONENTS = ("packet", "shock", "soliton", "rogon1", "rogon2")


@dataclass(frozen=True)
class AdaptiveWeights:
    """Interest rate ``r`` and erf-network weights ``(w1, w2, w3)`` of the adaptive potential."""

    r: float
    terms: tuple = ()

    def __post_init__(self):
        terms = tuple(tuple(float(w) for w in term) for term in self.terms)
        for i, term in enumerate(terms):
            if len(term) != 3:
                raise UsageError(f"adaptive weight term {i} must be a triple, got {term}")
            if term[2] == 0:
                raise DomainError(f"adaptive weight w3 of term {i} must be nonzero")
        object.__setattr__(self, "terms", terms)


@dataclass(frozen=True)
class PacketParams:
    amplitude: float
    terms: tuple  # (c_i, k_i) pairs
    sigma: float

    def __post_init__(self):
        terms = tuple((float(c), float(k)) for c, k in self.terms)
        if not terms:
            raise UsageError("a wave packet needs at least one plane-wave term")
        if not self.sigma > 0:
            raise DomainError(f"packet sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "terms", terms)

    def omegas(self) -> list[float]:
        return [omega(self.sigma, k) for _, k in self.terms]


@dataclass(frozen=True)
class SolitaryParams:
    """Parameters of the shock (tanh) and soliton (sech) waves."""

    sigma: float
    beta: float
    k: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise UsageError(f"sign must be +1 or -1, got {self.sign}")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.beta == 0:
            raise DomainError("beta must be nonzero")


@dataclass(frozen=True)
class RogonParams:
    alpha: float
    k: float
    sigma: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"rogon scaling alpha must be positive, got {self.alpha}")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


BetaSource = Union[float, AdaptiveWeights, None]


@dataclass(frozen=True)
class WaveParams:
    """Full parameter set of the superposed five-wave model.

    ``beta_source`` of ``None`` keeps each component's own beta. A number or
    :class:`AdaptiveWeights` overrides them: the shock gets ``-|beta|`` and the
    other components ``+|beta|``, so every square root stays real.
    """

    amplitudes: tuple
    packet: PacketParams
    shock: SolitaryParams
    soliton: SolitaryParams
    rogon1: RogonParams
    rogon2: RogonParams
    beta_source: BetaSource = None

    def __post_init__(self):
        amps = tuple(float(a) for a in self.amplitudes)
        if len(amps) != 5:
            raise UsageError(f"need 5 amplitudes, got {len(amps)}")
        object.__setattr__(self, "amplitudes", amps)
        if self.beta_source is not None and not isinstance(self.beta_source, AdaptiveWeights):
            object.__setattr__(self, "beta_source", float(self.beta_source))

    def flatten(self) -> tuple[list[str], np.ndarray]:
        return flatten(self)


# --------------------------------------------------------------------------- kinematics


def omega(sigma: float, k: float) -> float:
    """Angular frequency sigma k^2 / 2 of a plane wave."""
    return sigma * k * k / 2.0


def phase_velocity(sigma: float, k: float) -> float:
    if k == 0:
        raise DomainError("phase velocity is undefined for k = 0")
    return sigma * k / 2.0


def group_velocity(sigma: float, k: float) -> float:
    """d omega / dk = sigma k."""
    return sigma * k


def packet_center(sigma: float, k: float, t: float) -> float:
    return t * group_velocity(sigma, k)


# --------------------------------------------------------------------------- potential


def adaptive_beta(w: AdaptiveWeights, s):
    """beta(r, w) = r * sum_i w1_i erf(w2_i s / w3_i); just r when there are no terms."""
    if not w.terms:
        return float(w.r) if np.ndim(s) == 0 else np.full(np.shape(s), float(w.r))
    total = 0.0
    for w1, w2, w3 in w.terms:
        total = total + w1 * erf(w2 * np.asarray(s, dtype=float) / w3)
    return w.r * total


# --------------------------------------------------------------------------- kernels


def _packet(p: PacketParams, s, t):
    total = 0j
    for c, k in p.terms:
        total = total + c * np.exp(1j * (k * s - omega(p.sigma, k) * t))
    return p.amplitude * total


def _shock(sign, sigma, beta, k, s, t):
    ratio = -sigma / beta
    if np.any(ratio <= 0):
        raise DomainError("shock wave needs sigma/beta < 0 (beta < 0 for sigma > 0)")
    phase = k * s - 0.5 * sigma * t * (2.0 + k * k)
    return sign * np.sqrt(ratio) * tanh(s - sigma * k * t) * np.exp(1j * phase)


def _soliton(sign, sigma, beta, k, s, t):
    ratio = sigma / beta
    if np.any(ratio <= 0):
        raise DomainError("soliton needs sigma/beta > 0")
    phase = k * s - 0.5 * sigma * t * (k * k - 1.0)
    return sign * np.sqrt(ratio) * sech(s - sigma * k * t) * np.exp(1j * phase)


def _rogon_frame(alpha, k, sigma, beta, s, t):
    if np.any(sigma * beta <= 0):
        raise DomainError("rogue wave needs sigma*beta > 0")
    background = alpha * np.sqrt(sigma / (2.0 * beta))
    x = alpha * (s - sigma * k * t) / math.sqrt(2.0)
    tau = sigma * alpha * alpha * t / 2.0
    carrier = np.exp(1j * (k * s + 0.5 * sigma * (alpha * alpha - k * k) * t))
    return background, x, tau, carrier


def _rogon1(alpha, k, sigma, beta, s, t):
    background, x, tau, carrier = _rogon_frame(alpha, k, sigma, beta, s, t)
    bracket = 1.0 - 4.0 * (1.0 + 2j * tau) / (1.0 + 4.0 * x * x + 4.0 * tau * tau)
    return background * bracket * carrier


def _rogon2_polys(x, tau):
    """G, T*H and D of the second-order rational rogue wave in canonical (X, T)."""
    x2 = x * x
    t2 = tau * tau
    g = 0.375 - 3.0 * x2 - 2.0 * x2 * x2 - 9.0 * t2 - 10.0 * t2 * t2 - 12.0 * x2 * t2
    h = 3.75 + 6.0 * x2 - 4.0 * x2 * x2 - 2.0 * t2 - 4.0 * t2 * t2 - 8.0 * x2 * t2
    d = (
        0.75
        + 9.0 * x2
        + 4.0 * x2 * x2
        + (16.0 / 3.0) * x2 * x2 * x2
        + 33.0 * t2
        + 36.0 * t2 * t2
        + (16.0 / 3.0) * t2 * t2 * t2
        - 24.0 * x2 * t2
        + 16.0 * x2 * x2 * t2
        + 16.0 * x2 * t2 * t2
    ) / 8.0
    return g, tau * h, d


def rogon2_polynomials(p: RogonParams, s, t):
    """P2, Q2, R2 of the two-rogon solution in the model's (s, t) variables."""
    _, x, tau, _ = _rogon_frame(p.alpha, p.k, p.sigma, p.beta, s, t)
    return _rogon2_polys(x, tau)


def _rogon2(alpha, k, sigma, beta, s, t):
    background, x, tau, carrier = _rogon_frame(alpha, k, sigma, beta, s, t)
    g, q, d = _rogon2_polys(x, tau)
    # D >= 3/32 analytically; a failure here means the polynomials were edited.
    assert np.all(d > 0), "two-rogon denominator must be positive"
    return background * (1.0 + (g + 1j * q) / d) * carrier


# --------------------------------------------------------------------------- evaluators


def eval_packet(p: PacketParams, s, t):
    return _packet(p, s, t)


def eval_shock(p: SolitaryParams, s, t):
    return _shock(p.sign, p.sigma, p.beta, p.k, s, t)


def eval_soliton(p: SolitaryParams, s, t):
    return _soliton(p.sign, p.sigma, p.beta, p.k, s, t)


def eval_one_rogon(p: RogonParams, s, t):
    return _rogon1(p.alpha, p.k, p.sigma, p.beta, s, t)


def eval_two_rogon(p: RogonParams, s, t):
    return _rogon2(p.alpha, p.k, p.sigma, p.beta, s, t)


def resolve_beta(p: WaveParams, s):
    """Magnitude of the shared beta at ``s``, or None when components keep their own."""
    src = p.beta_source
    if src is None:
        return None
    if isinstance(src, AdaptiveWeights):
        b = np.abs(adaptive_beta(src, s))
    else:
        b = abs(src)
    if np.any(b == 0):
        raise DomainError("market-heat potential beta vanishes on the evaluation grid")
    return b


def eval_component(p: WaveParams, name: str, s, t, beta_mag=None):
    """Evaluate one component of ``p`` without its amplitude."""
    if name == "packet":
        return _packet(p.packet, s, t)
    if name in ("shock", "soliton"):
        q = getattr(p, name)
        beta = q.beta
        if beta_mag is not None:
            beta = -beta_mag if name == "shock" else beta_mag
        kernel = _shock if name == "shock" else _soliton
        return kernel(q.sign, q.sigma, beta, q.k, s, t)
    if name in ("rogon1", "rogon2"):
        q = getattr(p, name)
        beta = q.beta if beta_mag is None else beta_mag
        kernel = _rogon1 if name == "rogon1" else _rogon2
        return kernel(q.alpha, q.k, q.sigma, beta, s, t)
    raise UsageError(f"unknown component {name!r}")


def eval_general(p: WaveParams, s, t):
    """A1 packet + A2 shock + A3 soliton + A4 rogon1 + A5 rogon2; zero amplitudes are skipped."""
    beta_mag = resolve_beta(p, s)
    total = None
    for name, amp in zip(COMPONENTS, p.amplitudes):
        if amp == 0:
            continue
        try:
            term = amp * eval_component(p, name, s, t, beta_mag)
        except DomainError as exc:
            raise DomainError(f"{name}: {exc}") from exc
        total = term if total is None else total + term
    if total is None:
        return np.zeros(np.broadcast(np.asarray(s), np.asarray(t)).shape, dtype=complex)[()]
    return total


def pdf(z):
    """|psi|^2 as re^2 + im^2."""
    z = np.asarray(z)
    return (z.real * z.real + z.imag * z.imag)[()]


# --------------------------------------------------------------------------- flat vectors


def flatten(p: WaveParams) -> tuple[list[str], np.ndarray]:
    """Self-describing flat view of ``p``; :func:`unflatten` inverts it exactly."""
    names: list[str] = []
    values: list[float] = []

    def put(name, value):
        names.append(name)
        values.append(float(value))

    for i, a in enumerate(p.amplitudes, start=1):
        put(f"A{i}", a)
    put("packet.amplitude", p.packet.amplitude)
    put("packet.sigma", p.packet.sigma)
    for i, (c, k) in enumerate(p.packet.terms):
        put(f"packet.c{i}", c)
        put(f"packet.k{i}", k)
    for name in ("shock", "soliton"):
        q = getattr(p, name)
        put(f"{name}.sign", q.sign)
        put(f"{name}.sigma", q.sigma)
        put(f"{name}.beta", q.beta)
        put(f"{name}.k", q.k)
    for name in ("rogon1", "rogon2"):
        q = getattr(p, name)
        put(f"{name}.alpha", q.alpha)
        put(f"{name}.k", q.k)
        put(f"{name}.sigma", q.sigma)
        put(f"{name}.beta", q.beta)
    src = p.beta_source
    if isinstance(src, AdaptiveWeights):
        put("beta.r", src.r)
        for i, (w1, w2, w3) in enumerate(src.terms):
            put(f"beta.w1_{i}", w1)
            put(f"beta.w2_{i}", w2)
            put(f"beta.w3_{i}", w3)
    elif src is not None:
        put("beta", src)
    return names, np.array(values)


def unflatten(names, values) -> WaveParams:
    d = dict(zip(names, (float(v) for v in values)))
    if len(d) != len(names):
        raise UsageError("duplicate parameter names")
    n_terms = sum(1 for n in names if n.startswith("packet.c"))
    packet = PacketParams(
        d["packet.amplitude"],
        tuple((d[f"packet.c{i}"], d[f"packet.k{i}"]) for i in range(n_terms)),
        d["packet.sigma"],
    )
    solitary = {
        name: SolitaryParams(
            d[f"{name}.sigma"], d[f"{name}.beta"], d[f"{name}.k"], int(d[f"{name}.sign"])
        )
        for name in ("shock", "soliton")
    }
    rogons = {
        name: RogonParams(d[f"{name}.alpha"], d[f"{name}.k"], d[f"{name}.sigma"], d[f"{name}.beta"])
        for name in ("rogon1", "rogon2")
    }
    if "beta.r" in d:
        n_w = sum(1 for n in names if n.startswith("beta.w1_"))
        src: BetaSource = AdaptiveWeights(
            d["beta.r"],
            tuple((d[f"beta.w1_{i}"], d[f"beta.w2_{i}"], d[f"beta.w3_{i}"]) for i in range(n_w)),
        )
    else:
        src = d.get("beta")
    return WaveParams(
        tuple(d[f"A{i}"] for i in range(1, 6)),
        packet,
        solitary["shock"],
        solitary["soliton"],
        rogons["rogon1"],
        rogons["rogon2"],
        src,
    )
