"""NLS Greeks: partial derivatives of wave components with respect to s, t, sigma and beta.

For the shock wave

    psi = sign * a * tanh(xi) * exp(i theta),   a = sqrt(-sigma/beta),
    xi = s - sigma k t,   theta = k s - sigma t (2 + k^2) / 2,

the closed-form derivatives are (with ``E = sign * exp(i theta)``)

    delta = a E [sech^2 xi + i k tanh xi]
    gamma = a E [-2 sech^2 xi tanh xi + 2 i k sech^2 xi - k^2 tanh xi]
    theta = a E [-sigma k sech^2 xi - i sigma (2 + k^2)/2 tanh xi]
    vega  = a E [tanh xi / (2 sigma) - k t sech^2 xi - i t (2 + k^2)/2 tanh xi]
    rho   = -a E tanh xi / (2 beta)

using ``da/dsigma = a/(2 sigma)`` and ``da/dbeta = -a/(2 beta)``. Rho is taken
with respect to beta, which equals the interest rate in the nonadaptive model.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .numerics import sech
from .waves import SolitaryParams, WaveParams, eval_shock

GREEK_NAMES = ("delta", "gamma", "theta", "vega", "rho")


@dataclass(frozen=True)
class NlsGreeks:
    value: complex
    delta: complex
    gamma: complex
    theta: complex
    vega: complex
    rho: complex
    flags: tuple = ()  # e.g. ("vega:one-sided", "rho:n/a")

    def moduli(self) -> dict:
        return {name: abs(getattr(self, name)) for name in GREEK_NAMES}

    def pdf_greeks(self) -> dict:
        """Chain-rule Greeks of |psi|^2."""
        conj = np.conj(self.value)
        out = {name: 2.0 * float(np.real(conj * getattr(self, name))) for name in GREEK_NAMES}
        out["gamma"] += 2.0 * abs(self.delta) ** 2
        return out

    def rows(self) -> list[tuple[str, float, float, float]]:
        return [
            (name, float(np.real(getattr(self, name))), float(np.imag(getattr(self, name))), abs(getattr(self, name)))
            for name in GREEK_NAMES
        ]


def shock_greeks_analytic(p: SolitaryParams, s: float, t: float) -> NlsGreeks:
    value = complex(eval_shock(p, s, t))  # also validates the domain
    sigma, beta, k = p.sigma, p.beta, p.k
    a = np.sqrt(-sigma / beta)
    xi = s - sigma * k * t
    th = np.tanh(xi)
    sh2 = sech(xi) ** 2
    e = p.sign * np.exp(1j * (k * s - 0.5 * sigma * t * (2.0 + k * k)))
    half = 0.5 * (2.0 + k * k)
    return NlsGreeks(
        value=value,
        delta=complex(a * e * (sh2 + 1j * k * th)),
        gamma=complex(a * e * (-2.0 * sh2 * th + 2j * k * sh2 - k * k * th)),
        theta=complex(a * e * (-sigma * k * sh2 - 1j * sigma * half * th)),
        vega=complex(a * e * (th / (2.0 * sigma) - k * t * sh2 - 1j * t * half * th)),
        rho=complex(-a * e * th / (2.0 * beta)),
    )


def _shift(params, name: str, h: float):
    """Copy of ``params`` with field ``name`` (sigma or beta) moved by ``h``; None if absent."""
    if isinstance(params, WaveParams):
        changes = {}
        for comp in ("packet", "shock", "soliton", "rogon1", "rogon2"):
            q = getattr(params, comp)
            if hasattr(q, name):
                changes[comp] = dataclasses.replace(q, **{name: getattr(q, name) + h})
        if name == "beta" and isinstance(params.beta_source, float):
            changes["beta_source"] = params.beta_source + h
        return dataclasses.replace(params, **changes)
    if dataclasses.is_dataclass(params) and hasattr(params, name):
        return dataclasses.replace(params, **{name: getattr(params, name) + h})
    return None


def _param_value(params, name: str) -> float:
    if isinstance(params, WaveParams):
        if name == "beta" and isinstance(params.beta_source, float):
            return params.beta_source
        return getattr(params.shock, name)
    return getattr(params, name)


def greeks_fd(
    evaluator: Callable,
    params,
    s: float,
    t: float,
    step: float = 1e-6,
    gamma_step: float = 1e-4,
) -> NlsGreeks:
    """Central-difference Greeks of ``evaluator(params, s, t)``.

    ``gamma_step`` is larger than ``step`` because the second difference loses
    precision as 1/h^2. A derivative whose two-sided stencil leaves the validity
    domain falls back to a one-sided difference and is flagged.
    """
    flags = []

    def f(p, ss, tt):
        return complex(evaluator(p, ss, tt))

    value = f(params, s, t)

    def central(fn, x, h, name):
        try:
            plus = fn(x + h)
        except DomainError:
            plus = None
        try:
            minus = fn(x - h)
        except DomainError:
            minus = None
        if plus is not None and minus is not None:
            return (plus - minus) / (2.0 * h)
        flags.append(f"{name}:one-sided")
        if plus is not None:
            return (plus - value) / h
        if minus is not None:
            return (value - minus) / h
        raise DomainError(f"{name}: no valid finite-difference stencil")

    hs = step * max(abs(s), 1.0)
    ht = step * max(abs(t), 1.0)
    delta = central(lambda x: f(params, x, t), s, hs, "delta")
    theta = central(lambda x: f(params, s, x), t, ht, "theta")

    hg = gamma_step * max(abs(s), 1.0)
    gamma = (f(params, s + hg, t) - 2.0 * value + f(params, s - hg, t)) / (hg * hg)

    def param_greek(name):
        if _shift(params, name, 0.0) is None:
            flags.append(f"{'vega' if name == 'sigma' else 'rho'}:n/a")
            return 0j
        x0 = _param_value(params, name)
        h = step * max(abs(x0), 1.0)

        def fn(x):
            return f(_shift(params, name, x - x0), s, t)

        return central(fn, x0, h, "vega" if name == "sigma" else "rho")

    vega = param_greek("sigma")
    rho = param_greek("beta")
    return NlsGreeks(value, complex(delta), complex(gamma), complex(theta), complex(vega), complex(rho), tuple(flags))
