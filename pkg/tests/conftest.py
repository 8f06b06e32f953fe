"""Shared oracles and synthetic-surface builders for the test suite."""

import math
from dataclasses import replace

import numpy as np
from scipy import integrate

from optionwave.blackscholes import BsParams, PriceSurface
from optionwave.fitting import ModelSpec, default_initial, model_values
from optionwave.numerics import Grid1D
from optionwave.waves import COMPONENTS, PacketParams, RogonParams, SolitaryParams


def model_surface(params, s_grid, t_grid, target="modulus"):
    """Synthetic price surface equal to the model's target transform on the grid."""
    s, t = np.meshgrid(s_grid.points(), t_grid.points())
    return PriceSurface(s_grid, t_grid, model_values(params, s, t, target), {"source": "synthetic"})


# single-component round-trip fixtures shared by the fitting and acceptance tests
S = Grid1D.linspace(-6, 6, 49)
T_FWD = Grid1D.linspace(0, 1, 11)
T_SYM = Grid1D.linspace(-1, 1, 21)

TRUE = {
    "packet": dict(packet=PacketParams(1.0, [(1.0, 0.4), (0.6, -0.9)], 1.0)),
    "shock": dict(shock=SolitaryParams(1.0, -1.0, 0.7)),
    "soliton": dict(soliton=SolitaryParams(1.0, 1.0, -0.8)),
    "rogon1": dict(rogon1=RogonParams(0.9, 0.6, 1.0, 1.0)),
    "rogon2": dict(rogon2=RogonParams(0.7, -0.4, 1.0, 1.0)),
}
AMP = {"packet": 0.8, "shock": 1.2, "soliton": 0.9, "rogon1": 0.6, "rogon2": 0.5}


def synthetic(component):
    spec = ModelSpec(components=(component,), sigma=1.0, beta=1.0)
    t_grid = T_SYM if component.startswith("rogon") else T_FWD
    # default_initial only looks at the grids of the surface it is given
    base = default_initial(PriceSurface(S, t_grid, np.zeros((t_grid.count, S.count))), spec)
    amps = tuple(AMP[c] if c == component else 0.0 for c in COMPONENTS)
    truth = replace(base, amplitudes=amps, **TRUE[component])
    return spec, truth, model_surface(truth, S, t_grid)


def perturbed(x):
    """Deterministic start away from the truth."""
    i = np.arange(x.size)
    return x * (1 + 0.1 * np.sin(i + 1)) + 0.05


def lognormal_oracle(p: BsParams, s: float, t: float) -> float:
    """Discounted risk-neutral expectation of the payoff by quadrature over the standard normal."""
    tau = p.expiry - t
    drift = (p.rate - 0.5 * p.vol**2) * tau
    vs = p.vol * math.sqrt(tau)

    def integrand(z):
        st_ = s * math.exp(drift + vs * z)
        payoff = max(st_ - p.strike, 0.0) if p.kind == "call" else max(p.strike - st_, 0.0)
        return payoff * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    # split at the payoff kink so the quadrature sees smooth pieces
    z_kink = (math.log(p.strike / s) - drift) / vs
    lo, hi = -12.0, 12.0
    pts = [lo] + ([z_kink] if lo < z_kink < hi else []) + [hi]
    total = sum(integrate.quad(integrand, a, b, epsabs=1e-12, epsrel=1e-12, limit=200)[0] for a, b in zip(pts, pts[1:]))
    return math.exp(-p.rate * tau) * total
