import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, strategies as st

from optionwave.errors import DomainError
from optionwave.greeks import GREEK_NAMES, NlsGreeks, greeks_fd, shock_greeks_analytic
from optionwave.waves import (
    PacketParams,
    RogonParams,
    SolitaryParams,
    WaveParams,
    eval_general,
    eval_packet,
    eval_shock,
    eval_soliton,
)


def random_shock_probe(rng):
    p = SolitaryParams(rng.uniform(0.2, 3), -rng.uniform(0.2, 3), rng.uniform(-2, 2), int(rng.choice([-1, 1])))
    return p, rng.uniform(-4, 4), rng.uniform(-2, 2)


def rel_err(a, b):
    return abs(a - b) / abs(a)


def test_delta_at_center():
    g = shock_greeks_analytic(SolitaryParams(1.0, -1.0, 0.0), 0.0, 0.0)
    assert abs(g.delta) == 1.0
    assert abs(g.gamma) == 0.0
    assert g.value == 0


def test_delta_at_moving_center():
    p = SolitaryParams(2.0, -0.5, 0.7)
    t = 0.9
    g = shock_greeks_analytic(p, 2.0 * 0.7 * t, t)
    assert abs(g.delta) == pytest.approx(2.0, rel=1e-14)


def test_full_example_against_fd():
    p = SolitaryParams(1.0, -2.0, 1.5)
    exact = shock_greeks_analytic(p, 0.8, 0.4)
    fd = greeks_fd(eval_shock, p, 0.8, 0.4)
    for name in GREEK_NAMES:
        assert rel_err(getattr(exact, name), getattr(fd, name)) < 1e-6, name
    assert fd.flags == ()


def test_sweep_1000_points():
    rng = np.random.default_rng(20240101)
    worst = 0.0
    for _ in range(1000):
        p, s, t = random_shock_probe(rng)
        exact = shock_greeks_analytic(p, s, t)
        fd = greeks_fd(eval_shock, p, s, t)
        worst = max(worst, max(rel_err(getattr(exact, n), getattr(fd, n)) for n in GREEK_NAMES))
    assert worst < 1e-5


def test_gamma_is_derivative_of_delta():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p, s, t = random_shock_probe(rng)
        h = 1e-6 * max(abs(s), 1.0)
        d_delta = (shock_greeks_analytic(p, s + h, t).delta - shock_greeks_analytic(p, s - h, t).delta) / (2 * h)
        assert rel_err(shock_greeks_analytic(p, s, t).gamma, d_delta) < 1e-4


@given(st.floats(0.2, 3), st.floats(0.2, 3), st.floats(-2, 2), st.floats(-4, 4), st.floats(-2, 2), st.floats(-2, 2))
def test_delta_modulus_travels(sigma, beta, k, s, t, shift):
    p = SolitaryParams(sigma, -beta, k)
    a = abs(shock_greeks_analytic(p, s, t).delta)
    b = abs(shock_greeks_analytic(p, s + sigma * k * shift, t + shift).delta)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


def test_constant_packet():
    p = PacketParams(1.3, [(0.7, 0.0)], 1.0)
    g = greeks_fd(eval_packet, p, 0.4, 1.1)
    for name in ("delta", "gamma", "theta", "vega"):
        assert getattr(g, name) == 0
    assert g.rho == 0 and "rho:n/a" in g.flags


def test_soliton_vega_positive():
    for sigma, beta in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.3)]:
        p = SolitaryParams(sigma, beta, 0.0)
        g = greeks_fd(eval_soliton, p, 0.0, 0.0)
        # at the centre psi is real and positive, so d|psi|/d sigma = Re(vega)
        assert g.value.real > 0 and g.vega.real > 0
        assert g.vega.real == pytest.approx(0.5 / np.sqrt(sigma * beta), rel=1e-6)


def test_one_sided_fallback():
    # sigma/beta switches sign when beta crosses zero, so the two-sided rho stencil is invalid
    p = SolitaryParams(1.0, -1e-7, 0.0)
    g = greeks_fd(eval_shock, p, 0.3, 0.0)
    assert "rho:one-sided" in g.flags
    with pytest.raises(DomainError):
        greeks_fd(eval_shock, SolitaryParams(1.0, 1.0, 0.0), 0.3, 0.0)


def test_general_model_greeks():
    sol = SolitaryParams(1.0, 1.0, 0.5)
    wp = WaveParams(
        (0, 0, 2.0, 0, 0),
        PacketParams(1.0, [(1.0, 0.0)], 1.0),
        SolitaryParams(1.0, -1.0, 0.0),
        sol,
        RogonParams(1.0, 0.0, 1.0, 1.0),
        RogonParams(1.0, 0.0, 1.0, 1.0),
    )
    g = greeks_fd(eval_general, wp, 0.3, 0.2)
    ref = greeks_fd(eval_soliton, sol, 0.3, 0.2)
    for name in ("value", "delta", "gamma", "theta"):
        assert getattr(g, name) == pytest.approx(2 * getattr(ref, name), rel=1e-6)


def test_pdf_greeks_chain_rule():
    p = SolitaryParams(1.0, -2.0, 1.5)
    g = shock_greeks_analytic(p, 0.8, 0.4)
    pdf_g = g.pdf_greeks()

    def mod2(q, s, t):
        return abs(eval_shock(q, s, t)) ** 2

    h = 1e-6
    assert pdf_g["delta"] == pytest.approx((mod2(p, 0.8 + h, 0.4) - mod2(p, 0.8 - h, 0.4)) / (2 * h), rel=1e-6)
    hg = 1e-4
    fd_gamma = (mod2(p, 0.8 + hg, 0.4) - 2 * mod2(p, 0.8, 0.4) + mod2(p, 0.8 - hg, 0.4)) / hg**2
    assert pdf_g["gamma"] == pytest.approx(fd_gamma, rel=1e-5)
    q = replace(p, beta=p.beta + h)
    r = replace(p, beta=p.beta - h)
    assert pdf_g["rho"] == pytest.approx((mod2(q, 0.8, 0.4) - mod2(r, 0.8, 0.4)) / (2 * h), rel=1e-6)


def test_rows():
    g = NlsGreeks(1j, 1 + 1j, 0, 0, 0, 3 - 4j)
    rows = g.rows()
    assert [r[0] for r in rows] == list(GREEK_NAMES)
    assert rows[0] == ("delta", 1.0, 1.0, abs(1 + 1j))
    assert g.moduli()["rho"] == 5.0
