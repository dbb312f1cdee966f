import io
import math

import numpy as np
import pytest
from scipy.integrate import quad

from hdsqm import actionangle as aa
from hdsqm.elliptic import complete_K
from hdsqm.potential import Potential
from hdsqm.wavefunctions import flow

COMBOS = [(o, l, N) for o, l in ((0.0, 1.0), (1.0, 1.0), (1.0, 0.1)) for N in (0.5, 1.0, 2.0, 10.0)]


def brute_action(N, V):
    xm, xp = aa.turning_points(N, V)
    f = lambda x: math.sqrt(max(2 * (N + V.V(x)), 0.0))
    return 2 * quad(f, xm, xp, epsabs=0, epsrel=1e-12, limit=400)[0] / (2 * math.pi)


def test_harmonic_action():
    for omega in (0.5, 1.0, 2.0):
        V = Potential.harmonic(omega)
        assert aa.action_I(1.3, V) == pytest.approx(1.3 / omega, rel=1e-12)


def test_quartic_action_closed_form():
    V = Potential.quartic(0.0, 1.0)
    c = 4 * math.sqrt(2) * complete_K(0.5) / (3 * math.pi)
    assert c == pytest.approx(1.11285, abs=5e-5)
    for N in (0.5, 1.0, 3.0):
        assert aa.action_I(N, V) == pytest.approx(c * N**0.75, rel=1e-8)
        assert aa.action_I(N, V) == pytest.approx(brute_action(N, V), rel=1e-8)


def test_action_monotone():
    V = Potential.quartic(1.0, 0.3)
    I = [aa.action_I(N, V) for N in np.linspace(0.1, 5, 12)]
    assert np.all(np.diff(I) > 0)


def test_action_domain():
    with pytest.raises(aa.UnboundedOrbitError):
        aa.action_I(1.0, Potential.cubic(1.0))
    with pytest.raises(aa.UnboundedOrbitError):
        aa.action_I(-1.0, Potential.quartic(1.0, 1.0))


def test_sigma_examples():
    assert aa.sigma_of_N(0.0, 1.0, 1.0) == pytest.approx(math.pi / (math.sqrt(2) * complete_K(0.5)), rel=1e-14)
    assert aa.sigma_of_N(0.0, 1.0, 1.0) == pytest.approx(1.19814, abs=1e-5)
    assert abs(aa.sigma_of_N(1.0, 1e-10, 1.0) - 1.0) < 1e-6


@pytest.mark.parametrize("omega,lam,N", COMBOS)
def test_sigma_three_ways(omega, lam, N):
    V = Potential.quartic(omega, lam)
    s = aa.sigma_of_N(omega, lam, N)
    assert abs(aa.sigma_numeric(N, V) / s - 1) < 1e-6
    assert abs(aa.sigma_from_action(N, V) / s - 1) < 1e-6


def test_chart_examples():
    x, P = aa.angle_chart(1.0, 0.0)
    N = aa.N_of_I_quartic(1.0)
    assert P == 0.0 and x == pytest.approx(math.sqrt(2) * N**0.25, rel=1e-14)
    with pytest.raises(aa.UnsupportedChartError):
        aa.angle_chart(1.0, 0.0, omega=1.0)


def test_chart_level_set_and_period():
    V = Potential.quartic(0.0, 1.0)
    I = 1.7
    phi = np.linspace(0, 2 * math.pi, 101)
    x, P = aa.angle_chart(I, phi)
    Nv = P**2 / 2 - V.V(x)
    assert np.max(np.abs(Nv - aa.N_of_I_quartic(I))) < 1e-8
    assert x[-1] == pytest.approx(x[0], abs=1e-12) and P[-1] == pytest.approx(P[0], abs=1e-12)
    assert aa.action_I(aa.N_of_I_quartic(I), V) == pytest.approx(I, rel=1e-10)


def test_chart_flow_property():
    V = Potential.quartic(0.0, 1.0)
    I, phi0 = 0.8, 0.4
    st = aa.chart_state(I, phi0)
    x0, P0 = aa.angle_chart(I, phi0)
    T = 2 * math.pi / st.sigma
    ts = np.linspace(0, 3 * T, 25)
    for t in ts:
        xt, Pt = flow(V, np.array([x0]), np.array([P0]), t)
        xe, Pe = aa.angle_chart(I, phi0 + st.sigma * t)
        assert abs(xt[0] - xe) < 1e-6 and abs(Pt[0] - Pe) < 1e-6


def test_quantized_levels():
    assert aa.quantized_levels(1.0, 1.0, 2.0, [0])[0] == 0.0
    assert aa.quantized_levels(0.0, 1.0, 1.0, [1])[0] == pytest.approx(1.19814, abs=1e-5)
    for N in (0.1, 1.0, 10.0):
        assert abs(aa.quantized_levels(1.0, 1e-8, N, [1])[0] - 1.0) < 1e-6
    assert np.array_equal(aa.quantized_levels(2.0, 0.0, 1.0, [-2, 3]), [-4.0, 6.0])
    assert aa.is_quantized(3 * aa.sigma_of_N(1, 1, 2), 1, 1, 2)
    assert not aa.is_quantized(3.1 * aa.sigma_of_N(1, 1, 2), 1, 1, 2)


def test_e1_curves_fig2_ordering():
    Ns = np.linspace(0.25, 5, 20)
    hi = aa.e1_curve(1.0, 1.0, Ns)
    lo = aa.e1_curve(1.0, 0.1, Ns)
    assert np.all(np.diff(hi) > 0) and np.all(np.diff(lo) > 0)
    assert np.all(lo < hi) and np.all(lo > 1.0)
    flat = aa.e1_curve(1.0, 1e-9, Ns)
    assert np.max(np.abs(flat - 1)) < 1e-6


def test_e1_csv():
    buf = io.StringIO()
    aa.write_e1_csv(buf, [(1.0, 1.0, np.array([1.0, 2.0]))])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "omega,lambda,N,E1" and len(lines) == 3


def test_continuum_level_set_isolated_zero():
    ls = aa.continuum_level_set(1.0, 1.0, 1.0, 2)
    assert len(ls) == 5
    assert ls.meta["isolated"] == [0.0] and ls.meta["band_edge"] == 1.0
    s = aa.sigma_of_N(1.0, 1.0, 1.0)
    assert np.allclose(np.sort(ls.energy), s * np.arange(-2, 3))
    nonzero = np.abs(ls.energy) > 0
    assert np.all(np.abs(ls.energy[nonzero]) >= 1.0)
    assert "isolated" not in aa.continuum_level_set(1.0, 0.0, 1.0, 2).meta


@pytest.mark.parametrize("ell,tol", [(2, 0.007), (3, 0.01)])
def test_sigma_asymptotic_exponent(ell, tol):
    exact, fit = aa.sigma_asymptotic_exponent(ell)
    assert exact == pytest.approx((ell - 1) / (ell + 1))
    assert abs(fit - exact) < tol


def test_sigma_exponent_harmonic():
    exact, fit = aa.sigma_asymptotic_exponent(1)
    assert exact == 0.0 and abs(fit) < 1e-8
