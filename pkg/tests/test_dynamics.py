import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdsqm import analytic as an
from hdsqm import dynamics as dy
from hdsqm.potential import PhaseState, Potential, TwoDotState

finite = st.floats(-3, 3, allow_nan=False)
states = st.tuples(finite, finite, finite, finite)
QUARTIC = Potential.quartic(1.0, 1.0)


@given(st.floats(-2, 2), st.floats(0, 2), st.floats(0, 2))
def test_potential_derivatives_match_fd(x, omega, lam):
    V = Potential.quartic(omega, lam)
    h = 1e-5
    assert abs((V.V(x + h) - V.V(x - h)) / (2 * h) - V.dV(x)) < 1e-6
    assert abs((V.dV(x + h) - V.dV(x - h)) / (2 * h) - V.d2V(x)) < 1e-6


def test_phase_state_rejects_nonfinite():
    with pytest.raises(ValueError):
        PhaseState(0.0, math.nan, 0.0, 0.0)
    with pytest.raises(ValueError):
        TwoDotState(0, 0, 0, math.inf, 0, 0)


def test_fixed_point():
    for V in (QUARTIC, Potential.harmonic(2.0)):
        assert np.all(dy.eom_pure_hd([0, 0, 0, 0], V) == 0)
        assert np.all(dy.eom_mixed([0, 0, 0, 0], V, 0.3) == 0)
    assert np.all(dy.eom_twodot([0] * 6, QUARTIC) == 0)


def test_quartic_force():
    assert dy.eom_pure_hd([1, 0, 0, 0], QUARTIC)[3] == -2.0


@given(states, st.floats(0.1, 3))
def test_quadratic_second_order_form(s, omega):
    V = Potential.harmonic(omega)
    x, D, p, P = s
    f = dy.eom_pure_hd(s, V)
    # x'' = P' and D'' = p'
    assert f[3] == pytest.approx(-omega**2 * x)
    assert f[2] == pytest.approx(-omega**2 * D)


def test_mixed_force():
    assert dy.eom_mixed([0, 1, 0, 0], Potential.harmonic(1.0), 0.5)[3] == 0.5


@given(states)
def test_mixed_at_zero_gamma_is_pure(s):
    assert np.array_equal(dy.eom_mixed(s, QUARTIC, 0.0), dy.eom_pure_hd(s, QUARTIC))


def test_twodot_quartic_x4():
    V = Potential.quartic(0.0, 1.0)
    f = dy.eom_twodot([0, 0, 0, 0, 1, 0], V)
    assert f[3] == 0.0


def test_twodot_linear_characteristic_polynomial():
    # x'''''' = -omega^6 x for V = omega^3 X^2/2: check on exp(lambda t) modes
    omega = 1.3
    V = Potential.twodot_quadratic(omega)
    for lam in dy.characteristic_roots_twodot(omega):
        # mode (x, x', x'', x''', D, D') with x = 1, D = -x''''/omega^3
        D = -(lam**4) / omega**3
        y = np.array([1, lam, lam**2, lam**3, D, lam * D])
        f = np.array([y[1], y[2], y[3], -omega**3 * y[4], y[5], omega**3 * y[0]])
        assert np.allclose(f, lam * y, atol=1e-12)
    assert np.allclose(dy.eom_twodot([1, 0, 0, 0, 0, 0], V), [0, 0, 0, 0, 0, omega**3])


def test_charges_examples():
    m = dy.pure_hd(QUARTIC)
    assert dy.conserved_charges(m, [0, 0, 0, math.sqrt(2)])["N"] == pytest.approx(1.0)
    assert dy.conserved_charges(m, [0, 0, 0, 0])["H"] == 0.0
    mm = dy.mixed(Potential.harmonic(1.0), 1.0)
    assert dy.conserved_charges(mm, [0, 1, 0, 0])["H"] == -0.5
    with pytest.raises(dy.UnsupportedChargeError):
        dy.energy_N(mm, [0, 1, 0, 0])
    with pytest.raises(dy.UnsupportedChargeError):
        dy.conserved_charges(dy.twodot(QUARTIC), [0] * 6)


def test_integrate_validates():
    m = dy.pure_hd(QUARTIC)
    with pytest.raises(ValueError):
        dy.integrate(m, [1, 0, 0, 0], 1.0, rel_tol=0.1)
    with pytest.raises(ValueError):
        dy.integrate(m, [1, 0, 0, 0], -1.0)
    with pytest.raises(ValueError):
        dy.integrate(m, [1, 0, 0], 1.0)


def test_tracks_analytic_solution():
    P = an.quartic_params(1.0, 1.0, 1.0)
    traj = dy.integrate(dy.pure_hd(QUARTIC), an.analytic_state(0.0, P), 50.0)
    assert traj.status == "completed"
    assert np.all(np.diff(traj.t) > 0)
    assert len(traj.charges["H"]) == len(traj.t)
    assert np.max(np.abs(traj["x"] - an.x_exact(traj.t, P))) < 1e-6
    assert np.max(np.abs(traj["D"] - an.d2_exact(traj.t, P))) < 1e-6


def test_charge_drift_t100():
    P = an.quartic_params(1.0, 1.0, 1.0)
    s0 = an.analytic_state(0.0, P) + np.array([0.0, 0.2, 0.1, 0.0])
    traj = dy.integrate(dy.pure_hd(QUARTIC), s0, 100.0)
    assert traj.charge_drift("H") < 1e-8
    assert traj.charge_drift("N") < 1e-8


def test_cubic_blowup_and_monotonicity():
    V = Potential.cubic(1.0)
    tstars = []
    for N in (0.5, 1.0, 2.0, 4.0, 8.0):
        traj = dy.integrate(dy.pure_hd(V), [0.0, 1.0, 0.0, math.sqrt(2 * N)], 100.0)
        assert traj.blowup and math.isfinite(traj.t_star)
        lo, hi = traj.t_bracket
        assert lo <= traj.t_star <= hi and (hi - lo) <= 1e-6 * hi * 1.01
        tstars.append(traj.t_star)
    assert all(a > b for a, b in zip(tstars, tstars[1:]))


def test_twodot_quartic_collapses():
    traj = dy.integrate(dy.twodot(QUARTIC), [1, 0, 0, 0, 1, 0], 100.0)
    assert traj.blowup and traj.t_star < 100


def test_time_reversal():
    m = dy.pure_hd(QUARTIC)
    s0 = np.array([0.3, 0.5, -0.2, 0.4])
    fwd = dy.integrate(m, s0, 8.0, 1e-12, 1e-13)
    back = dy.integrate(m, dy.time_reversed(m, fwd.final_state), 8.0, 1e-12, 1e-13)
    assert np.max(np.abs(dy.time_reversed(m, back.final_state) - s0)) < 1e-6
    with pytest.raises(ValueError):
        dy.time_reversed(dy.mixed(QUARTIC, 0.1), s0)


def test_state_at_and_resample():
    P = an.quartic_params(1.0, 1.0, 1.0)
    traj = dy.integrate(dy.pure_hd(QUARTIC), an.analytic_state(0.0, P), 10.0)
    ts = np.linspace(0, 10, 37)
    ys = traj.resample(ts)
    assert np.max(np.abs(ys[:, 0] - an.x_exact(ts, P))) < 1e-7


def test_trajectory_csv():
    traj = dy.integrate(dy.mixed(QUARTIC, 0.1), [1, 0, 0, 0], 1.0)
    buf = io.StringIO()
    dy.write_trajectory_csv(traj, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x,D,p,P,H,N"
    assert lines[1].endswith(",") and len(lines) == len(traj) + 1


def test_poincare_closed_curve_pure():
    P = an.quartic_params(1.0, 1.0, 1.0)
    s0 = an.analytic_state(0.0, P) + np.array([0.0, 0.3, 0.2, 0.0])
    traj = dy.integrate(dy.pure_hd(QUARTIC), s0, 300.0)
    pts = dy.poincare_section(traj, "D", 0.0, 1)
    assert len(pts) > 20
    assert dy.section_curve_residual(pts, QUARTIC) < 1e-3


def test_poincare_fills_area_mixed():
    V = Potential.quartic(0.0, 1.0)
    P = an.quartic_params(0.0, 1.0, 1.0)
    traj = dy.integrate(dy.mixed(V, 0.1), an.analytic_state(0.0, P), 2000.0)
    areas = []
    for T in (500.0, 1000.0, 2000.0):
        sub = dy.Trajectory(traj.model, traj.t[traj.t <= T], traj.y[traj.t <= T], traj.h[traj.t <= T])
        areas.append(dy.hull_area(dy.poincare_section(sub, "D", 0.0, 1)))
    assert areas[0] > 0 and areas[0] < areas[1] < areas[2]


def test_poincare_fixed_point_empty():
    traj = dy.integrate(dy.pure_hd(QUARTIC), [0, 0, 0, 0], 10.0)
    assert len(dy.poincare_section(traj)) == 0


def test_envelope_linear_growth_and_bounded_branch():
    P = an.quartic_params(1.0, 1.0, 1.0)
    m = dy.pure_hd(QUARTIC)
    grow = dy.trajectory_envelope(dy.integrate(m, an.analytic_state(0.0, P, 0.0, 1.0), 60.0))
    assert grow["slope"] > 0 and grow["r2"] > 0.99 and not grow["bounded"]
    flat = dy.trajectory_envelope(dy.integrate(m, an.analytic_state(0.0, P, 1.0, 0.0), 60.0))
    assert flat["bounded"] and abs(flat["slope"]) < 1e-3


def test_envelope_insufficient_extrema():
    t = np.linspace(0, 1, 100)
    with pytest.raises(dy.InsufficientExtremaError):
        dy.envelope_analysis(t, np.sin(t))


def test_envelope_quartile_rule():
    t = np.linspace(0, 100, 20001)
    assert dy.envelope_analysis(t, np.sin(3 * t))["bounded"]
    assert not dy.envelope_analysis(t, (1 + t) * np.sin(3 * t))["bounded"]


def test_twodot_roots():
    r = dy.characteristic_roots_twodot(1.0)
    s = math.sqrt(3) / 2
    expected = sorted([1j, -1j, s + 0.5j, s - 0.5j, -s + 0.5j, -s - 0.5j], key=lambda z: (z.real, z.imag))
    assert np.allclose(r, expected, atol=1e-12)
    assert np.max(np.abs(r**6 + 1)) < 1e-12
    assert np.allclose(dy.characteristic_roots_twodot(2.5), 2.5 * r, atol=1e-12)
    assert max(r.real) == pytest.approx(s, abs=1e-15)
    with pytest.raises(ValueError):
        dy.characteristic_roots_twodot(0.0)


def test_twodot_growth_rate():
    m = dy.twodot(Potential.twodot_quadratic(1.0))
    traj = dy.integrate(m, [1, 0, 0, 0, 0, 0], 30.0)
    ts = np.linspace(0, traj.t[-1], 6000)
    rate = dy.growth_rate(ts, traj.resample(ts)[:, 0], 5.0)
    assert abs(rate / (math.sqrt(3) / 2) - 1) < 0.01


def test_backends_agree_per_step(kernel):
    from hdsqm import _kernels_py
    y = np.array([1.0, 0.5, 0.0, 0.2])
    for kind, dim in ((0, 4), (1, 4), (2, 6)):
        yy = np.resize(y, dim)
        a = kernel.rhs(kind, QUARTIC.d1, QUARTIC.d2, 0.3, yy)
        b = _kernels_py.rhs(kind, QUARTIC.d1, QUARTIC.d2, 0.3, yy)
        assert np.allclose(a, b, rtol=1e-15, atol=1e-15)
        a = kernel.dp5_step(kind, QUARTIC.d1, QUARTIC.d2, 0.3, yy, 0.05)
        b = _kernels_py.dp5_step(kind, QUARTIC.d1, QUARTIC.d2, 0.3, yy, 0.05)
        assert np.allclose(a[0], b[0], rtol=1e-14, atol=1e-15)


def test_backends_agree_on_trajectories(kernel):
    from hdsqm import _kernels_py
    args = (0, QUARTIC.d1, QUARTIC.d2, 0.0, np.array([1.0, 0.5, 0.0, 0.2]), 0.0, 20.0,
            1e-10, 1e-12, 1e-3, 1e12, 10**6)
    ts, ys, hs, st_, rej = kernel.dopri5(*args)
    ts0, ys0, hs0, st0, rej0 = _kernels_py.dopri5(*args)
    # round-off reordering accumulates, so agreement is at integrator tolerance
    assert st_ == st0 and len(ts) == len(ts0)
    assert np.max(np.abs(ys - ys0)) < 1e-6
    x = np.linspace(-1, 1, 7)
    a = kernel.flow_batch(QUARTIC.d1, x, x[::-1], 2.0, 1e-11, 1e-12)
    b = _kernels_py.flow_batch(QUARTIC.d1, x, x[::-1], 2.0, 1e-11, 1e-12)
    assert np.allclose(a, b, atol=1e-9)
    u = np.linspace(-5, 5, 41)
    for m in (0.0, 0.3, 0.9, 1.0):
        assert np.allclose(kernel.sncndn(u, m), _kernels_py.sncndn(u, m), atol=1e-14)
