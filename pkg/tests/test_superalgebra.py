import numpy as np
import pytest
from scipy.integrate import simpson

from hdsqm import analytic as an
from hdsqm import dynamics as dy
from hdsqm import superalgebra as sa
from hdsqm.grassmann import CalibrationMissingError
from hdsqm.potential import Potential

QUARTIC = Potential.quartic(1.0, 1.0)


@pytest.fixture(scope="module")
def c():
    return sa.free_calibration()


@pytest.fixture(scope="module")
def pts():
    return sa.random_points(100, np.random.default_rng(7))


def test_calibration_is_i(c):
    assert abs(c - 1j) < 1e-12
    # the constant fitted on a different free frequency is the same
    assert abs(sa.free_calibration(omega=2.3, seed=4) - c) < 1e-12


def test_charges_pass_partials_check(pts):
    for cs in (sa.build_pure_charges(QUARTIC), sa.build_mixed_charges(QUARTIC, 0.7)):
        for f in cs.charges.values():
            assert f.check_partials(pts[:10]) < 1e-6


def test_charge_grades(pts):
    cs = sa.build_mixed_charges(QUARTIC, 0.7)
    for name, f in cs.charges.items():
        assert f.value(pts).grade(tol=1e-14) == cs.grades[name]


def test_table_references_charges():
    for table, cs in ((sa.pure_table(), sa.build_pure_charges(QUARTIC)),
                      (sa.mixed_table(0.7), sa.build_mixed_charges(QUARTIC, 0.7))):
        names = set(cs.names)
        for rel in table:
            assert rel.a in names and rel.b in names and set(rel.rhs) <= names


def test_nilpotency_quadratic(c, pts):
    cs = sa.build_pure_charges(Potential.harmonic(1.3))
    for q in ("Q", "Qbar", "T", "Tbar"):
        assert sa.bracket_with(cs, q, q, pts, c).allclose(0, atol=1e-12)


def test_Q_Qbar_is_2H(c, pts):
    cs = sa.build_pure_charges(QUARTIC)
    br = sa.bracket_with(cs, "Q", "Qbar", pts, c)
    assert br.allclose(2 * cs["H"].value(pts), atol=1e-10)


def test_pure_algebra_passes(c):
    rep = sa.verify_algebra(sa.build_pure_charges(QUARTIC), sa.pure_table(), 100, 1e-10, c)
    assert rep["status"] == "PASS"
    assert any(r["relation"] == "[Q,N]" for r in rep["relations"])
    assert all(r["max_residual"] < 1e-10 for r in rep["relations"])


def test_mixed_algebra_passes(c):
    rep = sa.verify_algebra(sa.build_mixed_charges(QUARTIC, 0.7), sa.mixed_table(0.7), 100, 1e-10, c)
    assert rep["status"] == "PASS"
    labels = {r["relation"] for r in rep["relations"]}
    assert "{Q,T}" in labels and "[Q,H0]" in labels


def test_mixed_reduces_to_pure_at_zero_gamma(pts):
    pure = sa.build_pure_charges(QUARTIC)
    mixed = sa.build_mixed_charges(QUARTIC, 0.0)
    for name in ("Q", "T", "Tbar", "F"):
        assert mixed[name].value(pts).allclose(pure[name].value(pts))
    assert mixed["H0"].value(pts).allclose(pure["H"].value(pts))


def test_printed_tf_signs_fail(c):
    rep = sa.verify_algebra(sa.build_mixed_charges(QUARTIC, 0.7), sa.mixed_table(0.7, True),
                            100, 1e-10, c, closure=False)
    bad = {r["relation"] for r in rep["relations"] if r["status"] == "FAIL"}
    assert bad == {"[T,F]", "[Tbar,F]"}


def test_mutation_is_detected(c):
    rep = sa.verify_algebra(sa.mutated_pure_charges(QUARTIC), sa.pure_table(), 100, 1e-10, c)
    assert rep["status"] == "FAIL"


def test_wrong_constant_is_detected():
    rep = sa.verify_algebra(sa.build_pure_charges(QUARTIC), sa.pure_table(), 20, 1e-10, 1.0)
    assert rep["status"] == "FAIL"


def test_calibration_required():
    with pytest.raises(CalibrationMissingError):
        sa.verify_algebra(sa.build_pure_charges(QUARTIC), sa.pure_table(), 10)


def test_F_grading(c, pts):
    cs = sa.build_pure_charges(QUARTIC)
    for q, k in (("Q", -1), ("Qbar", 1), ("T", -1), ("Tbar", 1)):
        assert sa.bracket_with(cs, q, "F", pts, c).allclose(k * cs[q].value(pts), atol=1e-12)


def test_conservation_pure(c):
    P = an.quartic_params(1.0, 1.0, 1.0)
    traj = dy.integrate(dy.pure_hd(QUARTIC), an.analytic_state(0.0, P), 100.0)
    rep = sa.conservation_check(sa.build_pure_charges(QUARTIC), traj, c=c)
    assert rep["status"] == "PASS"


def test_conservation_mixed(c):
    traj = dy.integrate(dy.mixed(QUARTIC, 0.1), [1.0, 0.5, 0.0, 0.2], 100.0)
    rep = sa.conservation_check(sa.build_mixed_charges(QUARTIC, 0.1), traj, c=c)
    assert rep["status"] == "PASS"
    with pytest.raises(ValueError):
        sa.conservation_check(sa.build_pure_charges(QUARTIC), traj, c=c)


def test_N_symmetry_total_derivative():
    # D -> D + a x' shifts L = x'D' + D V'(x) by a d/dt (x'^2/2 + V)
    V, a = QUARTIC, 0.37
    traj = dy.integrate(dy.pure_hd(V), [0.4, 1.0, -0.3, 0.8], 12.0, 1e-12, 1e-13)
    t = np.linspace(0, traj.t[-1], 24001)
    x, D, p, Pv = traj.resample(t).T
    L = lambda D_, Dd: Pv * Dd + D_ * V.dV(x)
    S0 = simpson(L(D, p), x=t)
    S1 = simpson(L(D + a * Pv, p + a * V.dV(x)), x=t)
    boundary = a * ((Pv[-1] ** 2 / 2 + V.V(x[-1])) - (Pv[0] ** 2 / 2 + V.V(x[0])))
    assert abs((S1 - S0) - boundary) < 1e-6

