import io
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdsqm import spectra as sp
from hdsqm.potential import Potential


def test_free_spectrum_examples():
    ls = sp.free_spectrum(1.0, 2)
    assert list(ls.energy) == [-2, -1, 0, 1, 2]
    assert dict(zip(ls.energy, ls.degeneracy))[0] == 3
    assert ls.meta["fermion_multiplier"] == 4


@pytest.mark.parametrize("n_max", [1, 2, 5, 9])
def test_free_degeneracy_brute_force(n_max):
    ls = sp.free_spectrum(1.5, n_max)
    counts = Counter(round(E / 1.5) for _, _, E in sp.free_pairs(1.5, n_max))
    for E, d in zip(ls.energy, ls.degeneracy):
        assert counts[round(E / 1.5)] == d
    assert np.allclose(np.sort(-ls.energy), np.sort(ls.energy))


def test_free_spectrum_domain():
    with pytest.raises(ValueError):
        sp.free_spectrum(0.0, 3)


def test_mixed_frequencies_example():
    w1, w2, phi = sp.mixed_frequencies(1.0, 2.0)
    assert w1 == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    assert w2 == pytest.approx(math.sqrt(2) + 1, abs=1e-15)
    assert phi == pytest.approx(math.pi / 8, abs=1e-15)
    with pytest.raises(ValueError):
        sp.mixed_frequencies(1.0, 0.0)


@given(st.floats(0.01, 10), st.floats(0.01, 10))
def test_mixed_frequency_relations(omega, gamma):
    w1, w2, _ = sp.mixed_frequencies(omega, gamma)
    assert abs(w1 * w2 - omega**2) <= 1e-12 * max(1, omega**2)
    assert abs((w2 - w1) - gamma) <= 1e-12 * max(1, gamma)
    a, b = sp.pais_uhlenbeck_coefficients(w1, w2)
    assert b == pytest.approx(omega**4, rel=1e-12)
    assert a == pytest.approx(gamma**2 + 2 * omega**2, rel=1e-12)


def test_mixed_spectrum_examples():
    ls = sp.mixed_spectrum(1.0, 2.0, 3, 3, shift=0.25)
    e = dict(zip(zip(ls.j, ls.k), ls.energy))
    assert e[(0, 0)] == 0.25
    ls0 = sp.mixed_spectrum(1.0, 2.0, 3, 3)
    e0 = dict(zip(zip(ls0.j, ls0.k), ls0.energy))
    assert e0[(1, 0)] == pytest.approx(math.sqrt(2) - 0.5, abs=1e-15)


@pytest.mark.parametrize("conv", ["literal", "oscillator"])
def test_levels_reconstruct_from_labels(conv):
    ls = sp.mixed_spectrum(0.7, 1.3, 6, 5, shift=0.1, convention=conv)
    w1, w2 = ls.meta["omega1"], ls.meta["omega2"]
    if conv == "literal":
        e = (w1 + 0.5) * ls.j - (w2 + 0.5) * ls.k + 0.1
    else:
        e = w1 * (ls.j + 0.5) - w2 * (ls.k + 0.5) + 0.1
    assert np.array_equal(e, ls.energy)
    with pytest.raises(ValueError):
        sp.lattice_levels(1, 2, 1, 1, convention="other")


def test_small_gamma_limit_oscillator_convention():
    g = 1e-6
    ls = sp.mixed_spectrum(1.0, g, 5, 5, shift=g / 2, convention="oscillator")
    assert np.max(np.abs(ls.energy - np.round(ls.energy))) < 1e-5


def test_gap_statistics_examples():
    assert sp.gap_statistics(sp.free_spectrum(1.0, 5), (0.5, 0.25))["count"] == 0
    gaps = [sp.gap_statistics(sp.synthetic_spectrum(1.0, 2.0, n, n, convention="oscillator"))["min_gap"]
            for n in (10, 20, 40)]
    assert min(gaps) >= 0.5 - 1e-12
    with pytest.raises(ValueError):
        sp.gap_statistics(sp.LevelSet(np.array([]), np.array([]), np.array([]), np.array([])))


def test_window_count_monotone_in_truncation():
    counts = [sp.gap_statistics(sp.mixed_spectrum(1.0, 2.0, n, n), (0.0, 1.0))["count"]
              for n in (5, 10, 20, 40)]
    assert counts == sorted(counts)


@pytest.mark.parametrize("conv", ["literal", "oscillator"])
def test_dense_spectrum_gaps_shrink(conv):
    # irrational frequency ratio: gaps never grow and tend to 0, with plateaus
    # where no better rational approximation fits inside the truncation
    gaps = [sp.gap_statistics(sp.mixed_spectrum(1.0, 2.0, n, n, convention=conv))["min_gap"]
            for n in (10, 20, 40, 80, 160)]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < gaps[0] / 5


def test_level_csv():
    buf = io.StringIO()
    sp.mixed_spectrum(1.0, 2.0, 1, 1).write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "energy,j,k,degeneracy" and len(lines) == 5


def test_semiclassical_agreement():
    r = sp.semiclassical_count(Potential.harmonic(1.0), 2.0, width=20.0, n_cut=10)
    assert abs(r["integral"] / r["lattice_sum"] - 1) < 0.1


def test_semiclassical_narrow_off_level():
    r = sp.semiclassical_count(Potential.harmonic(1.0), 2.0, width=0.05, n_cut=2, center=5.0)
    assert r["lattice_sum"] < 1e-12


def test_semiclassical_divergence():
    vals = [sp.semiclassical_count(Potential.harmonic(1.0), 2.0, 20.0, n) for n in (5, 10, 20, 40)]
    for a, b in zip(vals, vals[1:]):
        assert b["integral"] / a["integral"] > 1.5
        assert b["lattice_sum"] / a["lattice_sum"] > 1.5


def test_semiclassical_rejects_anharmonic():
    with pytest.raises(ValueError):
        sp.semiclassical_count(Potential.quartic(1.0, 1.0), 2.0)


def test_block_eigenvalues_match_lattice():
    # H restricted to n_a + n_b = M has levels -gamma/2 + w1 a - w2 b with a + b = M
    w1, w2, _ = sp.mixed_frequencies(1.0, 2.0)
    for M in range(6):
        ev = np.sort(sp.block_eigenvalues(1.0, 2.0, M))
        expect = np.sort([-1.0 + w1 * a - w2 * (M - a) for a in range(M + 1)])
        assert np.allclose(ev, expect, atol=1e-12)


def test_oscillator_decomposition():
    pts = np.random.default_rng(5).uniform(-2, 2, size=(100, 4))
    r = sp.oscillator_decomposition(Potential.harmonic(1.3), pts)
    for key in ("Q", "Qbar", "H", "bracket_xp_pp", "bracket_xm_pm", "bracket_xp_pm", "bracket_xm_pp"):
        assert r[key] < 1e-12
    assert r["H_plus_bosonic_min"] >= 0
    with pytest.raises(ValueError):
        sp.oscillator_decomposition(Potential.quartic(1.0, 1.0), pts)


def test_literal_gap_plateau_is_exact():
    # tau = 1: levels (sqrt2 - 1/2) j - (sqrt2 + 3/2) k; the pair step (16, 5) gives
    # 11 sqrt2 - 31/2, and no smaller combination exists with j, k <= 40
    exact = 11 * math.sqrt(2) - 15.5
    g10, g20, g40 = (sp.gap_statistics(sp.mixed_spectrum(1.0, 2.0, n, n))["min_gap"] for n in (10, 20, 40))
    assert g10 == pytest.approx(3 - 2 * math.sqrt(2), abs=1e-12)
    assert g20 == pytest.approx(exact, abs=1e-12) and g40 == pytest.approx(exact, abs=1e-12)
    a = np.arange(-40, 41)
    A, B = np.meshgrid(a, np.arange(0, 41))
    combos = np.abs(A * (math.sqrt(2) - 0.5) - B * (math.sqrt(2) + 1.5))
    assert np.min(combos[combos > 1e-9]) == pytest.approx(exact, abs=1e-12)
