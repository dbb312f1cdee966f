import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdsqm import grassmann as gr
from hdsqm.grassmann import DEGREE, GrassmannNumber as G

coef = st.floats(-2, 2, allow_nan=False)
gnums = st.lists(coef, min_size=16, max_size=16).map(lambda c: G(np.array(c)))


def homogeneous(parity):
    mask = (DEGREE % 2 == parity)
    return gnums.map(lambda a: G(a.c * mask))


gens = st.sampled_from(gr.GENERATORS)
psi, chi = G.generator("psi"), G.generator("chi")


def brute_mul(a, b):
    # expand monomials as generator lists and sort with explicit transposition count
    out = np.zeros(16, dtype=complex)
    for i, j in itertools.product(range(16), repeat=2):
        word = [g for g in range(4) if i >> g & 1] + [g for g in range(4) if j >> g & 1]
        if len(set(word)) < len(word):
            continue
        inv = sum(1 for u in range(len(word)) for v in range(u + 1, len(word)) if word[u] > word[v])
        out[sum(1 << g for g in word)] += (-1) ** inv * a.c[i] * b.c[j]
    return out


def test_examples():
    assert (psi * psi).allclose(0)
    assert (psi * chi).allclose(-(chi * psi))
    one = G.scalar(1.0)
    prod = (one + psi) * (one + chi)
    assert prod.allclose(one + psi + chi + psi * chi)
    assert gr.g_derive_left(psi * chi, "psi").allclose(chi)
    assert gr.g_derive_left(psi * chi, "chi").allclose(-psi)
    assert gr.g_derive_left(one, "psi").allclose(0)
    assert gr.g_derive_right(psi * chi, "chi").allclose(psi)
    assert gr.g_derive_right(psi * chi, "psi").allclose(-chi)


def test_generator_index():
    assert gr.generator_index("chibar") == 3
    with pytest.raises(ValueError):
        gr.generator_index(7)
    with pytest.raises(ValueError):
        G(np.zeros(5))


@given(gnums, gnums)
def test_mul_matches_brute_force(a, b):
    assert np.allclose(gr.g_mul(a, b).c, brute_mul(a, b), atol=1e-12)


@given(gnums, gnums, gnums)
def test_associative(a, b, c):
    assert ((a * b) * c).allclose(a * (b * c), atol=1e-10)


@given(gens)
def test_generators_nilpotent(g):
    x = G.generator(g)
    assert (x * x).allclose(0)


@given(st.sampled_from([0, 1]), st.sampled_from([0, 1]), st.data())
def test_supercommutative_and_degree_additive(pa, pb, data):
    a = data.draw(homogeneous(pa))
    b = data.draw(homogeneous(pb))
    assert (a * b).allclose((-1) ** (pa * pb) * (b * a), atol=1e-10)
    g = (a * b).grade(tol=1e-12)
    assert g is None or g == (pa + pb) % 2 or (a * b).allclose(0, atol=1e-12)


@given(st.sampled_from([0, 1]), gnums, gens, st.data())
def test_leibniz_left_and_right(pa, b, g, data):
    a = data.draw(homogeneous(pa))
    lhs = gr.g_derive_left(a * b, g)
    rhs = gr.g_derive_left(a, g) * b + (-1) ** pa * (a * gr.g_derive_left(b, g))
    assert lhs.allclose(rhs, atol=1e-10)
    bh = data.draw(homogeneous(pa))
    lhs = gr.g_derive_right(b * bh, g)
    rhs = b * gr.g_derive_right(bh, g) + (-1) ** pa * (gr.g_derive_right(b, g) * bh)
    assert lhs.allclose(rhs, atol=1e-10)


@given(gnums, gens, gens)
def test_derivatives_anticommute(a, g, h):
    l = gr.g_derive_left(gr.g_derive_left(a, g), h)
    r = gr.g_derive_left(gr.g_derive_left(a, h), g)
    assert l.allclose(-r, atol=1e-12)


def test_parity_parts_and_grade():
    a = G.scalar(2.0) + psi * chi + psi
    even, odd = a.parity_parts()
    assert even.grade() == 0 and odd.grade() == 1 and a.grade() is None
    assert (even + odd).allclose(a)
    assert a.body == 2.0


PTS = np.random.default_rng(3).uniform(-2, 2, size=(20, 4))


def test_canonical_pairs():
    x, D, p, P = (gr.coordinate(n) for n in gr.COORDS)
    for c in (1.0, 1j):
        assert gr.super_poisson_bracket(x, p, PTS, c).allclose(c)
        assert gr.super_poisson_bracket(D, P, PTS, c).allclose(c)
        assert gr.super_poisson_bracket(x, P, PTS, c).allclose(0)
        assert gr.super_poisson_bracket(p, x, PTS, c).allclose(-c)


def test_fermionic_pairs():
    psi_f, psibar_f = gr.generator("psi"), gr.generator("psibar")
    chi_f = gr.generator("chi")
    b = gr.super_poisson_bracket(psi_f, psibar_f, PTS)
    assert b.grade() == 0 and abs(b.body[0]) == pytest.approx(1.0)
    assert gr.super_poisson_bracket(psi_f, chi_f, PTS).allclose(0)
    # odd-odd brackets are symmetric
    assert b.allclose(gr.super_poisson_bracket(psibar_f, psi_f, PTS))


def test_bracket_graded_antisymmetry_bosonic():
    x, D, p, P = (gr.coordinate(n) for n in gr.COORDS)
    f = x * x * P + D * p
    g = gr.of_x(np.sin, np.cos, "sin") * P
    a = gr.super_poisson_bracket(f, g, PTS)
    b = gr.super_poisson_bracket(g, f, PTS)
    assert a.allclose(-b, atol=1e-12)


def test_check_partials_detects_inconsistency():
    bad = gr.of_x(np.sin, np.sin, "bad")
    with pytest.raises(gr.InconsistentPartialsError):
        bad.check_partials(PTS)
    assert gr.of_x(np.sin, np.cos).check_partials(PTS) < 1e-6


def test_calibration_object():
    with pytest.raises(gr.CalibrationMissingError):
        gr.Calibration().require()
    assert gr.Calibration(1j).require() == 1j
    with pytest.raises(ValueError):
        gr.fit_normalization(G(np.zeros(16)), G.scalar(1.0))
    assert gr.fit_normalization(G.scalar(2.0), G.scalar(2j)) == pytest.approx(1j)
