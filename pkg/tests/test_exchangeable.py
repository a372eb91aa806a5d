import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.exchangeable import (
    LatticeLaw,
    RepresentationCollision,
    compare_partial_sum_laws,
    compositions,
    curve_moments,
    empirical_law,
    exact_partial_sum_law,
    family_partial_sum_law,
    laplace_transform_moments,
    laplace_tv_factor,
    marginal_moment_law_moments,
    mixed_moments,
    multinomial,
    recover_mixed_moments,
    sample_partial_sums,
    sample_sequence,
    total_variation,
)
from forge.simplexmap import AtomCloud, FiniteSupportMeasure, MixingMeasure, convolution_family

F = Fraction


def exact_theta():
    cloud = AtomCloud([(F(1, 2), F(1, 2), 0), (F(1, 4), F(1, 4), F(1, 2))], [F(1, 3), F(2, 3)])
    return MixingMeasure([0, 1, 3], cloud)


def brute_force_law(theta, n):
    # enumerate every sequence (X_1..X_n) under each component
    out = {}
    for p, w in zip(theta.cloud.probs, theta.cloud.points):
        for seq in itertools.product(range(theta.N), repeat=n):
            q = p
            for j in seq:
                q *= w[j]
            s = sum(theta.atoms[j] for j in seq)
            out[s] = out.get(s, 0) + q
    return {k: v for k, v in out.items() if v != 0}


def test_compositions_and_multinomial():
    comps = list(compositions(3, 2))
    assert comps == [(3, 0), (2, 1), (1, 2), (0, 3)]
    assert len(list(compositions(5, 4))) == math.comb(8, 3)
    assert multinomial((2, 1, 1)) == 12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_exact_law_matches_enumeration(n):
    th = exact_theta()
    law = exact_partial_sum_law(th, n)
    bf = brute_force_law(th, n)
    got = {v: p for v, p in zip(law.values, law.probs) if p != 0}
    assert got == bf


def test_mixed_moments_exact_values():
    m = mixed_moments(exact_theta(), 2)
    assert m[(0, 0, 0)] == 1
    assert m[(1, 0, 0)] == F(1, 3) * F(1, 2) + F(2, 3) * F(1, 4)
    assert m[(0, 1, 1)] == F(2, 3) * F(1, 4) * F(1, 2)


def test_float_moments_match_exact():
    th = exact_theta()
    fth = MixingMeasure(th.atoms, th.cloud.as_float())
    me, mf = mixed_moments(th, 5), mixed_moments(fth, 5)
    assert me.max_abs_difference(mf) < 1e-15


def test_total_variation_basic():
    a = LatticeLaw([0, 1], [0.5, 0.5])
    b = LatticeLaw([1, 2], [0.5, 0.5])
    assert total_variation(a, a) == 0
    assert total_variation(a, b) == pytest.approx(0.5)


def test_lattice_law_csv_roundtrip():
    law = exact_partial_sum_law(exact_theta(), 3)
    back = LatticeLaw.from_csv(law.to_csv())
    assert back.values == law.values and back.probs == law.probs
    assert law.to_csv().splitlines()[0] == "value,probability"


def test_lattice_law_validates():
    with pytest.raises(ValueError):
        LatticeLaw([0, 1], [0.5, 0.6])


def test_compare_identical_is_zero():
    th = exact_theta()
    assert max(compare_partial_sum_laws(th, th, 4)) == 0


def test_laplace_moments_at_zero_are_one():
    th = exact_theta()
    np.testing.assert_allclose(laplace_transform_moments(th, [0.0, 0.0], [1, 5]), 1.0)
    with pytest.raises(ValueError):
        laplace_transform_moments(th, -1.0, 1)


def test_laplace_moment_equals_expected_transform_of_partial_sum():
    # E[(sum W_j e^{-s a_j})^n] = E e^{-s S_n}
    th = exact_theta()
    law = exact_partial_sum_law(th, 3)
    s = 0.7
    direct = sum(float(p) * math.exp(-s * v) for v, p in zip(law.values, law.probs))
    assert laplace_transform_moments(th, s, 3) == pytest.approx(direct, rel=1e-13)


def test_curve_moments_complex():
    th = exact_theta()
    c = np.exp(1j * np.array([0.0, 1.0, 3.0]))
    assert isinstance(curve_moments(th, c, 2), complex)


def test_recover_round_trip_irrational_atoms():
    atoms = [1.0, math.sqrt(2), math.sqrt(3)]
    rng = np.random.default_rng(4)
    W = rng.dirichlet(np.ones(3), size=7)
    th = MixingMeasure(atoms, AtomCloud(W, np.full(7, 1 / 7)))
    laws = {n: exact_partial_sum_law(th, n) for n in range(1, 5)}
    rec = recover_mixed_moments(laws, atoms, 4)
    assert rec.max_abs_difference(mixed_moments(th, 4)) < 1e-12


def test_recover_detects_collisions():
    th = exact_theta()
    laws = {n: exact_partial_sum_law(th, n) for n in range(1, 4)}
    with pytest.raises(RepresentationCollision):
        recover_mixed_moments(laws, [0, 1, 2], 3)


def test_marginal_moment_overflow_path():
    cloud = AtomCloud(np.array([[0.5, 0.5, 0, 0], [0, 0, 0.5, 0.5]]), [0.5, 0.5])
    th = MixingMeasure([1, 2, 4, 8], cloud)
    direct = 0.5 * (0.5 + 0.5 * 2**3) ** 2 + 0.5 * (0.5 * 4**3 + 0.5 * 8**3) ** 2
    assert marginal_moment_law_moments(th, 3, 2) == pytest.approx(direct)
    big = marginal_moment_law_moments(th, 20, 6)
    assert float(big) > 1e100


def test_family_law_with_dirac_family_matches_plain_law():
    th = exact_theta()
    fam = [FiniteSupportMeasure.dirac(a) for a in th.atoms]
    a = family_partial_sum_law(th, fam, 3)
    b = exact_partial_sum_law(th, 3)
    assert a.values == b.values and a.probs == b.probs


def test_family_law_convolution_family_mean():
    base = FiniteSupportMeasure([1, 2], [F(1, 2), F(1, 2)])
    fam = convolution_family(base, 3)
    cloud = AtomCloud([(F(1, 3), F(1, 3), F(1, 3))], [1])
    law = family_partial_sum_law(cloud, fam, 2)
    # E S_2 = 2 * E[X], X ~ mixture of base^{*k}, k=0,1,2
    assert law.mean() == 2 * F(1, 3) * (0 + F(3, 2) + 3)


def test_tv_factor_grows_with_n():
    s = np.linspace(0, 5, 50)
    f1, f2 = laplace_tv_factor(1, s), laplace_tv_factor(2, s)
    assert 10 < f1 < f2


def test_sample_sequence_shapes():
    w, X, S = sample_sequence(exact_theta(), 6, seed=1)
    assert X.shape == (6,) and S[-1] == X.sum()
    assert set(X) <= {0.0, 1.0, 3.0}


def test_sampler_matches_exact_law():
    th = exact_theta()
    emp = empirical_law(sample_partial_sums(th, 3, 50_000, seed=2))
    assert total_variation(emp, exact_partial_sum_law(th, 3)) < 0.02


@st.composite
def clouds(draw):
    k = draw(st.integers(1, 3))
    pts = [draw(st.lists(st.integers(0, 5), min_size=3, max_size=3).filter(lambda v: sum(v) > 0)) for _ in range(k)]
    pts = [tuple(F(v, sum(p)) for v in p) for p in pts]
    raw = [draw(st.integers(1, 5)) for _ in range(k)]
    probs = [F(r, sum(raw)) for r in raw]
    return MixingMeasure([0, 1, 3], AtomCloud(pts, probs))


@settings(max_examples=30, deadline=None)
@given(clouds(), st.integers(1, 4))
def test_law_is_probability_and_mean_is_linear(th, n):
    law = exact_partial_sum_law(th, n)
    assert sum(law.probs) == 1
    first = mixed_moments(th, 1)
    mean1 = sum(a * first[tuple(int(i == j) for i in range(3))] for j, a in enumerate(th.atoms))
    assert law.mean() == n * mean1


@settings(max_examples=30, deadline=None)
@given(clouds(), clouds())
def test_tv_symmetric_and_bounded(a, b):
    la, lb = exact_partial_sum_law(a, 2), exact_partial_sum_law(b, 2)
    t = total_variation(la, lb)
    assert 0 <= t <= 1 and t == total_variation(lb, la)
