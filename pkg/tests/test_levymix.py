import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.levymix import (
    LevyMixing,
    LevyTriple,
    LisppSpec,
    bm_hybrid_transform,
    bm_marginal_table,
    bridge_construct,
    empirical_chf,
    hybrid_separation,
    levy_khintchine_chf,
    lispp_laplace_exponent,
    lispp_mixture_laplace_moments,
    mixture_marginal_chf,
    normal_mixture_Sn_chf,
    sample_marginal,
    simulate_path,
)
from forge.simplexmap import AtomCloud, MixingMeasure


def test_brownian_chf_closed_form():
    tr = LevyTriple(0.3, 2.0)
    u = np.array([-1.0, 0.5, 2.0])
    np.testing.assert_allclose(levy_khintchine_chf(tr, 1.5, u), np.exp(1.5 * (0.3j * u - u**2)))


def test_lispp_triple_reproduces_poisson_chf():
    # compound Poisson with rate m at each atom a: exp(t m (e^{iua} - 1))
    spec = LisppSpec((1.0, 2.5), (0.7, 0.2))
    tr = spec.to_triple()
    u = np.linspace(-3, 3, 13)
    want = np.exp(2.0 * (0.7 * (np.exp(1j * u) - 1) + 0.2 * (np.exp(2.5j * u) - 1)))
    np.testing.assert_allclose(levy_khintchine_chf(tr, 2.0, u), want, atol=1e-13)
    np.testing.assert_allclose(tr.jump_intensities(), [0.7, 0.2])


def test_lispp_laplace_exponent():
    spec = LisppSpec((0.0, 2.0), (1.0, 3.0))
    assert lispp_laplace_exponent(spec, 0.5) == pytest.approx(3.0 * (np.exp(-1.0) - 1))
    with pytest.raises(ValueError):
        LisppSpec((-1.0,), (1.0,))


def test_triple_validation():
    with pytest.raises(ValueError):
        LevyTriple(0, -1)
    with pytest.raises(ValueError):
        LevyTriple(0, 0, (0.0,), (1.0,))


def test_triple_json_roundtrip():
    tr = LisppSpec((1.0,), (2.0,)).to_triple()
    assert LevyTriple.from_json(tr.to_json()) == tr


def test_bm_pair_separated_by_hybrid_transform():
    a = LevyMixing.bm([(0, 1), (0, 3)], [0.5, 0.5])
    b = LevyMixing.bm([(0, 2)], [1.0])
    s = np.linspace(0, 4, 17)
    gap = 0.5 * (np.exp(-s) + np.exp(-3 * s)) - np.exp(-2 * s)
    assert hybrid_separation(a, b) == pytest.approx(np.abs(gap).max(), rel=1e-12)
    # but the means of sigma2 agree, so first-order behaviour in s matches
    ta, tb = bm_hybrid_transform(a, [0.0], [0.0, 1e-6]), bm_hybrid_transform(b, [0.0], [0.0, 1e-6])
    np.testing.assert_allclose(ta, tb, atol=1e-11)


def test_marginal_table_is_hybrid_transform_on_parabola():
    th = LevyMixing.bm([(0.2, 1), (-0.1, 3)], [0.4, 0.6])
    t, w = 1.7, 0.9
    m = bm_marginal_table(th, [t], [w])[0, 0]
    h = bm_hybrid_transform(th, [w * t], [t * w * w / 2])[0, 0]
    assert m == pytest.approx(h)
    assert m == pytest.approx(mixture_marginal_chf(th, t, w))


def test_normal_mixture_Sn_chf_forms_agree():
    th = LevyMixing.bm([(0.2, 1), (-0.1, 3)], [0.4, 0.6])
    t = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(normal_mixture_Sn_chf(th, 3, t),
                               normal_mixture_Sn_chf(([(0.2, 1), (-0.1, 3)], [0.4, 0.6]), 3, t))
    with pytest.raises(ValueError):
        normal_mixture_Sn_chf(th, 0, t)


def test_bridge_preserves_laplace_moments_of_equal_pairs():
    cloud = AtomCloud(np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]]), [0.5, 0.5])
    th = MixingMeasure([0, 1, 3], cloud)
    L1, L2 = bridge_construct(th, th)
    for s in (0.0, 0.5, 2.0):
        assert lispp_mixture_laplace_moments(L1, 1.0, s, 3) == lispp_mixture_laplace_moments(L2, 1.0, s, 3)
    assert lispp_mixture_laplace_moments(L1, 1.0, 0.0, 4) == pytest.approx(1.0)


def test_simulated_path_shape_and_jumps():
    tr = LisppSpec((1.0,), (3.0,)).to_triple()
    times, values, jumps = simulate_path(tr, 2.0, mesh=200, seed=5)
    assert times.shape == values.shape == (201,)
    # pure jump LISPP: the path equals the number of unit jumps so far
    assert values[-1] == pytest.approx(len(jumps), abs=1e-12)


def test_marginal_sampler_chf():
    th = LevyMixing.from_lispp([LisppSpec((1.0,), (1.0,)), LisppSpec((2.0,), (0.5,))], [0.5, 0.5])
    x = sample_marginal(th, 1.0, 40_000, seed=3)
    u = np.linspace(-2, 2, 5)
    assert np.abs(empirical_chf(x, u) - mixture_marginal_chf(th, 1.0, u)).max() < 0.02


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.0, 2), st.floats(0, 3), st.floats(-3, 3))
def test_chf_is_bounded_and_semigroup(a, m, t, u):
    tr = LisppSpec((a,), (m,)).to_triple()
    c = levy_khintchine_chf(tr, t, u)
    assert abs(c) <= 1 + 1e-12
    assert levy_khintchine_chf(tr, 2 * t, u) == pytest.approx(c * c, abs=1e-12)
