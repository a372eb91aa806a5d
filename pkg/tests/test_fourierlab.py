import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.fourierlab import (
    DegeneratePolynomial,
    GridDensity,
    build_counterexample,
    choose_K,
    default_control_directions,
    eval_f,
    f1,
    grid_mixed_moments,
    verify_projection_equality,
)
from forge.polycore import MultiPoly


def variety_direction(a, b):
    # (a^2, ab, b^2) lies on x0 x2 = x1^2
    return np.array([a * a, a * b, b * b])


def test_f1_series_matches_closed_form_near_switch():
    u = np.array([0.0099, 0.0101])
    closed = (np.sin(u) - u) / u**3
    np.testing.assert_allclose(f1(u), closed, rtol=1e-7)
    assert f1(np.array([0.0]))[0] == pytest.approx(-1 / 6)


def test_eval_f_is_product():
    x = np.array([0.3, -1.2, 4.0])
    assert eval_f(x) == pytest.approx(np.prod(f1(x)))
    assert eval_f(np.zeros((2, 3))).shape == (2,)


def test_choose_K_flagship():
    x = [MultiPoly.variable(i, 3) for i in range(3)]
    assert choose_K(x[0] * x[2] - x[1] ** 2, 3) == 7


def test_pair_masses_and_diagnostics(flagship_pair):
    d = flagship_pair.diagnostics
    assert d["mass_rel_diff"] <= 1e-6
    assert d["imag_rel"] <= 1e-9
    assert flagship_pair.mu.total_mass() == pytest.approx(1.0)
    assert flagship_pair.nu.total_mass() == pytest.approx(1.0)
    assert np.all(flagship_pair.mu.values >= 0) and np.all(flagship_pair.nu.values >= 0)
    # disjoint supports: Hahn split of one function
    assert not np.any((flagship_pair.mu.values > 0) & (flagship_pair.nu.values > 0))


def test_projection_equality_on_variety(flagship_pair):
    rng = np.random.default_rng(1)
    dirs = [variety_direction(*rng.normal(size=2)) for _ in range(5)]
    chk = verify_projection_equality(flagship_pair, dirs)
    assert chk.on_variety <= 1e-3
    assert chk.control >= 1e-2
    assert chk.separation > 1e6


def test_off_variety_direction_rejected(flagship_pair):
    with pytest.raises(ValueError):
        verify_projection_equality(flagship_pair, [np.array([1.0, 1.0, 0.0])])


def test_control_directions_have_large_p(conic_poly):
    for v in default_control_directions(conic_poly):
        assert abs(conic_poly.as_float()(*v)) >= 0.1
        assert np.linalg.norm(v) == pytest.approx(1.0)


def test_grid_moments_of_pair_agree_below_degree_four(flagship_pair):
    idx = [(0, 0, 0), (1, 0, 0), (0, 1, 1), (2, 0, 0), (1, 1, 1), (0, 0, 3)]
    m_mu = grid_mixed_moments(flagship_pair.mu, idx)
    m_nu = grid_mixed_moments(flagship_pair.nu, idx)
    np.testing.assert_allclose(m_mu, m_nu, atol=1e-10)


def test_binary_grid_roundtrip(tmp_path, flagship_pair):
    g = flagship_pair.mu
    path = tmp_path / "mu.grid"
    g.save(path)
    raw = path.read_bytes()
    assert raw[:8] == b"FORGEGRD"
    back = GridDensity.load(path)
    assert (back.d, back.R, back.m, back.kind) == (g.d, g.R, g.m, g.kind)
    np.testing.assert_array_equal(back.values, g.values)


def test_csv_for_low_dimension():
    g = GridDensity(1, 2.0, 4, np.array([0.0, 0.25, 0.5, 0.25]) / 1.0, "test")
    lines = g.to_csv().strip().splitlines()
    assert lines[0] == "x0,value" and len(lines) == 5


def test_grid_size_must_be_power_of_two():
    with pytest.raises(ValueError):
        GridDensity(1, 1.0, 6, np.zeros(6), "bad")


def test_nonhomogeneous_polynomial_rejected():
    x = [MultiPoly.variable(i, 2) for i in range(2)]
    with pytest.raises((DegeneratePolynomial, ValueError)):
        build_counterexample(x[0] * x[1] + 1, R=10, m=32)


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_any_variety_direction_projects_equally(flagship_pair, a, b):
    v = variety_direction(a, b)
    if np.linalg.norm(v) < 1e-3:
        return
    chk = verify_projection_equality(flagship_pair, [v], t_grid=np.linspace(-5, 5, 11), controls=[])
    assert chk.on_variety <= 1e-3
