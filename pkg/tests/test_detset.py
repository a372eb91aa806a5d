import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.detset import (
    CurveSpec,
    DeterminationReport,
    InsufficientSamples,
    coprime_certificate,
    find_vanishing_polynomial,
    phi_dimension_count,
    phi_kernel_search,
    pq_polynomials,
    sample_curve,
    smallest_guaranteed_diagonal,
)
from forge.polycore import MultiPoly


def _x(i, n):
    return MultiPoly.variable(i, n)


def test_moment_curve_samples_are_exact():
    pts = sample_curve(CurveSpec.moment_curve(4), [Fraction(1, 2), 3])
    assert list(pts[0]) == [1, Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)]
    assert list(pts[1]) == [1, 3, 9, 27]


def test_conic_witness_for_three_dim_moment_curve():
    rep = find_vanishing_polynomial(CurveSpec.moment_curve(3), 2, mode="exact")
    assert rep.verdict == "witness-found"
    assert rep.witness == _x(0, 3) * _x(2, 3) - _x(1, 3) ** 2


def test_twisted_cubic_kernel_has_dimension_three():
    rep = find_vanishing_polynomial(CurveSpec.moment_curve(4), 2, mode="exact")
    assert rep.degree == 2
    assert rep.residuals["2"]["kernel_dim"] == 3
    assert rep.residuals["2"]["holdout_max_abs"] == 0
    assert len(rep.witnesses) == 3


def test_float_mode_finds_same_witness():
    rep = find_vanishing_polynomial(CurveSpec.moment_curve(3), 2, mode="float")
    assert rep.verdict == "witness-found"
    coeffs = {e: float(c) for e, c in rep.witness.terms.items()}
    assert coeffs[(1, 0, 1)] == pytest.approx(1.0)
    assert coeffs[(0, 2, 0)] == pytest.approx(-1.0)


def test_power_curve_1248():
    rep = find_vanishing_polynomial(CurveSpec.power_curve([1, 2, 4, 8]), 2, mode="exact")
    assert rep.witness == _x(0, 4) * _x(3, 4) - _x(1, 4) * _x(2, 4)


def test_integer_laplace_atoms_sit_on_twisted_cubic():
    # y = exp(-s) turns atoms 0..3 into (1, y, y^2, y^3)
    rep = find_vanishing_polynomial(CurveSpec.laplace_atoms([0, 1, 2, 3]), 2, mode="float")
    assert rep.verdict == "witness-found"
    assert rep.degree == 2
    # the float kernel is three-dimensional; echelon reduction exposes a binomial
    assert len(rep.witness.terms) == 2
    assert {e: round(c, 9) for e, c in rep.witness.terms.items()} == {(1, 0, 0, 1): 1.0, (0, 1, 1, 0): -1.0}


def test_irrational_laplace_atoms_have_no_conic():
    rep = find_vanishing_polynomial(CurveSpec.laplace_atoms([0, 1, 2 ** 0.5]), 2, mode="float")
    assert rep.verdict == "no-witness-up-to"
    assert rep.witness is None


def test_report_json_roundtrip():
    rep = find_vanishing_polynomial(CurveSpec.moment_curve(3), 2, mode="exact")
    back = DeterminationReport.from_json(rep.to_json())
    assert back.witness == rep.witness and back.verdict == rep.verdict
    assert back.curve == rep.curve


def test_too_few_samples_rejected():
    with pytest.raises(InsufficientSamples):
        find_vanishing_polynomial(CurveSpec.moment_curve(4), 2, mode="exact",
                                  grid=[Fraction(k) for k in range(5)])


def test_negative_laplace_parameter_rejected():
    with pytest.raises(ValueError):
        sample_curve(CurveSpec.laplace_atoms([0, 1]), [-1.0])


def test_unknown_family():
    with pytest.raises(ValueError):
        CurveSpec("spiral", {})


def test_coprime_certificate():
    rep = coprime_certificate([2, 3, 5], 4)
    assert rep.verdict == "exact-certificate"
    assert rep.residuals["full_column_rank"] is True
    assert rep.residuals["vandermonde_rank"] == rep.residuals["basis_size"] == math.comb(6, 4)


def test_non_coprime_collision_gives_witness():
    rep = coprime_certificate([1, 2, 4, 8], 2)
    assert rep.verdict == "witness-found"
    assert _x(0, 4) * _x(3, 4) - _x(1, 4) * _x(2, 4) in rep.witnesses


def test_dimension_count_oracle():
    # exact binomials
    c15, c16 = phi_dimension_count(15, 15), phi_dimension_count(16, 16)
    assert (c15.dim_domain, c15.dim_codomain) == (77_558_760, 111_607_501)
    assert (c16.dim_domain, c16.dim_codomain) == (300_540_195, 186_043_585)
    assert not c15.kernel_guaranteed and c16.kernel_guaranteed
    assert smallest_guaranteed_diagonal() == 16


@pytest.mark.parametrize("N,l", [(2, 3), (5, 5), (9, 4)])
def test_codomain_is_sum_of_graded_pieces(N, l):
    assert phi_dimension_count(N, l).dim_codomain == sum(math.comb(j + 3, 3) for j in range(l * N + 1))


def test_pq_polynomials_low_order():
    P0, Q0 = pq_polynomials(0)
    assert P0(0.3, 0.7) == pytest.approx(1.0)
    assert Q0.is_zero() or Q0(0.3, 0.7) == pytest.approx(0.0)


def test_phi_search_finds_hankel_determinant():
    res = phi_kernel_search(5, 3)
    assert res.found and (res.N, res.l) == (5, 3)
    assert res.residual < 1e-10
    w = res.witness
    # 3x3 Hankel determinant in x0..x4 vanishes on any geometric-type sequence
    for t in (0.5, 2.0, -1.3):
        assert w(*[t**k for k in range(5)]) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=7), min_size=1, max_size=5))
def test_witness_vanishes_on_arbitrary_curve_points(ts):
    w = _x(0, 4) * _x(2, 4) - _x(1, 4) ** 2
    for row in sample_curve(CurveSpec.moment_curve(4), ts):
        assert w(*row) == 0
