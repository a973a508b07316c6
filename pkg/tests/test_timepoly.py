import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from reyex.rationals import GaussianRational, mpq
from reyex.timepoly import TP_ONE, TP_ZERO, TimePoly, tp_basis

small_q = st.fractions(min_value=-50, max_value=50, max_denominator=20).map(
    lambda f: mpq(f.numerator, f.denominator)
)
coeffs = st.tuples(small_q, small_q).map(lambda t: GaussianRational(*t))
exponent_pairs = st.tuples(st.integers(0, 4), st.integers(0, 12))
polys = st.dictionaries(exponent_pairs, coeffs, max_size=5).map(TimePoly)


def test_zero_terms_dropped():
    p = TimePoly({(0, 1): GaussianRational(0, 0), (1, 2): GaussianRational(1, 0)})
    assert (0, 1) not in p.terms
    assert p.num_terms() == 1


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        TimePoly({(-1, 0): GaussianRational(1, 0)})
    with pytest.raises(ValueError):
        TimePoly({(0, -2): GaussianRational(1, 0)})


def test_product_adds_exponents():
    p = tp_basis(1, 2) * tp_basis(3, 4)
    assert p == tp_basis(4, 6)


def test_derivative_of_basis():
    # d/dt t^2 e^{-3t} = 2 t e^{-3t} - 3 t^2 e^{-3t}
    p = tp_basis(2, 3).derivative()
    assert p == TimePoly({(1, 3): GaussianRational(2, 0), (2, 3): GaussianRational(-3, 0)})


def test_evaluate_simple():
    p = tp_basis(1, 1, GaussianRational(2, 0))
    v = p.evaluate(mpmath.mpf(1))
    with mpmath.workprec(256):
        assert abs(v.real - 2 * mpmath.e ** -1) < mpmath.mpf(2) ** -200
    assert v.imag == 0


def test_evaluate_precision_guard():
    with pytest.raises(ValueError):
        TP_ONE.evaluate(1.0, precision=10)


def test_records_round_trip():
    p = TimePoly(
        {
            (0, 2): GaussianRational(mpq(1, 3), mpq(-2, 7)),
            (3, 0): GaussianRational(0, mpq(5)),
        }
    )
    assert TimePoly.from_records(p.to_records()) == p


def test_records_reject_duplicates():
    with pytest.raises(ValueError):
        TimePoly.from_records(["0 1 1/1 0/1", "0 1 2/1 0/1"])


@given(polys, polys, polys)
@settings(max_examples=50)
def test_ring_axioms(p, q, r):
    assert (p + q) * r == p * r + q * r
    assert p * q == q * p
    assert p - p == TP_ZERO


@given(polys, polys)
@settings(max_examples=50)
def test_derivative_is_a_derivation(p, q):
    assert (p * q).derivative() == p.derivative() * q + p * q.derivative()


# -- heat-kernel convolution suite ------------------------------------------------


@given(polys, st.integers(1, 14))
@settings(max_examples=60, deadline=None)
def test_heat_convolution_solves_the_forced_ode(p, ksq):
    """F(t) = int_0^t e^{-ksq (t-s)} p(s) ds satisfies F' = -ksq F + p, F(0)=0."""
    F = p.heat_convolve(ksq)
    lhs = F.derivative()
    rhs = F.scale_rational(mpq(-ksq)) + p
    assert lhs == rhs
    # F(0) = 0: sum of coefficients with a = 0 must cancel
    at0 = F.evaluate(0)
    assert abs(at0) < mpmath.mpf(2) ** -200


@pytest.mark.parametrize(
    "terms,ksq",
    [
        ({(0, 4): GaussianRational(1, 0)}, 4),  # resonant b == ksq
        ({(2, 4): GaussianRational(mpq(1, 3), mpq(1, 2))}, 4),
        ({(3, 1): GaussianRational(-2, 0), (0, 9): GaussianRational(0, 1)}, 5),
        ({(1, 0): GaussianRational(1, 1)}, 2),
    ],
)
def test_heat_convolution_matches_quadrature(terms, ksq):
    p = TimePoly(terms)
    F = p.heat_convolve(ksq)
    mpmath.mp.prec = 113
    try:
        for t in (mpmath.mpf("0.25"), mpmath.mpf(1), mpmath.mpf(3)):
            direct = mpmath.quad(
                lambda s: mpmath.e ** (-ksq * (t - s)) * p.evaluate(s, 113), [0, t]
            )
            exact = F.evaluate(t, 113)
            assert abs(direct - exact) < 1e-12 * (1 + abs(exact))
    finally:
        mpmath.mp.prec = 53


def test_heat_convolution_rejects_nonpositive_ksq():
    with pytest.raises(ValueError):
        TP_ONE.heat_convolve(0)


def test_convolution_is_linear():
    p = tp_basis(1, 3)
    q = tp_basis(0, 7, GaussianRational(0, 2))
    assert (p + q).heat_convolve(5) == p.heat_convolve(5) + q.heat_convolve(5)
