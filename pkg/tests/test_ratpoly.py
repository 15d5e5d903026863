import random
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as C

from kart_uat.errors import CertificationError, ValidationError
from kart_uat.ratpoly import (ApproxConfig, RationalPoly, approx_by_rational_poly,
                              continued_fraction, decode_poly, decode_rational, decode_seq,
                              encode_poly, encode_rational, encode_seq, eval_poly,
                              eval_poly_float, format_rational, from_continued_fraction,
                              grid_error, parse_rational)

rationals = st.fractions(max_denominator=10**6).filter(lambda q: abs(q) < 10**6)
polys = st.lists(rationals, max_size=8).map(RationalPoly.canonical)


def test_zero_polynomial_is_first_index():
    assert encode_poly(RationalPoly(())) == 1
    assert decode_poly(1) == RationalPoly(())


def test_half_index_matches_enumeration_oracle():
    target = RationalPoly((Fraction(1, 2),))
    n = 1
    while decode_poly(n) != target:
        n += 1
    assert encode_poly(target) == n == 4


def test_small_round_trips():
    assert encode_poly(decode_poly(5)) == 5
    p = RationalPoly((Fraction(2, 3), Fraction(-1), Fraction(5)))
    assert decode_poly(encode_poly(p)) == p


def test_first_indices_enumerate_distinct_polynomials():
    seen = [decode_poly(n) for n in range(1, 5000)]
    assert len(set(seen)) == len(seen)


def test_decode_large_index_is_fast():
    start = time.perf_counter()
    decode_poly(10**6)
    decode_poly(10**300)
    assert time.perf_counter() - start < 0.5


def test_decode_is_canonical():
    for n in range(1, 3000):
        p = decode_poly(n)
        assert not p.coeffs or p.coeffs[-1] != 0
        for c in p.coeffs:
            assert c.denominator > 0


@given(polys)
@settings(max_examples=300, deadline=None)
def test_round_trip_property(p):
    assert decode_poly(encode_poly(p)) == p


@given(st.integers(min_value=1, max_value=10**40))
@settings(max_examples=300, deadline=None)
def test_index_round_trip_property(n):
    assert encode_poly(decode_poly(n)) == n


@given(st.lists(st.integers(min_value=0, max_value=10**6), min_size=1, max_size=6))
def test_sequence_code_round_trip(seq):
    assert decode_seq(encode_seq(seq)) == seq


@given(rationals)
def test_rational_code_round_trip(q):
    assert decode_rational(encode_rational(q)) == q
    cf = continued_fraction(q)
    assert from_continued_fraction(cf) == q
    assert len(cf) == 1 or cf[-1] >= 2


def test_rational_text_form():
    assert format_rational(Fraction(-3, 7)) == "-3/7"
    assert parse_rational("-3/7") == Fraction(-3, 7)
    assert parse_rational("5") == 5
    big = Fraction(10**5000 + 1, 3)
    assert parse_rational(format_rational(big)) == big
    for bad in ["6/4", "1/0", "1/-2", "x", "1.5"]:
        with pytest.raises(ValidationError):
            parse_rational(bad)


def test_non_canonical_inputs_rejected():
    with pytest.raises(ValidationError):
        RationalPoly((Fraction(1), Fraction(0)))
    with pytest.raises(ValidationError):
        RationalPoly((1.5,))
    with pytest.raises(ValidationError):
        encode_poly([Fraction(1)])
    with pytest.raises(ValidationError):
        decode_poly(0)


def test_eval_poly_exact():
    assert eval_poly(RationalPoly(()), Fraction(7, 3)) == 0
    assert eval_poly(RationalPoly((0, 0, 1)), Fraction(3, 2)) == Fraction(9, 4)


def test_eval_poly_matches_float_horner():
    rng = random.Random(1)
    for _ in range(100):
        deg = rng.randint(0, 8)
        cs = [Fraction(rng.randint(-10, 10), rng.randint(1, 10)) for _ in range(deg + 1)]
        p = RationalPoly.canonical(cs)
        t = Fraction(rng.randint(0, 1000), 1000)
        acc = 0.0
        for c in reversed(cs):
            acc = acc * float(t) + float(c)
        assert abs(float(eval_poly(p, t)) - acc) < 1e-12
        assert abs(eval_poly_float(p, float(t)) - acc) < 1e-12


def test_float_eval_survives_cancellation():
    # shifted Chebyshev T_40(2t-1) has monomial coefficients near 1e23
    p, _ = approx_by_rational_poly(lambda t: np.cos(40 * np.arccos(2 * t - 1)), 1e-6)
    t = np.linspace(0, 1, 1001)
    ref = np.array([float(eval_poly(p, Fraction(x))) for x in t])
    assert np.max(np.abs(eval_poly_float(p, t) - ref)) < 1e-12


def test_approx_exact_inputs():
    p, err = approx_by_rational_poly(lambda t: t, 1e-3)
    assert p == RationalPoly((0, 1)) and err == 0
    p, err = approx_by_rational_poly(lambda t: np.full_like(t, 1 / 3), 1e-3)
    assert p == RationalPoly((Fraction(1, 3),)) and err == 0


def test_approx_exp_against_chebyshev_oracle():
    t = np.linspace(0, 1, 10_000)
    # independent oracle: degree-4 Chebyshev interpolant already beats 1e-2
    cheb = C.chebinterpolate(lambda u: np.exp((u + 1) / 2), 4)
    assert np.max(np.abs(C.chebval(2 * t - 1, cheb) - np.exp(t))) < 1e-3
    p, err = approx_by_rational_poly(np.exp, 1e-2)
    assert p.degree <= 6
    assert err < 1e-2
    assert np.max(np.abs(eval_poly_float(p, t) - np.exp(t))) < 1e-2


REGISTRY_1D = {
    "exp": np.exp,
    "sin": lambda t: np.sin(np.pi * t),
    "runge": lambda t: 1 / (1 + 25 * (t - 0.5) ** 2),
}


@pytest.mark.parametrize("name", sorted(REGISTRY_1D))
@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_density_smoke_and_certificate(name, eps):
    f = REGISTRY_1D[name]
    p, err = approx_by_rational_poly(f, eps)
    assert err < eps
    assert grid_error(f, p, 20_000) < 1.5 * eps


def test_degree_cap_failure_reports_best():
    with pytest.raises(CertificationError) as info:
        approx_by_rational_poly(lambda t: np.abs(t - 0.5), 1e-4, ApproxConfig(degree_cap=8))
    err = info.value
    assert err.stage == "polynomial"
    assert err.achieved > err.required
    best, best_err = err.best
    assert isinstance(best, RationalPoly) and best_err > 0


def test_approx_rejects_bad_eps():
    with pytest.raises(ValidationError):
        approx_by_rational_poly(np.exp, 0)
