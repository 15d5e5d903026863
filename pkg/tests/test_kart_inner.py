import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kart_uat.errors import ValidationError
from kart_uat.kart_inner import (KartBasis, clamp_events, eval_h, eval_h_float, inner_key,
                                 inner_keys_float, lambda_tail_bound, make_basis, psi_exact,
                                 psi_float, separation)

B2 = make_basis(2, 8)
B3 = make_basis(3, 8)


def test_branch_count_and_weights():
    assert B2.branches == 5 and B3.branches == 7
    for b in (B2, B3):
        assert sum(b.lam) == 1
        assert all(l > 0 for l in b.lam)
        assert b.gamma == 2 * b.d + 2
    assert B2.lam[0] > B2.lam[1] > 0


def test_weights_match_direct_series_oracle():
    # lambda'_2 = sum_{r=1}^{8} 6^-(2^r - 1) for d = 2
    raw2 = sum(Fraction(1, 6 ** (2 ** r - 1)) for r in range(1, 9))
    assert B2.lam[1] / B2.lam[0] == raw2
    assert B2.normalization == 1 / (1 + raw2)
    assert lambda_tail_bound(B2) < Fraction(1, 6 ** 500)


def test_depth_validation():
    with pytest.raises(ValidationError):
        make_basis(2, 1)
    with pytest.raises(ValidationError):
        make_basis(1, 8)


@pytest.mark.parametrize("basis", [B2, B3], ids=["d2", "d3"])
def test_h_monotone_with_range(basis):
    x = np.sort(np.random.default_rng(0).random(10_000))
    x = np.concatenate([[0.0], x, [1.0]])
    for p in range(1, basis.branches + 1):
        v = eval_h_float(basis, p, x)
        assert np.all(np.diff(v) >= 0)
        assert v[0] >= 0 and v[-1] <= 1
    assert eval_h(basis, 1, 0) == 0
    assert eval_h(basis, basis.branches, 1) == 1
    assert clamp_events() == 0


def test_branches_occupy_disjoint_slices():
    x = np.linspace(0, 1, 2001)
    tops = [eval_h_float(B2, p, x).max() for p in range(1, 6)]
    bottoms = [eval_h_float(B2, p, x).min() for p in range(1, 6)]
    for p in range(4):
        assert tops[p] <= bottoms[p + 1] + 1e-15


def test_float_path_matches_exact():
    rng = random.Random(2)
    for _ in range(200):
        x = Fraction(rng.randint(0, 10**6), 10**6)
        p = rng.randint(1, 5)
        assert abs(float(eval_h(B2, p, x)) - eval_h_float(B2, p, float(x))) < 1e-13


def test_generator_stable_under_deeper_digits():
    # x with at most 4 base-6 digits: psi at depth 4 and at depth 9 agree exactly
    shallow, deep = make_basis(2, 4), make_basis(2, 9)
    rng = random.Random(4)
    for _ in range(100):
        x = Fraction(rng.randint(0, 6**4 - 1), 6**4)
        assert psi_exact(shallow, x) == psi_exact(deep, x)


def test_psi_periodic_shift():
    for x in (Fraction(0), Fraction(1, 7), Fraction(5, 6)):
        assert psi_exact(B2, 1 + x) == 1 + psi_exact(B2, x)
    x = np.linspace(0, 1.2, 50)
    assert np.allclose(psi_float(B2, x), [float(psi_exact(B2, Fraction(v))) for v in x], atol=1e-14)


def test_inner_key_examples():
    x = Fraction(3, 7)
    for p in range(1, 6):
        assert inner_key(B2, p, (x, x)) == eval_h(B2, p, x)
        k = inner_key(B2, p, (Fraction(0), Fraction(1)))
        assert k == B2.lam[0] * eval_h(B2, p, 0) + B2.lam[1] * eval_h(B2, p, 1)
        assert 0 <= k <= 1


@given(st.lists(st.fractions(min_value=0, max_value=1, max_denominator=1000), min_size=2, max_size=2),
       st.integers(min_value=0, max_value=1), st.fractions(min_value=0, max_value=1, max_denominator=1000),
       st.integers(min_value=1, max_value=5))
@settings(max_examples=100, deadline=None)
def test_inner_key_monotone_in_each_coordinate(x, q, bump, p):
    y = list(x)
    y[q] = min(Fraction(1), y[q] + bump)
    assert inner_key(B2, p, x) <= inner_key(B2, p, y)


def test_keys_float_shape_and_validation():
    X = np.random.default_rng(1).random((50, 2))
    K = inner_keys_float(B2, X)
    assert K.shape == (5, 50)
    with pytest.raises(ValidationError):
        inner_keys_float(B2, np.zeros((4, 3)))
    with pytest.raises(ValidationError):
        eval_h(B2, 6, Fraction(1, 2))
    with pytest.raises(ValidationError):
        eval_h(B2, 1, Fraction(3, 2))


def test_separation_logged():
    rep = separation(B2, 33)
    assert rep["min_separating_branches"] >= rep["required"]


def test_basis_json_round_trip():
    back = KartBasis.from_json(B3.to_json())
    assert back == B3
    obj = B2.to_json()
    obj["shift_a"] = "1/30"
    with pytest.raises(ValidationError):
        KartBasis.from_json(obj)
