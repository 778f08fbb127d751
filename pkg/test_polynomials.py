#!/usr/bin/env python3
"""
Tests for integer polynomials, thresholds, growth functions and the l_i enumeration
"""

from fractions import Fraction

import numpy as np
import pytest

from ergolab.errors import (
    GrowthFunctionParseError,
    PolynomialParseError,
    PreconditionError,
    WideIntOverflowError,
)
from ergolab.models.polynomials import (
    WIDE_MAX,
    GrowthFn,
    GrowthKind,
    IntPoly,
    certified_m1,
    gap,
    gap_lower_bound,
    l_enumerate,
    l_index,
    monotone_threshold,
    normalize_sign,
    poly_eval,
    poly_eval_naive,
    positive_threshold,
    real_convex_threshold,
    real_increasing_threshold,
)


def test_parse_and_text():
    p = IntPoly.parse("n^5+2*n")
    assert p.coeffs == (0, 2, 0, 0, 0, 1)
    assert p.degree == 5
    assert p.leading == 1
    assert p.to_text() == "2*n+n^5"
    assert IntPoly.parse(p.to_text()) == p
    assert IntPoly.parse("3 - n**2").coeffs == (3, 0, -1)


@pytest.mark.parametrize("text", ["n/2", "x + n", "0", "n^5 +", "sin(n)"])
def test_parse_rejects(text):
    with pytest.raises(PolynomialParseError):
        IntPoly.parse(text)


def test_horner_matches_naive():
    p = IntPoly.parse("7*n^6 - 3*n^5 + n^2 - 11")
    for n in range(0, 300):
        assert poly_eval(p, n) == poly_eval_naive(p, n) == p(n)


def test_horner_matches_naive_on_random_polynomials():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        coeffs = [int(c) for c in rng.integers(-50, 51, size=int(rng.integers(1, 9)))]
        if coeffs[-1] == 0:
            coeffs[-1] = 1
        p = IntPoly(tuple(coeffs))
        n = int(rng.integers(0, 1001))
        assert poly_eval(p, n) == poly_eval_naive(p, n)


def test_poly_eval_range_checks():
    p = IntPoly.monomial(1, 5)
    with pytest.raises(PreconditionError):
        poly_eval(p, -1)
    with pytest.raises(WideIntOverflowError):
        poly_eval(p, 1 << 26)
    assert poly_eval(IntPoly((WIDE_MAX,)), 3) == WIDE_MAX


def test_shift_and_difference():
    square = IntPoly.monomial(1, 2)
    assert square.shifted(1).coeffs == (1, 2, 1)
    assert square.difference().coeffs == (1, 2)
    assert square.derivative().coeffs == (0, 2)
    p = IntPoly.parse("2*n^5 - n + 4")
    for n in range(0, 20):
        assert p.difference()(n) == p(n + 1) - p(n)
        assert p.gap_float(n, 3) == pytest.approx(p(n + 3) - p(n))


def test_normalize_sign():
    p = IntPoly.parse("-n^5 + n")
    q, reversed_ = normalize_sign(p)
    assert reversed_
    assert q.coeffs == (0, -1, 0, 0, 0, 1)
    assert normalize_sign(q) == (q, False)


def test_thresholds():
    assert monotone_threshold(IntPoly.parse("n^5 - 100*n")) == 4
    assert monotone_threshold(IntPoly.monomial(1, 5)) == 1
    assert positive_threshold(IntPoly.parse("n^2 - 10")) == 4
    p = IntPoly.parse("n^5 - 100*n")
    m = monotone_threshold(p)
    assert all(p(n) > 0 and p(n + 1) > p(n) for n in range(m, m + 200))
    with pytest.raises(PreconditionError):
        monotone_threshold(IntPoly.parse("-n^5"))


def test_certified_m1_and_gap_bound():
    p = IntPoly.monomial(1, 5)
    assert certified_m1(p) == 1
    assert gap_lower_bound(p, 1, 1) == 5.0
    for n in range(1, 30):
        for k in range(1, 30):
            assert p(n + k) - p(n) >= gap_lower_bound(p, n, k)
    q = IntPoly.parse("n^5 - 40*n^4")
    m1 = certified_m1(q)
    with pytest.raises(PreconditionError):
        gap_lower_bound(q, m1 - 1, 1)


def test_real_thresholds():
    p = IntPoly.monomial(1, 5)
    assert real_increasing_threshold(p) == 1
    assert real_convex_threshold(p) == 1
    q = IntPoly.parse("n^5 - 30*n^4")
    assert real_increasing_threshold(q) >= 24
    with pytest.raises(PreconditionError):
        real_convex_threshold(IntPoly.parse("3*n + 1"))


def test_enumeration():
    assert [l_enumerate(i) for i in range(1, 7)] == [1, -1, 2, -2, 3, -3]
    for i in range(1, 500):
        assert l_index(l_enumerate(i)) == i
    with pytest.raises(PreconditionError):
        l_enumerate(0)
    with pytest.raises(PreconditionError):
        l_index(0)


def test_growth_functions():
    assert GrowthFn.power_floor(Fraction(9, 2)).evaluate(4) == 512
    assert GrowthFn.power_floor(Fraction(9, 2)).evaluate(2) == 22
    cex = GrowthFn.remark_counterexample()
    assert [cex.evaluate(n) for n in (3, 4, 5, 6)] == [2, 31, 33, 242]
    assert cex.threshold == 3
    assert gap(cex, 4, 1) == 2
    qlog = GrowthFn.quartic_log(3)
    assert qlog.evaluate(10) == qlog.evaluate_float(10)
    assert qlog.threshold >= 2


def test_growth_parse():
    assert GrowthFn.parse("poly:n^5").kind is GrowthKind.POLYNOMIAL
    assert GrowthFn.parse("powfloor:9/2").exponent == Fraction(9, 2)
    assert GrowthFn.parse("qlog:3").to_text() == "qlog:3"
    assert GrowthFn.parse("remarkcex").to_text() == "remarkcex"
    for text in ("poly:n/2", "powfloor:3", "qlog:-1", "cubic:2", "remarkcex:1"):
        with pytest.raises(GrowthFunctionParseError):
            GrowthFn.parse(text)


def test_gap_requires_positive_values():
    h = GrowthFn.polynomial(IntPoly.monomial(1, 5))
    assert gap(h, 2, 3) == 5 ** 5 - 2 ** 5
    with pytest.raises(PreconditionError):
        gap(h, 2, 0)
    with pytest.raises(PreconditionError):
        gap(GrowthFn.remark_counterexample(), 2, 1)


@pytest.mark.parametrize("text", ["2*n^5 + n", "n^7"])
def test_gap_lower_bound_on_a_grid(text):
    p = IntPoly.parse(text)
    h = GrowthFn.polynomial(p)
    m1 = certified_m1(p)
    values = h.values(m1, m1 + 400)
    for i in range(200):
        for k in range(1, 201):
            assert values[i + k] - values[i] >= gap_lower_bound(p, m1 + i, k)


@pytest.mark.parametrize("text", ["poly:n^5", "powfloor:9/2", "qlog:3", "remarkcex"])
def test_gaps_positive_on_a_grid(text):
    h = GrowthFn.parse(text)
    start = max(h.threshold, 1)
    values = h.values(start, start + 400)
    assert all(b > a for a, b in zip(values, values[1:]))
    for n in (start, start + 57, start + 199):
        for k in (1, 13, 200):
            assert gap(h, n, k) == values[n - start + k] - values[n - start] > 0


def test_quartic_log_golden_values():
    qlog = GrowthFn.quartic_log(3)
    # 10^4 ln^3 10 = 122080.7155..., 11^4 ln^3 11 = 201865.1622...
    assert qlog.evaluate(10) == 122080
    assert qlog.evaluate(11) == 201865
    assert gap(qlog, 10, 1) == 79785


def test_enumeration_is_a_bijection_up_to_a_million():
    values = [l_enumerate(i) for i in range(1, 10**6 + 1)]
    assert set(values) == set(range(-500_000, 0)) | set(range(1, 500_001))
    assert all(l_index(v) == i for i, v in enumerate(values, start=1))
