"""
Integer Polynomial Arithmetic and Growth Functions
Exact evaluation of iterate schedules p(n), monotonicity thresholds, the
gap bounds behind the double-series estimate, and the enumeration l_i of Z minus 0
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Tuple

import mpmath
import sympy

from ergolab.errors import (
    GrowthFunctionParseError,
    NonPositiveGapError,
    PolynomialParseError,
    PreconditionError,
    WideIntOverflowError,
)

logger = logging.getLogger(__name__)

WIDE_BITS = 128
WIDE_MIN = -(1 << (WIDE_BITS - 1))
WIDE_MAX = (1 << (WIDE_BITS - 1)) - 1

# Upper bound for every threshold scan; thresholds of desk-scale polynomials are tiny
SCAN_LIMIT = 10**7

_N = sympy.Symbol("n")


def check_wide(value: int, context: str = "") -> int:
    """Return value unchanged if it fits a signed 128-bit integer, raise otherwise"""
    if value < WIDE_MIN or value > WIDE_MAX:
        raise WideIntOverflowError(value, context)
    return value


@dataclass(frozen=True)
class IntPoly:
    """
    Integer-coefficient polynomial p(n) = c0 + c1*n + ... + ck*n^k

    Coefficients are stored lowest degree first with trailing zeros removed,
    so the leading coefficient is always nonzero.
    """
    coeffs: Tuple[int, ...]

    def __post_init__(self):
        coeffs = [int(c) for c in self.coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if not coeffs:
            raise PreconditionError("the zero polynomial is not a valid IntPoly")
        object.__setattr__(self, "coeffs", tuple(coeffs))

    @classmethod
    def monomial(cls, coefficient: int, degree: int) -> "IntPoly":
        return cls(tuple([0] * degree + [coefficient]))

    @classmethod
    def parse(cls, text: str) -> "IntPoly":
        """Parse the textual form "c0+c1*n+...+ck*n^k" (any order, optional signs)"""
        try:
            expr = sympy.sympify(text.replace("^", "**"), locals={"n": _N})
            poly = sympy.Poly(expr, _N)
        except (sympy.SympifyError, sympy.PolynomialError, TypeError, SyntaxError) as e:
            raise PolynomialParseError(f"cannot parse polynomial {text!r}: {e}") from e
        coeffs = poly.all_coeffs()[::-1]
        if not all(c.is_Integer for c in coeffs):
            raise PolynomialParseError(f"polynomial {text!r} must have integer coefficients in n")
        try:
            return cls(tuple(int(c) for c in coeffs))
        except PreconditionError as e:
            raise PolynomialParseError(str(e)) from e

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1]

    def __call__(self, n: int) -> int:
        return poly_eval(self, n)

    def __add__(self, other: "IntPoly") -> "IntPoly":
        size = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (size - len(self.coeffs))
        b = other.coeffs + (0,) * (size - len(other.coeffs))
        return IntPoly(tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> "IntPoly":
        return IntPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "IntPoly") -> "IntPoly":
        return self + (-other)

    def scaled(self, factor: int) -> "IntPoly":
        return IntPoly(tuple(factor * c for c in self.coeffs))

    def shifted(self, h: int) -> "IntPoly":
        """Coefficients of n -> p(n + h) (Taylor expansion at h)"""
        out = [0] * len(self.coeffs)
        for j, c in enumerate(self.coeffs):
            for i in range(j + 1):
                out[i] += c * math.comb(j, i) * h ** (j - i)
        return IntPoly(tuple(out))

    def difference(self) -> "IntPoly":
        """Forward difference q(n) = p(n+1) - p(n); requires degree >= 1"""
        if self.degree == 0:
            raise PreconditionError("forward difference of a constant is the zero polynomial")
        shifted = self.shifted(1).coeffs
        return IntPoly(tuple(s - c for s, c in zip(shifted, self.coeffs)))

    def derivative(self) -> "IntPoly":
        if self.degree == 0:
            raise PreconditionError("derivative of a constant is the zero polynomial")
        return IntPoly(tuple(j * c for j, c in enumerate(self.coeffs) if j > 0))

    def float_value(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def gap_float(self, x: float, y: float) -> float:
        """p(x+y) - p(x) expanded term by term, avoiding the cancellation of p(x+y) - p(x)"""
        total = 0.0
        for j, c in enumerate(self.coeffs):
            for i in range(1, j + 1):
                total += c * math.comb(j, i) * x ** (j - i) * y ** i
        return total

    def to_text(self) -> str:
        terms = []
        for j, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if j == 0:
                terms.append(str(c))
                continue
            power = "n" if j == 1 else f"n^{j}"
            if c == 1:
                terms.append(power)
            elif c == -1:
                terms.append(f"-{power}")
            else:
                terms.append(f"{c}*{power}")
        return "+".join(terms).replace("+-", "-")

    def __str__(self) -> str:
        return self.to_text()


def poly_eval(p: IntPoly, n: int) -> int:
    """Exact Horner evaluation; the result must fit the signed 128-bit range"""
    if n < 0:
        raise PreconditionError(f"poly_eval requires n >= 0, got {n}")
    acc = 0
    for c in reversed(p.coeffs):
        acc = acc * n + c
    return check_wide(acc, f"p({n}) for p = {p}")


def poly_eval_naive(p: IntPoly, n: int) -> int:
    """Term-by-term evaluation used to cross-check poly_eval"""
    if n < 0:
        raise PreconditionError(f"poly_eval requires n >= 0, got {n}")
    total = sum(c * n ** j for j, c in enumerate(p.coeffs))
    return check_wide(total, f"p({n}) for p = {p}")


def normalize_sign(p: IntPoly) -> Tuple[IntPoly, bool]:
    """
    Return (p', time_reversed) with a positive leading coefficient

    A schedule with negative leading coefficient is realized by running the
    inverse transformation along -p, so callers only ever see positive schedules.
    """
    if p.leading > 0:
        return p, False
    return -p, True


def positive_threshold(p: IntPoly) -> int:
    """
    Least N >= 1 such that p(n) > 0 for every integer n >= N

    Recursive scan: the forward difference is eventually positive from its own
    threshold on, so p is increasing there and a finite upward scan finds a
    positive value; a downward scan then extends the range as far as it holds.
    """
    if p.leading <= 0:
        raise PreconditionError(f"{p} has no positive leading coefficient")
    if p.degree == 0:
        return 1
    n = positive_threshold(p.difference())
    while poly_eval(p, n) <= 0:
        n += 1
        if n > SCAN_LIMIT:
            raise PreconditionError(f"positivity scan for {p} exceeded {SCAN_LIMIT}")
    while n > 1 and poly_eval(p, n - 1) > 0:
        n -= 1
    return n


def monotone_threshold(p: IntPoly) -> int:
    """Least N1 >= 1 such that p is positive and strictly increasing on [N1, inf)"""
    if p.leading <= 0:
        raise PreconditionError(f"{p} has no positive leading coefficient")
    if p.degree == 0:
        raise PreconditionError("a constant schedule is never strictly increasing")
    return max(positive_threshold(p), positive_threshold(p.difference()))


def certified_m1(p: IntPoly) -> int:
    """
    Scan-certified M1: q(n) >= (a_t/2)((n+1)^t - n^t) for all n >= M1

    Equivalent to 2q(n) - a_t((n+1)^t - n^t) >= 0; that difference has degree
    t-1 and leading coefficient a_t*t > 0, so positive_threshold applies.
    """
    if p.leading <= 0 or p.degree == 0:
        raise PreconditionError(f"{p} must be non-constant with positive leading coefficient")
    q = p.difference()
    if p.degree == 1:
        return 1
    top = IntPoly.monomial(1, p.degree).difference().scaled(p.leading)
    return positive_threshold(q.scaled(2) - top)


def real_positive_threshold(p: IntPoly) -> int:
    """
    Least N >= 1 whose Taylor expansion p(N + h) has nonnegative coefficients
    and a positive constant term; then p and all its derivatives are positive
    on the real half-line [N, inf)
    """
    if p.leading <= 0:
        raise PreconditionError(f"{p} has no positive leading coefficient")
    n = 1
    while True:
        taylor = p.shifted(n).coeffs
        if taylor[0] > 0 and all(c >= 0 for c in taylor):
            return n
        n += 1
        if n > SCAN_LIMIT:
            raise PreconditionError(f"real positivity scan for {p} exceeded {SCAN_LIMIT}")


def real_increasing_threshold(p: IntPoly) -> int:
    return real_positive_threshold(p.derivative())


def real_convex_threshold(p: IntPoly) -> int:
    if p.degree < 2:
        raise PreconditionError(f"{p} has no positive second derivative")
    return real_positive_threshold(p.derivative().derivative())


def gap_lower_bound(p: IntPoly, n: int, k: int) -> float:
    """a_t * t * n^(t/2) * k^(t/2), valid for n >= certified_m1(p), k >= 1"""
    m1 = certified_m1(p)
    if n < m1:
        raise PreconditionError(f"gap_lower_bound requires n >= M1 = {m1}, got n = {n}")
    if k < 1:
        raise PreconditionError(f"gap_lower_bound requires k >= 1, got k = {k}")
    t = p.degree
    return float(p.leading) * t * float(n) ** (t / 2) * float(k) ** (t / 2)


class GrowthKind(Enum):
    """Families of growth functions h for the double series"""
    POLYNOMIAL = "poly"
    POWER_FLOOR = "powfloor"
    QUARTIC_LOG = "qlog"
    REMARK_COUNTEREXAMPLE = "remarkcex"


@dataclass(frozen=True)
class GrowthFn:
    """
    Integer-valued growth function h on an integer domain [threshold, inf)

    - POLYNOMIAL: h(n) = p(n)
    - POWER_FLOOR: h(n) = [n^a], a > 4 rational
    - QUARTIC_LOG: h(n) = [n^4 log^s n], s > 0 rational
    - REMARK_COUNTEREXAMPLE: h(n) = [n/2]^5 + (-1)^(n+1), defined for n >= 3
    """
    kind: GrowthKind
    poly: Optional[IntPoly] = None
    exponent: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind is GrowthKind.POLYNOMIAL:
            if self.poly is None or self.poly.leading <= 0:
                raise PreconditionError("polynomial growth needs a positive leading coefficient")
        elif self.kind is GrowthKind.POWER_FLOOR:
            if self.exponent is None or self.exponent <= 4:
                raise PreconditionError("power-floor growth needs an exponent a > 4")
        elif self.kind is GrowthKind.QUARTIC_LOG:
            if self.exponent is None or self.exponent <= 0:
                raise PreconditionError("quartic-log growth needs s > 0")

    @classmethod
    def polynomial(cls, p: IntPoly) -> "GrowthFn":
        return cls(GrowthKind.POLYNOMIAL, poly=p)

    @classmethod
    def power_floor(cls, a) -> "GrowthFn":
        return cls(GrowthKind.POWER_FLOOR, exponent=Fraction(a))

    @classmethod
    def quartic_log(cls, s) -> "GrowthFn":
        return cls(GrowthKind.QUARTIC_LOG, exponent=Fraction(s))

    @classmethod
    def remark_counterexample(cls) -> "GrowthFn":
        return cls(GrowthKind.REMARK_COUNTEREXAMPLE)

    @classmethod
    def parse(cls, text: str) -> "GrowthFn":
        """Parse "poly:<spec>", "powfloor:<a>", "qlog:<s>" or "remarkcex" """
        head, _, tail = text.strip().partition(":")
        try:
            if head == "poly":
                return cls.polynomial(IntPoly.parse(tail))
            if head == "powfloor":
                return cls.power_floor(Fraction(tail))
            if head == "qlog":
                return cls.quartic_log(Fraction(tail))
            if head == "remarkcex" and not tail:
                return cls.remark_counterexample()
        except (ValueError, ZeroDivisionError, PreconditionError) as e:
            raise GrowthFunctionParseError(f"invalid growth function {text!r}: {e}") from e
        raise GrowthFunctionParseError(f"unknown growth function {text!r}")

    def to_text(self) -> str:
        if self.kind is GrowthKind.POLYNOMIAL:
            return f"poly:{self.poly.to_text()}"
        if self.kind is GrowthKind.REMARK_COUNTEREXAMPLE:
            return "remarkcex"
        return f"{self.kind.value}:{self.exponent}"

    @cached_property
    def threshold(self) -> int:
        """First n of the domain on which h is strictly increasing"""
        if self.kind is GrowthKind.POLYNOMIAL:
            return monotone_threshold(self.poly)
        if self.kind is GrowthKind.POWER_FLOOR:
            return 1
        if self.kind is GrowthKind.REMARK_COUNTEREXAMPLE:
            return 3
        # n^4 log^s n has increasing real increments for n >= 2; once an
        # increment reaches 1 every later floor gap is at least 1
        s = mpmath.mpf(self.exponent.numerator) / self.exponent.denominator
        n = 2
        with mpmath.workprec(80):
            while True:
                step = (mpmath.mpf(n + 1) ** 4 * mpmath.log(n + 1) ** s
                        - mpmath.mpf(n) ** 4 * mpmath.log(n) ** s)
                if step >= 1:
                    return n
                n += 1

    def evaluate(self, n: int) -> int:
        """Exact h(n)"""
        if n < 1:
            raise PreconditionError(f"growth functions are defined for n >= 1, got {n}")
        if self.kind is GrowthKind.POLYNOMIAL:
            return poly_eval(self.poly, n)
        if self.kind is GrowthKind.POWER_FLOOR:
            root, _ = sympy.integer_nthroot(n ** self.exponent.numerator, self.exponent.denominator)
            return check_wide(int(root), f"[{n}^{self.exponent}]")
        if self.kind is GrowthKind.QUARTIC_LOG:
            return check_wide(_floor_quartic_log(n, self.exponent), f"[{n}^4 log^{self.exponent} {n}]")
        return (n // 2) ** 5 + (1 if n % 2 == 1 else -1)

    def evaluate_float(self, n: int) -> int:
        """Double-precision floor, kept only to measure its discrepancy from evaluate"""
        if self.kind is GrowthKind.QUARTIC_LOG:
            return math.floor(n ** 4 * math.log(n) ** float(self.exponent))
        if self.kind is GrowthKind.POWER_FLOOR:
            return math.floor(n ** float(self.exponent))
        return self.evaluate(n)

    def values(self, start: int, stop: int) -> List[int]:
        """h(n) for n in [start, stop)"""
        return [self.evaluate(n) for n in range(start, stop)]


def _floor_quartic_log(n: int, s: Fraction) -> int:
    """
    Certified floor of n^4 * ln(n)^s

    The value is computed with at least 96 fractional bits and enclosed in
    [v - slack, v + slack]; precision doubles until both ends share a floor.
    """
    if n == 1:
        return 0
    magnitude = max(1, int(math.log2(n ** 4 * math.log(n) ** float(s) + 2)) + 1)
    bits = magnitude + 128
    while bits <= 1 << 14:
        with mpmath.workprec(bits):
            value = mpmath.mpf(n) ** 4 * mpmath.log(n) ** (mpmath.mpf(s.numerator) / s.denominator)
            slack = abs(value) * mpmath.ldexp(1, -(bits - 24))
            low = int(mpmath.floor(value - slack))
            high = int(mpmath.floor(value + slack))
        if low == high:
            return low
        bits *= 2
    raise ArithmeticError(f"could not certify the floor of {n}^4 log^{s} {n}")


def gap(h: GrowthFn, n: int, k: int) -> int:
    """h(n+k) - h(n), which must be positive on the domain of h"""
    if n < h.threshold:
        raise PreconditionError(f"gap requires n >= {h.threshold}, got n = {n}")
    if k < 1:
        raise PreconditionError(f"gap requires k >= 1, got k = {k}")
    value = check_wide(h.evaluate(n + k) - h.evaluate(n), f"gap({n},{k})")
    if value <= 0:
        raise NonPositiveGapError(n, k, value)
    return value


def l_enumerate(i: int) -> int:
    """l_i = (-1)^(i-1) [(i+1)/2]: 1, -1, 2, -2, 3, ... a bijection N -> Z minus 0"""
    if i <= 0:
        raise PreconditionError(f"l_enumerate requires i >= 1, got {i}")
    magnitude = (i + 1) // 2
    return magnitude if i % 2 == 1 else -magnitude


def l_index(value: int) -> int:
    """Inverse of l_enumerate"""
    if value == 0:
        raise PreconditionError("0 is not enumerated by l_i")
    return 2 * value - 1 if value > 0 else -2 * value
