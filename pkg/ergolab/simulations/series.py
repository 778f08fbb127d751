"""
Double Series over Growth Gaps
Partial sums of sum_n sum_k 1/sqrt(h(n+k) - h(n)) with integral-test tail
closure, the term-wise majorant, and the divergence certificate for the
alternating counterexample
"""

import logging
import math
import time
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import dblquad, quad

from ergolab.errors import NonPositiveGapError, PreconditionError
from ergolab.models.polynomials import (
    GrowthFn,
    GrowthKind,
    IntPoly,
    certified_m1,
    real_convex_threshold,
    real_increasing_threshold,
)
from ergolab.simulations.reports import ExperimentReport

logger = logging.getLogger(__name__)

WALK_DENSITY_CONSTANT = 2 / math.sqrt(math.pi)   # 2 / sqrt(2 pi sigma^2), sigma^2 = 1/2


def _growth_values(h: GrowthFn, start: int, stop: int) -> List[int]:
    return h.values(start, stop)


def gap_matrix_sums(h: GrowthFn, n0: int, n_cap: int, k_cap: int) -> List[Tuple[int, float]]:
    """(n, sum_{k=1}^{k_cap} 1/sqrt(h(n+k) - h(n))) for n in [n0, n_cap]"""
    if n_cap < n0 or k_cap < 1:
        raise PreconditionError(f"caps must satisfy n_cap >= {n0} and k_cap >= 1")
    values = _growth_values(h, n0, n_cap + k_cap + 1)
    rows = []
    for offset in range(n_cap - n0 + 1):
        base = values[offset]
        gaps = [values[offset + k] - base for k in range(1, k_cap + 1)]
        for k, g in enumerate(gaps, start=1):
            if g <= 0:
                raise NonPositiveGapError(n0 + offset, k, g)
        inner = math.fsum(1.0 / math.sqrt(g) for g in gaps)
        rows.append((n0 + offset, inner))
    return rows


def _inverse_sqrt_gap(p: IntPoly, x: float, y: float) -> float:
    try:
        value = p.gap_float(x, y)
    except OverflowError:
        return 0.0
    return 1.0 / math.sqrt(value) if math.isfinite(value) else 0.0


def _k_tail(p: IntPoly, n: int, k_cap: int) -> float:
    """integral_{k_cap}^inf (p(n+y) - p(n))^-1/2 dy"""
    value, _ = quad(lambda y: _inverse_sqrt_gap(p, n, y), k_cap, np.inf, limit=200)
    return value


def _region_tail(p: IntPoly, n_from: int) -> float:
    """
    integral_{n_from}^inf integral_0^inf (p(x+y) - p(x))^-1/2 dy dx

    With y = u^2 the inner integrand 2u / sqrt(p(x+u^2) - p(x)) stays bounded at u = 0.
    """
    slope = p.derivative()

    def integrand(u, x):
        if u == 0.0:
            return 2.0 / math.sqrt(slope.float_value(x))
        return 2.0 * u * _inverse_sqrt_gap(p, x, u * u)
    value, _ = dblquad(integrand, n_from, np.inf, 0.0, np.inf)
    return value


def polynomial_tail_bound(p: IntPoly, n0: int, n_cap: int, k_cap: int) -> Tuple[Optional[float], str]:
    """
    Upper bound on the part of the double series outside [n0, n_cap] x [1, k_cap]

    Needs p increasing from n0 on and convex from n_cap on (as real functions),
    so the summand decreases in both variables and integrals dominate sums.
    """
    increasing_from = real_increasing_threshold(p)
    convex_from = real_convex_threshold(p) if p.degree >= 2 else None
    if n0 < increasing_from or convex_from is None or n_cap < convex_from:
        return None, f"integral test needs n0 >= {increasing_from} and n_cap >= {convex_from}"
    k_tails = math.fsum(_k_tail(p, n, k_cap) for n in range(n0, n_cap + 1))
    return k_tails + _region_tail(p, n_cap), "integral test on the exact gap"


def _zeta_tail(exponent: float, start: int, cap: int) -> float:
    """sum_{j=start}^{cap} j^-s plus the integral tail beyond cap (s > 1)"""
    partial = math.fsum(j ** -exponent for j in range(start, cap + 1))
    return partial + cap ** (1 - exponent) / (exponent - 1)


def majorant_bound(p: IntPoly, n0: int, n_cap: int, k_cap: int) -> Optional[float]:
    """(1/sqrt(a_t t)) (sum_n n^-t/4)(sum_k k^-t/4), from gap >= a_t t n^{t/2} k^{t/2}"""
    t = p.degree
    if t <= 4 or n0 < certified_m1(p):
        return None
    s = t / 4
    return _zeta_tail(s, n0, n_cap) * _zeta_tail(s, 1, k_cap) / math.sqrt(p.leading * t)


def growth_float(h: GrowthFn, x: float) -> float:
    """Real extension of h used for integral tails"""
    if h.kind is GrowthKind.POLYNOMIAL:
        return h.poly.float_value(x)
    if h.kind is GrowthKind.POWER_FLOOR:
        return x ** float(h.exponent)
    if h.kind is GrowthKind.QUARTIC_LOG:
        return x ** 4 * math.log(x) ** float(h.exponent)
    return (x / 2) ** 5


def single_sum(h: GrowthFn, n0: int, n_cap: int) -> Dict[str, float]:
    """sum_n 1/sqrt(h(n)): partial sum and integral-tail total"""
    partial = math.fsum(1.0 / math.sqrt(v) for v in _growth_values(h, n0, n_cap + 1) if v > 0)
    def integrand(x):
        try:
            value = growth_float(h, x)
        except OverflowError:
            return 0.0
        return 1.0 / math.sqrt(value) if math.isfinite(value) else 0.0
    tail, _ = quad(integrand, n_cap, np.inf, limit=200)
    return {"partial": partial, "tail": tail, "total": partial + tail}


def e_measure_tail_bound(p: IntPoly, n_from: int, n_cap: int, k_cap: int) -> Optional[float]:
    """
    c (sum_{n>=N} sum_k 1/sqrt(p(n+k) - p(n)) + sum_{n>=N} 1/sqrt(p(n))), c = 2/sqrt(2 pi sigma^2)

    Upper bound on 1 - m(E_N(p)) for the walk cocycle; None when the
    integral closure is not certified at these caps.
    """
    h = GrowthFn.polynomial(p)
    n_cap = max(n_cap, n_from)
    rows = gap_matrix_sums(h, n_from, n_cap, k_cap)
    tail, _ = polynomial_tail_bound(p, n_from, n_cap, k_cap)
    if tail is None:
        return None
    double = math.fsum(inner for _, inner in rows) + tail
    return WALK_DENSITY_CONSTANT * (double + single_sum(h, n_from, n_cap)["total"])


def log_comparison_column(h: GrowthFn, start: int, k_cap: int) -> float:
    """2 sqrt(2) sum_{k=1}^{k_cap} 1/(k log^{s/2}(M + k))"""
    s = float(h.exponent)
    return 2 * math.sqrt(2) * math.fsum(1.0 / (k * math.log(start + k) ** (s / 2)) for k in range(1, k_cap + 1))


def series_partial_sums(h: GrowthFn, n_cap: int, k_cap: int, n_from: Optional[int] = None) -> ExperimentReport:
    """Double partial sum and the bound or certificate appropriate to the growth family"""
    started = time.perf_counter()
    n0 = n_from if n_from is not None else h.threshold
    if n0 < h.threshold:
        raise PreconditionError(f"series must start at n >= {h.threshold}")
    rows = gap_matrix_sums(h, n0, n_cap, k_cap)
    partial = math.fsum(inner for _, inner in rows)
    report = ExperimentReport(
        experiment="series",
        config={"growth": h.to_text(), "n_from": n0, "n_cap": n_cap, "k_cap": k_cap},
    )
    cumulative = np.cumsum([inner for _, inner in rows])
    report.rows = [{"n": n, "inner_sum": inner, "cumulative": float(c)}
                   for (n, inner), c in zip(rows, cumulative)]
    report.curves["cumulative"] = [(n, float(c)) for (n, _), c in zip(rows, cumulative)]
    summary = {"partial_sum": partial, "exact_partial": True}

    if h.kind is GrowthKind.POLYNOMIAL:
        tail, method = polynomial_tail_bound(h.poly, n0, n_cap, k_cap)
        summary["tail_bound"] = tail
        summary["tail_method"] = method
        summary["total_bound"] = None if tail is None else partial + tail
        summary["majorant_bound"] = majorant_bound(h.poly, n0, n_cap, k_cap)
        summary["single_sum"] = single_sum(h, n0, n_cap)
        report.add_check("total bound finite", tail is not None and math.isfinite(partial + tail), method)
    elif h.kind is GrowthKind.REMARK_COUNTEREXAMPLE:
        k1 = math.fsum(1.0 / math.sqrt(h.evaluate(n + 1) - h.evaluate(n)) for n in range(n0, n_cap + 1))
        even_terms = sum(1 for n in range(n0, n_cap + 1) if n % 2 == 0)
        summary["k1_subsum"] = k1
        summary["k1_even_terms"] = even_terms
        summary["divergence_floor"] = even_terms / math.sqrt(2)
        report.add_check("k=1 sub-sum reaches the even-term floor", k1 >= even_terms / math.sqrt(2) - 1e-9,
                         f"{k1:.6f} >= {even_terms}/sqrt(2)")
        report.notes.append("h(2m+1) - h(2m) = 2, so every even n contributes 1/sqrt(2) at k = 1")
    else:
        summary["single_sum"] = single_sum(h, n0, n_cap)
        if h.kind is GrowthKind.QUARTIC_LOG:
            summary["log_comparison_column"] = log_comparison_column(h, n0, k_cap)
            if h.exponent <= 2:
                report.notes.append(f"s = {h.exponent} lies in the open case 0 < s <= 2: no convergence claim")
    report.summary = summary
    report.wall_clock = time.perf_counter() - started
    logger.info("Series %s: partial sum %.6f over n <= %d, k <= %d", h.to_text(), partial, n_cap, k_cap)
    return report
