"""
Experiments
E_N measures, the triple-intersection dichotomy, Cesaro trajectories, the
entropy proxy, the local CLT curve and point certification, run over
fixed-size blocks of sample ids so results do not depend on the worker count
"""

import logging
import math
import time
from multiprocessing import Pool
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ergolab.errors import BudgetExceededError, ErgoLabError, PreconditionError
from ergolab.models.base_systems import llt_deviation, parity_mass, w_mass, w_mass_bound, walk_exact_distribution
from ergolab.models.flip_sets import FlipSet
from ergolab.models.permutations import schedule_times
from ergolab.models.polynomials import poly_eval
from ergolab.simulations.dynamics import (
    Certification,
    SkewSystem,
    SystemConfig,
    s_pullback_bit,
    s_pullback_coordinate,
    t_pullback_bit,
    t_pullback_coordinate,
)
from ergolab.simulations.reports import ExperimentReport
from ergolab.simulations.series import e_measure_tail_bound
from ergolab.simulations.statistics import ProportionEstimate, binomial_sigma, quantiles

logger = logging.getLogger(__name__)

BLOCK_SIZE = 16


def sample_blocks(samples: int, block_size: int = BLOCK_SIZE) -> List[Tuple[int, int]]:
    return [(start, min(start + block_size, samples)) for start in range(0, samples, block_size)]


def run_blocks(worker: Callable, payloads: Sequence, workers: int = 1) -> List:
    """Map a worker over block payloads, in process or on a Pool; output order follows payloads"""
    if workers <= 1 or len(payloads) <= 1:
        return [worker(payload) for payload in payloads]
    with Pool(processes=min(workers, len(payloads))) as pool:
        return pool.map(worker, payloads)


def _system(config: Dict[str, Any]) -> SkewSystem:
    return SystemConfig.from_dict(config).build()


def _check_budget(system: SkewSystem, time_needed: int, label: str):
    if time_needed > system.config.budget:
        raise BudgetExceededError(time_needed, system.config.budget, label)


# E_N(p1) cap E_N(p2), horizon relative

def _e_measure_block(payload) -> Dict[str, Any]:
    config, n_values, horizon, k_cap, start, stop = payload
    system = _system(config)
    polys = (system.p1, system.p2)
    windows = {N: [[poly_eval(p, n) for n in range(N, N + horizon)] for p in polys] for N in n_values}
    all_times = sorted({t for N in n_values for family in windows[N] for t in family})
    counts = {N: {"in_e": 0, "points": 0, "zero": 0,
                  "collisions": [[0] * (k_cap + 1) for _ in polys]} for N in n_values}
    for point_id in range(start, stop):
        point = system.base_point(point_id)
        values = dict(zip(all_times, point.birkhoff_at(all_times)))
        for N in n_values:
            record = counts[N]
            record["points"] += 1
            clean = True
            for j, family in enumerate(windows[N]):
                f = [values[t] for t in family]
                if any(v == 0 for v in f):
                    record["zero"] += 1
                    clean = False
                if len(set(f)) != len(f):
                    clean = False
                for i in range(len(f)):
                    for k in range(1, min(k_cap, len(f) - 1 - i) + 1):
                        if f[i] == f[i + k]:
                            record["collisions"][j][k] += 1
            record["in_e"] += int(clean)
    return counts


def estimate_e_measure(system: SkewSystem, n_values: Sequence[int], samples: int,
                       k_cap: int, workers: int = 1) -> ExperimentReport:
    """Fraction of points whose g_{p_j(n)}, n in [N, N+H-1], are nonzero and distinct, per N"""
    started = time.perf_counter()
    n_values = sorted(n_values)
    horizon = system.horizon
    for N in n_values:
        schedule_times(system.p1, N, horizon)
        schedule_times(system.p2, N, horizon)
        _check_budget(system, max(poly_eval(system.p1, N + horizon - 1), poly_eval(system.p2, N + horizon - 1)),
                      f"Birkhoff time at N={N}")
    config = system.config.to_dict()
    payloads = [(config, n_values, horizon, k_cap, a, b) for a, b in sample_blocks(samples)]
    merged: Dict[int, Dict[str, Any]] = {}
    for block in run_blocks(_e_measure_block, payloads, workers):
        for N, record in block.items():
            target = merged.setdefault(N, {"in_e": 0, "points": 0, "zero": 0,
                                           "collisions": [[0] * (k_cap + 1) for _ in range(2)]})
            target["in_e"] += record["in_e"]
            target["points"] += record["points"]
            target["zero"] += record["zero"]
            for j in range(2):
                for k in range(k_cap + 1):
                    target["collisions"][j][k] += record["collisions"][j][k]

    report = ExperimentReport(
        experiment="e-measure",
        config={**config, "n_values": list(n_values), "samples": samples, "k_cap": k_cap},
    )
    estimates = []
    for N in n_values:
        record = merged[N]
        estimate = ProportionEstimate(record["in_e"], record["points"])
        estimates.append(estimate)
        bound = _lemma_bound(system, N, k_cap)
        report.rows.append({
            "N": N,
            "label": f"E_N^(H={horizon},k_cap={k_cap})",
            **estimate.to_dict(),
            "exact": None,
            "zero_value_points": record["zero"],
            "collisions_p1": {str(k): record["collisions"][0][k] for k in range(1, k_cap + 1)},
            "collisions_p2": {str(k): record["collisions"][1][k] for k in range(1, k_cap + 1)},
            "lemma_tail_bound": bound,
            "undecided": 0,
        })
    report.curves["e_measure"] = [(N, e.value) for N, e in zip(n_values, estimates)]
    for previous, current, N in zip(estimates, estimates[1:], n_values[1:]):
        slack = 2 * max(previous.half_width, current.half_width)
        report.add_check(f"nondecreasing at N={N}", current.value >= previous.value - slack,
                         f"{current.value:.4f} vs {previous.value:.4f} (slack {slack:.4f})")
    report.notes.append("horizon-relative E_N over-estimates the infinite-horizon set")
    report.record_base(system.kind)
    report.wall_clock = time.perf_counter() - started
    return report


def _lemma_bound(system: SkewSystem, N: int, k_cap: int) -> Optional[float]:
    """Sum of the two single-polynomial tail bounds on 1 - m(E_N); None if not certified"""
    total = 0.0
    for p in (system.p1, system.p2):
        try:
            bound = e_measure_tail_bound(p, N, N + 50, k_cap)
        except ErgoLabError as e:
            logger.warning("Tail bound unavailable at N=%d: %s", N, e)
            return None
        if bound is None:
            return None
        total += bound
    return total


# Triple intersection A1 cap T^-p1(n) A2 cap S^-p2(n) A2

def _triple_block(payload) -> Dict[str, Any]:
    config, n_from, n_to, start, stop = payload
    system = _system(config)
    times = list(range(n_from, n_to + 1))
    counts = {"points": 0, "certified": 0, "rejected": 0, "pairs": 0,
              "hits": [0] * len(times), "complement_violations": 0,
              "coordinate_violations": 0, "undecided": 0}
    omega_count = system.config.omega_per_point
    for point_id in range(start, stop):
        state = system.sample(point_id)
        counts["points"] += 1
        if state.certification is Certification.REJECTED:
            counts["rejected"] += 1
            continue
        counts["pairs"] += omega_count
        if not state.in_b:
            continue
        counts["certified"] += 1
        flipped = [system.flips.contains(n) for n in times]
        for i, n in enumerate(times):
            if not flipped[i]:
                if s_pullback_coordinate(state, system, n) != t_pullback_coordinate(state, system, n):
                    counts["coordinate_violations"] += 1
        for j in range(omega_count):
            sample = state.with_omega(system.omega_id(point_id, j))
            for i, n in enumerate(times):
                t_bit = t_pullback_bit(sample, system, n)
                s_bit = s_pullback_bit(sample, system, n)
                if flipped[i] and s_bit != 1 - t_bit:
                    counts["complement_violations"] += 1
                counts["hits"][i] += t_bit & s_bit
    return counts


def _merge_counts(blocks: List[Dict[str, Any]]) -> Dict[str, Any]:
    merged: Dict[str, Any] = {}
    for block in blocks:
        for key, value in block.items():
            if isinstance(value, list):
                current = merged.setdefault(key, [0] * len(value))
                merged[key] = [a + b for a, b in zip(current, value)]
            else:
                merged[key] = merged.get(key, 0) + value
    return merged


def triple_counts(system: SkewSystem, n_from: int, n_to: int, samples: int, workers: int = 1) -> Dict[str, Any]:
    system.check_time(n_from)
    system.check_time(n_to)
    if n_to < n_from:
        raise PreconditionError(f"empty n range [{n_from}, {n_to}]")
    _check_budget(system, system.max_time, "Birkhoff time")
    config = system.config.to_dict()
    payloads = [(config, n_from, n_to, a, b) for a, b in sample_blocks(samples)]
    return _merge_counts(run_blocks(_triple_block, payloads, workers))


def triple_measure_curve(system: SkewSystem, n_from: int, n_to: int, samples: int,
                         workers: int = 1) -> ExperimentReport:
    """Per n: exact 0 on F, Monte Carlo estimate against m(B)/2 off F"""
    started = time.perf_counter()
    counts = triple_counts(system, n_from, n_to, samples, workers)
    report = ExperimentReport(
        experiment="triple",
        config={**system.config.to_dict(), "n_from": n_from, "n_to": n_to, "samples": samples},
    )
    usable = counts["points"] - counts["rejected"]
    b_hat = ProportionEstimate(counts["certified"], usable)
    plateau = b_hat.value / 2
    pairs = counts["pairs"]
    for i, n in enumerate(range(n_from, n_to + 1)):
        estimate = ProportionEstimate(counts["hits"][i], pairs)
        in_f = system.flips.contains(n)
        row = {"n": n, "in_F": in_f, **estimate.to_dict(), "undecided": 0}
        if in_f:
            row.update({"exact": 0, "target": 0.0})
            report.add_check(f"zero on F at n={n}", counts["hits"][i] == 0, f"{counts['hits'][i]} hits")
        else:
            row.update({"exact": None, "target": plateau,
                        "deviation_sigmas": _sigmas(estimate, plateau)})
            report.add_check(f"plateau at n={n}", estimate.within(plateau, 3.0),
                             f"{estimate.value:.5f} vs m(B)/2 = {plateau:.5f}")
        report.rows.append(row)
    report.add_check("complement identity on F", counts["complement_violations"] == 0,
                     f"{counts['complement_violations']} violations")
    report.add_check("same coordinate off F", counts["coordinate_violations"] == 0,
                     f"{counts['coordinate_violations']} violations")
    report.summary = {
        "points": counts["points"],
        "rejected": counts["rejected"],
        "certified_b": counts["certified"],
        "m_hat_B": b_hat.to_dict(),
        "c_hat": plateau,
        "pairs": pairs,
        "undecided": counts["undecided"],
        "time_reversed": [system.p1_reversed, system.p2_reversed],
    }
    report.curves["triple"] = [(row["n"], row["estimate"]) for row in report.rows]
    report.record_base(system.kind)
    report.wall_clock = time.perf_counter() - started
    logger.info("Triple curve over n in [%d, %d]: m(B) ~ %.4f", n_from, n_to, b_hat.value)
    return report


def _sigmas(estimate: ProportionEstimate, target: float) -> float:
    sigma = max(estimate.sigma, binomial_sigma(target, estimate.trials))
    return abs(estimate.value - target) / sigma if sigma > 0 else 0.0


# Cesaro averages of the triple indicator

OSCILLATION_FRACTION = 0.05


def block_boundary_labels(flips: FlipSet, lo: int, hi: int) -> Tuple[Dict[int, str], List[Tuple[int, int]]]:
    """
    Starts and ends of the blocks of F that fall in [lo, hi], and the blocks
    [s, e) with both ends in that range

    A block cut off by the range has no end label.
    """
    limit = hi + 1
    labels: Dict[int, str] = {}
    complete = []
    for s, e in flips.block_boundaries(limit):
        if lo <= s <= hi:
            labels[s] = "start"
        if e < limit and lo <= e:
            labels[e] = "end"
            if s >= lo:
                complete.append((s, e))
    return labels, complete


def cesaro_trajectory(system: SkewSystem, n_max: int, samples: int, workers: int = 1) -> ExperimentReport:
    """
    A(N) = (1/N) sum_{n=M}^{N-1} mean triple indicator at n, for N up to n_max + 1

    The density oracle predicts A(N) ~ (m(B)/2) |[M, N) minus F| / N. Across
    a block [s, e) of F the indicator vanishes, so A(e) = A(s) s / e; the
    swing |A(e) - A(s)| is checked against 0.05 m(B) wherever the oracle
    predicts one that large.
    """
    started = time.perf_counter()
    start = system.start
    counts = triple_counts(system, start, n_max, samples, workers)
    usable = counts["points"] - counts["rejected"]
    b_hat = ProportionEstimate(counts["certified"], usable)
    plateau = b_hat.value / 2
    pairs = counts["pairs"]
    means = [ProportionEstimate(h, pairs) for h in counts["hits"]]
    report = ExperimentReport(
        experiment="cesaro",
        config={**system.config.to_dict(), "n_max": n_max, "samples": samples},
    )
    labels, blocks = block_boundary_labels(system.flips, start + 1, n_max + 1)
    rows = {}
    running = 0.0
    half_widths = 0.0
    for i, N in enumerate(range(start + 1, n_max + 2)):
        running += means[i].value
        half_widths += means[i].half_width
        density = system.flips.count_outside(start, N) / N
        rows[N] = {
            "N": N,
            "average": running / N,
            "ci_half_width": half_widths / N,
            "predicted": plateau * density,
            "density_outside_F": density,
            "boundary": labels.get(N),
        }
        report.rows.append(rows[N])
    report.curves["cesaro"] = [(row["N"], row["average"]) for row in report.rows]
    report.curves["predicted"] = [(row["N"], row["predicted"]) for row in report.rows]
    for N in sorted(labels):
        row = rows[N]
        slack = 4 * row["ci_half_width"] + 1e-12
        report.add_check(f"density oracle at N={N} (block {row['boundary']})",
                         abs(row["average"] - row["predicted"]) <= slack,
                         f"{row['average']:.5f} vs {row['predicted']:.5f}")
    threshold = OSCILLATION_FRACTION * b_hat.value
    oscillations = []
    for s, e in blocks:
        estimated = rows[e]["average"] - rows[s]["average"]
        predicted = rows[e]["predicted"] - rows[s]["predicted"]
        checked = abs(predicted) > threshold
        oscillations.append({
            "block": [s, e],
            "estimated_gap": estimated,
            "predicted_gap": predicted,
            "threshold": threshold,
            "checked": checked,
        })
        if checked:
            report.add_check(f"oscillation over F block [{s},{e})", abs(estimated) > threshold,
                             f"|{estimated:.5f}| vs {OSCILLATION_FRACTION} m(B) = {threshold:.5f}")
    report.summary = {
        "m_hat_B": b_hat.to_dict(),
        "c_hat": plateau,
        "oscillations": oscillations,
        "flip_set": system.flips.to_text(),
    }
    if system.flips.to_text() == "dyadic" and n_max < 2 * 4 ** 5:
        report.notes.append("window shorter than 2*4^5: blocks [2*2^k, 3*2^k) (geometric:2,2,3) "
                            "oscillate at smaller N")
    report.record_base(system.kind)
    report.wall_clock = time.perf_counter() - started
    return report


# Entropy proxy a_N(y)/N

DECREASING_FRACTION = 0.95
ZERO_ENTROPY_N = 1_000_000
ZERO_ENTROPY_RATIO = 0.05


def _entropy_block(payload) -> List[List[float]]:
    config, n_values, start, stop = payload
    system = _system(config)
    skip_free = system.kind.is_walk or all(abs(v) <= 1 for v in system.kind.step.values)
    longest = max(n_values)
    ratios = []
    for point_id in range(start, stop):
        point = system.base_point(point_id)
        sums = point.prefix_sums(longest)
        if skip_free:
            highs = np.maximum.accumulate(sums)
            lows = np.minimum.accumulate(sums)
            distinct = [int(highs[N - 1] - lows[N - 1]) + 1 for N in n_values]
        else:
            distinct = [len(np.unique(sums[:N])) for N in n_values]
        ratios.append([d / N for d, N in zip(distinct, n_values)])
    return ratios


def entropy_proxy(system: SkewSystem, n_values: Sequence[int], samples: int,
                  workers: int = 1) -> ExperimentReport:
    """Distinct values of g_n(y), n < N, divided by N"""
    started = time.perf_counter()
    n_values = sorted(n_values)
    if n_values[0] < 1:
        raise PreconditionError("entropy proxy needs N >= 1")
    _check_budget(system, n_values[-1], "entropy N")
    config = system.config.to_dict()
    payloads = [(config, n_values, a, b) for a, b in sample_blocks(samples)]
    per_point = [r for block in run_blocks(_entropy_block, payloads, workers) for r in block]
    table = np.asarray(per_point, dtype=np.float64)
    report = ExperimentReport(
        experiment="entropy",
        config={**config, "entropy_n": list(n_values), "samples": samples},
    )
    medians = []
    for i, N in enumerate(n_values):
        stats = quantiles(table[:, i])
        medians.append(stats["q50"])
        report.rows.append({"N": N, "mean_ratio": float(table[:, i].mean()), **stats, "exact": 1.0 if N == 1 else None})
    report.curves["median_ratio"] = [(N, m) for N, m in zip(n_values, medians)]
    if len(n_values) > 1:
        decreasing = np.all(np.diff(table, axis=1) < 0, axis=1)
        fraction = float(decreasing.mean())
        report.summary["fraction_points_decreasing"] = fraction
        report.add_check("median ratio decreasing", all(b < a for a, b in zip(medians, medians[1:])),
                         ", ".join(f"{m:.4f}" for m in medians))
        report.add_check(f"points decreasing >= {DECREASING_FRACTION:.0%}", fraction >= DECREASING_FRACTION,
                         f"{fraction:.3f}")
    for N, median in zip(n_values, medians):
        if N >= ZERO_ENTROPY_N:
            report.add_check(f"median ratio below {ZERO_ENTROPY_RATIO} at N={N}", median < ZERO_ENTROPY_RATIO,
                             f"{median:.5f}")
    report.record_base(system.kind)
    report.wall_clock = time.perf_counter() - started
    return report


# Local CLT and W_n

LEVEL_CSV_EXACT_LIMIT = 1000


def llt_curve(n_values: Sequence[int], w_bound: int = 3) -> ExperimentReport:
    """
    llt_deviation(n), m(W_n) and the 1/sqrt(n) bound, exact DP per n

    The level distribution of g_n is kept as a frame per n, in exact
    fractions up to n = LEVEL_CSV_EXACT_LIMIT and in floats above it.
    """
    started = time.perf_counter()
    n_values = sorted(n_values)
    report = ExperimentReport(experiment="llt", config={"llt_n": list(n_values), "w_bound": w_bound})
    deviations, masses = [], {}
    for n in n_values:
        deviation = llt_deviation(n)
        mass = w_mass(n, w_bound)
        parity = parity_mass(n)
        deviations.append(deviation)
        masses[n] = mass
        report.rows.append({
            "n": n,
            "llt_deviation": deviation,
            "w_mass": mass,
            "w_bound": w_mass_bound(n, w_bound),
            "sqrt_n_w_mass": math.sqrt(n) * mass,
            "parity_mass": float(parity),
            "exact": True,
        })
        report.frames[f"levels_n{n}"] = walk_exact_distribution(n, exact=n <= LEVEL_CSV_EXACT_LIMIT).to_frame()
        report.add_check(f"parity mass zero at n={n}", parity == 0, str(parity))
    report.add_check("deviations positive", all(d > 0 for d in deviations))
    if len(n_values) > 1:
        report.add_check("deviation decreases", deviations[-1] < deviations[0],
                         f"{deviations[0]:.6f} -> {deviations[-1]:.6f}")
    for n in n_values:
        if 4 * n in masses:
            ratio = masses[4 * n] / masses[n]
            report.add_check(f"W ratio at n={n}", 0.4 <= ratio <= 0.6, f"{ratio:.4f}")
    report.curves["deviation"] = [(n, d) for n, d in zip(n_values, deviations)]
    report.curves["w_mass"] = [(n, masses[n]) for n in n_values]
    report.wall_clock = time.perf_counter() - started
    return report


# Certification audit

def _certify_block(payload) -> List[Dict[str, Any]]:
    config, start, stop = payload
    system = _system(config)
    rows = []
    for point_id in range(start, stop):
        state = system.sample(point_id)
        row = {
            "point_id": point_id,
            "certification": state.certification.value,
            "thinning_u": state.thinning_u,
            "reason": state.reason,
        }
        if state.tables is not None:
            row["tables"] = state.tables.to_dict()
        rows.append(row)
    return rows


def certify_points(system: SkewSystem, samples: int, workers: int = 1) -> ExperimentReport:
    """Certify sampled points into B and dump the permutation tables of each"""
    started = time.perf_counter()
    _check_budget(system, system.max_time, "Birkhoff time")
    config = system.config.to_dict()
    payloads = [(config, a, b) for a, b in sample_blocks(samples)]
    rows = [row for block in run_blocks(_certify_block, payloads, workers) for row in block]
    report = ExperimentReport(experiment="certify", config={**config, "samples": samples}, rows=rows)
    tally = {c.value: sum(1 for r in rows if r["certification"] == c.value) for c in Certification}
    usable = len(rows) - tally[Certification.REJECTED.value]
    report.summary = {
        "counts": tally,
        "m_hat_B": ProportionEstimate(tally[Certification.CERTIFIED_B.value], usable).to_dict(),
        "M": system.start,
        "H": system.horizon,
    }
    report.record_base(system.kind)
    report.wall_clock = time.perf_counter() - started
    return report
