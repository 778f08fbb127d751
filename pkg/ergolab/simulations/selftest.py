"""
Structural Self-Test
Exact checks of the permutation and psi algebra, the conjugacy S = R^-1 T R,
the flip dichotomy, parity of g_n, and a measure-preservation spot check
"""

import logging
import time
from typing import Dict, List

from ergolab.models.base_systems import parity_mass
from ergolab.models.polynomials import l_enumerate, l_index, poly_eval, poly_eval_naive
from ergolab.models.permutations import psi_chain, psi_direct, pi_y_apply
from ergolab.models.symbolic_space import CylinderSpec, is_undecided, read_transformed
from ergolab.simulations.dynamics import (
    CheckOutcome,
    PointState,
    SkewSystem,
    conjugacy_check,
    psi_inverse_check,
    s_cylinder_indicator,
    shortcut_check,
    triple_indicator,
)
from ergolab.simulations.reports import ExperimentReport
from ergolab.simulations.statistics import ProportionEstimate, block_rng

logger = logging.getLogger(__name__)


def certified_states(system: SkewSystem, wanted: int, max_points: int) -> List[PointState]:
    states = []
    for point_id in range(max_points):
        state = system.sample(point_id)
        if state.in_b:
            states.append(state)
            if len(states) == wanted:
                break
    return states


def _check_enumeration(report: ExperimentReport, limit: int = 1000):
    values = [l_enumerate(i) for i in range(1, limit + 1)]
    bijective = (len(set(values)) == limit and 0 not in values
                 and all(l_index(v) == i for i, v in enumerate(values, start=1)))
    covers = set(values) >= set(range(-(limit // 2), limit // 2 + 1)) - {0}
    report.add_check("l enumeration is a bijection onto Z minus 0", bijective and covers)


def _check_polynomials(system: SkewSystem, report: ExperimentReport):
    agree = all(poly_eval(p, n) == poly_eval_naive(p, n)
                for p in (system.p1, system.p2) for n in range(0, 200))
    report.add_check("Horner evaluation matches term-wise evaluation", agree)


def _check_parity(report: ExperimentReport, n_max: int = 200):
    bad = [n for n in range(1, n_max + 1) if parity_mass(n) != 0]
    report.add_check("g_n puts no mass on odd levels", not bad, f"first failures: {bad[:5]}")


def _check_tables(system: SkewSystem, state: PointState, report: ExperimentReport, omega_ids: int):
    tables = state.tables
    pid = state.point.sample_id
    mapped = [pi_y_apply(tables, v) for v in tables.forward2.values]
    report.add_check(f"pi_y maps p2 values onto p1 values (point {pid})",
                     pi_y_apply(tables, 0) == 0 and mapped == list(tables.forward1.values))

    chain = psi_chain(tables)
    round_trip = chain.then(chain.inverse())
    coordinates = ([0] + list(tables.forward2.values) + list(tables.forward1.values)
                   + [tables.leftover2.value(i) for i in range(1, len(tables.leftover2) + 1)]
                   + list(range(-20, 21)))
    mismatches = undecided = 0
    identity_failures = 0
    inverse_failures = 0
    for j in range(omega_ids):
        sample = state.with_omega(system.omega_id(pid, j))
        if read_transformed(sample.omega, chain, 0) != sample.omega.read(0):
            identity_failures += 1
        for q in coordinates:
            via_chain = read_transformed(sample.omega, chain, q)
            direct = psi_direct(tables, sample.omega, q)
            if is_undecided(via_chain) or is_undecided(direct):
                undecided += 1
                if is_undecided(via_chain) != is_undecided(direct):
                    mismatches += 1
            elif via_chain != direct:
                mismatches += 1
            back = read_transformed(sample.omega, round_trip, q)
            if not is_undecided(back) and back != sample.omega.read(q):
                identity_failures += 1
        for r in tables.forward1.values:
            if psi_inverse_check(sample, r) is CheckOutcome.FAIL:
                inverse_failures += 1
    report.add_check(f"psi chain matches the case definition (point {pid})", mismatches == 0,
                     f"{mismatches} mismatches, {undecided} undecided reads")
    report.add_check(f"psi fixes coordinate 0 and psi^-1 psi = id (point {pid})", identity_failures == 0,
                     f"{identity_failures} failures")
    report.add_check(f"psi^-1 case definition matches the inverted chain (point {pid})", inverse_failures == 0)

    flipped = [n for n in range(system.start, system.last_n + 1) if system.flips.contains(n)]
    nonzero = sum(triple_indicator(state.with_omega(system.omega_id(pid, j)), system, n)
                  for j in range(omega_ids) for n in flipped)
    report.add_check(f"triple indicator vanishes on F (point {pid})", nonzero == 0, f"{nonzero} nonzero")


UNDECIDED_RATE_LIMIT = 0.5
UNDECIDED_RATE_CHECK = f"conjugacy undecided rate below {UNDECIDED_RATE_LIMIT}"


def _check_conjugacy(system: SkewSystem, states: List[PointState], trials: int, report: ExperimentReport):
    rng = block_rng(system.config.seed, 0)
    landings = {}
    outcomes = {outcome: 0 for outcome in CheckOutcome}
    shortcut = {outcome: 0 for outcome in CheckOutcome}
    for _ in range(trials):
        state = states[int(rng.integers(len(states)))]
        n = int(rng.integers(system.start, system.last_n + 1))
        key = (state.point.sample_id, n)
        if key not in landings:
            landings[key] = system.landing(state, system.times2[n - system.start])
        landing = landings[key]
        if rng.random() < 0.5 or not landing.in_b:
            q = 0
        else:
            q = int(rng.choice(landing.tables.forward1.values))
        sample = state.with_omega(system.omega_id(state.point.sample_id, int(rng.integers(system.config.omega_per_point))))
        outcomes[conjugacy_check(sample, system, n, q, landing=landing)] += 1
        shortcut[shortcut_check(sample, system, n, landing=landing)] += 1
    record_conjugacy(report, outcomes, shortcut)


def record_conjugacy(report: ExperimentReport, outcomes: Dict[CheckOutcome, int],
                     shortcut: Dict[CheckOutcome, int]):
    """Conjugacy and shortcut tallies into the summary, with their checks"""
    report.summary["conjugacy"] = {outcome.value: count for outcome, count in outcomes.items()}
    report.summary["s_pullback_shortcut"] = {outcome.value: count for outcome, count in shortcut.items()}
    report.add_check("S = R^-1 T R on every resolved coordinate", outcomes[CheckOutcome.FAIL] == 0,
                     f"{outcomes[CheckOutcome.PASS]} pass, {outcomes[CheckOutcome.UNDECIDED]} undecided")
    report.add_check("s_pullback_bit matches the full chain at 0", shortcut[CheckOutcome.FAIL] == 0,
                     f"{shortcut[CheckOutcome.PASS]} pass, {shortcut[CheckOutcome.FAIL]} fail, "
                     f"{shortcut[CheckOutcome.UNDECIDED]} undecided")
    trials = sum(outcomes.values())
    rate = outcomes[CheckOutcome.UNDECIDED] / trials if trials else 1.0
    report.summary["conjugacy_undecided_rate"] = rate
    report.add_check(UNDECIDED_RATE_CHECK, rate < UNDECIDED_RATE_LIMIT,
                     f"{outcomes[CheckOutcome.UNDECIDED]} of {trials}")


def _check_measure_preservation(system: SkewSystem, states: List[PointState], report: ExperimentReport):
    """Frequency of S x in short cylinders against their nu-mass"""
    cylinders = [CylinderSpec(0, "0"), CylinderSpec(0, "01")]
    rows = []
    for cyl in cylinders:
        hits = trials = undecided = 0
        for state in states:
            landing = system.landing(state, 1)
            for j in range(system.config.omega_per_point):
                sample = state.with_omega(system.omega_id(state.point.sample_id, j))
                value = s_cylinder_indicator(sample, landing, 1, cyl)
                if is_undecided(value):
                    undecided += 1
                    continue
                trials += 1
                hits += value
        estimate = ProportionEstimate(hits, trials)
        rows.append({"cylinder": f"{cyl.base}:{cyl.word}", "mass": cyl.mass, "undecided": undecided,
                     **estimate.to_dict()})
        report.add_check(f"S preserves the mass of cylinder {cyl.word}",
                         trials > 0 and estimate.within(cyl.mass, 4.0),
                         f"{estimate.value:.4f} vs {cyl.mass} over {trials} resolved samples")
    report.summary["measure_preservation"] = rows


def run_selftest(system: SkewSystem, points: int = 4, omega_ids: int = 16,
                 conjugacy_trials: int = 200, max_points: int = 256) -> ExperimentReport:
    started = time.perf_counter()
    report = ExperimentReport(
        experiment="selftest",
        config={**system.config.to_dict(), "conjugacy_trials": conjugacy_trials},
    )
    _check_enumeration(report)
    _check_polynomials(system, report)
    _check_parity(report)
    states = certified_states(system, points, max_points)
    report.add_check("found certified points", bool(states), f"{len(states)} of {points} wanted")
    for state in states:
        _check_tables(system, state, report, omega_ids)
    if states:
        _check_conjugacy(system, states, conjugacy_trials, report)
        _check_measure_preservation(system, states, report)
    report.summary["certified_points"] = [s.point.sample_id for s in states]
    report.record_base(system.kind)
    report.wall_clock = time.perf_counter() - started
    logger.info("Selftest: %d checks, %d failed", len(report.checks), len(report.failed_checks))
    return report
