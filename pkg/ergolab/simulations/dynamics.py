"""
Skew Products T and S = R^-1 T R
System configuration, certification of base points into B, and per-point
evaluation of the indicators behind A1 cap T^-p1(n) A2 cap S^-p2(n) A2
"""

import hashlib
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

from ergolab.errors import (
    BudgetExceededError,
    ConfigurationError,
    ErgoLabError,
    PreconditionError,
    TableConstructionError,
)
from ergolab.models.base_systems import BaseKind, BasePoint, CirclePoint, GOLDEN_ALPHA, StepFunction, sample_point
from ergolab.models.flip_sets import FlipSet
from ergolab.models.permutations import (
    PermTables,
    build_tables,
    forward_from_values,
    psi_chain,
    psi_direct,
    psi_inverse_direct,
    schedule_times,
)
from ergolab.models.polynomials import IntPoly, monotone_threshold, normalize_sign
from ergolab.models.symbolic_space import (
    CylinderSpec,
    IndexChain,
    OmegaOracle,
    Shift,
    Undecided,
    cylinder_indicator,
    is_undecided,
    read_transformed,
    trace_transformed,
)

logger = logging.getLogger(__name__)

MIN_DEGREE = 5


@dataclass
class SystemConfig:
    """Configuration of the pair (T, S) and of the sampling that probes it"""
    p1: str = "n^5"
    p2: str = "2*n^5"
    M: Optional[int] = None            # None: max(monotone thresholds, 2)
    horizon: int = 40
    f: str = "dyadic"
    eta: Optional[float] = None        # None: no thinning ("full")
    seed: int = 42
    samples: int = 200
    omega_per_point: int = 64
    base: str = "walk"
    rotation_alpha: Optional[str] = None
    step_function: Optional[str] = None
    unsafe_degree: bool = False
    scan_bound: Optional[int] = None
    budget: int = 500_000_000

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p1": self.p1,
            "p2": self.p2,
            "M": self.M,
            "horizon": self.horizon,
            "f": self.f,
            "eta": "full" if self.eta is None else self.eta,
            "seed": self.seed,
            "samples": self.samples,
            "omega_per_point": self.omega_per_point,
            "base": self.base,
            "rotation_alpha": self.rotation_alpha,
            "step_function": self.step_function,
            "unsafe_degree": self.unsafe_degree,
            "scan_bound": self.scan_bound,
            "budget": self.budget,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SystemConfig":
        data = dict(data)
        if data.get("eta") == "full":
            data["eta"] = None
        return cls(**data)

    def validate(self) -> List[str]:
        """Return the list of configuration problems (empty when valid)"""
        problems = []
        polys = []
        for key in ("p1", "p2"):
            try:
                poly, _ = normalize_sign(IntPoly.parse(getattr(self, key)))
            except ErgoLabError as e:
                problems.append(f"{key}: {e}")
                continue
            if poly.degree < MIN_DEGREE and not self.unsafe_degree:
                problems.append(f"{key}: degree {poly.degree} < {MIN_DEGREE} (use unsafe_degree to explore)")
            elif poly.degree == 0:
                problems.append(f"{key}: constant schedules are not allowed")
            polys.append(poly)
        if len(polys) == 2 and not problems and self.M is not None:
            needed = max(monotone_threshold(p) for p in polys)
            if self.M < needed:
                problems.append(f"M = {self.M} is below the monotone threshold {needed}")
        if self.horizon < 1:
            problems.append("horizon must be at least 1")
        try:
            FlipSet.parse(self.f)
        except ErgoLabError as e:
            problems.append(f"f: {e}")
        if self.eta is not None and not 0 <= self.eta < 1:
            problems.append("eta must lie in [0, 1) or be 'full'")
        if self.samples < 1:
            problems.append("samples must be positive")
        if self.omega_per_point < 1:
            problems.append("omega_per_point must be positive")
        if self.base not in ("walk", "rotation"):
            problems.append(f"base must be 'walk' or 'rotation', got {self.base!r}")
        if self.base == "rotation":
            try:
                if self.step_function:
                    StepFunction.parse(self.step_function)
                if self.rotation_alpha:
                    CirclePoint.from_fraction(self.rotation_alpha)
            except (ErgoLabError, ValueError, ZeroDivisionError) as e:
                problems.append(f"rotation base: {e}")
        if self.scan_bound is not None and self.scan_bound < 1:
            problems.append("scan_bound must be positive")
        if self.budget < 1:
            problems.append("budget must be positive")
        return problems

    def build(self) -> "SkewSystem":
        problems = self.validate()
        if problems:
            raise ConfigurationError("; ".join(problems))
        return SkewSystem(self)


class Certification(Enum):
    CERTIFIED_B = "certified-B"
    CERTIFIED_NOT_B = "certified-not-B"
    REJECTED = "rejected"


class CheckOutcome(Enum):
    PASS = "pass"
    FAIL = "fail"
    UNDECIDED = "undecided"


@dataclass
class PointState:
    """A sampled x = (y, omega) together with everything known about y"""
    point: BasePoint
    omega: OmegaOracle
    certification: Certification
    thinning_u: float
    g1: List[int] = field(default_factory=list)
    g2: List[int] = field(default_factory=list)
    tables: Optional[PermTables] = None
    reason: str = ""

    @property
    def in_b(self) -> bool:
        return self.certification is Certification.CERTIFIED_B

    def with_omega(self, omega_id: int) -> "PointState":
        return replace(self, omega=OmegaOracle(self.omega.master_seed, omega_id))


def thinning_uniform(master_seed: int, sample_id: int, offset: int = 0) -> float:
    """Auxiliary u in [0, 1) attached to a base point, independent of its stream"""
    material = f"{master_seed}:{sample_id}:{offset}".encode()
    digest = hashlib.blake2b(material, digest_size=8, person=b"ergolab-eta").digest()
    return (int.from_bytes(digest, "little") >> 11) / float(1 << 53)


class SkewSystem:
    """
    The systems T and S on X = Y x Sigma for one resolved configuration

    T(y, omega) = (R y, sigma^{g(y)} omega); S is the conjugate R^-1 T R by
    R(y, omega) = (y, psi_{pi_y} omega) on B x Sigma and the identity elsewhere.
    """

    def __init__(self, config: SystemConfig):
        self.p1, self.p1_reversed = normalize_sign(IntPoly.parse(config.p1))
        self.p2, self.p2_reversed = normalize_sign(IntPoly.parse(config.p2))
        self.start = config.M if config.M is not None else max(
            monotone_threshold(self.p1), monotone_threshold(self.p2), 2)
        self.config = replace(config, M=self.start)
        self.horizon = config.horizon
        self.flips = FlipSet.parse(config.f)
        if config.base == "walk":
            self.kind = BaseKind.walk()
        else:
            alpha = CirclePoint.from_fraction(config.rotation_alpha) if config.rotation_alpha else GOLDEN_ALPHA
            step = StepFunction.parse(config.step_function) if config.step_function else None
            self.kind = BaseKind.rotation(alpha, step)
        self.times1 = schedule_times(self.p1, self.start, self.horizon)
        self.times2 = schedule_times(self.p2, self.start, self.horizon)
        if self.p1_reversed or self.p2_reversed:
            logger.info("Negative leading coefficient: simulating T~ = T^-1 along -p for %s",
                        ", ".join(name for name, flag in (("p1", self.p1_reversed), ("p2", self.p2_reversed)) if flag))

    @property
    def last_n(self) -> int:
        return self.start + self.horizon - 1

    @property
    def max_time(self) -> int:
        return max(self.times1[-1], self.times2[-1])

    def omega_id(self, point_id: int, j: int) -> int:
        return point_id * self.config.omega_per_point + j

    def check_time(self, n: int):
        if not self.start <= n <= self.last_n:
            raise PreconditionError(f"n = {n} outside the horizon window [{self.start}, {self.last_n}]")

    def base_point(self, point_id: int) -> BasePoint:
        return sample_point(self.kind, self.config.seed, point_id, budget=self.config.budget)

    def sample(self, point_id: int, omega_index: int = 0) -> PointState:
        point = self.base_point(point_id)
        omega = OmegaOracle(self.config.seed, self.omega_id(point_id, omega_index))
        return self.prepare(point, omega)

    def prepare(self, point: BasePoint, omega: OmegaOracle) -> PointState:
        """Stream the g-values at both schedules once and certify the point"""
        u = thinning_uniform(point.master_seed, point.sample_id, point.offset)
        times = sorted(set(self.times1) | set(self.times2))
        try:
            values = dict(zip(times, point.g_at(times)))
        except BudgetExceededError as e:
            return PointState(point, omega, Certification.REJECTED, u, reason=f"budget: {e}")
        g1 = [values[t] for t in self.times1]
        g2 = [values[t] for t in self.times2]
        state = PointState(point, omega, Certification.CERTIFIED_NOT_B, u, g1, g2)
        try:
            forward1 = forward_from_values(self.p1, self.start, g1)
            forward2 = forward_from_values(self.p2, self.start, g2)
        except TableConstructionError as e:
            state.reason = str(e)
            return state
        state.tables = build_tables(forward1, forward2, self.flips, self.config.scan_bound)
        eta = self.config.eta
        if eta is not None and u >= eta:
            state.reason = f"thinned (u={u:.6f} >= eta={eta})"
            return state
        state.certification = Certification.CERTIFIED_B
        return state

    def landing(self, state: PointState, time: int) -> PointState:
        """State at R^time y carrying the same omega"""
        return self.prepare(state.point.shifted(time), state.omega)


def certify_b(point: BasePoint, system: SkewSystem, omega: Optional[OmegaOracle] = None) -> Certification:
    omega = omega or OmegaOracle(point.master_seed, point.sample_id)
    return system.prepare(point, omega).certification


def _require_usable(state: PointState):
    if state.certification is Certification.REJECTED:
        raise PreconditionError(f"point {state.point.sample_id} was rejected: {state.reason}")


def t_pullback_coordinate(state: PointState, system: SkewSystem, n: int) -> int:
    """Coordinate of omega deciding T^{p1(n)} x in A2: g_{p1(n)}(y)"""
    _require_usable(state)
    system.check_time(n)
    return state.g1[n - system.start]


def t_pullback_bit(state: PointState, system: SkewSystem, n: int) -> int:
    """1 iff T^{p1(n)}(y, omega) lies in A2 = Y x [0]_0"""
    return int(state.omega.read(t_pullback_coordinate(state, system, n)) == 0)


def s_pullback_chain(state: PointState, system: SkewSystem, n: int) -> IndexChain:
    """Symbol map whose coordinate 0 decides S^{p2(n)} x in A2 (outer psi^-1 is transparent at 0)"""
    _require_usable(state)
    system.check_time(n)
    shift = IndexChain.of(Shift(state.g2[n - system.start]))
    if not state.in_b:
        return shift
    return shift.then(psi_chain(state.tables))


def s_pullback_coordinate(state: PointState, system: SkewSystem, n: int) -> Union[int, Undecided]:
    return trace_transformed(s_pullback_chain(state, system, n), 0)


def s_pullback_bit(state: PointState, system: SkewSystem, n: int) -> int:
    """1 iff S^{p2(n)}(y, omega) lies in A2"""
    bit = read_transformed(state.omega, s_pullback_chain(state, system, n), 0)
    if is_undecided(bit):
        # the forward branch is always inside the tables
        raise AssertionError(f"forward-branch read undecided: {bit.reason}")
    return int(bit == 0)


def triple_indicator(state: PointState, system: SkewSystem, n: int) -> int:
    """Indicator of x in A1 cap T^-p1(n) A2 cap S^-p2(n) A2 with A1 = B x Sigma"""
    if not state.in_b:
        return 0
    return t_pullback_bit(state, system, n) & s_pullback_bit(state, system, n)


def _psi_chain_or_identity(state: PointState) -> IndexChain:
    return psi_chain(state.tables) if state.in_b else IndexChain()


def s_orbit_chain(state: PointState, landing: PointState, time: int) -> IndexChain:
    """R_z^-1 o sigma^{g_time(y)} o R_y assembled as one index chain"""
    g = 2 * state.point.birkhoff_at([time])[0]
    return _psi_chain_or_identity(landing).inverse().then(IndexChain.of(Shift(g))).then(
        _psi_chain_or_identity(state))


def s_orbit_direct(state: PointState, landing: PointState, time: int, q: int) -> Union[int, Undecided]:
    """Symbol of S^time(y, omega) at q by nested case evaluation of psi and psi^-1"""
    g = 2 * state.point.birkhoff_at([time])[0]

    def after_r(r: int) -> Union[int, Undecided]:
        # (sigma^g psi_y omega)(r)
        if state.in_b:
            return psi_direct(state.tables, state.omega, r + g)
        return state.omega.read(r + g)

    if not landing.in_b:
        return after_r(q)
    tables = landing.tables
    if q == 0:
        return after_r(0)
    member = tables.q_y.contains(q)
    if is_undecided(member):
        return member
    source = tables.pi_y.apply_inverse(q)
    if is_undecided(source):
        return source
    bit = after_r(source)
    return bit if is_undecided(bit) else bit ^ int(member)


def conjugacy_check(state: PointState, system: SkewSystem, n: int, q: int,
                    landing: Optional[PointState] = None) -> CheckOutcome:
    """
    Two-path check of S = R^-1 T R at time p2(n) and coordinate q

    One path nests the case definitions of psi_y and psi_z^-1 around the
    shift; the other reads the composed index chain. Both must agree
    wherever both resolve.
    """
    if not state.in_b:
        raise PreconditionError("conjugacy_check needs a certified-B state")
    system.check_time(n)
    time = system.times2[n - system.start]
    landing = landing or system.landing(state, time)
    direct = s_orbit_direct(state, landing, time, q)
    chained = read_transformed(state.omega, s_orbit_chain(state, landing, time), q)
    if is_undecided(direct) or is_undecided(chained):
        return CheckOutcome.UNDECIDED
    return CheckOutcome.PASS if direct == chained else CheckOutcome.FAIL


def shortcut_check(state: PointState, system: SkewSystem, n: int,
                   landing: Optional[PointState] = None) -> CheckOutcome:
    """
    s_pullback_bit, which drops the outer psi_z^-1, against the full
    R^-1 T R chain read at coordinate 0
    """
    if not state.in_b:
        raise PreconditionError("shortcut_check needs a certified-B state")
    system.check_time(n)
    time = system.times2[n - system.start]
    landing = landing or system.landing(state, time)
    full = read_transformed(state.omega, s_orbit_chain(state, landing, time), 0)
    if is_undecided(full):
        return CheckOutcome.UNDECIDED
    return CheckOutcome.PASS if s_pullback_bit(state, system, n) == int(full == 0) else CheckOutcome.FAIL


def psi_inverse_check(state: PointState, r: int) -> CheckOutcome:
    """psi^-1 by its case definition against the inverted chain"""
    direct = psi_inverse_direct(state.tables, state.omega, r)
    chained = read_transformed(state.omega, psi_chain(state.tables).inverse(), r)
    if is_undecided(direct) or is_undecided(chained):
        return CheckOutcome.UNDECIDED
    return CheckOutcome.PASS if direct == chained else CheckOutcome.FAIL


def s_cylinder_indicator(state: PointState, landing: PointState, time: int,
                         cyl: CylinderSpec) -> Union[int, Undecided]:
    """1 iff the symbol component of S^time x lies in the cylinder"""
    return cylinder_indicator(state.omega, s_orbit_chain(state, landing, time), cyl)


def plateau_constant(b_fraction: float) -> float:
    """The constant c = m(B)/2 of the non-flipped plateau"""
    return b_fraction / 2


def density_outside(flips: FlipSet, start: int, stop: int) -> Fraction:
    """|[start, stop) minus F| / (stop - start)"""
    return Fraction(flips.count_outside(start, stop), max(1, stop - start))
