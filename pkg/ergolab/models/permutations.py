"""
Point-Dependent Permutations of Z
Horizon-bounded forward tables g_{p(n)}(y), the leftover enumeration, the
permutations pi_{p,y} and pi_y = pi_{p1,y} o pi_{p2,y}^-1, the flip set Q_y,
and the coordinate map psi built from them
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from ergolab.errors import CollisionError, PreconditionError, ZeroValueError
from ergolab.models.base_systems import BasePoint
from ergolab.models.flip_sets import FlipSet
from ergolab.models.polynomials import IntPoly, l_enumerate, monotone_threshold, poly_eval
from ergolab.models.symbolic_space import (
    Flip,
    IndexChain,
    OmegaOracle,
    Permute,
    Undecided,
    is_undecided,
)

logger = logging.getLogger(__name__)


def default_scan_bound(horizon: int) -> int:
    return 4 * horizon + 16


@dataclass(frozen=True)
class ForwardTable:
    """v_i = g_{p(M+i-1)}(y) for i = 1..H, all even, nonzero and distinct"""
    poly: IntPoly
    start: int
    horizon: int
    values: Tuple[int, ...]
    inverse: Dict[int, int] = field(compare=False, repr=False)

    def time(self, i: int) -> int:
        """The polynomial time n = M + i - 1 of entry i"""
        return self.start + i - 1

    def index_of(self, value: int) -> Optional[int]:
        return self.inverse.get(value)


def schedule_times(p: IntPoly, start: int, horizon: int) -> List[int]:
    """Birkhoff times p(M), ..., p(M+H-1)"""
    if start < monotone_threshold(p):
        raise PreconditionError(f"M = {start} is below the monotone threshold of {p}")
    if horizon < 1:
        raise PreconditionError(f"horizon must be >= 1, got {horizon}")
    return [poly_eval(p, start + i) for i in range(horizon)]


def forward_from_values(p: IntPoly, start: int, values: Sequence[int]) -> ForwardTable:
    """Validate g-values into a ForwardTable; zero or repeated values fail the certificate"""
    inverse: Dict[int, int] = {}
    for i, value in enumerate(values, start=1):
        if value == 0:
            raise ZeroValueError(i)
        if value in inverse:
            raise CollisionError(inverse[value], i, value)
        inverse[value] = i
    return ForwardTable(p, start, len(values), tuple(values), inverse)


def build_forward(point: BasePoint, p: IntPoly, start: int, horizon: int) -> ForwardTable:
    """One streaming Birkhoff pass at p(M), ..., p(M+H-1)"""
    values = point.g_at(schedule_times(p, start, horizon))
    return forward_from_values(p, start, values)


@dataclass(frozen=True)
class LeftoverTable:
    """
    Resolved prefix j_1 < j_2 < ... of indices whose l_j is not a forward value

    Odd l_j can never be a g-value (g = 2f), so those entries are certified
    unconditionally; even entries are only certified against the horizon.
    """
    prefix: Tuple[int, ...]
    scan_bound: int
    unconditional: Tuple[bool, ...]
    by_value: Dict[int, int] = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.prefix)

    def value(self, i: int) -> int:
        """l_{j_i}"""
        return l_enumerate(self.prefix[i - 1])

    def index_of(self, value: int) -> Optional[int]:
        return self.by_value.get(value)

    @property
    def horizon_relative_count(self) -> int:
        return sum(1 for flag in self.unconditional if not flag)


def build_leftover(forward: ForwardTable, scan_bound: Optional[int] = None) -> LeftoverTable:
    scan_bound = scan_bound or default_scan_bound(forward.horizon)
    prefix, unconditional, by_value = [], [], {}
    for j in range(1, scan_bound + 1):
        value = l_enumerate(j)
        if value in forward.inverse:
            continue
        prefix.append(j)
        unconditional.append(value % 2 == 1)
        by_value[value] = len(prefix)
    return LeftoverTable(tuple(prefix), scan_bound, tuple(unconditional), by_value)


@dataclass(frozen=True)
class PolyPermutation:
    """
    pi_{p,y}: 0 -> 0, i >= 1 -> v_i, i <= -1 -> l_{j_{-i}}

    Entries beyond the horizon or the leftover scan are Undecided.
    """
    forward: ForwardTable
    leftover: LeftoverTable
    name: str = "pi_p"

    def apply(self, i: int) -> Union[int, Undecided]:
        if i == 0:
            return 0
        if i > 0:
            if i <= self.forward.horizon:
                return self.forward.values[i - 1]
            return Undecided(f"{self.name}({i}) beyond horizon {self.forward.horizon}")
        if -i <= len(self.leftover):
            return self.leftover.value(-i)
        return Undecided(f"{self.name}({i}) beyond leftover scan {self.leftover.scan_bound}")

    def apply_inverse(self, value: int) -> Union[int, Undecided]:
        if value == 0:
            return 0
        i = self.forward.index_of(value)
        if i is not None:
            return i
        i = self.leftover.index_of(value)
        if i is not None:
            return -i
        return Undecided(f"{self.name}^-1({value}) unresolved")


def pi_p_apply(forward: ForwardTable, leftover: LeftoverTable, i: int) -> Union[int, Undecided]:
    return PolyPermutation(forward, leftover).apply(i)


@dataclass(frozen=True)
class ComposedPermutation:
    """pi_y = pi_{p1,y} o pi_{p2,y}^-1"""
    outer: PolyPermutation
    inner: PolyPermutation
    name: str = "pi_y"

    def apply(self, q: int) -> Union[int, Undecided]:
        i = self.inner.apply_inverse(q)
        return i if is_undecided(i) else self.outer.apply(i)

    def apply_inverse(self, r: int) -> Union[int, Undecided]:
        i = self.outer.apply_inverse(r)
        return i if is_undecided(i) else self.inner.apply(i)


@dataclass(frozen=True)
class FlipCoordinates:
    """Q_y = {g_{p1(n)}(y) : n >= M, n in F}, known on the forward-1 table"""
    forward: ForwardTable
    leftover: LeftoverTable
    flips: FlipSet
    name: str = "Q_y"

    def contains(self, q: int) -> Union[bool, Undecided]:
        i = self.forward.index_of(q)
        if i is not None:
            return self.flips.contains(self.forward.time(i))
        if q == 0 or q % 2 == 1 or self.leftover.index_of(q) is not None:
            return False
        return Undecided(f"membership of {q} in {self.name} beyond horizon")


@dataclass(frozen=True)
class PermTables:
    """Everything the conjugator R needs at one certified base point"""
    forward1: ForwardTable
    forward2: ForwardTable
    leftover1: LeftoverTable
    leftover2: LeftoverTable
    flips: FlipSet

    @property
    def start(self) -> int:
        return self.forward1.start

    @property
    def horizon(self) -> int:
        return self.forward1.horizon

    @property
    def pi1(self) -> PolyPermutation:
        return PolyPermutation(self.forward1, self.leftover1, "pi_p1")

    @property
    def pi2(self) -> PolyPermutation:
        return PolyPermutation(self.forward2, self.leftover2, "pi_p2")

    @property
    def pi_y(self) -> ComposedPermutation:
        return ComposedPermutation(self.pi1, self.pi2)

    @property
    def q_y(self) -> FlipCoordinates:
        return FlipCoordinates(self.forward1, self.leftover1, self.flips)

    def q_y_indices(self) -> List[int]:
        return [i for i in range(1, self.horizon + 1) if self.flips.contains(self.forward1.time(i))]

    def to_dict(self) -> Dict:
        return {
            "M": self.start,
            "H": self.horizon,
            "p1": self.forward1.poly.to_text(),
            "p2": self.forward2.poly.to_text(),
            "values_p1": list(self.forward1.values),
            "values_p2": list(self.forward2.values),
            "leftover_prefix_p1": list(self.leftover1.prefix),
            "leftover_prefix_p2": list(self.leftover2.prefix),
            "leftover_horizon_relative_p1": self.leftover1.horizon_relative_count,
            "leftover_horizon_relative_p2": self.leftover2.horizon_relative_count,
            "scan_bound": self.leftover1.scan_bound,
            "q_y_indices": self.q_y_indices(),
            "flip_set": self.flips.to_text(),
        }


def build_tables(forward1: ForwardTable, forward2: ForwardTable, flips: FlipSet,
                 scan_bound: Optional[int] = None) -> PermTables:
    if (forward1.start, forward1.horizon) != (forward2.start, forward2.horizon):
        raise PreconditionError("forward tables must share M and H")
    return PermTables(forward1, forward2,
                      build_leftover(forward1, scan_bound),
                      build_leftover(forward2, scan_bound), flips)


def pi_y_apply(tables: PermTables, q: int) -> Union[int, Undecided]:
    return tables.pi_y.apply(q)


def psi_chain(tables: PermTables) -> IndexChain:
    """
    psi = phi^{Q_y} o phi_{pi_y} as a pull-back chain

    Reading at q rewrites q -> pi_{p2}^-1(q) -> pi_{p1}(.) = pi_y(q) and then
    flips when pi_y(q) lies in Q_y.
    """
    return IndexChain.of(
        Permute(tables.pi2, forward=False),
        Permute(tables.pi1, forward=True),
        Flip(tables.q_y),
    )


def psi_direct(tables: PermTables, oracle: OmegaOracle, q: int) -> Union[int, Undecided]:
    """
    (psi omega)(q) from the case definition, without index chains

    omega(0) at q = 0; 1 - omega(g_{p1(n)}) at q = g_{p2(n)} with n in F;
    omega(g_{p1(n)}) at q = g_{p2(n)} with n not in F; omega(pi_y(q)) otherwise.
    """
    if q == 0:
        return oracle.read(0)
    i = tables.forward2.index_of(q)
    if i is not None:
        target = tables.forward1.values[i - 1]
        return oracle.read(target) ^ int(tables.flips.contains(tables.forward2.time(i)))
    j = tables.leftover2.index_of(q)
    if j is None:
        return Undecided(f"psi at {q}: outside forward and leftover tables")
    if j > len(tables.leftover1):
        return Undecided(f"psi at {q}: leftover scan exhausted")
    return oracle.read(tables.leftover1.value(j))


def psi_inverse_direct(tables: PermTables, oracle: OmegaOracle, r: int) -> Union[int, Undecided]:
    """(psi^-1 omega)(r) = omega(pi_y^-1(r)) xor [r in Q_y]"""
    if r == 0:
        return oracle.read(0)
    member = tables.q_y.contains(r)
    if is_undecided(member):
        return member
    source = tables.pi_y.apply_inverse(r)
    if is_undecided(source):
        return source
    return oracle.read(source) ^ int(member)
