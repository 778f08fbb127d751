"""
Symbol Space {0,1}^Z
Keyed pseudorandom coordinate oracle for omega, and index chains composing
shifts, coordinate permutations and flip maps, read lazily by index pull-back
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Tuple, Union

from ergolab.errors import PreconditionError

logger = logging.getLogger(__name__)

COORDINATE_LIMIT = 1 << 127


@dataclass(frozen=True)
class Undecided:
    """Result of a lazy read that the finite tables cannot resolve"""
    reason: str

    def __bool__(self):
        raise TypeError(f"Undecided ({self.reason}) cannot be used as a truth value")


def is_undecided(value) -> bool:
    return isinstance(value, Undecided)


class IndexMap(Protocol):
    """A bijection of Z known on part of its domain"""
    name: str

    def apply(self, q: int) -> Union[int, Undecided]: ...

    def apply_inverse(self, q: int) -> Union[int, Undecided]: ...


class CoordinateSet(Protocol):
    """A subset of Z with (possibly undecided) membership"""
    name: str

    def contains(self, q: int) -> Union[bool, Undecided]: ...


@dataclass(frozen=True)
class OmegaOracle:
    """omega in {0,1}^Z as a keyed BLAKE2b function of the coordinate"""
    master_seed: int
    omega_id: int

    def _key(self) -> bytes:
        return (self.master_seed & ((1 << 64) - 1)).to_bytes(8, "little")

    def read(self, q: int) -> int:
        if not -COORDINATE_LIMIT <= q < COORDINATE_LIMIT:
            raise PreconditionError(f"coordinate {q} outside the signed 128-bit range")
        material = self.omega_id.to_bytes(8, "little", signed=False) + q.to_bytes(16, "little", signed=True)
        digest = hashlib.blake2b(material, digest_size=8, key=self._key(), person=b"ergolab-omega").digest()
        return digest[0] & 1

    def read_many(self, coordinates: Sequence[int]) -> List[int]:
        return [self.read(q) for q in coordinates]


def omega_read(oracle: OmegaOracle, q: int) -> int:
    return oracle.read(q)


@dataclass(frozen=True)
class Shift:
    """sigma^k: (sigma^k omega)(q) = omega(q + k)"""
    k: int

    def inverse(self) -> "Shift":
        return Shift(-self.k)

    def to_text(self) -> str:
        return f"shift({self.k})"


@dataclass(frozen=True)
class Permute:
    """phi_pi (forward) or its inverse: (phi_pi omega)(q) = omega(pi(q))"""
    mapping: IndexMap
    forward: bool = True

    def inverse(self) -> "Permute":
        return Permute(self.mapping, not self.forward)

    def to_text(self) -> str:
        return f"perm({self.mapping.name},{'fwd' if self.forward else 'inv'})"


@dataclass(frozen=True)
class Flip:
    """phi^Q: flips the coordinates in Q; its own inverse"""
    coordinates: CoordinateSet

    def inverse(self) -> "Flip":
        return self

    def to_text(self) -> str:
        return f"flip({self.coordinates.name})"


Atom = Union[Shift, Permute, Flip]


@dataclass(frozen=True)
class ChainTrace:
    """Outcome of pulling a coordinate back through a chain"""
    index: int
    parity: int
    visited: Tuple[int, ...]


@dataclass(frozen=True)
class IndexChain:
    """
    Composition A_1 o A_2 o ... o A_m of coordinate maps, listed outermost first

    Reading (A_1 ... A_m omega)(q) rewrites q through A_1, then A_2, and so on,
    toggling the parity at each flip whose set contains the current index.
    """
    atoms: Tuple[Atom, ...] = ()

    @classmethod
    def of(cls, *atoms: Atom) -> "IndexChain":
        return cls(tuple(atoms))

    def then(self, inner: "IndexChain") -> "IndexChain":
        """self o inner"""
        return IndexChain(self.atoms + inner.atoms)

    def inverse(self) -> "IndexChain":
        return IndexChain(tuple(atom.inverse() for atom in reversed(self.atoms)))

    def trace(self, q: int) -> Union[ChainTrace, Undecided]:
        parity = 0
        visited = [q]
        for atom in self.atoms:
            if isinstance(atom, Shift):
                q = q + atom.k
            elif isinstance(atom, Permute):
                target = atom.mapping.apply(q) if atom.forward else atom.mapping.apply_inverse(q)
                if is_undecided(target):
                    return Undecided(f"{atom.to_text()} at {q}: {target.reason}")
                q = target
            else:
                member = atom.coordinates.contains(q)
                if is_undecided(member):
                    return Undecided(f"{atom.to_text()} at {q}: {member.reason}")
                parity ^= int(member)
                continue
            visited.append(q)
        return ChainTrace(q, parity, tuple(visited))

    def to_text(self) -> str:
        return "|".join(atom.to_text() for atom in self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)


def trace_transformed(chain: IndexChain, q: int) -> Union[int, Undecided]:
    """Physical coordinate of omega that the chain reads at q"""
    result = chain.trace(q)
    return result if is_undecided(result) else result.index


def read_transformed(oracle: OmegaOracle, chain: IndexChain, q: int) -> Union[int, Undecided]:
    """Bit of (chain applied to omega) at coordinate q"""
    result = chain.trace(q)
    if is_undecided(result):
        logger.warning("Undecided read at %d: %s", q, result.reason)
        return result
    return oracle.read(result.index) ^ result.parity


@dataclass(frozen=True)
class CylinderSpec:
    """Cylinder {omega : omega(base + i) = word[i]} of nu-mass 2^-len(word)"""
    base: int
    word: str

    def __post_init__(self):
        if any(ch not in "01" for ch in self.word):
            raise PreconditionError(f"cylinder word {self.word!r} must be a bit string")

    @property
    def mass(self) -> float:
        return 2.0 ** -len(self.word)


def cylinder_indicator(oracle: OmegaOracle, chain: IndexChain,
                       cyl: CylinderSpec) -> Union[int, Undecided]:
    """1 iff (chain applied to omega) lies in the cylinder; any resolved mismatch decides 0"""
    pending: Optional[Undecided] = None
    for i, symbol in enumerate(cyl.word):
        bit = read_transformed(oracle, chain, cyl.base + i)
        if is_undecided(bit):
            if pending is None:
                pending = bit
        elif bit != int(symbol):
            return 0
    return pending if pending is not None else 1


@dataclass(frozen=True)
class FiniteCoordinateSet:
    """Explicit finite subset of Z"""
    members: frozenset
    name: str = "Q"

    def contains(self, q: int) -> bool:
        return q in self.members
