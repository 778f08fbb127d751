"""
Flip Time Sets F
Subsets of the natural numbers selecting the times n whose forward coordinate is flipped
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

from ergolab.errors import FlipSetParseError

logger = logging.getLogger(__name__)


class FlipSetKind(Enum):
    NONE = "none"
    ALL = "all"
    LIST = "list"
    GEOMETRIC = "geometric"
    MODULAR = "mod"


@dataclass(frozen=True)
class FlipSet:
    """
    Membership predicate on N with an exact counting oracle

    - none / all: the empty set and every n >= 0
    - list:a,b,c: an explicit finite set
    - geometric:b,lo,hi: the union of blocks [lo*b^k, hi*b^k), k >= 0
    - dyadic: shorthand for geometric:4,1,2
    - mod:r,m: the residue class n = r (mod m)
    """
    kind: FlipSetKind
    members: Tuple[int, ...] = ()
    base: int = 0
    low: int = 0
    high: int = 0
    residue: int = 0
    modulus: int = 1

    @classmethod
    def none(cls) -> "FlipSet":
        return cls(FlipSetKind.NONE)

    @classmethod
    def all(cls) -> "FlipSet":
        return cls(FlipSetKind.ALL)

    @classmethod
    def of(cls, members) -> "FlipSet":
        return cls(FlipSetKind.LIST, members=tuple(sorted(set(int(m) for m in members))))

    @classmethod
    def geometric(cls, base: int, low: int, high: int) -> "FlipSet":
        if base < 2 or low < 1 or high <= low:
            raise FlipSetParseError(f"geometric blocks need base >= 2 and 1 <= lo < hi, got {base},{low},{high}")
        return cls(FlipSetKind.GEOMETRIC, base=base, low=low, high=high)

    @classmethod
    def dyadic(cls) -> "FlipSet":
        return cls.geometric(4, 1, 2)

    @classmethod
    def residues(cls, residue: int, modulus: int) -> "FlipSet":
        if modulus < 1:
            raise FlipSetParseError(f"modulus must be positive, got {modulus}")
        return cls(FlipSetKind.MODULAR, residue=residue % modulus, modulus=modulus)

    @classmethod
    def parse(cls, text: str) -> "FlipSet":
        head, _, tail = text.strip().partition(":")
        try:
            if head == "none" and not tail:
                return cls.none()
            if head == "all" and not tail:
                return cls.all()
            if head == "dyadic" and not tail:
                return cls.dyadic()
            if head == "list":
                return cls.of(int(v) for v in tail.split(",") if v.strip())
            if head == "geometric":
                base, low, high = (int(v) for v in tail.split(","))
                return cls.geometric(base, low, high)
            if head == "mod":
                residue, modulus = (int(v) for v in tail.split(","))
                return cls.residues(residue, modulus)
        except ValueError as e:
            raise FlipSetParseError(f"invalid flip set {text!r}: {e}") from e
        raise FlipSetParseError(f"unknown flip set {text!r}")

    def to_text(self) -> str:
        if self.kind is FlipSetKind.LIST:
            return "list:" + ",".join(str(m) for m in self.members)
        if self.kind is FlipSetKind.GEOMETRIC:
            if (self.base, self.low, self.high) == (4, 1, 2):
                return "dyadic"
            return f"geometric:{self.base},{self.low},{self.high}"
        if self.kind is FlipSetKind.MODULAR:
            return f"mod:{self.residue},{self.modulus}"
        return self.kind.value

    @property
    def name(self) -> str:
        return f"F[{self.to_text()}]"

    def contains(self, n: int) -> bool:
        if self.kind is FlipSetKind.NONE:
            return False
        if self.kind is FlipSetKind.ALL:
            return n >= 0
        if self.kind is FlipSetKind.LIST:
            return n in self.members
        if self.kind is FlipSetKind.MODULAR:
            return n % self.modulus == self.residue
        scale = 1
        while self.low * scale <= n:
            if n < self.high * scale:
                return True
            scale *= self.base
        return False

    def __contains__(self, n: int) -> bool:
        return self.contains(n)

    def block_boundaries(self, limit: int) -> List[Tuple[int, int]]:
        """Maximal blocks [start, end) of F meeting [0, limit), clipped to the limit"""
        if self.kind is FlipSetKind.GEOMETRIC:
            blocks = []
            scale = 1
            while self.low * scale < limit:
                start, end = self.low * scale, min(self.high * scale, limit)
                if blocks and start <= blocks[-1][1]:
                    blocks[-1] = (blocks[-1][0], max(blocks[-1][1], end))
                else:
                    blocks.append((start, end))
                scale *= self.base
            return blocks
        if self.kind is FlipSetKind.NONE:
            return []
        if self.kind is FlipSetKind.ALL:
            return [(0, limit)] if limit > 0 else []
        blocks = []
        for n in range(limit):
            if self.contains(n):
                if blocks and blocks[-1][1] == n:
                    blocks[-1] = (blocks[-1][0], n + 1)
                else:
                    blocks.append((n, n + 1))
        return blocks

    def count_inside(self, lo: int, hi: int) -> int:
        """|F intersect [lo, hi)|"""
        if hi <= lo:
            return 0
        if self.kind is FlipSetKind.MODULAR:
            def below(x):  # members of the class in [0, x)
                return max(0, (x - self.residue + self.modulus - 1) // self.modulus)
            return below(hi) - below(max(lo, 0))
        if self.kind is FlipSetKind.LIST:
            return sum(1 for m in self.members if lo <= m < hi)
        return sum(max(0, min(end, hi) - max(start, lo)) for start, end in self.block_boundaries(hi))

    def count_outside(self, lo: int, hi: int) -> int:
        """|[lo, hi) minus F|, the exact density oracle"""
        return max(0, hi - lo) - self.count_inside(lo, hi)
