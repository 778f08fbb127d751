"""
Base Measure-Preserving Systems
The lazy walk base and the circle rotation base (Y, m, R) with their integer
cocycle f, streaming Birkhoff sums f_n, g_n = 2 f_n, and exact level-set masses
"""

import bisect
import hashlib
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import binom

from ergolab.errors import BudgetExceededError, DPFeasibilityError, PreconditionError

logger = logging.getLogger(__name__)

# Canonical walk step law on {-1, 0, +1}; sigma^2 = 1/2
WALK_STEP_LAW: Dict[int, Fraction] = {-1: Fraction(1, 4), 0: Fraction(1, 2), 1: Fraction(1, 4)}
WALK_VARIANCE = 0.5
# Law of one step of g = 2 f
G_STEP_LAW: Dict[int, Fraction] = {2 * step: p for step, p in WALK_STEP_LAW.items()}

LLT_NOT_GUARANTEED = "LLT not guaranteed"

CHUNK_STEPS = 1 << 20          # steps per stream chunk, also the checkpoint spacing
WORDS_PER_CHUNK = CHUNK_STEPS // 32   # each 64-bit word carries 32 two-bit steps
MASK64 = (1 << 64) - 1

FIXED_BITS = 128
FIXED_ONE = 1 << FIXED_BITS
FIXED_MASK = FIXED_ONE - 1

DP_LIMIT = 100_000             # largest n accepted by the level-set computations
EXACT_DP_LIMIT = 10_000        # largest n for exact rational masses

# Gaussian tail below 1e-15 once x^2 > 34.54 n (sigma^2 = 1/2)
_GAUSS_TAIL_FACTOR = 34.6


@dataclass(frozen=True, order=True)
class CirclePoint:
    """Point of the circle R/Z as an unsigned 128-bit fixed-point fraction"""
    frac: int

    def __post_init__(self):
        if not 0 <= self.frac < FIXED_ONE:
            raise PreconditionError(f"circle point fraction {self.frac} outside [0, 2^128)")

    @classmethod
    def from_fraction(cls, value: Union[Fraction, str, float]) -> "CirclePoint":
        value = Fraction(value)
        return cls(math.floor(value * FIXED_ONE) % FIXED_ONE)

    def __add__(self, other: "CirclePoint") -> "CirclePoint":
        return CirclePoint((self.frac + other.frac) & FIXED_MASK)

    def times(self, k: int) -> "CirclePoint":
        """k-fold sum modulo 1 (k may be negative)"""
        return CirclePoint((self.frac * k) % FIXED_ONE)

    def to_float(self) -> float:
        return self.frac / FIXED_ONE


# Fixed-point truncation of (sqrt(5) - 1)/2
GOLDEN_ALPHA = CirclePoint((math.isqrt(5 << (2 * FIXED_BITS)) - FIXED_ONE) // 2)


@dataclass(frozen=True)
class StepFunction:
    """
    Piecewise-constant integer function on the circle

    breakpoints[i] = (b_i, v_i) means the value v_i on [b_i, b_{i+1});
    b_0 must be 0 and the last piece runs up to 1.
    """
    breakpoints: Tuple[Tuple[Fraction, int], ...]

    def __post_init__(self):
        problems = self.validate()
        if problems:
            raise PreconditionError("; ".join(problems))

    @classmethod
    def parse(cls, text: str) -> "StepFunction":
        """Parse "0:1,1/2:-1" (start:value pairs)"""
        pieces = []
        try:
            for item in text.split(","):
                start, value = item.split(":")
                pieces.append((Fraction(start.strip()), int(value)))
        except (ValueError, ZeroDivisionError) as e:
            raise PreconditionError(f"invalid step function {text!r}: {e}") from e
        return cls(tuple(pieces))

    @classmethod
    def half_circle(cls) -> "StepFunction":
        """+1 on [0, 1/2), -1 on [1/2, 1)"""
        return cls(((Fraction(0), 1), (Fraction(1, 2), -1)))

    def validate(self) -> List[str]:
        problems = []
        if not self.breakpoints:
            return ["step function needs at least one piece"]
        starts = [b for b, _ in self.breakpoints]
        if starts[0] != 0:
            problems.append("first breakpoint must be 0")
        if any(a >= b for a, b in zip(starts, starts[1:])):
            problems.append("breakpoints must be strictly increasing")
        if starts[-1] >= 1:
            problems.append("breakpoints must lie in [0, 1)")
        if not problems and self.mean() != 0:
            problems.append(f"step function has mean {self.mean()}, expected 0")
        return problems

    def mean(self) -> Fraction:
        """Exact Lebesgue mean over [0, 1)"""
        ends = [b for b, _ in self.breakpoints[1:]] + [Fraction(1)]
        return sum(((end - start) * value for (start, value), end in zip(self.breakpoints, ends)), Fraction(0))

    @property
    def thresholds(self) -> List[int]:
        """Fixed-point start of each piece: the least 128-bit fraction >= b_i"""
        return [math.ceil(b * FIXED_ONE) for b, _ in self.breakpoints]

    @property
    def values(self) -> List[int]:
        return [v for _, v in self.breakpoints]

    def __call__(self, point: CirclePoint) -> int:
        return self.values[bisect.bisect_right(self.thresholds, point.frac) - 1]

    def to_text(self) -> str:
        return ",".join(f"{b}:{v}" for b, v in self.breakpoints)


class BaseKindName(Enum):
    WALK = "walk"
    ROTATION = "rotation"


@dataclass(frozen=True)
class BaseKind:
    """Choice of base system: the lazy walk, or a rotation by alpha with a step function"""
    name: BaseKindName = BaseKindName.WALK
    alpha: CirclePoint = GOLDEN_ALPHA
    step: Optional[StepFunction] = None

    @classmethod
    def walk(cls) -> "BaseKind":
        return cls(BaseKindName.WALK)

    @classmethod
    def rotation(cls, alpha: CirclePoint = GOLDEN_ALPHA,
                 step: Optional[StepFunction] = None) -> "BaseKind":
        logger.warning("Rotation base selected: %s for a surrogate step function", LLT_NOT_GUARANTEED)
        return cls(BaseKindName.ROTATION, alpha, step or StepFunction.half_circle())

    @property
    def is_walk(self) -> bool:
        return self.name is BaseKindName.WALK

    def describe(self) -> str:
        if self.is_walk:
            return "walk"
        return f"rotation(alpha={self.alpha.frac:#034x}, step={self.step.to_text()})"


def _walk_chunk_words(master_seed: int, sample_id: int, chunk: int) -> np.ndarray:
    """Raw words of one stream chunk: a pure function of (seed, id, chunk)"""
    key = ((master_seed & MASK64) << 64) | (sample_id & MASK64)
    generator = np.random.Philox(key=key, counter=chunk << 64)
    return generator.random_raw(WORDS_PER_CHUNK)


def _bit_prefix_popcount(words: np.ndarray, nbits: int) -> int:
    """Number of set bits among the first nbits bits of the word stream"""
    full, rest = divmod(nbits, 64)
    total = int(np.bitwise_count(words[:full]).sum()) if full else 0
    if rest:
        total += bin(int(words[full]) & ((1 << rest) - 1)).count("1")
    return total


def _words_to_steps(words: np.ndarray) -> np.ndarray:
    """Unpack 2-bit pairs (b0, b1) into steps b0 + b1 - 1, lowest bits first"""
    bits = np.unpackbits(words.astype("<u8").view(np.uint8), bitorder="little")
    return (bits.reshape(-1, 2).sum(axis=1, dtype=np.int8) - 1).astype(np.int8)


def _sample_rotation_start(master_seed: int, sample_id: int) -> CirclePoint:
    material = f"{master_seed}:{sample_id}".encode()
    digest = hashlib.blake2b(material, digest_size=16, person=b"ergolab-rot").digest()
    return CirclePoint(int.from_bytes(digest, "little"))


def _rotation_orbit_limbs(start: int, alpha: int, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Orbit start + j*alpha (mod 2^128), j < count, as (high, low) uint64 halves

    32-bit limbs in uint64 lanes: j < 2^20 keeps every partial sum below 2^53.
    """
    j = np.arange(count, dtype=np.uint64)
    limbs = []
    carry = np.zeros(count, dtype=np.uint64)
    for i in range(4):
        s_i = np.uint64((start >> (32 * i)) & 0xFFFFFFFF)
        a_i = np.uint64((alpha >> (32 * i)) & 0xFFFFFFFF)
        total = j * a_i + s_i + carry
        limbs.append(total & np.uint64(0xFFFFFFFF))
        carry = total >> np.uint64(32)
    high = (limbs[3] << np.uint64(32)) | limbs[2]
    low = (limbs[1] << np.uint64(32)) | limbs[0]
    return high, low


def _rotation_steps(step: StepFunction, high: np.ndarray, low: np.ndarray) -> np.ndarray:
    piece = np.full(high.shape, -1, dtype=np.int64)
    for threshold in step.thresholds:
        t_high = np.uint64(threshold >> 64)
        t_low = np.uint64(threshold & MASK64)
        piece += (high > t_high) | ((high == t_high) & (low >= t_low))
    return np.asarray(step.values, dtype=np.int64)[piece]


@dataclass
class BasePoint:
    """
    A sampled base point y with its lazily streamed cocycle f(R^k y)

    The stream is a pure function of (kind, master_seed, sample_id, offset);
    a point with offset d is R^d applied to the sampled point.
    Checkpoints (n, f_n) grow as Birkhoff sums are requested.
    """
    kind: BaseKind
    sample_id: int
    master_seed: int
    offset: int = 0
    budget: Optional[int] = None
    checkpoint_times: List[int] = field(default_factory=lambda: [0])
    checkpoint_values: List[int] = field(default_factory=lambda: [0])
    _cached_chunk: Optional[Tuple[int, np.ndarray]] = field(default=None, repr=False)
    _chunk_sums: Dict[int, int] = field(default_factory=dict, repr=False)

    @property
    def position(self) -> int:
        """Furthest streamed time"""
        return self.checkpoint_times[-1]

    @property
    def checkpoints(self) -> List[Tuple[int, int]]:
        return list(zip(self.checkpoint_times, self.checkpoint_values))

    @property
    def start(self) -> CirclePoint:
        """Rotation base only: the circle point R^offset y"""
        y0 = _sample_rotation_start(self.master_seed, self.sample_id)
        return y0 + self.kind.alpha.times(self.offset)

    def shifted(self, offset: int) -> "BasePoint":
        """The point R^offset y, sharing this point's stream"""
        if self.offset + offset < 0:
            raise PreconditionError("shifted points must stay at a nonnegative stream offset")
        return BasePoint(self.kind, self.sample_id, self.master_seed,
                         offset=self.offset + offset, budget=self.budget)

    # Stream access by absolute index

    def _chunk(self, chunk: int) -> np.ndarray:
        if self._cached_chunk is None or self._cached_chunk[0] != chunk:
            self._cached_chunk = (chunk, _walk_chunk_words(self.master_seed, self.sample_id, chunk))
        return self._cached_chunk[1]

    def _chunk_slice_sum(self, chunk: int, lo: int, hi: int) -> int:
        """Sum of the cocycle over steps [lo, hi) of one chunk"""
        if lo == 0 and hi == CHUNK_STEPS and chunk in self._chunk_sums:
            return self._chunk_sums[chunk]
        if self.kind.is_walk:
            words = self._chunk(chunk)
            total = (_bit_prefix_popcount(words, 2 * hi) - _bit_prefix_popcount(words, 2 * lo)) - (hi - lo)
        else:
            total = int(self._rotation_chunk_steps(chunk, lo, hi).sum())
        if lo == 0 and hi == CHUNK_STEPS:
            self._chunk_sums[chunk] = total
        return total

    def _rotation_chunk_steps(self, chunk: int, lo: int, hi: int) -> np.ndarray:
        y0 = _sample_rotation_start(self.master_seed, self.sample_id).frac
        alpha = self.kind.alpha.frac
        first = (y0 + (chunk * CHUNK_STEPS + lo) * alpha) % FIXED_ONE
        high, low = _rotation_orbit_limbs(first, alpha, hi - lo)
        return _rotation_steps(self.kind.step, high, low)

    def _absolute_sum(self, start: int, stop: int) -> int:
        total = 0
        index = start
        while index < stop:
            chunk, lo = divmod(index, CHUNK_STEPS)
            hi = min(CHUNK_STEPS, stop - chunk * CHUNK_STEPS)
            total += self._chunk_slice_sum(chunk, lo, hi)
            index = chunk * CHUNK_STEPS + hi
        return total

    def steps(self, start: int, stop: int) -> np.ndarray:
        """Cocycle values f(R^k y) for k in [start, stop), as int64"""
        if start < 0 or stop < start:
            raise PreconditionError(f"invalid step range [{start}, {stop})")
        parts = []
        index = self.offset + start
        end = self.offset + stop
        while index < end:
            chunk, lo = divmod(index, CHUNK_STEPS)
            hi = min(CHUNK_STEPS, end - chunk * CHUNK_STEPS)
            if self.kind.is_walk:
                parts.append(_words_to_steps(self._chunk(chunk))[lo:hi].astype(np.int64))
            else:
                parts.append(self._rotation_chunk_steps(chunk, lo, hi))
            index = chunk * CHUNK_STEPS + hi
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    # Birkhoff sums

    def _check_budget(self, n: int):
        if self.budget is not None and n > self.budget:
            raise BudgetExceededError(n, self.budget, "Birkhoff time")

    def _record(self, n: int, value: int):
        i = bisect.bisect_left(self.checkpoint_times, n)
        if i < len(self.checkpoint_times) and self.checkpoint_times[i] == n:
            return
        self.checkpoint_times.insert(i, n)
        self.checkpoint_values.insert(i, value)

    def birkhoff_at(self, times: Sequence[int]) -> List[int]:
        """f_n(y) for each requested n, streaming forward from the nearest checkpoint"""
        times = list(times)
        if any(t < 0 for t in times) or any(a >= b for a, b in zip(times, times[1:])):
            raise PreconditionError("Birkhoff times must be nonnegative and strictly increasing")
        if times:
            self._check_budget(times[-1])
        results = []
        for n in times:
            i = bisect.bisect_right(self.checkpoint_times, n) - 1
            base_time, value = self.checkpoint_times[i], self.checkpoint_values[i]
            if base_time < self.position and base_time < n:
                logger.warning("Replaying point %d from checkpoint %d to %d", self.sample_id, base_time, n)
            # advance to n, leaving a checkpoint at each chunk boundary crossed
            current = base_time
            while current < n:
                boundary = ((self.offset + current) // CHUNK_STEPS + 1) * CHUNK_STEPS - self.offset
                target = min(n, boundary)
                value += self._absolute_sum(self.offset + current, self.offset + target)
                current = target
                if current == boundary:
                    self._record(current, value)
            self._record(n, value)
            results.append(value)
        return results

    def g_at(self, times: Sequence[int]) -> List[int]:
        """g_n(y) = 2 f_n(y)"""
        return [2 * v for v in self.birkhoff_at(times)]

    def prefix_sums(self, count: int) -> np.ndarray:
        """f_0, ..., f_{count-1} recomputed from the raw stream"""
        self._check_budget(count)
        out = np.zeros(count, dtype=np.int64)
        if count > 1:
            np.cumsum(self.steps(0, count - 1), out=out[1:])
        return out


def sample_point(kind: BaseKind, master_seed: int, sample_id: int,
                 budget: Optional[int] = None) -> BasePoint:
    """Fresh point with an empty checkpoint table"""
    return BasePoint(kind, sample_id, master_seed, budget=budget)


@dataclass(frozen=True)
class LevelDistribution:
    """Law of f_n under m: level x -> m(f_n = x), exact rationals or floats"""
    n: int
    masses: Dict[int, Union[Fraction, float]]
    exact: bool = True

    def mass(self, x: int) -> Union[Fraction, float]:
        return self.masses.get(x, Fraction(0) if self.exact else 0.0)

    def total(self) -> Union[Fraction, float]:
        if self.exact:
            return sum(self.masses.values(), Fraction(0))
        return math.fsum(self.masses.values())

    def to_frame(self) -> pd.DataFrame:
        levels = sorted(self.masses)
        if self.exact:
            return pd.DataFrame({
                "x": levels,
                "mass_numerator": [str(self.masses[x].numerator) for x in levels],
                "mass_denominator": [str(self.masses[x].denominator) for x in levels],
                "mass": [float(self.masses[x]) for x in levels],
            })
        return pd.DataFrame({"x": levels, "mass": [self.masses[x] for x in levels]})


def _check_dp(n: int, limit: int = DP_LIMIT):
    if n < 1:
        raise PreconditionError(f"level distributions need n >= 1, got {n}")
    if n > limit:
        raise DPFeasibilityError(n, limit, "DP size")


def walk_exact_distribution(n: int, exact: bool = True) -> LevelDistribution:
    """
    n-fold convolution of the step law (1/4, 1/2, 1/4)

    Each step is the sum of two fair bits minus one, so f_n + n is
    Binomial(2n, 1/2) and m(f_n = x) = C(2n, n+x) / 4^n.
    """
    _check_dp(n, EXACT_DP_LIMIT if exact else DP_LIMIT)
    if exact:
        denominator = 4 ** n
        masses = {}
        coefficient = 1
        for k in range(2 * n + 1):
            masses[k - n] = Fraction(coefficient, denominator)
            coefficient = coefficient * (2 * n - k) // (k + 1)
        return LevelDistribution(n, masses, exact=True)
    levels = np.arange(-n, n + 1)
    pmf = binom.pmf(levels + n, 2 * n, 0.5)
    return LevelDistribution(n, dict(zip(levels.tolist(), pmf.tolist())), exact=False)


def walk_convolved_distribution(n: int) -> np.ndarray:
    """Float masses of f_n over [-n, n] by repeated convolution (independent of the binomial form)"""
    _check_dp(n, EXACT_DP_LIMIT)
    law = np.array([float(WALK_STEP_LAW[-1]), float(WALK_STEP_LAW[0]), float(WALK_STEP_LAW[1])])
    dist = np.array([1.0])
    for _ in range(n):
        dist = np.convolve(dist, law)
    return dist


def llt_deviation(n: int) -> float:
    """
    sup_x |sqrt(n) m(f_n = x) - exp(-x^2 / (2 n sigma^2)) / sqrt(2 pi sigma^2)|

    With sigma^2 = 1/2 the Gaussian term is exp(-x^2/n)/sqrt(pi). x runs past
    the support until the Gaussian term drops below 1e-15.
    """
    _check_dp(n)
    reach = max(n, math.ceil(math.sqrt(_GAUSS_TAIL_FACTOR * n)) + 1)
    levels = np.arange(-reach, reach + 1)
    masses = binom.pmf(levels + n, 2 * n, 0.5)
    gauss = np.exp(-(levels.astype(np.float64) ** 2) / n) / math.sqrt(math.pi)
    return float(np.max(np.abs(math.sqrt(n) * masses - gauss)))


def parity_mass(n: int, step_law: Optional[Dict[int, Fraction]] = None) -> Fraction:
    """
    Total m-mass of odd levels of g_n, from the two-state parity chain of the
    g-step law (default: the walk law doubled, g = 2 f)

    Under the doubled law every step is even, so the odd mass is structurally
    0 for every n. Other laws give the general parity recursion.
    """
    if n < 0:
        raise PreconditionError(f"parity mass needs n >= 0, got {n}")
    law = G_STEP_LAW if step_law is None else step_law
    odd_step = sum((p for step, p in law.items() if step % 2), Fraction(0))
    even_step = sum((p for step, p in law.items() if step % 2 == 0), Fraction(0))
    odd = Fraction(0)
    for _ in range(n):
        odd = odd * even_step + (1 - odd) * odd_step
    return odd


def even_level_mass(n: int, step_law: Optional[Dict[int, Fraction]] = None) -> Fraction:
    """Total m-mass of even levels of g_n (the complement of parity_mass)"""
    return 1 - parity_mass(n, step_law)


def w_mass(n: int, bound: int) -> float:
    """m(W_n) with W_n = {|g_n| <= bound}"""
    dist = walk_exact_distribution(n, exact=False)
    return math.fsum(m for x, m in dist.masses.items() if abs(2 * x) <= bound)


def w_mass_bound(n: int, bound: int) -> float:
    """2 (2 [bound/2] + 1) / (sqrt(n) sqrt(2 pi sigma^2)), the 1/sqrt(n) bound on m(W_n)"""
    return 2 * (2 * (bound // 2) + 1) / (math.sqrt(n) * math.sqrt(2 * math.pi * WALK_VARIANCE))
