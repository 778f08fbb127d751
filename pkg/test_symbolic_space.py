#!/usr/bin/env python3
"""
Tests for the coordinate oracle, index chains, cylinders and flip sets
"""

import logging

import pytest

from ergolab.errors import FlipSetParseError, PreconditionError
from ergolab.models.flip_sets import FlipSet
from ergolab.models.symbolic_space import (
    COORDINATE_LIMIT,
    CylinderSpec,
    FiniteCoordinateSet,
    Flip,
    IndexChain,
    OmegaOracle,
    Permute,
    Shift,
    Undecided,
    cylinder_indicator,
    is_undecided,
    read_transformed,
    trace_transformed,
)


class Negation:
    """q -> -q, known everywhere"""
    name = "neg"

    def apply(self, q):
        return -q

    def apply_inverse(self, q):
        return -q


class PartialShift:
    """q -> q + 1 on |q| <= 10, Undecided elsewhere"""
    name = "partial"

    def apply(self, q):
        return q + 1 if abs(q) <= 10 else Undecided(f"{q} outside table")

    def apply_inverse(self, q):
        return q - 1 if abs(q - 1) <= 10 else Undecided(f"{q} outside table")


def test_oracle_is_deterministic_and_balanced():
    omega = OmegaOracle(42, 3)
    again = OmegaOracle(42, 3)
    other = OmegaOracle(42, 4)
    coordinates = list(range(-2000, 2000))
    bits = omega.read_many(coordinates)
    assert bits == again.read_many(coordinates)
    assert bits != other.read_many(coordinates)
    assert set(bits) == {0, 1}
    assert abs(sum(bits) / len(bits) - 0.5) < 0.05
    with pytest.raises(PreconditionError):
        omega.read(COORDINATE_LIMIT)


def test_undecided_cannot_be_a_truth_value():
    value = Undecided("beyond horizon")
    assert is_undecided(value)
    with pytest.raises(TypeError):
        bool(value)
    with pytest.raises(TypeError):
        if value:
            pass


def test_shift_chain():
    omega = OmegaOracle(1, 1)
    chain = IndexChain.of(Shift(5), Shift(-2))
    for q in range(-20, 20):
        assert read_transformed(omega, chain, q) == omega.read(q + 3)
    assert trace_transformed(chain, 0) == 3
    assert chain.to_text() == "shift(5)|shift(-2)"


def test_chain_inverse_is_identity():
    omega = OmegaOracle(7, 0)
    flips = FiniteCoordinateSet(frozenset({-3, 4, 8}), "Q")
    chain = IndexChain.of(Shift(2), Permute(Negation()), Flip(flips), Shift(-7))
    round_trip = chain.then(chain.inverse())
    for q in range(-30, 30):
        assert read_transformed(omega, round_trip, q) == omega.read(q)
    assert len(round_trip) == 8


def test_flip_toggles_members():
    omega = OmegaOracle(7, 1)
    flips = FiniteCoordinateSet(frozenset({1, 2}))
    chain = IndexChain.of(Flip(flips))
    assert read_transformed(omega, chain, 1) == 1 - omega.read(1)
    assert read_transformed(omega, chain, 3) == omega.read(3)


def test_undecided_propagates():
    omega = OmegaOracle(0, 0)
    chain = IndexChain.of(Permute(PartialShift()))
    assert read_transformed(omega, chain, 4) == omega.read(5)
    result = read_transformed(omega, chain, 50)
    assert is_undecided(result)
    assert "perm(partial,fwd)" in result.reason


def test_cylinder_indicator():
    omega = OmegaOracle(3, 9)
    word = "".join(str(omega.read(q)) for q in range(4))
    identity = IndexChain()
    assert cylinder_indicator(omega, identity, CylinderSpec(0, word)) == 1
    flipped = "".join("1" if ch == "0" else "0" for ch in word)
    assert cylinder_indicator(omega, identity, CylinderSpec(0, flipped)) == 0
    assert CylinderSpec(0, "01").mass == 0.25
    with pytest.raises(PreconditionError):
        CylinderSpec(0, "012")


def test_cylinder_resolved_mismatch_beats_undecided():
    omega = OmegaOracle(3, 9)
    chain = IndexChain.of(Shift(10), Permute(PartialShift()))
    # coordinate 0 -> 10 -> 11 resolves; coordinates 1 and 2 are undecided
    first = str(1 - omega.read(11))
    assert cylinder_indicator(omega, chain, CylinderSpec(0, first + "00")) == 0
    pending = cylinder_indicator(omega, chain, CylinderSpec(0, str(omega.read(11)) + "00"))
    assert is_undecided(pending)


def test_flip_set_parsing_and_membership():
    dyadic = FlipSet.parse("dyadic")
    assert dyadic.to_text() == "dyadic"
    assert [n for n in range(40) if n in dyadic] == [1] + list(range(4, 8)) + list(range(16, 32))
    assert FlipSet.parse("list:3,7,9").contains(7)
    assert not FlipSet.parse("list:3,7,9").contains(8)
    assert FlipSet.parse("mod:1,3").contains(10)
    assert FlipSet.parse("all").contains(0)
    assert not FlipSet.parse("none").contains(5)
    assert FlipSet.parse("geometric:2,2,3").block_boundaries(30) == [(2, 3), (4, 6), (8, 12), (16, 24)]
    for text in ("dyadic:1", "list:a", "geometric:1,1,2", "mod:1,0", "primes"):
        with pytest.raises(FlipSetParseError):
            FlipSet.parse(text)


def test_flip_set_density_oracle():
    dyadic = FlipSet.dyadic()
    ratios = [dyadic.count_outside(2, N) / N for N in (4, 8, 16, 32)]
    assert ratios == [0.5, 0.25, 0.625, 0.3125]
    for flips in (dyadic, FlipSet.parse("mod:2,5"), FlipSet.parse("list:3,4,10"), FlipSet.all()):
        for lo, hi in ((0, 50), (3, 17), (10, 10)):
            brute = sum(1 for n in range(lo, hi) if not flips.contains(n))
            assert flips.count_outside(lo, hi) == brute


def test_oracle_bias_over_a_million_coordinates():
    bits = OmegaOracle(42, 0).read_many(range(-500_000, 500_000))
    assert abs(sum(bits) / len(bits) - 0.5) < 0.002


@pytest.mark.parametrize("word", ["0", "01", "011"])
def test_cylinder_frequency_matches_nu_mass(word):
    cylinder = CylinderSpec(5, word)
    trials = 2000
    hits = sum(cylinder_indicator(OmegaOracle(7, i), IndexChain(), cylinder) for i in range(trials))
    sigma = (cylinder.mass * (1 - cylinder.mass) / trials) ** 0.5
    assert abs(hits / trials - cylinder.mass) <= 4 * sigma


def test_undecided_read_is_logged(caplog):
    chain = IndexChain.of(Permute(PartialShift()))
    with caplog.at_level(logging.WARNING, logger="ergolab.models.symbolic_space"):
        read_transformed(OmegaOracle(0, 0), chain, 50)
    assert "Undecided read at 50" in caplog.text
