#!/usr/bin/env python3
"""
Tests for the walk and rotation bases, streamed Birkhoff sums and exact level masses
"""

import logging
import math
from fractions import Fraction

import numpy as np
import pytest

from ergolab.errors import BudgetExceededError, DPFeasibilityError, PreconditionError
from ergolab.models.base_systems import (
    CHUNK_STEPS,
    EXACT_DP_LIMIT,
    FIXED_ONE,
    G_STEP_LAW,
    GOLDEN_ALPHA,
    WALK_STEP_LAW,
    BaseKind,
    CirclePoint,
    StepFunction,
    even_level_mass,
    llt_deviation,
    parity_mass,
    sample_point,
    w_mass,
    w_mass_bound,
    walk_convolved_distribution,
    walk_exact_distribution,
)
from ergolab.simulations.statistics import binomial_sigma


def test_walk_stream_is_deterministic():
    a = sample_point(BaseKind.walk(), 42, 7)
    b = sample_point(BaseKind.walk(), 42, 7)
    c = sample_point(BaseKind.walk(), 42, 8)
    assert a.steps(0, 1000).tolist() == b.steps(0, 1000).tolist()
    assert a.steps(0, 1000).tolist() != c.steps(0, 1000).tolist()
    assert set(a.steps(0, 1000).tolist()) <= {-1, 0, 1}


def test_birkhoff_matches_prefix_sums():
    point = sample_point(BaseKind.walk(), 3, 1)
    sums = point.prefix_sums(5000)
    times = [0, 1, 17, 999, 4999]
    assert point.birkhoff_at(times) == [int(sums[t]) for t in times]
    assert point.g_at([17]) == [2 * int(sums[17])]
    # earlier times replay from the stored checkpoints
    assert point.birkhoff_at([5, 4000]) == [int(sums[5]), int(sums[4000])]


def test_birkhoff_across_chunk_boundary():
    point = sample_point(BaseKind.walk(), 11, 2)
    times = [CHUNK_STEPS - 3, CHUNK_STEPS, CHUNK_STEPS + 5]
    sums = point.prefix_sums(CHUNK_STEPS + 6)
    assert point.birkhoff_at(times) == [int(sums[t]) for t in times]
    assert CHUNK_STEPS in point.checkpoint_times


def test_shifted_point_continues_the_stream():
    point = sample_point(BaseKind.walk(), 5, 9)
    f = point.prefix_sums(3000)
    moved = point.shifted(1000)
    assert moved.birkhoff_at([10, 1500]) == [int(f[1010] - f[1000]), int(f[2500] - f[1000])]
    with pytest.raises(PreconditionError):
        point.shifted(-1)


def test_birkhoff_preconditions_and_budget():
    point = sample_point(BaseKind.walk(), 1, 0, budget=100)
    with pytest.raises(PreconditionError):
        point.birkhoff_at([5, 5])
    with pytest.raises(PreconditionError):
        point.birkhoff_at([-1])
    with pytest.raises(BudgetExceededError):
        point.birkhoff_at([101])
    assert len(point.birkhoff_at([100])) == 1


def test_circle_arithmetic():
    quarter = CirclePoint.from_fraction(Fraction(1, 4))
    half = CirclePoint.from_fraction("1/2")
    assert quarter + half == CirclePoint.from_fraction(Fraction(3, 4))
    assert half + half == CirclePoint(0)
    assert quarter.times(-1) == CirclePoint.from_fraction(Fraction(3, 4))
    assert GOLDEN_ALPHA.to_float() == pytest.approx((math.sqrt(5) - 1) / 2)
    with pytest.raises(PreconditionError):
        CirclePoint(FIXED_ONE)


def test_step_function():
    step = StepFunction.half_circle()
    assert step.mean() == 0
    assert step(CirclePoint.from_fraction("1/4")) == 1
    assert step(CirclePoint.from_fraction("1/2")) == -1
    assert step(CirclePoint.from_fraction("3/4")) == -1
    assert StepFunction.parse(step.to_text()) == step
    with pytest.raises(PreconditionError):
        StepFunction.parse("0:1,1/3:-1")
    with pytest.raises(PreconditionError):
        StepFunction.parse("1/4:1,1/2:-1")


def test_rotation_steps_follow_the_orbit():
    kind = BaseKind.rotation()
    point = sample_point(kind, 7, 3)
    start = point.start
    expected = [kind.step(start + kind.alpha.times(k)) for k in range(200)]
    assert point.steps(0, 200).tolist() == expected
    assert point.birkhoff_at([200]) == [sum(expected)]
    moved = point.shifted(50)
    assert moved.steps(0, 150).tolist() == expected[50:]


def test_exact_distribution_small_n():
    dist = walk_exact_distribution(2)
    assert dist.mass(0) == Fraction(3, 8)
    assert dist.mass(2) == Fraction(1, 16)
    assert dist.mass(-1) == Fraction(1, 4)
    assert dist.mass(3) == 0
    assert dist.total() == 1


def test_exact_distribution_matches_convolution():
    dist = walk_exact_distribution(50)
    convolved = walk_convolved_distribution(50)
    assert np.allclose([float(dist.mass(x)) for x in range(-50, 51)], convolved, atol=1e-15)
    floats = walk_exact_distribution(50, exact=False)
    assert floats.mass(4) == pytest.approx(float(dist.mass(4)))


def test_distribution_limits():
    with pytest.raises(DPFeasibilityError):
        walk_exact_distribution(EXACT_DP_LIMIT + 1)
    with pytest.raises(PreconditionError):
        walk_exact_distribution(0)
    assert walk_exact_distribution(EXACT_DP_LIMIT + 1, exact=False).n == EXACT_DP_LIMIT + 1


def test_level_distribution_frame():
    frame = walk_exact_distribution(3).to_frame()
    assert list(frame.columns) == ["x", "mass_numerator", "mass_denominator", "mass"]
    assert frame["mass"].iloc[0] == pytest.approx(1 / 64)
    assert frame["x"].tolist() == [-3, -2, -1, 0, 1, 2, 3]
    assert frame["mass_denominator"].iloc[0] == "64"


def test_llt_deviation():
    assert llt_deviation(1) == pytest.approx(1 / math.sqrt(math.pi) - 0.5, abs=1e-12)
    values = [llt_deviation(n) for n in (100, 400, 1600, 6400)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 0.05


def test_parity_and_w_masses():
    for n in range(0, 1001, 10):
        assert parity_mass(n) == 0
        assert even_level_mass(n) == 1
    for n in (100, 400, 1600):
        ratio = w_mass(4 * n, 3) / w_mass(n, 3)
        assert 0.4 <= ratio <= 0.6
        assert w_mass(n, 3) <= w_mass_bound(n, 3)
    assert w_mass_bound(1, 3) == pytest.approx(6 / math.sqrt(math.pi))


def test_parity_chain_on_other_step_laws():
    assert all(step % 2 == 0 for step in G_STEP_LAW)
    plus_minus = {-1: Fraction(1, 2), 1: Fraction(1, 2)}
    assert [parity_mass(n, plus_minus) for n in range(4)] == [0, 1, 0, 1]
    # f_n itself: half the mass on odd levels for every n >= 1
    for n in range(1, 30):
        dist = walk_exact_distribution(n)
        odd = sum((m for x, m in dist.masses.items() if x % 2), Fraction(0))
        assert parity_mass(n, WALK_STEP_LAW) == odd == Fraction(1, 2)


def test_sampled_zero_frequency_matches_the_exact_mass():
    kind = BaseKind.walk()
    trials = 4000
    zeros = sum(sample_point(kind, 11, i).birkhoff_at([100])[0] == 0 for i in range(trials))
    exact = float(walk_exact_distribution(100).mass(0))
    assert exact == pytest.approx(0.0563, abs=1e-4)
    assert abs(zeros / trials - exact) <= 4 * binomial_sigma(exact, trials)


def test_sampled_points_are_distinct():
    kind = BaseKind.walk()
    paths = {tuple(sample_point(kind, 42, i).steps(0, 256).tolist()) for i in range(64)}
    assert len(paths) == 64
    other_seed = {tuple(sample_point(kind, 43, i).steps(0, 256).tolist()) for i in range(64)}
    assert not paths & other_seed


def test_checkpoint_replay_is_logged(caplog):
    point = sample_point(BaseKind.walk(), 3, 0)
    point.birkhoff_at([10])
    with caplog.at_level(logging.WARNING, logger="ergolab.models.base_systems"):
        point.birkhoff_at([5])
    assert "Replaying point 0 from checkpoint 0 to 5" in caplog.text
