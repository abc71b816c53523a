"""Shared fixtures and independent oracle helpers.

The oracles here are deliberately naive (grids, exhaustive enumeration)
so they stay independent of the solver paths they check.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from credal.measures import Measure
from credal.spaces import Space

settings.register_profile(
    "suite",
    derandomize=True,
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def compositions(total: int, parts: int):
    """All nonnegative integer vectors of the given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in compositions(total - head, parts - 1):
            yield (head,) + rest


def simplex_grid(space: Space, denom: int):
    """All rational measures with weights that are multiples of 1/denom."""
    n = len(space.worlds)
    for comp in compositions(denom, n):
        yield Measure.rational(space, [Fraction(c, denom) for c in comp])


def grid_kl_argmin(mu: Measure, predicate, denom: int) -> Measure | None:
    """Brute-force divergence minimizer over a simplex grid."""
    from credal.measures import kl_divergence

    prior = mu.to_float()
    best, best_d = None, None
    for cand in simplex_grid(mu.space, denom):
        if not predicate(cand):
            continue
        d = kl_divergence(cand.to_float(), prior)
        if best_d is None or d < best_d:
            best, best_d = cand, d
    return best


@pytest.fixture(scope="session")
def flying_bird_space():
    from credal.spaces import enumerate_worlds

    return enumerate_worlds(["flying-bird", "bird"], "flying-bird => bird")


@pytest.fixture(scope="session")
def fly_bird_space():
    from credal.spaces import enumerate_worlds

    return enumerate_worlds(["fly", "bird"])


@pytest.fixture(scope="session")
def rgb_space():
    from credal.spaces import enumerate_worlds

    return enumerate_worlds(["red", "blue", "green"])
