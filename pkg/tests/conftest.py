"""Shared fixtures: the 3-source profit table and table-oracle builders."""

import numpy as np
import pytest

from sourceselect.core import CostModel
from sourceselect.oracle import TableOracle

# masks over (a=bit0, b=bit1, c=bit2)
FIXTURE_GAINS = {
    0b001: 10.0,  # {a}
    0b010: 12.0,  # {b}
    0b100: 8.0,   # {c}
    0b011: 15.0,  # {a, b}
    0b101: 14.0,  # {a, c}
    0b110: 11.0,  # {b, c}
    0b111: 13.0,  # {a, b, c}
}

A, B, C = 0, 1, 2


@pytest.fixture
def fixture_oracle():
    return TableOracle(FIXTURE_GAINS, m=3)


def make_fixture_oracle(budget=None, cost_model=None):
    return TableOracle(
        FIXTURE_GAINS,
        m=3,
        cost_model=cost_model or CostModel(zero_cost=True),
        budget=budget,
    )


def random_table(m: int, rng: np.random.Generator) -> dict[int, float]:
    """Uniform random profits over all nonempty subsets."""
    return {mask: float(rng.uniform(0.0, 100.0)) for mask in range(1, 1 << m)}


def brute_force_best(gains: dict[int, float]) -> tuple[int, float]:
    """Independent maximizer: max profit, ties to smaller cardinality then
    smaller mask. Kept free of the selectors module on purpose."""
    best_mask, best_p = None, None
    for mask in sorted(gains):
        p = gains[mask]
        if (
            best_p is None
            or p > best_p
            or (p == best_p and (bin(mask).count("1"), mask) < (bin(best_mask).count("1"), best_mask))
        ):
            best_mask, best_p = mask, p
    return best_mask, best_p
