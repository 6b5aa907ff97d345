"""Domain types for sources, subsets, cost models, and profit arithmetic.

A catalog is an ordered list of named data sources. Subsets of the catalog
are immutable bitmasks, which keeps set algebra cheap and makes subsets
usable as cache keys. Costs follow a polynomial in each source's
individual gain; profit is gain minus cost.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import CatalogMismatch, EmptySubset, MissingGain

SourceId = int


@dataclass(frozen=True)
class SourceCatalog:
    """Fixed, ordered collection of data sources.

    Source ids are dense indices into ``names``. The ``token`` digest binds
    SourceSets to the catalog they were built from.
    """

    names: tuple[str, ...]
    record_counts: tuple[int, ...] = ()

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("catalog names must be unique")
        if self.record_counts and len(self.record_counts) != len(self.names):
            raise ValueError("record_counts must align with names")

    @property
    def m(self) -> int:
        return len(self.names)

    @property
    def token(self) -> str:
        h = hashlib.sha256()
        for name, count in zip(self.names, self.record_counts or (0,) * self.m):
            h.update(f"{name}\x00{count}\x00".encode())
        return h.hexdigest()[:16]

    def empty_set(self) -> "SourceSet":
        return SourceSet(0, self.m, self.token)

    def full_set(self) -> "SourceSet":
        return SourceSet((1 << self.m) - 1, self.m, self.token)

    def singleton(self, index: SourceId) -> "SourceSet":
        return self.subset([index])

    def subset(self, indices: Iterable[SourceId]) -> "SourceSet":
        return SourceSet.from_indices(indices, self.m, self.token)

    def render(self, subset: "SourceSet") -> str:
        return "{" + ", ".join(self.names[i] for i in subset) + "}"


@dataclass(frozen=True)
class SourceSet:
    """Immutable subset of a catalog, backed by a bitmask.

    Bits at positions >= m are invalid; binary operations require both
    operands to come from the same catalog.
    """

    mask: int
    m: int
    catalog_id: str = ""

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.m:
            raise ValueError(f"mask {self.mask:#x} has bits outside [0, {self.m})")

    @classmethod
    def from_indices(cls, indices: Iterable[SourceId], m: int, catalog_id: str = "") -> "SourceSet":
        mask = 0
        for i in indices:
            if not 0 <= i < m:
                raise ValueError(f"source index {i} outside [0, {m})")
            mask |= 1 << i
        return cls(mask, m, catalog_id)

    def _check(self, other: "SourceSet") -> None:
        if self.m != other.m or self.catalog_id != other.catalog_id:
            raise CatalogMismatch(
                f"sets bound to different catalogs: ({self.m}, {self.catalog_id!r}) "
                f"vs ({other.m}, {other.catalog_id!r})"
            )

    def add(self, index: SourceId) -> "SourceSet":
        if not 0 <= index < self.m:
            raise ValueError(f"source index {index} outside [0, {self.m})")
        return SourceSet(self.mask | (1 << index), self.m, self.catalog_id)

    def remove(self, index: SourceId) -> "SourceSet":
        return SourceSet(self.mask & ~(1 << index), self.m, self.catalog_id)

    def union(self, other: "SourceSet") -> "SourceSet":
        self._check(other)
        return SourceSet(self.mask | other.mask, self.m, self.catalog_id)

    def intersection(self, other: "SourceSet") -> "SourceSet":
        self._check(other)
        return SourceSet(self.mask & other.mask, self.m, self.catalog_id)

    def difference(self, other: "SourceSet") -> "SourceSet":
        self._check(other)
        return SourceSet(self.mask & ~other.mask, self.m, self.catalog_id)

    def complement(self) -> "SourceSet":
        return SourceSet(~self.mask & ((1 << self.m) - 1), self.m, self.catalog_id)

    def is_empty(self) -> bool:
        return self.mask == 0

    def __contains__(self, index: SourceId) -> bool:
        return 0 <= index < self.m and bool(self.mask >> index & 1)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __iter__(self) -> Iterator[SourceId]:
        mask = self.mask
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def __repr__(self) -> str:
        return f"SourceSet({{{', '.join(map(str, self))}}}, m={self.m})"


@dataclass(frozen=True)
class CostModel:
    """Per-source acquisition cost: (a*g + b)**t * c on the source's
    individual gain g, with t in {0, 1, 2}.

    ``zero_cost`` short-circuits everything to 0. Negative raw values are
    clamped to 0: acquiring a source never pays the buyer.
    """

    t: int = 1
    a: float = 1.0
    b: float = -70.0
    c: float = 0.01
    zero_cost: bool = False

    def __post_init__(self):
        if self.t not in (0, 1, 2):
            raise ValueError(f"t must be 0, 1 or 2, got {self.t}")
        if self.c < 0:
            raise ValueError(f"c must be >= 0, got {self.c}")

    @property
    def needs_gains(self) -> bool:
        """Whether per-source individual gains are required to price a subset."""
        return not self.zero_cost and self.t != 0


ZERO_COST = CostModel(zero_cost=True)


@dataclass(frozen=True)
class ProfitBreakdown:
    """Gain, cost and profit of one evaluated subset; profit = gain - cost."""

    gain: float
    cost: float
    profit: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.profit is None:
            object.__setattr__(self, "profit", self.gain - self.cost)


def cost_of_source(g: float, model: CostModel) -> float:
    """Cost of one source with individual gain ``g``, clamped below at 0."""
    if model.zero_cost:
        return 0.0
    return max(0.0, (model.a * g + model.b) ** model.t * model.c)


def cost_of_subset(
    subset: SourceSet,
    per_source_gains: Mapping[SourceId, float],
    model: CostModel,
) -> float:
    """Sum of member costs; the empty subset costs 0."""
    total = 0.0
    for i in subset:
        if model.needs_gains and i not in per_source_gains:
            raise MissingGain(f"no individual gain recorded for source {i}")
        total += cost_of_source(per_source_gains.get(i, 0.0), model)
    return total


def profit(gain: float, cost: float) -> ProfitBreakdown:
    """Combine a gain in [0, 100] and a nonnegative cost into a breakdown."""
    return ProfitBreakdown(gain=gain, cost=cost)


def require_nonempty(subset: SourceSet) -> None:
    if subset.is_empty():
        raise EmptySubset("operation requires a nonempty subset of sources")
