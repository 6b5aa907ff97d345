"""Subset-to-profit evaluation.

``split_sources`` fixes one global test partition for the whole run;
``TaskOracle.evaluate`` then turns any nonempty subset into a
ProfitBreakdown by training on the union of the members' train slices,
scoring on that fixed test set, mapping the metric to a 0-100 gain, and
pricing the subset through the cost model. Every evaluation is memoized
in an EvalCache whose distinct-key count is the "models explored" figure
the search algorithms report.

``TableOracle`` swaps the training step for a lookup table; the caching
and cost plumbing is shared, which is what lets the search algorithms be
tested without any ML in the loop.
"""

from __future__ import annotations

import hashlib
import logging
import threading
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import metrics
from .core import (
    CostModel,
    ProfitBreakdown,
    SourceCatalog,
    SourceSet,
    cost_of_subset,
    require_nonempty,
)
from .errors import (
    BudgetExceeded,
    DegenerateSplit,
    EmptySource,
    EvaluationError,
    NoPositives,
    SchemaMismatch,
    SourceSelectError,
)
from .trainers import (
    TrainerConfig,
    apply_standardize,
    fit_linear,
    fit_logistic,
    sigmoid,
    standardize_stats,
)

logger = logging.getLogger(__name__)

TASK_KINDS = ("classification", "fairness", "regression")


@dataclass(frozen=True)
class RawSource:
    """One ingested data source: rectangular features, labels, and an
    optional binary sensitive attribute."""

    name: str
    X: np.ndarray
    y: np.ndarray
    sensitive: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.X.ndim != 2:
            raise ValueError(f"source {self.name!r}: features must be 2-D")
        if len(self.y) != self.X.shape[0]:
            raise ValueError(f"source {self.name!r}: label count != row count")
        if self.sensitive is not None and len(self.sensitive) != self.X.shape[0]:
            raise ValueError(f"source {self.name!r}: sensitive count != row count")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class TaskSpec:
    """The downstream learning task and how its metric maps to gain."""

    task_kind: str
    label_column: str = "label"
    sensitive_column: Optional[str] = None
    lam: float = 10.0
    test_fraction: float = 0.2
    trainer: TrainerConfig = None  # type: ignore[assignment]
    seed: int = 0

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise ValueError(f"task_kind must be one of {TASK_KINDS}, got {self.task_kind!r}")
        if self.task_kind == "fairness" and not self.sensitive_column:
            raise ValueError("fairness task requires a sensitive_column")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        if not 0.0 <= self.lam <= 100.0:
            raise ValueError("lambda must be in [0, 100]")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.trainer is None:
            object.__setattr__(self, "trainer", TrainerConfig.for_task(self.task_kind))
        expected = "linear" if self.task_kind == "regression" else "logistic"
        if self.trainer.kind != expected:
            raise ValueError(
                f"{self.task_kind} task requires the {expected} trainer, got {self.trainer.kind}"
            )


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SplitDataset:
    """Per-source train partitions plus one global test partition.

    The test partition is the concatenation of every source's test slice,
    so gains of different subsets are measured on identical data.
    """

    catalog: SourceCatalog
    train_X: tuple[np.ndarray, ...]
    train_y: tuple[np.ndarray, ...]
    train_sensitive: Optional[tuple[np.ndarray, ...]]
    test_X: np.ndarray
    test_y: np.ndarray
    test_sensitive: Optional[np.ndarray]
    test_fraction: float
    seed: int

    def test_digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.test_X.tobytes())
        h.update(self.test_y.tobytes())
        if self.test_sensitive is not None:
            h.update(self.test_sensitive.tobytes())
        return h.hexdigest()


def split_sources(sources: Sequence[RawSource], test_fraction: float, seed: int) -> SplitDataset:
    """Shuffle-split each source independently and pool the test slices.

    Deterministic: source i is split with its own generator derived from
    (seed, i), so the assignment depends only on that source's size, the
    fraction, and the seed.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    if not sources:
        raise ValueError("at least one source is required")

    has_sensitive = all(s.sensitive is not None for s in sources)
    train_X, train_y, train_s = [], [], []
    test_X, test_y, test_s = [], [], []
    for i, src in enumerate(sources):
        n = src.n_rows
        if n == 0:
            raise EmptySource(f"source {src.name!r} has no records")
        n_test = int(round(n * test_fraction))
        if n < 2 or n_test < 1 or n_test >= n:
            raise DegenerateSplit(
                f"source {src.name!r}: {n} records at test_fraction={test_fraction} "
                "leaves no usable train/test slices"
            )
        perm = np.random.default_rng([seed, i]).permutation(n)
        test_idx, train_idx = perm[:n_test], perm[n_test:]
        train_X.append(_freeze(src.X[train_idx]))
        train_y.append(_freeze(src.y[train_idx]))
        test_X.append(src.X[test_idx])
        test_y.append(src.y[test_idx])
        if has_sensitive:
            train_s.append(_freeze(src.sensitive[train_idx]))
            test_s.append(src.sensitive[test_idx])

    catalog = SourceCatalog(
        names=tuple(s.name for s in sources),
        record_counts=tuple(s.n_rows for s in sources),
    )
    return SplitDataset(
        catalog=catalog,
        train_X=tuple(train_X),
        train_y=tuple(train_y),
        train_sensitive=tuple(train_s) if has_sensitive else None,
        test_X=_freeze(np.vstack(test_X)),
        test_y=_freeze(np.concatenate(test_y)),
        test_sensitive=_freeze(np.concatenate(test_s)) if has_sensitive else None,
        test_fraction=test_fraction,
        seed=seed,
    )


def assemble_training(
    subset: SourceSet, data: SplitDataset
) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Concatenate the train partitions of the subset's members in
    ascending SourceId order."""
    require_nonempty(subset)
    members = list(subset)
    X = np.vstack([data.train_X[i] for i in members])
    y = np.concatenate([data.train_y[i] for i in members])
    sens = None
    if data.train_sensitive is not None:
        sens = np.concatenate([data.train_sensitive[i] for i in members])
    return X, y, sens


class EvalCache:
    """Memo table from SourceSet to ProfitBreakdown.

    The distinct-key count equals the number of model trainings performed.
    Lookups and insertions are lock-protected; identical keys always carry
    identical values, so concurrent double-insertion is benign.
    """

    def __init__(self):
        self._store: dict[SourceSet, ProfitBreakdown] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, subset: SourceSet) -> Optional[ProfitBreakdown]:
        with self._lock:
            found = self._store.get(subset)
            if found is None:
                self.misses += 1
            else:
                self.hits += 1
            return found

    def store(self, subset: SourceSet, breakdown: ProfitBreakdown) -> None:
        with self._lock:
            self._store[subset] = breakdown

    @property
    def distinct_count(self) -> int:
        return len(self._store)

    def __len__(self) -> int:
        return len(self._store)

    def __contains__(self, subset: SourceSet) -> bool:
        return subset in self._store

    def entries(self) -> list[tuple[SourceSet, ProfitBreakdown]]:
        with self._lock:
            return sorted(self._store.items(), key=lambda kv: kv[0].mask)

    def best_entry(self) -> Optional[tuple[SourceSet, ProfitBreakdown]]:
        """Highest-profit entry; ties go to smaller cardinality, then mask."""
        best = None
        for subset, bd in self.entries():
            if best is None or bd.profit > best[1].profit or (
                bd.profit == best[1].profit
                and (len(subset), subset.mask) < (len(best[0]), best[0].mask)
            ):
                best = (subset, bd)
        return best

    def save(self, path) -> None:
        """One `mask_hex,gain,cost,profit` record per line, 17 significant
        digits, ascending mask order."""
        lines = [
            f"{s.mask:x},{bd.gain:.17g},{bd.cost:.17g},{bd.profit:.17g}"
            for s, bd in self.entries()
        ]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load(cls, path, m: int, catalog_id: str = "") -> "EvalCache":
        cache = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 4:
                    raise SchemaMismatch(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
                mask = int(parts[0], 16)
                gain, cost, prof = (float(p) for p in parts[1:])
                cache._store[SourceSet(mask, m, catalog_id)] = ProfitBreakdown(gain, cost, prof)
        return cache


class ProfitOracle:
    """Caching profit evaluator; subclasses supply the gain computation.

    ``budget`` caps the number of distinct evaluations; once reached, any
    further cache miss raises BudgetExceeded (best-so-far results remain
    available through the cache).
    """

    def __init__(
        self,
        m: int,
        cost_model: CostModel,
        cache: Optional[EvalCache] = None,
        catalog_id: str = "",
        budget: Optional[int] = None,
    ):
        self.m = m
        self.cost_model = cost_model
        self.cache = cache if cache is not None else EvalCache()
        self.catalog_id = catalog_id
        self.budget = budget

    # -- subset constructors bound to this oracle's catalog --------------
    def empty_set(self) -> SourceSet:
        return SourceSet(0, self.m, self.catalog_id)

    def full_set(self) -> SourceSet:
        return SourceSet((1 << self.m) - 1, self.m, self.catalog_id)

    def singleton(self, index: int) -> SourceSet:
        return SourceSet(1 << index, self.m, self.catalog_id)

    def make_set(self, indices: Iterable[int]) -> SourceSet:
        return SourceSet.from_indices(indices, self.m, self.catalog_id)

    @property
    def models_explored(self) -> int:
        return self.cache.distinct_count

    def evaluate(self, subset: SourceSet) -> ProfitBreakdown:
        require_nonempty(subset)
        found = self.cache.get(subset)
        if found is not None:
            return found
        if self.budget is not None and self.cache.distinct_count >= self.budget:
            raise BudgetExceeded(
                f"evaluation budget of {self.budget} distinct subsets exhausted"
            )
        try:
            gain = self._compute_gain(subset)
        except SourceSelectError as exc:
            raise EvaluationError(f"subset mask={subset.mask:x}: {exc}") from exc
        cost = self._subset_cost(subset, gain)
        breakdown = ProfitBreakdown(gain=gain, cost=cost)
        self.cache.store(subset, breakdown)
        return breakdown

    def source_cost(self, index: int) -> float:
        """Acquisition cost of one source under the cost model."""
        return self._subset_cost(self.singleton(index), None)

    def _subset_cost(self, subset: SourceSet, own_gain: Optional[float]) -> float:
        if not self.cost_model.needs_gains:
            return cost_of_subset(subset, {}, self.cost_model)
        gains = {}
        for i in subset:
            if len(subset) == 1 and own_gain is not None:
                gains[i] = own_gain
            else:
                gains[i] = self.evaluate(self.singleton(i)).gain
        return cost_of_subset(subset, gains, self.cost_model)

    def _compute_gain(self, subset: SourceSet) -> float:
        raise NotImplementedError


class TaskOracle(ProfitOracle):
    """Profit oracle backed by actual model training."""

    def __init__(
        self,
        data: SplitDataset,
        task: TaskSpec,
        cost_model: CostModel,
        cache: Optional[EvalCache] = None,
        budget: Optional[int] = None,
    ):
        super().__init__(
            m=data.catalog.m,
            cost_model=cost_model,
            cache=cache,
            catalog_id=data.catalog.token,
            budget=budget,
        )
        self.data = data
        self.task = task
        if task.task_kind == "fairness" and data.test_sensitive is None:
            raise ValueError("fairness task requires sensitive values in every source")
        self._baseline_mse = None
        if task.task_kind == "regression":
            baseline = float(np.mean(data.test_y))
            self._baseline_mse = metrics.mse(
                np.full_like(data.test_y, baseline, dtype=float), data.test_y
            )
            if self._baseline_mse <= 0.0:
                raise EvaluationError(
                    "test labels are constant; regression gain is undefined"
                )

    def _design(self, X: np.ndarray, mean, scale) -> np.ndarray:
        if self.task.trainer.standardize:
            X = apply_standardize(X, mean, scale)
        return np.hstack([np.ones((X.shape[0], 1)), X])

    def _compute_gain(self, subset: SourceSet) -> float:
        X, y, _ = assemble_training(subset, self.data)
        cfg = self.task.trainer
        mean = scale = None
        if cfg.standardize:
            mean, scale = standardize_stats(X)
        Xd = self._design(X, mean, scale)
        Xt = self._design(self.data.test_X, mean, scale)

        if self.task.task_kind == "regression":
            w = fit_linear(Xd, y, cfg)
            model_mse = metrics.mse(Xt @ w, self.data.test_y)
            return metrics.regression_gain(model_mse, self._baseline_mse)

        w = fit_logistic(Xd, y, cfg)
        pred = (sigmoid(Xt @ w) >= 0.5).astype(float)
        acc = metrics.accuracy(pred, self.data.test_y)
        if self.task.task_kind == "classification":
            return acc
        try:
            gap = metrics.tpr_gap(pred, self.data.test_y, self.data.test_sensitive)
        except NoPositives as exc:
            logger.warning(
                "subset mask=%x: %s; scoring with worst-case gap -1", subset.mask, exc
            )
            gap = -1.0
        return metrics.fairness_gain(acc, gap, self.task.lam)


class TableOracle(ProfitOracle):
    """Profit oracle backed by a mask-to-gain lookup table.

    Used for fixture-driven tests and the `profit_table` run mode: the
    caching, budgeting and cost arithmetic are identical to the trained
    oracle, only the gain computation is a table read.
    """

    def __init__(
        self,
        gains: Mapping[int, float],
        m: int,
        cost_model: CostModel = CostModel(zero_cost=True),
        cache: Optional[EvalCache] = None,
        catalog_id: str = "",
        budget: Optional[int] = None,
    ):
        super().__init__(m=m, cost_model=cost_model, cache=cache, catalog_id=catalog_id, budget=budget)
        self._gains = dict(gains)

    def _compute_gain(self, subset: SourceSet) -> float:
        try:
            return self._gains[subset.mask]
        except KeyError:
            raise EvaluationError(f"mask {subset.mask:x} not present in gain table") from None


def evaluate_profit(
    subset: SourceSet,
    data: SplitDataset,
    task: TaskSpec,
    costs: CostModel,
    cache: EvalCache,
) -> ProfitBreakdown:
    """Functional entry point over TaskOracle for one-off evaluations."""
    return TaskOracle(data, task, costs, cache=cache).evaluate(subset)
