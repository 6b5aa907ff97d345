"""The six subset-selection algorithms.

Every selector consumes a ProfitOracle and returns a SelectionResult.
Search-internal arithmetic treats the empty set as gain 0, cost 0,
profit 0 (it is never a candidate answer and the oracle refuses to
evaluate it). All improvement tests use strict ``>`` and every ordering
breaks ties by ascending SourceId, so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import ProfitBreakdown, SourceSet
from .errors import AllConstructionsEmpty, BudgetExceeded, RankDeficient, SampleSpaceExhausted
from .oracle import ProfitOracle

ALGORITHMS = ("naive", "greedy", "random", "grasp", "splice", "datamodel")
STOCHASTIC_ALGORITHMS = ("random", "grasp", "datamodel")


@dataclass(frozen=True)
class GraspParams:
    """Multi-start randomized construction: N restarts, RCL of size k."""

    n_iterations: int = 20
    rcl_size: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.rcl_size < 1:
            raise ValueError("rcl_size must be >= 1")


@dataclass(frozen=True)
class SpliceParams:
    """Swap-search settings: seed sizes up to s_max, at most k_max swaps
    per splicing call (further capped at min(|active|, |inactive|))."""

    s_max: int
    k_max: int = 7
    value_insertions_after_removal: bool = False

    def __post_init__(self):
        if self.s_max < 1:
            raise ValueError("s_max must be >= 1")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass(frozen=True)
class DatamodelParams:
    """Linear-surrogate settings: T sampled training subsets."""

    n_training_subsets: int
    seed: int = 0

    def __post_init__(self):
        if self.n_training_subsets < 1:
            raise ValueError("n_training_subsets must be >= 1")


@dataclass
class SelectionResult:
    """Outcome of one selector run."""

    subset: SourceSet
    breakdown: ProfitBreakdown
    models_explored: int
    trace: list[tuple[str, SourceSet, float]] = field(default_factory=list)


def _profit(oracle: ProfitOracle, subset: SourceSet) -> float:
    return 0.0 if subset.is_empty() else oracle.evaluate(subset).profit


def _gain(oracle: ProfitOracle, subset: SourceSet) -> float:
    return 0.0 if subset.is_empty() else oracle.evaluate(subset).gain


def _result(oracle, subset, explored_before, trace) -> SelectionResult:
    return SelectionResult(
        subset=subset,
        breakdown=oracle.evaluate(subset),
        models_explored=oracle.models_explored - explored_before,
        trace=trace,
    )


def select_naive(oracle: ProfitOracle, max_evaluations: Optional[int] = None) -> SelectionResult:
    """Exhaustive search over all nonempty subsets.

    Ties break toward smaller cardinality, then smaller mask.
    """
    m = oracle.m
    if m > 63:
        raise ValueError("exhaustive enumeration requires m <= 63")
    total = (1 << m) - 1
    if max_evaluations is not None and total > max_evaluations:
        raise BudgetExceeded(f"enumeration of {total} subsets exceeds cap {max_evaluations}")
    before = oracle.models_explored
    trace = []
    best = None
    for mask in range(1, total + 1):
        subset = SourceSet(mask, m, oracle.catalog_id)
        p = oracle.evaluate(subset).profit
        if (
            best is None
            or p > best[1]
            or (p == best[1] and (len(subset), mask) < (len(best[0]), best[0].mask))
        ):
            best = (subset, p)
            trace.append(("improve", subset, p))
    return _result(oracle, best[0], before, trace)


def select_greedy(oracle: ProfitOracle) -> SelectionResult:
    """Evaluate singletons, then the prefixes of the order they induce
    (descending individual profit), returning the best prefix."""
    m = oracle.m
    before = oracle.models_explored
    trace = []
    singles = []
    for i in range(m):
        p = oracle.evaluate(oracle.singleton(i)).profit
        singles.append((p, i))
        trace.append((f"singleton {i}", oracle.singleton(i), p))
    order = [i for _, i in sorted(singles, key=lambda t: (-t[0], t[1]))]
    return _best_prefix(oracle, order, before, trace)


def select_random(oracle: ProfitOracle, seed: int = 0) -> SelectionResult:
    """Evaluate the prefixes of one uniformly random source order."""
    order = [int(i) for i in np.random.default_rng(seed).permutation(oracle.m)]
    return _best_prefix(oracle, order, oracle.models_explored, [])


def _best_prefix(oracle, order, explored_before, trace) -> SelectionResult:
    best = None
    prefix = oracle.empty_set()
    for size, i in enumerate(order, start=1):
        prefix = prefix.add(i)
        p = oracle.evaluate(prefix).profit
        trace.append((f"prefix {size}", prefix, p))
        if best is None or p > best[1]:
            best = (prefix, p)
    return _result(oracle, best[0], explored_before, trace)


def grasp_construction(
    oracle: ProfitOracle,
    candidates: SourceSet,
    selected: SourceSet,
    p_max: float,
    k: int,
    rng: np.random.Generator,
) -> tuple[SourceSet, float]:
    """Randomized greedy construction.

    Repeatedly scores every unselected candidate by its marginal profit
    (gain added to the current selection minus the source's own cost),
    keeps the top-k as the restricted candidate list, and admits one RCL
    member chosen uniformly at random. The incumbent tracks the best full
    subset profit seen, starting from (selected, p_max).
    """
    incumbent, best_p = selected, p_max
    rounds = len(candidates.difference(selected))
    for _ in range(rounds):
        pool = candidates.difference(selected)
        if pool.is_empty():
            break
        g_selected = _gain(oracle, selected)
        scored = []
        for i in pool:
            marginal = (
                oracle.evaluate(selected.add(i)).gain - g_selected - oracle.source_cost(i)
            )
            scored.append((marginal, i))
        scored.sort(key=lambda t: (-t[0], t[1]))
        rcl = sorted(i for _, i in scored[:k])
        if not rcl:
            break
        selected = selected.add(rcl[int(rng.integers(len(rcl)))])
        p_selected = oracle.evaluate(selected).profit
        if p_selected > best_p:
            incumbent, best_p = selected, p_selected
    return incumbent, best_p


def grasp_local_search(
    oracle: ProfitOracle,
    catalog_set: SourceSet,
    selected: SourceSet,
    p_max: float,
    k: int,
    rng: np.random.Generator,
) -> tuple[SourceSet, float]:
    """Neighborhood refinement: drop each member in turn and rebuild from
    the remainder; adopt the first strict improvement and restart."""
    improved = True
    while improved:
        improved = False
        for i in sorted(selected):
            s_tmp = selected.remove(i)
            pool = catalog_set.remove(i)
            candidate, p = grasp_construction(
                oracle, pool, s_tmp, _profit(oracle, s_tmp), k, rng
            )
            if p > p_max:
                selected, p_max = candidate, p
                improved = True
                break
    return selected, p_max


def select_grasp(oracle: ProfitOracle, params: GraspParams) -> SelectionResult:
    """Multi-start construction + local search sharing one rng stream."""
    rng = np.random.default_rng(params.seed)
    before = oracle.models_explored
    full = oracle.full_set()
    trace = []
    best = None
    for it in range(params.n_iterations):
        built, p0 = grasp_construction(
            oracle, full, oracle.empty_set(), float("-inf"), params.rcl_size, rng
        )
        if built.is_empty():
            trace.append((f"iter {it} construction empty", built, float("-inf")))
            continue
        trace.append((f"iter {it} construction", built, p0))
        refined, p1 = grasp_local_search(oracle, full, built, p0, params.rcl_size, rng)
        trace.append((f"iter {it} local_search", refined, p1))
        if best is None or p1 > best[1]:
            best = (refined, p1)
    if best is None:
        raise AllConstructionsEmpty("every construction pass returned the empty set")
    return _result(oracle, best[0], before, trace)


def splice(
    oracle: ProfitOracle,
    active: SourceSet,
    catalog_set: SourceSet,
    k_max: int,
    value_insertions_after_removal: bool = False,
) -> tuple[SourceSet, float]:
    """One splicing pass: for k_local = 1..k_max, swap the k_local weakest
    active sources for the k_local strongest inactive ones, cumulatively.

    Keep-values price removing a member; add-values price inserting an
    inactive source. With ``value_insertions_after_removal`` the add-values are
    taken relative to the active set with the outgoing sources already
    removed. Returns the best subset seen, which has the same cardinality
    as the input.
    """
    best, p_best = active, _profit(oracle, active)
    current = active
    for k_local in range(1, k_max + 1):
        inactive = catalog_set.difference(current)
        if k_local > min(len(current), len(inactive)):
            break
        p_current = _profit(oracle, current)
        keep_vals = [(p_current - _profit(oracle, current.remove(i)), i) for i in current]
        keep_vals.sort(key=lambda t: (t[0], t[1]))
        outgoing = [i for _, i in keep_vals[:k_local]]
        if value_insertions_after_removal:
            base = current
            for i in outgoing:
                base = base.remove(i)
            p_base = _profit(oracle, base)
            add_vals = [(_profit(oracle, base.add(i)) - p_base, i) for i in inactive]
        else:
            add_vals = [(_profit(oracle, current.add(i)) - p_current, i) for i in inactive]
        add_vals.sort(key=lambda t: (-t[0], t[1]))
        incoming = [i for _, i in add_vals[:k_local]]
        for i in outgoing:
            current = current.remove(i)
        for i in incoming:
            current = current.add(i)
        p_new = _profit(oracle, current)
        if p_new > p_best:
            best, p_best = current, p_new
    return best, p_best


def fixed_support(
    oracle: ProfitOracle,
    active: SourceSet,
    catalog_set: SourceSet,
    k_max: int,
    value_insertions_after_removal: bool = False,
) -> tuple[SourceSet, float]:
    """Iterate splicing until the active set stops changing."""
    previous = None
    current, p = active, _profit(oracle, active)
    while current != previous:
        previous = current
        current, p = splice(
            oracle,
            previous,
            catalog_set,
            min(k_max, len(previous)),
            value_insertions_after_removal=value_insertions_after_removal,
        )
    return current, p


def select_splice(oracle: ProfitOracle, params: SpliceParams) -> SelectionResult:
    """Seed active sets with the top-i individual earners for i =
    1..s_max, run each to its splice fixpoint, return the best."""
    m = oracle.m
    if not 1 <= params.s_max <= m:
        raise ValueError(f"s_max must be in [1, {m}], got {params.s_max}")
    before = oracle.models_explored
    catalog_set = oracle.full_set()
    singles = [(oracle.evaluate(oracle.singleton(i)).profit, i) for i in range(m)]
    order = [i for p, i in sorted(singles, key=lambda t: (-t[0], t[1]))]
    trace = []
    best = None
    for size in range(1, params.s_max + 1):
        seed_set = oracle.make_set(order[:size])
        trace.append((f"seed size {size}", seed_set, _profit(oracle, seed_set)))
        fixpoint, p = fixed_support(
            oracle,
            seed_set,
            catalog_set,
            params.k_max,
            value_insertions_after_removal=params.value_insertions_after_removal,
        )
        trace.append((f"fixpoint size {size}", fixpoint, p))
        if best is None or p > best[1]:
            best = (fixpoint, p)
    return _result(oracle, best[0], before, trace)


def fit_datamodel(
    samples: list[tuple[SourceSet, float]], m: int, ridge: float = 1e-8
) -> np.ndarray:
    """Least-squares fit of profit on membership indicators.

    Returns m+1 weights: intercept first, then one weight per source.
    """
    if len(samples) < m + 1:
        raise ValueError(f"need at least {m + 1} samples to fit {m + 1} weights")
    X = np.ones((len(samples), m + 1))
    y = np.empty(len(samples))
    for row, (subset, p) in enumerate(samples):
        X[row, 1:] = [(subset.mask >> i) & 1 for i in range(m)]
        y[row] = p
    gram = X.T @ X
    if ridge == 0.0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise RankDeficient("membership design is rank-deficient with ridge=0")
    if ridge:
        gram = gram + ridge * np.eye(m + 1)
    return np.linalg.solve(gram, X.T @ y)


def predict_datamodel(weights: np.ndarray, masks: np.ndarray, m: int) -> np.ndarray:
    """Surrogate profit predictions for an array of subset masks."""
    masks = masks.astype(np.uint64)
    bits = (masks[:, None] >> np.arange(m, dtype=np.uint64)) & np.uint64(1)
    return weights[0] + bits.astype(float) @ weights[1:]


def select_datamodel(oracle: ProfitOracle, params: DatamodelParams) -> SelectionResult:
    """Fit a linear surrogate on sampled subset profits, take the
    surrogate's argmax over the whole space, and return the better of
    that subset and the best sampled one (by true profit)."""
    m = oracle.m
    if m > 63:
        raise ValueError("surrogate argmax enumeration requires m <= 63")
    space = (1 << m) - 1
    T = params.n_training_subsets
    if T > space:
        raise SampleSpaceExhausted(f"{T} distinct subsets requested, only {space} exist")
    if T < m + 1:
        raise ValueError(f"n_training_subsets must be >= m+1 = {m + 1}")
    before = oracle.models_explored
    rng = np.random.default_rng(params.seed)
    masks: set[int] = set()
    while len(masks) < T:
        masks.add(int(rng.integers(1, space, endpoint=True, dtype=np.uint64)))
    trace = []
    samples = []
    for mask in sorted(masks):
        subset = SourceSet(mask, m, oracle.catalog_id)
        samples.append((subset, oracle.evaluate(subset).profit))
    sampled_best = max(samples, key=lambda t: t[1])
    trace.append(("best sampled", sampled_best[0], sampled_best[1]))

    weights = fit_datamodel(samples, m)
    all_masks = np.arange(1, space + 1, dtype=np.uint64)
    preds = predict_datamodel(weights, all_masks, m)
    argmax = SourceSet(int(all_masks[int(np.argmax(preds))]), m, oracle.catalog_id)
    p_argmax = oracle.evaluate(argmax).profit
    trace.append(("surrogate argmax", argmax, p_argmax))

    chosen = argmax if p_argmax > sampled_best[1] else sampled_best[0]
    return _result(oracle, chosen, before, trace)
