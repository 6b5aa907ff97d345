"""Benchmark harness: exhaustive ground truth, evaluation metrics,
synthetic sources with a planted optimum, and the multi-algorithm runner.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import SourceSet
from .errors import BudgetExceeded, NonpositiveOptimum, SchemaMismatch, UnknownSubset
from .oracle import ProfitOracle, RawSource
from . import selectors
from .selectors import (
    DatamodelParams,
    GraspParams,
    SelectionResult,
    SpliceParams,
    STOCHASTIC_ALGORITHMS,
)

ENUMERATION_CAP = 20


@dataclass(frozen=True)
class GroundTruthTable:
    """Profits of every nonempty subset of an m-source catalog."""

    m: int
    profits: tuple[float, ...]  # profits[mask - 1] for mask in 1..2^m-1

    def __post_init__(self):
        if len(self.profits) != (1 << self.m) - 1:
            raise ValueError("table must cover all nonempty subsets")

    def profit_of(self, subset: SourceSet) -> float:
        if subset.m != self.m or subset.is_empty():
            raise UnknownSubset(f"mask {subset.mask:#x} not covered by this table")
        return self.profits[subset.mask - 1]

    def best(self) -> tuple[int, float]:
        """(mask, profit) of the maximum; ties to smaller cardinality then mask."""
        best_mask, best_p = 1, self.profits[0]
        for mask_minus_1, p in enumerate(self.profits[1:], start=1):
            mask = mask_minus_1 + 1
            if p > best_p or (
                p == best_p
                and (mask.bit_count(), mask) < (best_mask.bit_count(), best_mask)
            ):
                best_mask, best_p = mask, p
        return best_mask, best_p

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"m={self.m}\n".encode())
        for mask_minus_1, p in enumerate(self.profits):
            h.update(f"{mask_minus_1 + 1:x},{p:.17g}\n".encode())
        return h.hexdigest()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"m={self.m}\n")
            for mask_minus_1, p in enumerate(self.profits):
                fh.write(f"{mask_minus_1 + 1:x},{p:.17g}\n")

    @classmethod
    def load(cls, path) -> "GroundTruthTable":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("m="):
                raise SchemaMismatch(f"{path}: expected 'm=<int>' header, got {header!r}")
            m = int(header[2:])
            profits = [0.0] * ((1 << m) - 1)
            seen = 0
            for lineno, line in enumerate(fh, 2):
                line = line.strip()
                if not line:
                    continue
                mask_hex, p = line.split(",")
                profits[int(mask_hex, 16) - 1] = float(p)
                seen += 1
            if seen != len(profits):
                raise SchemaMismatch(f"{path}: {seen} records for {len(profits)} subsets")
        return cls(m=m, profits=tuple(profits))


def build_ground_truth(
    oracle: ProfitOracle, force: bool = False, threads: int = 1
) -> GroundTruthTable:
    """Evaluate every nonempty subset through the oracle's cache."""
    m = oracle.m
    if m > ENUMERATION_CAP and not force:
        raise BudgetExceeded(
            f"enumerating 2^{m}-1 subsets exceeds the cap of m={ENUMERATION_CAP}; "
            "pass force=True to override"
        )
    total = (1 << m) - 1
    masks = range(1, total + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            profits = list(
                pool.map(
                    lambda mask: oracle.evaluate(SourceSet(mask, m, oracle.catalog_id)).profit,
                    masks,
                )
            )
    else:
        profits = [
            oracle.evaluate(SourceSet(mask, m, oracle.catalog_id)).profit for mask in masks
        ]
    return GroundTruthTable(m=m, profits=tuple(profits))


def subset_percentile(subset: SourceSet, table: GroundTruthTable) -> float:
    """Percentage of nonempty subsets with strictly smaller profit."""
    p = table.profit_of(subset)
    smaller = sum(1 for other in table.profits if other < p)
    return 100.0 * smaller / len(table.profits)


def models_explored_pct(explored: int, m: int) -> float:
    """Explored subsets as a percentage of all nonempty subsets."""
    if explored < 0:
        raise ValueError("explored must be >= 0")
    return 100.0 * explored / ((1 << m) - 1)


def ground_truth_diff(p_star: float, p_method: float) -> float:
    """Relative shortfall (p* - p) / p* against the optimal profit."""
    if p_star <= 0.0:
        raise NonpositiveOptimum(f"optimal profit {p_star} is not positive")
    return (p_star - p_method) / p_star


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic catalog layout: uniform features, one hidden logistic
    concept, and per-source label-flip noise. The low-noise "clean"
    sources form the planted best subset."""

    m: int = 8
    n: int = 500
    p: int = 10
    clean_sources: int = 3
    label_noise_clean: float = 0.02
    label_noise_corrupt: float = 0.45
    seed: int = 0

    def __post_init__(self):
        if self.clean_sources > self.m:
            raise ValueError("clean_sources cannot exceed m")
        for rate in (self.label_noise_clean, self.label_noise_corrupt):
            if not 0.0 <= rate <= 0.5:
                raise ValueError("noise rates must lie in [0, 0.5]")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def clean_names(self) -> tuple[str, ...]:
        return tuple(f"source_{i:02d}" for i in range(self.clean_sources))


def generate_synthetic(cfg: SynthConfig) -> list[RawSource]:
    """Features i.i.d. uniform on [0,1]; labels from a hidden logistic
    concept, then flipped with the per-source noise rate. Sources
    0..clean_sources-1 are the clean ones."""
    rng = np.random.default_rng(cfg.seed)
    concept = rng.normal(size=cfg.p)
    # decision boundary through the feature-space center
    intercept = -0.5 * concept.sum()
    sources = []
    for i in range(cfg.m):
        noise = cfg.label_noise_clean if i < cfg.clean_sources else cfg.label_noise_corrupt
        X = rng.uniform(0.0, 1.0, size=(cfg.n, cfg.p))
        clean_labels = (X @ concept + intercept > 0.0).astype(float)
        flips = rng.uniform(size=cfg.n) < noise
        labels = np.where(flips, 1.0 - clean_labels, clean_labels)
        sources.append(RawSource(name=f"source_{i:02d}", X=X, y=labels))
    return sources


@dataclass
class BenchRow:
    """One (algorithm, seed) run with its evaluation metrics."""

    algorithm: str
    seed: Optional[int]
    result: SelectionResult
    percentile: Optional[float]
    models_explored_pct: float
    delta_profit: Optional[float]
    wall_time_ms: float


@dataclass
class AlgorithmSummary:
    algorithm: str
    runs: int
    mean_percentile: Optional[float]
    min_percentile: Optional[float]
    max_percentile: Optional[float]
    mean_explored_pct: float
    mean_delta_profit: Optional[float]
    mean_wall_time_ms: float


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    summaries: list[AlgorithmSummary] = field(default_factory=list)
    ground_truth: Optional[GroundTruthTable] = None


def _run_algorithm(oracle: ProfitOracle, name: str, params, seed: Optional[int]) -> SelectionResult:
    if name == "naive":
        return selectors.select_naive(oracle)
    if name == "greedy":
        return selectors.select_greedy(oracle)
    if name == "random":
        return selectors.select_random(oracle, seed=seed or 0)
    if name == "grasp":
        p = params or GraspParams()
        if seed is not None:
            p = GraspParams(n_iterations=p.n_iterations, rcl_size=p.rcl_size, seed=seed)
        return selectors.select_grasp(oracle, p)
    if name == "splice":
        p = params or SpliceParams(s_max=oracle.m)
        return selectors.select_splice(oracle, p)
    if name == "datamodel":
        p = params or DatamodelParams(n_training_subsets=default_datamodel_samples(oracle.m))
        if seed is not None:
            p = DatamodelParams(n_training_subsets=p.n_training_subsets, seed=seed)
        return selectors.select_datamodel(oracle, p)
    raise ValueError(f"unknown algorithm {name!r}")


def default_datamodel_samples(m: int) -> int:
    """Default surrogate training-set size: 1000 sampled subsets, capped
    at the space size and floored at the m+1 needed for the fit."""
    return max(m + 1, min(1000, (1 << m) - 1))


def run_benchmark(
    oracle_factory: Callable[[], ProfitOracle],
    algorithms: Sequence[tuple[str, Optional[object]]],
    seeds: Sequence[int] = tuple(range(10)),
    compute_percentile: bool = True,
    force_enumeration: bool = False,
    threads: int = 1,
    ground_truth_factory: Optional[Callable[[], ProfitOracle]] = None,
) -> BenchReport:
    """Run each algorithm and score it against a shared ground truth.

    ``oracle_factory`` must return a fresh oracle (fresh cache) per call
    so exploration counts are not cross-polluted between runs; stochastic
    algorithms get one run per seed. The ground-truth table, when m is
    within the enumeration cap, is built once on its own oracle
    (``ground_truth_factory`` when given, so evaluation budgets on the
    algorithm oracles do not starve the enumeration).
    """
    if not algorithms:
        raise ValueError("at least one algorithm is required")
    if not seeds and any(name in STOCHASTIC_ALGORITHMS for name, _ in algorithms):
        raise ValueError("stochastic algorithms need at least one seed")
    probe = oracle_factory()
    m = probe.m

    table = None
    p_star = None
    if compute_percentile:
        gt_oracle = (ground_truth_factory or oracle_factory)()
        table = build_ground_truth(gt_oracle, force=force_enumeration, threads=threads)
        p_star = table.best()[1]

    report = BenchReport(ground_truth=table)
    for name, params in algorithms:
        run_seeds: Sequence[Optional[int]] = (
            list(seeds) if name in STOCHASTIC_ALGORITHMS else [None]
        )
        for seed in run_seeds:
            oracle = oracle_factory()
            start = time.perf_counter()
            try:
                result = _run_algorithm(oracle, name, params, seed)
            except Exception as exc:
                exc.args = (f"algorithm {name!r}: {exc}",) + exc.args[1:]
                raise
            wall_ms = (time.perf_counter() - start) * 1000.0
            percentile = delta = None
            if table is not None:
                percentile = subset_percentile(result.subset, table)
                try:
                    delta = ground_truth_diff(p_star, result.breakdown.profit)
                except NonpositiveOptimum:
                    delta = None
            report.rows.append(
                BenchRow(
                    algorithm=name,
                    seed=seed,
                    result=result,
                    percentile=percentile,
                    models_explored_pct=models_explored_pct(result.models_explored, m),
                    delta_profit=delta,
                    wall_time_ms=wall_ms,
                )
            )

    for name, _ in algorithms:
        rows = [r for r in report.rows if r.algorithm == name]
        pcts = [r.percentile for r in rows if r.percentile is not None]
        deltas = [r.delta_profit for r in rows if r.delta_profit is not None]
        report.summaries.append(
            AlgorithmSummary(
                algorithm=name,
                runs=len(rows),
                mean_percentile=float(np.mean(pcts)) if pcts else None,
                min_percentile=min(pcts) if pcts else None,
                max_percentile=max(pcts) if pcts else None,
                mean_explored_pct=float(np.mean([r.models_explored_pct for r in rows])),
                mean_delta_profit=float(np.mean(deltas)) if deltas else None,
                mean_wall_time_ms=float(np.mean([r.wall_time_ms for r in rows])),
            )
        )
    return report
