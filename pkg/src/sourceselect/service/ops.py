"""Request orchestration behind the HTTP endpoints.

Everything here is plain synchronous code: load the configured data,
build an oracle, run the requested algorithm(s), serialize the outcome.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Optional

from .. import bench, dataio, selectors
from ..core import CostModel, SourceCatalog, SourceSet
from ..errors import BudgetExceeded, ConfigError, SchemaMismatch
from ..oracle import TableOracle, TaskOracle, TaskSpec, split_sources
from ..selectors import DatamodelParams, GraspParams, SpliceParams
from ..trainers import TrainerConfig
from . import schemas

_CONFIG_BUDGET = object()  # sentinel: "use the config's max_evaluations"


def resolve_config(req: schemas.ConfigSource) -> dataio.RunConfig:
    if req.config is not None and req.config_path is not None:
        raise ConfigError("pass either an inline config or config_path, not both")
    if req.config is not None:
        return req.config
    if req.config_path is not None:
        return dataio.load_run_config(req.config_path)
    raise ConfigError("a config or config_path is required")


def cost_model_from(cfg: dataio.RunConfig) -> CostModel:
    return CostModel(t=cfg.cost_t, a=cfg.cost_a, b=cfg.cost_b, c=cfg.cost_c, zero_cost=cfg.zero_cost)


def task_spec_from(cfg: dataio.RunConfig) -> TaskSpec:
    trainer = TrainerConfig.for_task(
        cfg.task_kind,
        max_iterations=cfg.max_iterations,
        step_size=cfg.step_size,
        gradient_tolerance=cfg.gradient_tolerance,
        standardize=cfg.standardize,
        **({"ridge": cfg.ridge} if cfg.ridge is not None else {}),
    )
    return TaskSpec(
        task_kind=cfg.task_kind,
        label_column=cfg.label_column,
        sensitive_column=cfg.sensitive_column,
        lam=cfg.lam,
        test_fraction=cfg.test_fraction,
        trainer=trainer,
        seed=cfg.seed,
    )


class Runtime:
    """Loaded data plus a factory for fresh-cache oracles."""

    def __init__(self, cfg: dataio.RunConfig):
        self.cfg = cfg
        self.cost_model = cost_model_from(cfg)
        if cfg.mode == "profit_table":
            m, gains = dataio.load_profit_table(cfg.data_path)
            names = cfg.source_names or [f"s{i}" for i in range(m)]
            if len(names) != m:
                raise ConfigError(f"source_names has {len(names)} entries for m={m}")
            self.catalog = SourceCatalog(names=tuple(names))
            self._gains = gains
            self._data = None
        else:
            _, sources, self.load_summary = dataio.load_sources(cfg)
            self._data = split_sources(sources, cfg.test_fraction, cfg.seed)
            self.catalog = self._data.catalog
            self._task = task_spec_from(cfg)
            self._gains = None

    @property
    def m(self) -> int:
        return self.catalog.m

    def oracle(self, budget: Optional[int] = _CONFIG_BUDGET):
        if budget is _CONFIG_BUDGET:
            budget = self.cfg.max_evaluations
        if self._gains is not None:
            return TableOracle(
                self._gains,
                self.m,
                cost_model=self.cost_model,
                catalog_id=self.catalog.token,
                budget=budget,
            )
        return TaskOracle(self._data, self._task, self.cost_model, budget=budget)

    def subset_payload(self, subset: SourceSet) -> schemas.SubsetPayload:
        return schemas.SubsetPayload(
            names=[self.catalog.names[i] for i in subset],
            mask_hex=f"{subset.mask:x}",
            size=len(subset),
        )


def selector_params(cfg: dataio.RunConfig, algorithm: str, m: int, seed: int, req=None):
    def pick(attr, default):
        v = getattr(req, attr, None) if req is not None else None
        return v if v is not None else default

    if algorithm == "grasp":
        return GraspParams(
            n_iterations=pick("grasp_iterations", cfg.grasp_iterations),
            rcl_size=pick("rcl_size", cfg.rcl_size),
            seed=seed,
        )
    if algorithm == "splice":
        s_max = pick("s_max", cfg.s_max)
        s_max = m if s_max is None else min(s_max, m)
        return SpliceParams(
            s_max=s_max,
            k_max=pick("k_max", cfg.k_max),
            value_insertions_after_removal=cfg.value_insertions_after_removal,
        )
    if algorithm == "datamodel":
        t = pick("n_training_subsets", cfg.n_training_subsets)
        if t is None:
            t = bench.default_datamodel_samples(m)
        return DatamodelParams(n_training_subsets=t, seed=seed)
    return None


def run_select(req: schemas.SelectRequest) -> schemas.SelectResponse:
    cfg = resolve_config(req)
    rt = Runtime(cfg)
    algorithm = req.algorithm or cfg.algorithm
    seed = req.seed if req.seed is not None else cfg.seed
    budget = req.max_evaluations if req.max_evaluations is not None else cfg.max_evaluations
    oracle = rt.oracle(budget=budget)
    params = selector_params(cfg, algorithm, rt.m, seed, req)

    start = time.perf_counter()
    if algorithm == "naive":
        result = selectors.select_naive(oracle, max_evaluations=budget)
    elif algorithm == "greedy":
        result = selectors.select_greedy(oracle)
    elif algorithm == "random":
        result = selectors.select_random(oracle, seed=seed)
    elif algorithm == "grasp":
        result = selectors.select_grasp(oracle, params)
    elif algorithm == "splice":
        result = selectors.select_splice(oracle, params)
    else:
        result = selectors.select_datamodel(oracle, params)
    wall_ms = (time.perf_counter() - start) * 1000.0

    effective_seed = seed if algorithm in selectors.STOCHASTIC_ALGORITHMS else None
    if req.out:
        record = dataio.ReportRecord(
            algorithm=algorithm,
            seed=effective_seed,
            subset_mask_hex=f"{result.subset.mask:x}",
            gain=result.breakdown.gain,
            cost=result.breakdown.cost,
            profit=result.breakdown.profit,
            percentile=None,
            models_explored=result.models_explored,
            models_explored_pct=bench.models_explored_pct(result.models_explored, rt.m),
            delta_profit=None,
            wall_time_ms=wall_ms,
        )
        dataio.write_report([record], req.out)

    return schemas.SelectResponse(
        algorithm=algorithm,
        seed=effective_seed,
        subset=rt.subset_payload(result.subset),
        gain=result.breakdown.gain,
        cost=result.breakdown.cost,
        profit=result.breakdown.profit,
        models_explored=result.models_explored,
        wall_time_ms=wall_ms,
        out=req.out,
    )


def run_benchmark(req: schemas.BenchmarkRequest) -> schemas.BenchmarkResponse:
    cfg = resolve_config(req)
    rt = Runtime(cfg)
    names = req.algorithms or list(selectors.ALGORITHMS)
    seeds = req.seeds if req.seeds is not None else cfg.seeds
    algorithms = [
        (name, selector_params(cfg, name, rt.m, cfg.seed, req=None)) for name in names
    ]
    try:
        report = bench.run_benchmark(
            rt.oracle,
            algorithms,
            seeds=seeds,
            compute_percentile=not req.no_percentile,
            force_enumeration=cfg.force_enumeration,
            threads=req.threads if req.threads is not None else cfg.threads,
            ground_truth_factory=lambda: rt.oracle(budget=None),
        )
    except BudgetExceeded as exc:
        exc.args = (f"{exc} (rerun with --no-percentile to skip ground truth)",)
        raise

    rows = [
        schemas.BenchmarkRow(
            algorithm=row.algorithm,
            seed=row.seed,
            subset=rt.subset_payload(row.result.subset),
            gain=row.result.breakdown.gain,
            cost=row.result.breakdown.cost,
            profit=row.result.breakdown.profit,
            percentile=row.percentile,
            models_explored=row.result.models_explored,
            models_explored_pct=row.models_explored_pct,
            delta_profit=row.delta_profit,
            wall_time_ms=row.wall_time_ms,
        )
        for row in report.rows
    ]
    summary = [
        schemas.BenchmarkSummaryRow(
            algorithm=s.algorithm,
            runs=s.runs,
            mean_percentile=s.mean_percentile,
            min_percentile=s.min_percentile,
            max_percentile=s.max_percentile,
            mean_explored_pct=s.mean_explored_pct,
            mean_delta_profit=s.mean_delta_profit,
            mean_wall_time_ms=s.mean_wall_time_ms,
        )
        for s in report.summaries
    ]
    if req.out:
        dataio.write_report(dataio.records_from_bench(report), req.out)
    return schemas.BenchmarkResponse(rows=rows, summary=summary, out=req.out)


def run_synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
    cfg = bench.SynthConfig(
        m=req.m,
        n=req.n,
        p=req.p,
        clean_sources=req.clean,
        label_noise_clean=req.noise_clean,
        label_noise_corrupt=req.noise_corrupt,
        seed=req.seed,
    )
    sources = bench.generate_synthetic(cfg)
    paths, manifest = dataio.write_synthetic(sources, cfg, req.out_dir, force=req.force)
    return schemas.SynthResponse(
        files=[str(p) for p in paths],
        manifest=str(manifest),
        clean_sources=list(cfg.clean_names),
    )


def run_ground_truth(req: schemas.GroundTruthRequest) -> schemas.GroundTruthResponse:
    cfg = resolve_config(req)
    rt = Runtime(cfg)
    oracle = rt.oracle(budget=None)
    start = time.perf_counter()
    table = bench.build_ground_truth(
        oracle,
        force=req.force or cfg.force_enumeration,
        threads=req.threads if req.threads is not None else cfg.threads,
    )
    wall_ms = (time.perf_counter() - start) * 1000.0
    if req.out:
        table.save(req.out)
    best_mask, best_profit = table.best()
    return schemas.GroundTruthResponse(
        m=table.m,
        subsets=len(table.profits),
        best=rt.subset_payload(SourceSet(best_mask, rt.m, rt.catalog.token)),
        best_profit=best_profit,
        digest=table.digest(),
        out=req.out,
        wall_time_ms=wall_ms,
    )


def render_show(req: schemas.ShowRequest) -> schemas.ShowResponse:
    path = Path(req.path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()

    if first.startswith("m="):
        table = bench.GroundTruthTable.load(path)
        best_mask, best_profit = table.best()
        lines = [
            f"ground truth over m={table.m} sources ({len(table.profits)} subsets)",
            f"best mask={best_mask:x} profit={best_profit:.17g}",
            f"digest: {table.digest()}",
            "mask_hex profit",
        ]
        lines += [f"{i + 1:x} {p:.17g}" for i, p in enumerate(table.profits)]
        return schemas.ShowResponse(kind="ground_truth", lines=lines)

    if first.startswith("version,"):
        records = dataio.read_report(path)
        header = (
            "algorithm seed mask profit gain cost percentile explored explored% dprofit"
        )
        lines = [f"report: {len(records)} record(s)", header]
        for r in records:
            lines.append(
                " ".join(
                    [
                        r.algorithm,
                        "-" if r.seed is None else str(r.seed),
                        r.subset_mask_hex,
                        format(r.profit, ".6g"),
                        format(r.gain, ".6g"),
                        format(r.cost, ".6g"),
                        "-" if r.percentile is None else format(r.percentile, ".6g"),
                        str(r.models_explored),
                        format(r.models_explored_pct, ".6g"),
                        "-" if r.delta_profit is None else format(r.delta_profit, ".6g"),
                    ]
                )
            )
        return schemas.ShowResponse(kind="report", lines=lines)

    raise SchemaMismatch(f"{path}: not a report or ground-truth file")
