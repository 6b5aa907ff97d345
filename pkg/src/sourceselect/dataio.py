"""Run configuration, CSV source ingestion, and report serialization.

Config files are flat YAML key-value maps validated by RunConfig. Source
data arrives either as a directory of per-source CSVs, as one CSV
partitioned on a column, or (for plumbing tests and demos) as a
profit-table file evaluated without any training.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .core import SourceCatalog
from .errors import (
    ConfigError,
    DuplicateSourceName,
    EmptyPartition,
    MissingColumn,
    NonNumericFeature,
    SchemaMismatch,
)
from .oracle import RawSource
from .bench import BenchReport, SynthConfig

REPORT_VERSION = "1"
REPORT_FIELDS = (
    "version",
    "algorithm",
    "seed",
    "subset_mask_hex",
    "gain",
    "cost",
    "profit",
    "percentile",
    "models_explored",
    "models_explored_pct",
    "delta_profit",
    "wall_time_ms",
)


class RunConfig(BaseModel):
    """Everything one selection or benchmark run needs.

    ``seed`` fixes the train/test split and doubles as the default seed
    for stochastic algorithms.
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    mode: Literal["sources_dir", "single_csv", "profit_table"]
    data_path: str
    partition_column: Optional[str] = None
    feature_columns: list[str] = Field(default_factory=list)
    one_hot_columns: list[str] = Field(default_factory=list)
    label_column: str = "label"
    sensitive_column: Optional[str] = None
    source_names: Optional[list[str]] = None

    task_kind: Literal["classification", "fairness", "regression"] = "classification"
    lam: float = Field(10.0, alias="lambda", ge=0.0, le=100.0)
    test_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    seed: int = Field(0, ge=0)

    cost_t: int = Field(1, ge=0, le=2)
    cost_a: float = 1.0
    cost_b: float = -70.0
    cost_c: float = Field(0.01, ge=0.0)
    zero_cost: bool = False

    algorithm: Literal["naive", "greedy", "random", "grasp", "splice", "datamodel"] = "splice"
    grasp_iterations: int = Field(20, ge=1)
    rcl_size: int = Field(5, ge=1)
    s_max: Optional[int] = Field(None, ge=1)
    k_max: int = Field(7, ge=1)
    value_insertions_after_removal: bool = False
    n_training_subsets: Optional[int] = Field(None, ge=2)
    seeds: list[int] = Field(default_factory=lambda: list(range(10)), min_length=1)

    max_evaluations: Optional[int] = Field(None, ge=1)
    force_enumeration: bool = False
    threads: int = Field(1, ge=1)

    max_iterations: int = Field(500, ge=1)
    step_size: float = Field(0.1, gt=0.0)
    gradient_tolerance: float = Field(1e-6, gt=0.0)
    ridge: Optional[float] = Field(None, ge=0.0)
    standardize: bool = True

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.mode == "sources_dir" and self.partition_column:
            raise ValueError("sources_dir mode forbids partition_column")
        if self.mode == "single_csv" and not self.partition_column:
            raise ValueError("single_csv mode requires partition_column")
        if self.task_kind == "fairness" and self.mode != "profit_table" and not self.sensitive_column:
            raise ValueError("fairness task requires sensitive_column")
        reserved = {self.label_column, self.sensitive_column, self.partition_column}
        overlap = set(self.feature_columns) & reserved
        if overlap:
            raise ValueError(f"feature columns overlap label/sensitive/partition: {sorted(overlap)}")
        unknown_onehot = set(self.one_hot_columns) - set(self.feature_columns)
        if unknown_onehot:
            raise ValueError(f"one_hot_columns not listed in feature_columns: {sorted(unknown_onehot)}")
        return self


def load_run_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"config file must be a flat key-value map: {path}")
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc


@dataclass
class LoadSummary:
    """Row accounting from ingestion; rows with missing cells are dropped."""

    rows_read: int = 0
    rows_dropped: int = 0
    dropped_by_source: dict[str, int] = field(default_factory=dict)


def _columns_in_use(cfg: RunConfig) -> list[str]:
    cols = list(cfg.feature_columns) + [cfg.label_column]
    if cfg.sensitive_column:
        cols.append(cfg.sensitive_column)
    if cfg.partition_column:
        cols.append(cfg.partition_column)
    return cols


def _frame_to_source(
    name: str, frame: pd.DataFrame, cfg: RunConfig, feature_order: list[str]
) -> RawSource:
    try:
        X = frame[feature_order].to_numpy(dtype=float)
    except (ValueError, TypeError) as exc:
        raise NonNumericFeature(f"source {name!r}: {exc}") from exc
    try:
        y = frame[cfg.label_column].to_numpy(dtype=float)
    except (ValueError, TypeError) as exc:
        raise NonNumericFeature(f"source {name!r}: label column: {exc}") from exc
    sens = None
    if cfg.sensitive_column:
        try:
            sens = frame[cfg.sensitive_column].to_numpy(dtype=float)
        except (ValueError, TypeError) as exc:
            raise NonNumericFeature(f"source {name!r}: sensitive column: {exc}") from exc
    return RawSource(name=name, X=X, y=y, sensitive=sens)


def load_sources(cfg: RunConfig) -> tuple[SourceCatalog, list[RawSource], LoadSummary]:
    """Read the configured CSV data into a fixed-order source list."""
    path = Path(cfg.data_path)
    summary = LoadSummary()

    if cfg.mode == "sources_dir":
        if not path.is_dir():
            raise ConfigError(f"sources_dir mode needs a directory, got {path}")
        files = sorted(path.glob("*.csv"), key=lambda p: p.name)
        if not files:
            raise ConfigError(f"no *.csv files under {path}")
        named_frames = [(f.stem, pd.read_csv(f, float_precision="round_trip")) for f in files]
    elif cfg.mode == "single_csv":
        if not path.is_file():
            raise ConfigError(f"single_csv mode needs a file, got {path}")
        frame = pd.read_csv(path, float_precision="round_trip")
        if cfg.partition_column not in frame.columns:
            raise MissingColumn(f"partition column {cfg.partition_column!r} not in {path}")
        keys = sorted(frame[cfg.partition_column].astype(str).unique())
        named_frames = [
            (key, frame[frame[cfg.partition_column].astype(str) == key]) for key in keys
        ]
    else:
        raise ConfigError(f"mode {cfg.mode!r} does not load CSV sources")

    names = [name for name, _ in named_frames]
    if len(set(names)) != len(names):
        raise DuplicateSourceName(f"duplicate source names after grouping: {names}")

    # validate columns, drop incomplete rows, expand declared categoricals
    used = _columns_in_use(cfg)
    for name, frame in named_frames:
        missing = [c for c in used if c not in frame.columns]
        if missing:
            raise MissingColumn(f"source {name!r} lacks columns {missing}")

    cleaned = []
    for name, frame in named_frames:
        summary.rows_read += len(frame)
        kept = frame.dropna(subset=used)
        dropped = len(frame) - len(kept)
        summary.rows_dropped += dropped
        summary.dropped_by_source[name] = dropped
        if len(kept) == 0:
            raise EmptyPartition(f"source {name!r} has no usable rows")
        cleaned.append((name, kept))

    feature_order: list[str] = []
    if cfg.one_hot_columns:
        categories = {
            col: sorted(
                set().union(*(set(frame[col].astype(str)) for _, frame in cleaned))
            )
            for col in cfg.one_hot_columns
        }
        expanded = []
        for name, frame in cleaned:
            frame = frame.copy()
            for col in cfg.one_hot_columns:
                as_str = frame[col].astype(str)
                for cat in categories[col]:
                    frame[f"{col}={cat}"] = (as_str == cat).astype(float)
            expanded.append((name, frame))
        cleaned = expanded
        for col in cfg.feature_columns:
            if col in cfg.one_hot_columns:
                feature_order.extend(f"{col}={cat}" for cat in categories[col])
            else:
                feature_order.append(col)
    else:
        feature_order = list(cfg.feature_columns)

    sources = [_frame_to_source(name, frame, cfg, feature_order) for name, frame in cleaned]
    catalog = SourceCatalog(
        names=tuple(s.name for s in sources),
        record_counts=tuple(s.n_rows for s in sources),
    )
    return catalog, sources, summary


# -- report records ------------------------------------------------------


@dataclass(frozen=True)
class ReportRecord:
    """One serialized (algorithm, seed) outcome."""

    algorithm: str
    seed: Optional[int]
    subset_mask_hex: str
    gain: float
    cost: float
    profit: float
    percentile: Optional[float]
    models_explored: int
    models_explored_pct: float
    delta_profit: Optional[float]
    wall_time_ms: float


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_report(records: list[ReportRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_FIELDS)
        for r in records:
            writer.writerow(
                [
                    REPORT_VERSION,
                    r.algorithm,
                    _fmt(r.seed),
                    r.subset_mask_hex,
                    _fmt(r.gain),
                    _fmt(r.cost),
                    _fmt(r.profit),
                    _fmt(r.percentile),
                    _fmt(r.models_explored),
                    _fmt(r.models_explored_pct),
                    _fmt(r.delta_profit),
                    _fmt(r.wall_time_ms),
                ]
            )


def read_report(path) -> list[ReportRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != REPORT_FIELDS:
            raise SchemaMismatch(
                f"{path}: header {header} does not match report schema {list(REPORT_FIELDS)}"
            )
        records = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(REPORT_FIELDS):
                raise SchemaMismatch(f"{path}: record has {len(row)} fields")
            if row[0] != REPORT_VERSION:
                raise SchemaMismatch(f"{path}: unsupported report version {row[0]!r}")
            records.append(
                ReportRecord(
                    algorithm=row[1],
                    seed=int(row[2]) if row[2] else None,
                    subset_mask_hex=row[3],
                    gain=float(row[4]),
                    cost=float(row[5]),
                    profit=float(row[6]),
                    percentile=float(row[7]) if row[7] else None,
                    models_explored=int(row[8]),
                    models_explored_pct=float(row[9]),
                    delta_profit=float(row[10]) if row[10] else None,
                    wall_time_ms=float(row[11]),
                )
            )
    return records


def records_from_bench(report: BenchReport) -> list[ReportRecord]:
    return [
        ReportRecord(
            algorithm=row.algorithm,
            seed=row.seed,
            subset_mask_hex=f"{row.result.subset.mask:x}",
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


# -- synthetic source output ---------------------------------------------


def write_synthetic(sources: list[RawSource], cfg: SynthConfig, out_dir, force: bool = False):
    """One CSV per source (f0..f{p-1},label) plus a JSON manifest naming
    the planted clean sources. Byte-identical for identical configs."""
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()) and not force:
        raise FileExistsError(f"output directory {out} is not empty (use force)")
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for src in sources:
        p = out / f"{src.name}.csv"
        with open(p, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"f{j}" for j in range(src.X.shape[1])] + ["label"])
            for row, label in zip(src.X, src.y):
                writer.writerow([format(v, ".17g") for v in row] + [format(label, ".17g")])
        paths.append(p)
    manifest = {
        "m": cfg.m,
        "n": cfg.n,
        "p": cfg.p,
        "seed": cfg.seed,
        "clean_sources": list(cfg.clean_names),
        "label_noise_clean": cfg.label_noise_clean,
        "label_noise_corrupt": cfg.label_noise_corrupt,
    }
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths, manifest_path


def synthetic_run_config(cfg: SynthConfig, data_dir) -> RunConfig:
    """RunConfig matching the CSV layout written by write_synthetic."""
    return RunConfig(
        mode="sources_dir",
        data_path=str(data_dir),
        feature_columns=[f"f{j}" for j in range(cfg.p)],
        label_column="label",
        task_kind="classification",
        zero_cost=True,
    )


def load_profit_table(path) -> tuple[int, dict[int, float]]:
    """Read a ground-truth-format file (header m=<int>, then
    mask_hex,value lines) as a gain table."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"profit table not found: {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("m="):
            raise SchemaMismatch(f"{path}: expected 'm=<int>' header, got {header!r}")
        m = int(header[2:])
        gains = {}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            mask_hex, value = line.split(",")
            gains[int(mask_hex, 16)] = float(value)
    return m, gains
