"""Profit-maximizing data source selection for supervised learning.

Given a catalog of data sources, a downstream task, and an acquisition
cost model, the selectors search for the subset of sources whose pooled
training data yields the highest profit (task gain minus cost). The
package ships six search strategies, a trained-model profit oracle with
memoization, a benchmark harness with planted-optimum synthetic data, an
HTTP service, and a CLI client.
"""

__version__ = "0.1.0"

from .core import (
    CostModel,
    ProfitBreakdown,
    SourceCatalog,
    SourceSet,
    cost_of_source,
    cost_of_subset,
    profit,
)
from .oracle import (
    EvalCache,
    ProfitOracle,
    RawSource,
    SplitDataset,
    TableOracle,
    TaskOracle,
    TaskSpec,
    assemble_training,
    evaluate_profit,
    split_sources,
)
from .selectors import (
    DatamodelParams,
    GraspParams,
    SelectionResult,
    SpliceParams,
    select_datamodel,
    select_grasp,
    select_greedy,
    select_naive,
    select_random,
    select_splice,
)
from .trainers import TrainerConfig

__all__ = [
    "CostModel",
    "DatamodelParams",
    "EvalCache",
    "GraspParams",
    "ProfitBreakdown",
    "ProfitOracle",
    "RawSource",
    "SelectionResult",
    "SourceCatalog",
    "SourceSet",
    "SpliceParams",
    "SplitDataset",
    "TableOracle",
    "TaskOracle",
    "TaskSpec",
    "TrainerConfig",
    "assemble_training",
    "cost_of_source",
    "cost_of_subset",
    "evaluate_profit",
    "profit",
    "select_datamodel",
    "select_grasp",
    "select_greedy",
    "select_naive",
    "select_random",
    "select_splice",
    "split_sources",
]
