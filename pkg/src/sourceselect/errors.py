"""Exception hierarchy shared across the package."""


class SourceSelectError(Exception):
    """Base class for every error raised by this package."""


class CatalogMismatch(SourceSelectError):
    """Two source sets bound to different catalogs were combined."""


class MissingGain(SourceSelectError):
    """A subset member has no recorded individual gain."""


class EmptySource(SourceSelectError):
    """A data source contains no records."""


class DegenerateSplit(SourceSelectError):
    """A source is too small to yield both a train and a test slice."""


class EmptySubset(SourceSelectError):
    """An operation that requires at least one source got the empty set."""


class NonBinaryLabels(SourceSelectError):
    """Labels outside {0, 1} were passed to a binary classifier."""


class SingularSystem(SourceSelectError):
    """Unregularized least squares on a rank-deficient Gram matrix."""


class RankDeficient(SingularSystem):
    """Surrogate fit requested with ridge=0 on a rank-deficient design."""


class EmptyInput(SourceSelectError):
    """A metric was called on zero predictions."""


class NoPositives(SourceSelectError):
    """A demographic group has no positive-labeled instances; the TPR for
    that group is undefined."""

    def __init__(self, group: int):
        super().__init__(f"group a={group} has no positive-labeled instances")
        self.group = group


class ZeroBaseline(SourceSelectError):
    """Test labels are constant, so the mean-predictor baseline MSE is 0."""


class EvaluationError(SourceSelectError):
    """A trainer or metric failed while evaluating a specific subset."""


class BudgetExceeded(SourceSelectError):
    """An evaluation budget or enumeration cap would be exceeded."""


class SampleSpaceExhausted(SourceSelectError):
    """More distinct subsets were requested than exist."""


class AllConstructionsEmpty(SourceSelectError):
    """Every randomized construction pass produced the empty set."""


class UnknownSubset(SourceSelectError):
    """A subset was looked up in a table that does not contain it."""


class NonpositiveOptimum(SourceSelectError):
    """The optimal profit is not positive; the relative-difference metric
    is undefined."""


class MissingColumn(SourceSelectError):
    """A required column is absent from an input file."""


class NonNumericFeature(SourceSelectError):
    """A feature column could not be parsed as numeric."""


class EmptyPartition(SourceSelectError):
    """A partition value groups zero usable rows."""


class DuplicateSourceName(SourceSelectError):
    """Two sources resolved to the same name."""


class SchemaMismatch(SourceSelectError):
    """A serialized file does not match the expected schema or version."""


class ConfigError(SourceSelectError):
    """A run configuration is invalid or inconsistent."""
