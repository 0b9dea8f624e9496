"""Exception hierarchy.

Every error carries a short machine-readable ``category`` used by the CLI
to print a single parseable line and pick an exit code.
"""


class ImputeError(Exception):
    category = "error"
    exit_code = 3


class DataError(ImputeError):
    category = "data"


class ParseError(DataError):
    category = "parse"


class SchemaError(DataError):
    category = "schema"


class DegenerateColumnError(DataError):
    category = "degenerate-column"


class EmptyTableError(DataError):
    category = "empty-table"


class DegenerateMarginError(DataError):
    category = "degenerate-margin"


class WrongShapeError(DataError):
    category = "wrong-shape"


class NoOverlapError(DataError):
    category = "no-overlap"


class NoCandidatesError(DataError):
    category = "no-candidates"


class MethodNotApplicableError(DataError):
    category = "method-not-applicable"


class UndefinedMetricError(DataError):
    category = "undefined-metric"


class PlanInfeasibleError(ImputeError):
    category = "plan-infeasible"
    exit_code = 4


class InfeasibleRateError(PlanInfeasibleError):
    category = "infeasible-rate"
