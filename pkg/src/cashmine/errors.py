"""Exception types shared across the package.

Parse-level problems inside a file are *data* (collected and reported row by
row), so they live in ``ingest.ParseError`` dataclasses instead.  Everything
here is raised.
"""


class CashmineError(Exception):
    """Base class for all package errors."""


class SchemaError(CashmineError):
    """Source file header does not match the declared schema (fatal)."""


class DefaultError(CashmineError):
    """A required field without a schema default is missing."""

    def __init__(self, field: str):
        super().__init__(f"missing required field with no default: {field}")
        self.field = field


class KeyConflict(CashmineError):
    """Duplicate document key inside one extraction snapshot."""


class NotFound(CashmineError):
    """Requested object (request, row, run, ...) does not exist."""


class ValidationError(CashmineError):
    """A value does not satisfy its schema field type."""


class ActivationRefused(CashmineError):
    """A staging request containing error rows cannot be activated."""

    def __init__(self, error_rows: list[int]):
        rows = ", ".join(str(r) for r in error_rows)
        super().__init__(f"request has unresolved error rows: {rows}")
        self.error_rows = error_rows


class QueryError(CashmineError):
    """Query or extract references an unknown characteristic."""


class FitError(CashmineError):
    """A model cannot be fitted on the given input."""


class DistanceError(CashmineError):
    """A record is missing an attribute required by the feature space."""


class CutError(CashmineError):
    """Dendrogram cut level out of range."""


class SplitError(CashmineError):
    """Train/test split cannot be formed."""


class EvalError(CashmineError):
    """Evaluation input is empty or names an unknown attribute."""


class TransformError(CashmineError):
    """A process transform received incompatible input tables."""


class RunError(CashmineError):
    """One or more nodes failed while executing an analysis process."""

    def __init__(self, failures: dict[str, str], skipped: list[str]):
        parts = [f"{node}: {cause}" for node, cause in failures.items()]
        msg = "node failure(s): " + "; ".join(parts)
        if skipped:
            msg += " (skipped downstream: " + ", ".join(skipped) + ")"
        super().__init__(msg)
        self.failures = failures
        self.skipped = skipped


class RenderError(CashmineError):
    """Chart spec is unknown or its payload is unusable."""


class GenError(CashmineError):
    """Synthetic data spec is internally inconsistent."""


class StageError(CashmineError):
    """Pipeline command invoked before its prerequisite stage."""
