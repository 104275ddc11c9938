# core/errors.py
#
# One exception tree for the whole code base. Library code raises these;
# the CLI turns them into stage-tagged diagnostics.

from __future__ import annotations

from typing import Optional, Tuple


class CultureCoreError(Exception):
    """Root of every error raised on purpose by CultureCore."""


# ---------------------------------------------------------
# Input files
# ---------------------------------------------------------

class SurveyParseError(CultureCoreError):
    """Survey file is empty, not JSON, or breaks the document schema."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class SurveySchemaError(CultureCoreError):
    """Survey parsed fine but violates a domain invariant (ids, ranges, refs)."""


class UnsupportedResponseKindError(SurveySchemaError):
    """Question kind we do not ingest (image answers, for instance)."""


class EmbeddingFormatError(CultureCoreError):
    """Word-vector file does not match the `<count> <dim>` text format."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        suffix = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{suffix}")


class ConfigError(CultureCoreError):
    """Pipeline configuration is invalid or points at missing files."""


# ---------------------------------------------------------
# Computation
# ---------------------------------------------------------

class ParameterError(CultureCoreError):
    """A numeric parameter is out of its allowed range."""


class InputError(CultureCoreError):
    """Data handed to an operation breaks its precondition."""


class DegenerateInputError(InputError):
    """Input is structurally valid but carries no usable signal."""


class EmptyGraphError(InputError):
    """A candidate graph would have (or has) no nodes."""


class UnsupportedScaleError(CultureCoreError):
    """Exhaustive search requested beyond its supported size."""


# ---------------------------------------------------------
# Orchestration
# ---------------------------------------------------------

class StageError(CultureCoreError):
    """Wraps a failure with the pipeline stage (and pair) it happened in."""

    def __init__(
        self,
        stage: str,
        cause: BaseException,
        pair: Optional[Tuple[str, str]] = None,
    ):
        self.stage = stage
        self.cause = cause
        self.pair = pair
        context = f" for pair ({pair[0]}, {pair[1]})" if pair else ""
        super().__init__(f"[{stage}]{context} {type(cause).__name__}: {cause}")
