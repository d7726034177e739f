"""Exception hierarchy shared by all dcr modules."""

from __future__ import annotations


class DcrError(Exception):
    """Base class for every error raised by this package."""


# --- core model ---------------------------------------------------------


class EmptyText(DcrError):
    """Reference or candidate text is blank after trimming."""


class BadLabel(DcrError):
    """A label flagged as binary is not exactly 0 or 1."""


# --- segmenter ----------------------------------------------------------


class NoSentences(DcrError):
    """Input contains no sentence material (only whitespace/punctuation)."""


# --- llm gateway --------------------------------------------------------


class GatewayError(DcrError):
    """Base class for backend transport problems."""


class TransportError(GatewayError):
    """Transient transport failure persisted after all retries."""


class Timeout(GatewayError):
    """Request timed out on every attempt."""


class ProviderRefusal(GatewayError):
    """Provider returned a non-retryable error (bad request, auth, ...)."""


class MockMiss(GatewayError):
    """Scripted mock backend has no entry matching the request."""


# --- prompts ------------------------------------------------------------


class UnknownTemplate(DcrError):
    """Requested template id is not in the registry."""


class MissingPlaceholder(DcrError):
    """Rendering was attempted without values for required placeholders."""

    def __init__(self, names: set[str]):
        self.names = frozenset(names)
        super().__init__(f"missing placeholders: {sorted(names)}")


# --- agents -------------------------------------------------------------


class AgentError(DcrError):
    """Base class for agent output problems."""


class ParseError(AgentError):
    """No JSON value could be extracted from the model output."""


class SchemaError(AgentError):
    """Extracted JSON does not have the expected shape."""


class LengthMismatch(AgentError):
    """Agent output cardinality does not match its input."""


class BadMark(AgentError):
    """Classifier emitted a mark outside {-1, +1}."""


class AllExcluded(AgentError):
    """Every verdict was excluded from scoring; the score is undefined."""


# --- pipeline -----------------------------------------------------------


class ItemFailed(DcrError):
    """One item's evaluation failed; wraps the underlying agent error."""

    def __init__(self, item_id: str, cause: Exception):
        self.item_id = item_id
        self.cause = cause
        super().__init__(f"item {item_id!r} failed: {cause}")


class Aborted(DcrError):
    """Batch run aborted on first failure (fail_policy=abort)."""


# --- stats --------------------------------------------------------------


class StatsError(DcrError):
    """Base class for undefined statistics."""


class DegenerateSeries(StatsError):
    """Series too short or constant; the statistic is undefined."""


class SingleClass(StatsError):
    """AUROC needs both a positive and a negative example."""


class NoInconsistent(StatsError):
    """Improvement rate is undefined when nothing was inconsistent."""


# --- bench io -----------------------------------------------------------


class FileMissing(DcrError):
    """Dataset or config file does not exist."""


class SchemaMismatch(DcrError):
    """A dataset row is missing mapped fields or fails validation."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class EmptyDataset(DcrError):
    """Dataset file parsed but produced zero items."""


class IoError(DcrError):
    """Report files could not be written."""
