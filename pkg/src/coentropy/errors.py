"""Exception hierarchy shared by all coentropy modules.

Three families map onto the CLI exit codes: ``DataError`` (bad inputs, exit
1), ``ConfigError`` (bad flags or specs, exit 2) and ``OracleFailure``
(entailment oracle unreachable or broken, exit 3).
"""

from __future__ import annotations


class CoentropyError(Exception):
    """Base class for every error raised by this package."""


class DataError(CoentropyError):
    """Invalid data supplied by the caller or read from a file."""


class ConfigError(CoentropyError):
    """Invalid configuration value or flag combination."""


class OracleFailure(CoentropyError):
    """The entailment oracle could not produce an answer."""


class InvalidDistribution(DataError):
    """Input vector is not a probability distribution over clusters."""


class InvalidEnsemble(DataError):
    """Ensemble members or weights violate the ensemble invariants."""


class SupportViolation(CoentropyError):
    """KL evaluated against a reference that does not cover the support.

    Inside the collaborative-entropy decomposition the reference (the
    ensemble mean) always covers every positively weighted member, so this
    error signals a caller bug, not a data problem.
    """


class InvalidCost(DataError):
    """Ground-cost matrix is not a valid metric matrix."""


class EmptyInput(DataError):
    """No samples to cluster, or a sample text is blank."""


class NoSamplesForModel(DataError):
    """A model index has no samples in the pooled set."""


class MissingLogprob(DataError):
    """Log-probability fields required by the current mode are absent."""


class DegenerateWeights(DataError):
    """Every reweighting factor clamped to zero; weights cannot renormalize."""


class DegenerateLabels(DataError):
    """All items share one correctness label; ranking metrics undefined."""


class MissingField(DataError):
    """A record lacks a field required by the requested metric."""


class MissingLabel(DataError):
    """Oracle-mode correctness requested but no label is present."""


class ParseError(DataError):
    """A dataset or cache file could not be parsed.

    Carries the 1-based line number (datasets) or byte offset (caches) of
    the failure.
    """

    def __init__(self, message: str, *, line: int | None = None,
                 offset: int | None = None):
        self.line = line
        self.offset = offset
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif offset is not None:
            where = f" (byte offset {offset})"
        super().__init__(f"{message}{where}")


class SchemaViolation(DataError):
    """A record is well-formed JSON but violates the dataset schema."""

    def __init__(self, field: str, message: str, *, line: int | None = None):
        self.field = field
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"field '{field}': {message}{where}")


class InvalidSpec(ConfigError):
    """Regime specification violates its invariants."""
