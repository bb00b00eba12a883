"""Custom exceptions for the neurocortex simulator.

Every error carries a human-readable message plus a ``details`` dict so the
CLI can report failures in one consistent format.
"""

from typing import Any, Dict, Optional


class NeurocortexError(Exception):
    """Base exception for simulator errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """Render the error in the shape the CLI prints."""
        return {
            "error": {
                "type": type(self).__name__,
                "message": self.message,
                "details": self.details,
            }
        }


class ConfigurationError(NeurocortexError):
    """Invalid parameter values or an unreadable config file."""


class NetworkError(NeurocortexError):
    """Unknown neuron ids, duplicate synapses and other graph misuse."""


class StimulusError(NeurocortexError):
    """Negative, NaN or otherwise invalid external injection."""


class ActivationDomainError(NeurocortexError, ValueError):
    """Activation evaluated on a negative summed input."""


class LexiconError(NeurocortexError):
    """Duplicate, empty or unknown words."""


class RuleError(NeurocortexError):
    """Malformed rule or rule file."""

    def __init__(self, message: str, line: Optional[int] = None, details: Optional[Dict[str, Any]] = None):
        self.line = line
        details = dict(details or {})
        if line is not None:
            details["line"] = line
            message = f"line {line}: {message}"
        super().__init__(message, details)


class TopologyError(NeurocortexError):
    """Invalid sandglass layer description."""


class TraceError(NeurocortexError):
    """Trace file could not be written."""


class SnapshotError(NeurocortexError):
    """Snapshot could not be written or read."""


class SnapshotVersionError(SnapshotError):
    """Snapshot written by an unsupported format version."""

    def __init__(self, found: int, supported: int):
        super().__init__(
            f"snapshot format version {found} is not supported (expected {supported})",
            {"found": found, "supported": supported},
        )


class SnapshotChecksumError(SnapshotError):
    """Snapshot payload is truncated or corrupt."""


class ScenarioParseError(NeurocortexError):
    """Scenario file does not follow the scenario grammar."""

    def __init__(self, message: str, line: int, details: Optional[Dict[str, Any]] = None):
        self.line = line
        details = dict(details or {})
        details["line"] = line
        super().__init__(f"line {line}: {message}", details)


class ScenarioRuntimeError(NeurocortexError):
    """A scenario step failed while executing."""

    def __init__(self, message: str, step_index: int, details: Optional[Dict[str, Any]] = None):
        self.step_index = step_index
        details = dict(details or {})
        details["step"] = step_index
        super().__init__(f"step {step_index}: {message}", details)


class ScenarioAssertionError(NeurocortexError):
    """An ``assert`` step evaluated to false."""

    def __init__(self, expression: str, step_index: int, line: int, observed: Any):
        self.expression = expression
        self.step_index = step_index
        super().__init__(
            f"assertion failed at line {line}: {expression} (observed {observed!r})",
            {"step": step_index, "line": line, "expression": expression, "observed": repr(observed)},
        )
