"""Diagnostic records and the exception hierarchy shared by every stage."""

from __future__ import annotations

from dataclasses import dataclass

ERROR = "error"
WARNING = "warning"

# Closed registry. Codes starting with E_ are errors, W_ are warnings.
CODES: dict[str, str] = {
    "E_CYCLE": "parent references form a cycle",
    "E_DANGLING_PARENT": "parent names an id that does not exist",
    "E_DUP_ID": "element id is used more than once",
    "E_BBOX_INVERTED": "bounding box has zero or negative width or height",
    "E_BBOX_OOB": "bounding box extends outside the canvas",
    "E_BBOX_ESCAPE": "child bounding box is not inside its parent's box",
    "E_MISSING_FIELD": "required field is missing, empty or of the wrong type",
    "E_CHILD_OF_LEAF": "element other than a panel has children",
    "W_BBOX_OOB": "bounding box extends outside the canvas (calibration clamps it)",
    "W_BBOX_ESCAPE": "child box escapes its parent (calibration repairs it)",
    "W_CHILD_OF_LEAF": "element other than a panel has children",
    "W_ORPHAN_PROMOTED": "element with a missing parent was attached to the canvas root",
    "W_BOX_EXPANDED": "clamped box collapsed and was expanded to the minimum size",
    "W_FUSION_REJECTED": "detector box disagreed with the scaffold box and was ignored",
    "W_REPARENTED": "element moved to the smallest container that holds it",
    "W_UNKNOWN_TAG": "UXML tag outside the label mapping; kept as a fallback label",
    "W_UNSUPPORTED_FEATURE": "layout construct outside absolute positioning; element skipped",
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    element_id: str | None = None
    severity: str = ""

    def __post_init__(self) -> None:
        if self.code not in CODES:
            raise ValueError(f"unregistered diagnostic code {self.code!r}")
        if not self.severity:
            object.__setattr__(self, "severity", ERROR if self.code.startswith("E_") else WARNING)

    @property
    def is_error(self) -> bool:
        return self.severity == ERROR

    def format_line(self) -> str:
        return f"{self.severity} {self.code} {self.element_id or '-'}: {self.message}"

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "element_id": self.element_id,
            "message": self.message,
            "severity": self.severity,
        }


def errors(diagnostics) -> list[Diagnostic]:
    return [d for d in diagnostics if d.is_error]


class UIReconError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(UIReconError):
    """Input text is not well-formed YAML, JSON or XML."""


class ContractError(UIReconError):
    """A precondition or postcondition of an operation was violated."""


class ConfigError(UIReconError):
    pass


class _DiagnosticError(UIReconError):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.format_line())
        self.diagnostic = diagnostic

    @property
    def code(self) -> str:
        return self.diagnostic.code


class SchemaError(_DiagnosticError):
    """Document parsed but does not match the scaffold schema.

    ``payload`` keeps the raw text that failed, when known.
    """

    def __init__(self, diagnostic: Diagnostic, payload: str | None = None):
        super().__init__(diagnostic)
        self.payload = payload


class GraphError(_DiagnosticError):
    pass


class CalibrationError(UIReconError):
    pass


class AssetError(UIReconError):
    pass


class BackendError(UIReconError):
    """A model backend call failed after exhausting retries.

    ``kind`` is one of ``timeout``, ``transport``, ``http`` or ``protocol``.
    """

    def __init__(self, message: str, *, role: str = "", kind: str = "transport", status: int | None = None):
        super().__init__(message)
        self.role = role
        self.kind = kind
        self.status = status
