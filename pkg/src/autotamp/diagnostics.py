from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class Code(str, Enum):
    # STL text / formula checks
    UNKNOWN_TOKEN = "unknown-token"
    ARITY_MISMATCH = "arity-mismatch"
    UNKNOWN_REGION = "unknown-region"
    MALFORMED_INTERVAL = "malformed-interval"
    UNBALANCED_STRUCTURE = "unbalanced-structure"
    # environment / trajectory checks
    SCHEMA = "schema"
    INVALID_REGION = "invalid-region"
    REGION_OUTSIDE_WORKSPACE = "region-outside-workspace"
    OVERLAPPING_START = "overlapping-start"
    START_OUTSIDE_WORKSPACE = "start-outside-workspace"
    SPEED_VIOLATION = "speed-violation"
    TIME_LIMIT_VIOLATION = "time-limit-violation"
    BAD_TRAJECTORY = "bad-trajectory"
    # planning
    EMPTY_WINDOW = "empty-window"
    INFEASIBLE = "infeasible"
    SOLVER_LIMIT = "solver-limit"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: Code
    message: str
    token_index: int | None = None

    def __post_init__(self):
        if not self.message:
            raise ValueError("diagnostic message must be non-empty")

    def __str__(self) -> str:
        where = f" (token {self.token_index})" if self.token_index is not None else ""
        return f"{self.severity.value}[{self.code.value}]{where}: {self.message}"

    def to_dict(self) -> dict:
        return {
            "severity": self.severity.value,
            "code": self.code.value,
            "message": self.message,
            "token_index": self.token_index,
        }


def error(code: Code, message: str, token_index: int | None = None) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, token_index)


class DiagnosticError(ValueError):
    """Raised when an input cannot be turned into a value; carries the diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


def render(diagnostics: list[Diagnostic]) -> str:
    return "\n".join(f"- {d}" for d in diagnostics)
