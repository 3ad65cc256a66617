"""Domain error taxonomy.

Every error carries a stable machine-readable ``code`` so the HTTP layer
and the CLI can map failures without string matching.
"""

from __future__ import annotations


class PromptCanvasError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def __init__(self, message: str = "", detail: object = None):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.detail = detail


# -- core-model ---------------------------------------------------------------

class EmptyOption(PromptCanvasError):
    code = "empty_option"


class EmptyValue(PromptCanvasError):
    code = "empty_value"


class IndexOutOfRange(PromptCanvasError):
    code = "index_out_of_range"


class UnknownWidget(PromptCanvasError):
    code = "unknown_widget"


# -- prompt-engine ------------------------------------------------------------

class EmptyText(PromptCanvasError):
    code = "empty_text"


class EmptyTitle(PromptCanvasError):
    code = "empty_title"


class EmptyPrompt(PromptCanvasError):
    code = "empty_prompt"


class NoActiveWidgets(PromptCanvasError):
    code = "no_active_widgets"


class SchemaViolation(PromptCanvasError):
    code = "schema_violation"

    def __init__(self, message: str, path: str = "$"):
        super().__init__(message, detail={"path": path})
        self.path = path


class DuplicateOptions(PromptCanvasError):
    code = "duplicate_options"


# -- llm-gateway --------------------------------------------------------------

class ProviderUnavailable(PromptCanvasError):
    code = "provider_unavailable"


class AuthFailure(PromptCanvasError):
    code = "auth_failure"


class SchemaViolationExhausted(PromptCanvasError):
    code = "schema_violation_exhausted"

    def __init__(self, message: str, attempts: int):
        super().__init__(message, detail={"attempts": attempts})
        self.attempts = attempts


class MissingFixture(PromptCanvasError):
    code = "missing_fixture"


class FixtureWriteError(PromptCanvasError):
    code = "fixture_write_error"


# -- workspace-store ----------------------------------------------------------

class UnknownWorkspace(PromptCanvasError):
    code = "unknown_workspace"


class NameConflict(PromptCanvasError):
    code = "name_conflict"


class EmptyName(PromptCanvasError):
    code = "empty_name"


class StorageFailure(PromptCanvasError):
    code = "storage_failure"


# -- api-service --------------------------------------------------------------

class FlowInProgress(PromptCanvasError):
    code = "flow_in_progress"
