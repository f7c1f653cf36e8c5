"""Exception types shared across the package.

Every domain failure carries a machine-readable ``code`` so the CLI and the
HTTP service can report errors uniformly.
"""

from __future__ import annotations


class DifferentiaError(Exception):
    """Base class for all domain errors."""

    code = "domain-error"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    @property
    def message(self) -> str:
        return str(self)


class HierarchyFormatError(DifferentiaError):
    """A hierarchy document could not be parsed into a valid tree.

    ``code`` is one of: syntax-error, invalid-document, duplicate-node-id,
    dangling-parent, multiple-roots, cycle-detected.
    """

    code = "invalid-document"


class UnknownNodeError(DifferentiaError):
    code = "unknown-node"


class InvalidRegionError(DifferentiaError):
    code = "invalid-region"


class SessionStateError(DifferentiaError):
    code = "session-state"


class HierarchyNotUsableError(DifferentiaError):
    """The hierarchy carries error-severity diagnostics and cannot drive sessions."""

    code = "hierarchy-not-usable"


class DuplicateCellError(DifferentiaError):
    code = "duplicate-cell"


class UndefinedAlphaError(DifferentiaError):
    code = "alpha-undefined"


class MissingGoldError(DifferentiaError):
    code = "missing-gold"


class CampaignStateError(DifferentiaError):
    code = "campaign-state"


class DuplicateRecordError(DifferentiaError):
    code = "duplicate-record"


class UnknownEntityError(DifferentiaError):
    """A campaign, task, session or annotator id does not resolve."""

    code = "unknown-entity"


class JournalCorruptError(DifferentiaError):
    code = "journal-corrupt"


class ModelSpecError(DifferentiaError):
    code = "invalid-model-spec"
