"""Exception hierarchy shared across the package.

Every error carries a stable ``code`` used by the CLI and the HTTP layer
when emitting machine-readable error documents.
"""

from __future__ import annotations


class PorError(Exception):
    """Base class for all por-ledger errors."""

    code = "Error"

    def to_doc(self) -> dict:
        return {"schema": "por.error.v1", "error": self.code, "detail": str(self)}


class MalformedDoi(PorError):
    """Raised when a string cannot be normalized into a valid DOI.

    Signals that the carrying record must be discarded (or its DOI field
    cleared), never repaired.
    """

    code = "MalformedDoi"


class FileUnreadable(PorError):
    code = "FileUnreadable"


class SchemaViolation(PorError):
    """A document does not conform to its declared schema.

    ``index`` names the offending record inside the document's record
    array when the violation is record-level.
    """

    code = "SchemaViolation"

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index

    def to_doc(self) -> dict:
        doc = super().to_doc()
        if self.index is not None:
            doc["index"] = self.index
        return doc


class IllegalTransition(PorError):
    """A consent operation was applied in a state that does not allow it."""

    code = "IllegalTransition"


class SignatureFailure(PorError):
    """The supplied key material cannot produce a signature."""

    code = "SignatureFailure"


class UnknownSession(PorError):
    """Session id is not in the store (never existed, or idle-expired)."""

    code = "UnknownSession"


class UnknownAuthor(PorError):
    """No key registered for the author reference."""

    code = "UnknownAuthor"


class InvalidPayload(PorError):
    """A block payload failed attestation verification."""

    code = "InvalidPayload"


class ClockSkew(PorError):
    """A new block's timestamp would precede its parent's."""

    code = "ClockSkew"


class StorageCorrupt(PorError):
    """A persisted chain failed decoding or validation on load."""

    code = "StorageCorrupt"

    def __init__(self, message: str, index: int | None = None, reason: str | None = None):
        super().__init__(message)
        self.index = index
        self.reason = reason

    def to_doc(self) -> dict:
        doc = super().to_doc()
        if self.index is not None:
            doc["index"] = self.index
        if self.reason is not None:
            doc["reason"] = self.reason
        return doc


class IoFailure(PorError):
    code = "IoFailure"


class ScriptError(PorError):
    """A simulation script event is malformed."""

    code = "ScriptError"


class PortInUse(PorError):
    code = "PortInUse"


class PeerUnreachable(PorError):
    """A peer did not answer; recorded per peer, never fatal."""

    code = "PeerUnreachable"
