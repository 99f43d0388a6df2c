"""por-ledger: cross-source citation conflation + consent-gated metrics ledger.

The package merges an author's publication and citation records from two
bibliographic sources into unified informetrics, then lets the author
steer — through three explicit consents — whether a signed, fingerprinted
block carrying those metrics is appended to a replicated hash chain.

Layers, bottom to top:

    bibdata   normalized records, DOI validation, file ingestion
    conflate  DOI filtering, unification, classification, h-index metrics
    por       the consent state machine and attestation verification
    ledger    append-only hash chain, validation, persistence
    netsync   peer announcement, longest-valid-chain sync, simulation
    node      the HTTP service wrapping all of the above
    cli       the `por` command
"""

from .bibdata import (
    AuthorProfile,
    CitationRecord,
    Doi,
    IngestReport,
    PublicationRecord,
    SourceTag,
    ingest_citations,
    ingest_publications,
    validate_doi,
)
from .conflate import (
    CitationKey,
    ConflateResult,
    UnifiedMetrics,
    compute_metrics,
    conflate_author,
    filter_by_doi,
    unify_citations,
    unify_publications,
)
from .errors import (
    ClockSkew,
    IllegalTransition,
    InvalidPayload,
    MalformedDoi,
    PorError,
    SchemaViolation,
    SignatureFailure,
    StorageCorrupt,
)
from .keys import AuthorKey, Keyring, generate_keypair
from .ledger import Block, Chain, append_block, fingerprint, load_chain, persist_chain, validate_chain
from .netsync import PeerAddr, receive_block, resolve_conflicts, simulate
from .por import (
    BlockPayload,
    ConsentAttestation,
    ConsentSession,
    Evidence,
    SessionState,
    acknowledge_metrics,
    answer_publish,
    answer_retracted,
    answer_self,
    open_session,
    verify_attestation,
)

__version__ = "0.1.0"

__all__ = [
    "AuthorProfile",
    "AuthorKey",
    "Block",
    "BlockPayload",
    "Chain",
    "CitationKey",
    "CitationRecord",
    "ClockSkew",
    "ConflateResult",
    "ConsentAttestation",
    "ConsentSession",
    "Doi",
    "Evidence",
    "IllegalTransition",
    "IngestReport",
    "InvalidPayload",
    "Keyring",
    "MalformedDoi",
    "PeerAddr",
    "PorError",
    "PublicationRecord",
    "SchemaViolation",
    "SessionState",
    "SignatureFailure",
    "SourceTag",
    "StorageCorrupt",
    "UnifiedMetrics",
    "acknowledge_metrics",
    "answer_publish",
    "answer_retracted",
    "answer_self",
    "append_block",
    "compute_metrics",
    "conflate_author",
    "filter_by_doi",
    "fingerprint",
    "generate_keypair",
    "ingest_citations",
    "ingest_publications",
    "load_chain",
    "open_session",
    "persist_chain",
    "receive_block",
    "resolve_conflicts",
    "simulate",
    "unify_citations",
    "unify_publications",
    "validate_chain",
    "validate_doi",
    "verify_attestation",
]
