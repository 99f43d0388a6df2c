"""Proof-of-Reference consent sessions and attestation verification.

A session walks an author through three decisions, strictly in order:

    AWAIT_SELF -> AWAIT_RETRACTED -> METRICS_READY -> AWAIT_PUBLISH
                                                        |-- agree    -> PUBLISHED (block payload)
                                                        '-- decline  -> DECLINED  (render-only metrics)

METRICS_READY -> AWAIT_PUBLISH is an explicit acknowledgment that the
author has seen the computed metrics before being asked to publish;
programmatic callers acknowledge immediately.

A published payload carries everything a peer needs to re-check it
without the off-chain records: the sorted publication DOI list, the
sorted citation keys with their self/retracted classification, the
metrics, and a signed attestation of the three consents. The validity
rule (``verify_attestation``) is: signature verifies against the author's
registered key, the dataset digest matches the embedded evidence, and the
metrics reproduce exactly from that evidence under the attested flags.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field
from enum import Enum

from .bibdata import AuthorProfile
from .canon import canonical_json_bytes, fingerprint
from .clocks import Clock, system_clock
from .conflate import (
    ConflateResult,
    UnifiedMetrics,
    compute_metrics,
    h_index_from_counts,
)
from .errors import IllegalTransition, SchemaViolation, SignatureFailure, UnknownSession
from .keys import AuthorKey, sign, verify

DEFAULT_SESSION_TIMEOUT_MS = 60 * 60 * 1000  # sessions idle longer than this expire


class SessionState(str, Enum):
    AWAIT_SELF = "AWAIT_SELF"
    AWAIT_RETRACTED = "AWAIT_RETRACTED"
    METRICS_READY = "METRICS_READY"
    AWAIT_PUBLISH = "AWAIT_PUBLISH"
    PUBLISHED = "PUBLISHED"
    DECLINED = "DECLINED"


TERMINAL_STATES = frozenset({SessionState.PUBLISHED, SessionState.DECLINED})


@dataclass(frozen=True)
class EvidenceCitation:
    """One citation key plus its classification, as embedded in a payload."""

    cited_doi: str
    citing_doi: str
    self_citation: bool
    retracted: bool

    def to_doc(self) -> dict:
        return {
            "cited_doi": self.cited_doi,
            "citing_doi": self.citing_doi,
            "self_citation": self.self_citation,
            "retracted": self.retracted,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "EvidenceCitation":
        try:
            return cls(
                cited_doi=doc["cited_doi"],
                citing_doi=doc["citing_doi"],
                self_citation=doc["self_citation"],
                retracted=doc["retracted"],
            )
        except (KeyError, TypeError) as exc:
            raise SchemaViolation(f"bad evidence citation: {exc}") from exc


@dataclass(frozen=True)
class Evidence:
    """Sorted publication DOIs and classified citation keys.

    This is the on-chain dataset a peer recomputes metrics from; full
    bibliographic records never leave the node.
    """

    publications: tuple[str, ...]
    citations: tuple[EvidenceCitation, ...]

    @classmethod
    def from_conflate(cls, result: ConflateResult) -> "Evidence":
        citations = [
            EvidenceCitation(
                cited_doi=key.cited_doi.value,
                citing_doi=key.citing_doi.value,
                self_citation=key in result.self_citation_keys,
                retracted=key in result.retracted_citation_keys,
            )
            for key in result.all_citation_keys()
        ]
        return cls(
            publications=tuple(sorted(d.value for d in result.unified_pub_dois)),
            citations=tuple(sorted(citations, key=lambda c: (c.cited_doi, c.citing_doi))),
        )

    def digest(self) -> str:
        """Dataset fingerprint covering DOIs, keys, and classification flags."""
        return fingerprint(
            canonical_json_bytes(
                {
                    "publications": list(self.publications),
                    "citations": [
                        [c.cited_doi, c.citing_doi, c.self_citation, c.retracted]
                        for c in self.citations
                    ],
                }
            )
        )

    def metrics_under(self, include_self: bool, include_retracted: bool) -> UnifiedMetrics:
        """Recompute the metrics triple from the embedded evidence alone."""
        pubs = set(self.publications)
        counts = {doi: 0 for doi in pubs}
        for citation in self.citations:
            if citation.cited_doi not in pubs:
                continue
            if citation.self_citation and not include_self:
                continue
            if citation.retracted and not include_retracted:
                continue
            counts[citation.cited_doi] += 1
        return UnifiedMetrics(
            h_index=h_index_from_counts(counts.values()),
            publication_count=len(pubs),
            citation_count=sum(counts.values()),
            included_self=include_self,
            included_retracted=include_retracted,
        )

    def to_doc(self) -> dict:
        return {
            "publications": list(self.publications),
            "citations": [c.to_doc() for c in self.citations],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Evidence":
        try:
            return cls(
                publications=tuple(doc["publications"]),
                citations=tuple(EvidenceCitation.from_doc(c) for c in doc["citations"]),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaViolation(f"bad evidence document: {exc}") from exc


@dataclass(frozen=True)
class ConsentAttestation:
    """The signed record of the author's three decisions.

    The signature is over :func:`attestation_message` — a canonical,
    field-ordered byte encoding — so it is bit-stable everywhere.
    """

    include_self: bool
    include_retracted: bool
    publish: bool
    dataset_digest: str
    author_public_key: str
    signature: str
    decided_at: int

    def to_doc(self) -> dict:
        return {
            "include_self": self.include_self,
            "include_retracted": self.include_retracted,
            "publish": self.publish,
            "dataset_digest": self.dataset_digest,
            "author_public_key": self.author_public_key,
            "signature": self.signature,
            "decided_at": self.decided_at,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ConsentAttestation":
        try:
            return cls(
                include_self=doc["include_self"],
                include_retracted=doc["include_retracted"],
                publish=doc["publish"],
                dataset_digest=doc["dataset_digest"],
                author_public_key=doc["author_public_key"],
                signature=doc["signature"],
                decided_at=doc["decided_at"],
            )
        except (KeyError, TypeError) as exc:
            raise SchemaViolation(f"bad attestation document: {exc}") from exc


def attestation_message(
    author_ref: str,
    include_self: bool,
    include_retracted: bool,
    publish: bool,
    dataset_digest: str,
    decided_at: int,
) -> bytes:
    """Canonical attestation bytes — the exact message that gets signed.

    Binding the author reference prevents replaying an attestation onto a
    different author's block.
    """
    return canonical_json_bytes(
        {
            "author_ref": author_ref,
            "dataset_digest": dataset_digest,
            "decided_at": decided_at,
            "include_retracted": include_retracted,
            "include_self": include_self,
            "publish": publish,
        }
    )


@dataclass(frozen=True)
class BlockPayload:
    """Everything a ledger block carries for one published metrics record."""

    author_ref: str
    metrics: UnifiedMetrics
    evidence: Evidence
    attestation: ConsentAttestation

    def to_doc(self) -> dict:
        return {
            "author_ref": self.author_ref,
            "metrics": self.metrics.to_doc(),
            "evidence": self.evidence.to_doc(),
            "attestation": self.attestation.to_doc(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "BlockPayload":
        if not isinstance(doc, dict):
            raise SchemaViolation("payload must be an object")
        try:
            return cls(
                author_ref=doc["author_ref"],
                metrics=UnifiedMetrics.from_doc(doc["metrics"]),
                evidence=Evidence.from_doc(doc["evidence"]),
                attestation=ConsentAttestation.from_doc(doc["attestation"]),
            )
        except KeyError as exc:
            raise SchemaViolation(f"payload missing field {exc}") from exc


def verify_attestation(payload: BlockPayload, public_key: str | None = None) -> bool:
    """The Proof-of-Reference validity rule.

    True iff, in order: the embedded key matches the registered one (when
    given), the detached signature verifies, the dataset digest matches a
    digest recomputed from the embedded evidence, publish consent was
    affirmative, and the metrics reproduce exactly under the attested
    flags. Any tampering with metrics, flags, evidence, or signature
    breaks at least one of these.
    """
    att = payload.attestation
    if public_key is not None and public_key != att.author_public_key:
        return False
    message = attestation_message(
        payload.author_ref,
        att.include_self,
        att.include_retracted,
        att.publish,
        att.dataset_digest,
        att.decided_at,
    )
    if not verify(att.author_public_key, message, att.signature):
        return False
    if payload.evidence.digest() != att.dataset_digest:
        return False
    if not att.publish:
        return False
    try:
        expected = payload.evidence.metrics_under(att.include_self, att.include_retracted)
    except SchemaViolation:
        return False
    return payload.metrics == expected


# --- the consent session ----------------------------------------------------


@dataclass
class ConsentSession:
    """State of one author's walk through the three consents.

    Single-writer: consent answers for one session must be serialized by
    the caller (the :class:`SessionStore` hands out a per-session lock).
    """

    session_id: str
    author: AuthorProfile
    conflate: ConflateResult
    created_at: int
    state: SessionState = SessionState.AWAIT_SELF
    include_self: bool | None = None
    include_retracted: bool | None = None
    metrics: UnifiedMetrics | None = None
    last_touched: int = 0

    def _require(self, expected: SessionState, op: str) -> None:
        if self.state is not expected:
            raise IllegalTransition(
                f"{op} requires state {expected.value}, session {self.session_id} is {self.state.value}"
            )


@dataclass(frozen=True)
class PublishOutcome:
    """Result of the final consent: a payload bound for the ledger, or a
    render-only metrics view when the author declined."""

    published: bool
    metrics: UnifiedMetrics
    payload: BlockPayload | None = None


def open_session(
    author: AuthorProfile, conflate: ConflateResult, clock: Clock = system_clock
) -> ConsentSession:
    """Start a consent session; the id is fresh and unpredictable."""
    conflate.check_invariants()
    now = clock()
    return ConsentSession(
        session_id=secrets.token_hex(16),
        author=author,
        conflate=conflate,
        created_at=now,
        last_touched=now,
    )


def answer_self(session: ConsentSession, agree: bool) -> ConsentSession:
    """First consent: count self-citations as actual citations, or discard."""
    session._require(SessionState.AWAIT_SELF, "answer_self")
    session.include_self = agree
    session.state = SessionState.AWAIT_RETRACTED
    return session


def answer_retracted(session: ConsentSession, agree: bool) -> ConsentSession:
    """Second consent: keep or reject retracted citations; metrics follow."""
    session._require(SessionState.AWAIT_RETRACTED, "answer_retracted")
    session.include_retracted = agree
    session.metrics = compute_metrics(session.conflate, session.include_self, agree)
    session.state = SessionState.METRICS_READY
    return session


def acknowledge_metrics(session: ConsentSession) -> ConsentSession:
    """The author has seen the metrics; publishing may now be asked."""
    session._require(SessionState.METRICS_READY, "acknowledge_metrics")
    session.state = SessionState.AWAIT_PUBLISH
    return session


def answer_publish(
    session: ConsentSession,
    agree: bool,
    signing_key: AuthorKey | None = None,
    clock: Clock = system_clock,
) -> PublishOutcome:
    """Final consent: build the signed block payload, or decline.

    Declining is terminal — the metrics are only rendered back, nothing
    reaches the ledger.
    """
    session._require(SessionState.AWAIT_PUBLISH, "answer_publish")
    assert session.metrics is not None and session.include_self is not None
    if not agree:
        session.state = SessionState.DECLINED
        return PublishOutcome(published=False, metrics=session.metrics)

    author_ref = session.author.ref()
    if signing_key is None or not signing_key.can_sign():
        raise SignatureFailure(f"no signing key available for {author_ref!r}")
    if signing_key.author_ref != author_ref:
        raise SignatureFailure(
            f"signing key belongs to {signing_key.author_ref!r}, session author is {author_ref!r}"
        )
    evidence = Evidence.from_conflate(session.conflate)
    digest = evidence.digest()
    decided_at = clock()
    message = attestation_message(
        author_ref, session.include_self, session.include_retracted, True, digest, decided_at
    )
    attestation = ConsentAttestation(
        include_self=session.include_self,
        include_retracted=session.include_retracted,
        publish=True,
        dataset_digest=digest,
        author_public_key=signing_key.public_key,
        signature=sign(signing_key.private_key, message),
        decided_at=decided_at,
    )
    payload = BlockPayload(
        author_ref=author_ref,
        metrics=session.metrics,
        evidence=evidence,
        attestation=attestation,
    )
    session.state = SessionState.PUBLISHED
    return PublishOutcome(published=True, metrics=session.metrics, payload=payload)


class SessionStore:
    """Thread-safe registry of live sessions with idle expiry.

    Lookups touch the session; sessions idle past the timeout vanish as if
    they never existed. Mutating callers serialize per session via
    :meth:`lock_for`.
    """

    def __init__(self, clock: Clock = system_clock, idle_timeout_ms: int = DEFAULT_SESSION_TIMEOUT_MS):
        self._clock = clock
        self._timeout = idle_timeout_ms
        self._sessions: dict[str, ConsentSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._mutex = threading.Lock()

    def open(self, author: AuthorProfile, conflate: ConflateResult) -> ConsentSession:
        session = open_session(author, conflate, self._clock)
        with self._mutex:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        return session

    def _sweep(self, now: int) -> None:
        stale = [
            sid
            for sid, session in self._sessions.items()
            if now - session.last_touched > self._timeout
        ]
        for sid in stale:
            del self._sessions[sid]
            del self._locks[sid]

    def get(self, session_id: str) -> ConsentSession:
        now = self._clock()
        with self._mutex:
            self._sweep(now)
            session = self._sessions.get(session_id)
            if session is None:
                raise UnknownSession(f"no live session {session_id!r}")
            session.last_touched = now
            return session

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._mutex:
            lock = self._locks.get(session_id)
        if lock is None:
            raise UnknownSession(f"no live session {session_id!r}")
        return lock

    def __len__(self) -> int:
        return len(self._sessions)
