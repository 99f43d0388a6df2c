"""Normalized bibliographic data model and file ingestion.

Records from the two bibliographic sources arrive as ``por.bib.v1``
documents (one per source) and are normalized into immutable value types.
A publication or citation is only as trustworthy as its DOI: malformed
DOIs are never repaired — a publication keeps the record with the DOI
cleared (the downstream pipeline rejects it visibly), a citation whose
mandatory cited-DOI is broken is dropped and counted.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import FileUnreadable, MalformedDoi, SchemaViolation

BIB_SCHEMA = "por.bib.v1"

YEAR_MIN = 1500
YEAR_MAX = 2200

# Crossref-style prefix rule, applied after trim + lowercase.
_DOI_RE = re.compile(r"10\.\d{4,9}/.+")


class SourceTag(str, Enum):
    """The two bibliographic sources every record is tagged with."""

    SCOPUS = "SCOPUS"
    WOS = "WOS"

    @classmethod
    def parse(cls, value: str) -> "SourceTag":
        try:
            return cls(str(value).upper())
        except ValueError:
            raise SchemaViolation(f"unknown source {value!r} (expected SCOPUS or WOS)") from None


@dataclass(frozen=True, order=True)
class Doi:
    """A normalized DOI: lowercased, trimmed, prefix-validated.

    Construct via :func:`validate_doi`; direct construction enforces the
    same invariant, so an already-normalized value round-trips unchanged.
    """

    value: str

    def __post_init__(self):
        if self.value != self.value.strip().lower() or not _DOI_RE.fullmatch(self.value):
            raise MalformedDoi(f"not a valid DOI: {self.value!r}")

    def __str__(self) -> str:
        return self.value


def validate_doi(raw: str) -> Doi:
    """Normalize ``raw`` to a :class:`Doi` or raise :class:`MalformedDoi`.

    Normalization is lowercase + surrounding-whitespace strip, nothing
    else; anything failing the ``10.<4-9 digits>/<suffix>`` grammar after
    that is rejected, signalling the record must be discarded, not fixed.
    """
    if not isinstance(raw, str):
        raise MalformedDoi(f"not a valid DOI: {raw!r}")
    return Doi(raw.strip().lower())


@dataclass(frozen=True)
class AuthorProfile:
    """An author's identities at the two sources."""

    scopus_id: str = ""
    wos_id: str = ""
    display_name: str = ""

    def __post_init__(self):
        if not self.scopus_id and not self.wos_id:
            raise SchemaViolation("author profile needs a scopus_id or a wos_id")
        for name, ident in (("scopus_id", self.scopus_id), ("wos_id", self.wos_id)):
            if ident and (ident != ident.strip() or any(ch.isspace() for ch in ident)):
                raise SchemaViolation(f"{name} must not contain whitespace: {ident!r}")

    def id_set(self) -> frozenset[str]:
        """Identifier set used for self-citation matching."""
        return frozenset(i for i in (self.scopus_id, self.wos_id) if i)

    def ref(self) -> str:
        """Stable author reference string used on blocks and in keyrings."""
        parts = []
        if self.scopus_id:
            parts.append(f"scopus:{self.scopus_id}")
        if self.wos_id:
            parts.append(f"wos:{self.wos_id}")
        return "+".join(parts)

    def to_doc(self) -> dict:
        return {
            "schema": "por.author.v1",
            "scopus_id": self.scopus_id,
            "wos_id": self.wos_id,
            "display_name": self.display_name,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "AuthorProfile":
        if not isinstance(doc, dict):
            raise SchemaViolation("author profile must be an object")
        return cls(
            scopus_id=_string_field(doc, "scopus_id", required=False),
            wos_id=_string_field(doc, "wos_id", required=False),
            display_name=_string_field(doc, "display_name", required=False),
        )


@dataclass(frozen=True)
class PublicationRecord:
    """One publication as reported by one source."""

    source: SourceTag
    title: str
    year: int
    doi: Doi | None = None
    author_ids: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not (YEAR_MIN <= self.year <= YEAR_MAX):
            raise SchemaViolation(f"year {self.year} outside [{YEAR_MIN}, {YEAR_MAX}]")

    def to_doc(self) -> dict:
        doc = {
            "title": self.title,
            "year": self.year,
            "author_ids": sorted(self.author_ids),
        }
        if self.doi is not None:
            doc["doi"] = self.doi.value
        return doc


@dataclass(frozen=True)
class CitationRecord:
    """One citation edge as reported by one source.

    ``cited_doi`` is mandatory; ``retracted`` is an explicit input flag
    (retraction detection is the data supplier's job, not ours).
    """

    source: SourceTag
    cited_doi: Doi
    citing_doi: Doi | None = None
    citing_author_ids: frozenset[str] = field(default_factory=frozenset)
    retracted: bool = False

    def to_doc(self) -> dict:
        doc = {
            "cited_doi": self.cited_doi.value,
            "citing_author_ids": sorted(self.citing_author_ids),
            "retracted": self.retracted,
        }
        if self.citing_doi is not None:
            doc["citing_doi"] = self.citing_doi.value
        return doc


@dataclass(frozen=True)
class IngestReport:
    """What ingestion kept, cleaned, or had to drop."""

    records_in: int = 0
    records_out: int = 0
    malformed_dois: int = 0  # DOI fields cleared (pub doi / citing_doi)
    dropped: int = 0  # citation records lost to a malformed cited_doi

    def to_doc(self) -> dict:
        return {
            "records_in": self.records_in,
            "records_out": self.records_out,
            "malformed_dois": self.malformed_dois,
            "dropped": self.dropped,
        }


# --- document parsing -------------------------------------------------------


def _string_field(doc: dict, name: str, required: bool = True, index: int | None = None) -> str:
    value = doc.get(name)
    if value is None:
        if required:
            raise SchemaViolation(f"missing field {name!r}", index=index)
        return ""
    if not isinstance(value, str):
        raise SchemaViolation(f"field {name!r} must be a string", index=index)
    return value


def _id_list_field(doc: dict, name: str, index: int | None) -> frozenset[str]:
    value = doc.get(name)
    if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
        raise SchemaViolation(f"field {name!r} must be a list of strings", index=index)
    return frozenset(value)


def _optional_doi(doc: dict, name: str, index: int | None) -> tuple[Doi | None, bool]:
    """Returns (doi, was_malformed). Absent/null -> (None, False)."""
    raw = doc.get(name)
    if raw is None:
        return None, False
    if not isinstance(raw, str):
        raise SchemaViolation(f"field {name!r} must be a string", index=index)
    try:
        return validate_doi(raw), False
    except MalformedDoi:
        return None, True


def read_bib_document(path: str | Path, source: SourceTag) -> dict:
    """Read and structurally check a por.bib.v1 file for ``source``."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != BIB_SCHEMA:
        raise SchemaViolation(f"{path}: expected schema {BIB_SCHEMA!r}")
    declared = SourceTag.parse(doc.get("source", ""))
    if declared is not source:
        raise SchemaViolation(f"{path}: declares source {declared.value}, expected {source.value}")
    for section in ("publications", "citations"):
        if section in doc and not isinstance(doc[section], list):
            raise SchemaViolation(f"{path}: {section!r} must be an array")
    return doc


def parse_publications(doc: dict, source: SourceTag) -> tuple[list[PublicationRecord], IngestReport]:
    records: list[PublicationRecord] = []
    malformed = 0
    entries = doc.get("publications", [])
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise SchemaViolation("publication record must be an object", index=i)
        title = _string_field(entry, "title", index=i)
        year = entry.get("year")
        if not isinstance(year, int) or isinstance(year, bool):
            raise SchemaViolation("field 'year' must be an integer", index=i)
        author_ids = _id_list_field(entry, "author_ids", index=i)
        doi, was_malformed = _optional_doi(entry, "doi", index=i)
        malformed += was_malformed
        try:
            records.append(
                PublicationRecord(source=source, title=title, year=year, doi=doi, author_ids=author_ids)
            )
        except SchemaViolation as exc:
            raise SchemaViolation(str(exc), index=i) from exc
    return records, IngestReport(
        records_in=len(entries), records_out=len(records), malformed_dois=malformed
    )


def parse_citations(doc: dict, source: SourceTag) -> tuple[list[CitationRecord], IngestReport]:
    records: list[CitationRecord] = []
    malformed = 0
    dropped = 0
    entries = doc.get("citations", [])
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise SchemaViolation("citation record must be an object", index=i)
        raw_cited = entry.get("cited_doi")
        if raw_cited is None:
            raise SchemaViolation("missing field 'cited_doi'", index=i)
        if not isinstance(raw_cited, str):
            raise SchemaViolation("field 'cited_doi' must be a string", index=i)
        citing_ids = _id_list_field(entry, "citing_author_ids", index=i)
        retracted = entry.get("retracted")
        if not isinstance(retracted, bool):
            raise SchemaViolation("field 'retracted' must be an explicit boolean", index=i)
        citing_doi, citing_malformed = _optional_doi(entry, "citing_doi", index=i)
        malformed += citing_malformed
        try:
            cited_doi = validate_doi(raw_cited)
        except MalformedDoi:
            # cited_doi is mandatory: nothing to clear, the record goes.
            dropped += 1
            continue
        records.append(
            CitationRecord(
                source=source,
                cited_doi=cited_doi,
                citing_doi=citing_doi,
                citing_author_ids=citing_ids,
                retracted=retracted,
            )
        )
    return records, IngestReport(
        records_in=len(entries), records_out=len(records), malformed_dois=malformed, dropped=dropped
    )


def ingest_publications(path: str | Path, source: SourceTag) -> tuple[list[PublicationRecord], IngestReport]:
    """Load the publication records of a por.bib.v1 file.

    Records with a present-but-malformed DOI are kept with the DOI cleared
    and counted in the report, so the downstream DOI filter stays
    observable.
    """
    return parse_publications(read_bib_document(path, source), source)


def ingest_citations(path: str | Path, source: SourceTag) -> tuple[list[CitationRecord], IngestReport]:
    """Load the citation records of a por.bib.v1 file."""
    return parse_citations(read_bib_document(path, source), source)


def bib_document(
    source: SourceTag,
    publications: list[PublicationRecord] = (),
    citations: list[CitationRecord] = (),
) -> dict:
    """Serialize records back to the por.bib.v1 layout (round-trip safe)."""
    for rec in list(publications) + list(citations):
        if rec.source is not source:
            raise SchemaViolation(f"record source {rec.source.value} != document source {source.value}")
    return {
        "schema": BIB_SCHEMA,
        "source": source.value,
        "publications": [p.to_doc() for p in publications],
        "citations": [c.to_doc() for c in citations],
    }
