"""Cross-source conflation: DOI filtering, unification, classification, metrics.

The pipeline runs in four pure steps:

1. ``filter_by_doi``       — publications without a DOI are rejected (counted).
2. ``unify_publications``  — DOI set algebra partitions the two sources into
                             common / unique-per-source / unified sets.
3. ``unify_citations``     — citations are keyed by (cited, citing) DOI pairs,
                             deduplicated across sources, and restricted to
                             the unified publication set; zero cross-source
                             overlap (while both sources contributed) raises
                             the audit flag.
4. ``classify_citations``  — keys touching the author's own identifiers are
                             self-citations; keys any source reports as
                             retracted are retracted.

``compute_metrics`` then turns a result plus the author's two inclusion
choices into the (h-index, publications, citations) triple a ledger block
carries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .bibdata import AuthorProfile, CitationRecord, Doi, PublicationRecord, SourceTag
from .errors import SchemaViolation


@dataclass(frozen=True, order=True)
class CitationKey:
    """Cross-source deduplication identity of one citation edge."""

    cited_doi: Doi
    citing_doi: Doi

    def to_pair(self) -> list[str]:
        return [self.cited_doi.value, self.citing_doi.value]

    @classmethod
    def from_pair(cls, pair) -> "CitationKey":
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise SchemaViolation(f"citation key must be a [cited, citing] pair: {pair!r}")
        return cls(Doi(pair[0]), Doi(pair[1]))


@dataclass(frozen=True)
class PublicationPartition:
    """Outcome of DOI set algebra over the two filtered publication lists."""

    common: frozenset[Doi]
    unique_scopus: frozenset[Doi]
    unique_wos: frozenset[Doi]
    unified: frozenset[Doi]


@dataclass(frozen=True)
class CitationUnification:
    """Deduplicated citation keys, before self/retracted classification."""

    citations_by_pub: Mapping[Doi, frozenset[CitationKey]]
    common_citation_count: int
    rejected_citation_count: int
    citation_sources: frozenset[SourceTag]
    audit_flag: bool


@dataclass(frozen=True)
class UnifiedMetrics:
    """The informetrics triple published in a block, plus the consent flags
    it was computed under."""

    h_index: int
    publication_count: int
    citation_count: int
    included_self: bool
    included_retracted: bool

    def __post_init__(self):
        if self.h_index > self.publication_count:
            raise SchemaViolation("h_index cannot exceed publication count")
        if self.citation_count < self.h_index * self.h_index:
            raise SchemaViolation("citation count below h_index^2")

    def to_doc(self) -> dict:
        return {
            "h_index": self.h_index,
            "publication_count": self.publication_count,
            "citation_count": self.citation_count,
            "included_self": self.included_self,
            "included_retracted": self.included_retracted,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "UnifiedMetrics":
        try:
            return cls(
                h_index=doc["h_index"],
                publication_count=doc["publication_count"],
                citation_count=doc["citation_count"],
                included_self=doc["included_self"],
                included_retracted=doc["included_retracted"],
            )
        except (KeyError, TypeError) as exc:
            raise SchemaViolation(f"bad metrics document: {exc}") from exc


@dataclass(frozen=True)
class ConflateResult:
    """The unified view of one author across both sources."""

    unified_pub_dois: frozenset[Doi]
    common_pub_dois: frozenset[Doi]
    unique_pub_dois_by_source: Mapping[SourceTag, frozenset[Doi]]
    rejected_pub_count: int
    citations_by_pub: Mapping[Doi, frozenset[CitationKey]]
    common_citation_count: int
    rejected_citation_count: int
    self_citation_keys: frozenset[CitationKey]
    retracted_citation_keys: frozenset[CitationKey]
    citation_sources: frozenset[SourceTag]
    audit_flag: bool

    def all_citation_keys(self) -> frozenset[CitationKey]:
        keys: set[CitationKey] = set()
        for bucket in self.citations_by_pub.values():
            keys |= bucket
        return frozenset(keys)

    def check_invariants(self) -> None:
        """Raise SchemaViolation if the structural invariants do not hold."""
        unique_s = self.unique_pub_dois_by_source.get(SourceTag.SCOPUS, frozenset())
        unique_w = self.unique_pub_dois_by_source.get(SourceTag.WOS, frozenset())
        if not self.common_pub_dois <= self.unified_pub_dois:
            raise SchemaViolation("common publications not within unified set")
        if unique_s & self.common_pub_dois or unique_w & self.common_pub_dois:
            raise SchemaViolation("unique publication sets overlap the common set")
        if self.unified_pub_dois != self.common_pub_dois | unique_s | unique_w:
            raise SchemaViolation("unified set is not common + unique partitions")
        keys = self.all_citation_keys()
        if not self.self_citation_keys <= keys:
            raise SchemaViolation("self citation keys outside the kept citation set")
        if not self.retracted_citation_keys <= keys:
            raise SchemaViolation("retracted citation keys outside the kept citation set")
        if set(self.citations_by_pub) - set(self.unified_pub_dois):
            raise SchemaViolation("citations recorded for non-unified publications")
        if self.rejected_pub_count < 0 or self.common_citation_count < 0:
            raise SchemaViolation("negative counters")
        both_contributed = len(self.citation_sources) == 2
        if (self.common_citation_count == 0 and both_contributed) != self.audit_flag:
            raise SchemaViolation("audit flag inconsistent with citation overlap")

    def to_doc(self) -> dict:
        return {
            "unified_pub_dois": sorted(d.value for d in self.unified_pub_dois),
            "common_pub_dois": sorted(d.value for d in self.common_pub_dois),
            "unique_pub_dois_by_source": {
                tag.value: sorted(d.value for d in dois)
                for tag, dois in sorted(self.unique_pub_dois_by_source.items(), key=lambda kv: kv[0].value)
            },
            "rejected_pub_count": self.rejected_pub_count,
            "citations_by_pub": {
                doi.value: sorted(k.citing_doi.value for k in keys)
                for doi, keys in sorted(self.citations_by_pub.items())
            },
            "common_citation_count": self.common_citation_count,
            "rejected_citation_count": self.rejected_citation_count,
            "self_citation_keys": sorted(k.to_pair() for k in self.self_citation_keys),
            "retracted_citation_keys": sorted(k.to_pair() for k in self.retracted_citation_keys),
            "citation_sources": sorted(t.value for t in self.citation_sources),
            "audit_flag": self.audit_flag,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ConflateResult":
        try:
            citations_by_pub = {
                Doi(cited): frozenset(CitationKey(Doi(cited), Doi(citing)) for citing in citings)
                for cited, citings in doc["citations_by_pub"].items()
            }
            return cls(
                unified_pub_dois=frozenset(Doi(d) for d in doc["unified_pub_dois"]),
                common_pub_dois=frozenset(Doi(d) for d in doc["common_pub_dois"]),
                unique_pub_dois_by_source={
                    SourceTag.parse(tag): frozenset(Doi(d) for d in dois)
                    for tag, dois in doc["unique_pub_dois_by_source"].items()
                },
                rejected_pub_count=doc["rejected_pub_count"],
                citations_by_pub=citations_by_pub,
                common_citation_count=doc["common_citation_count"],
                rejected_citation_count=doc["rejected_citation_count"],
                self_citation_keys=frozenset(
                    CitationKey.from_pair(p) for p in doc["self_citation_keys"]
                ),
                retracted_citation_keys=frozenset(
                    CitationKey.from_pair(p) for p in doc["retracted_citation_keys"]
                ),
                citation_sources=frozenset(SourceTag.parse(t) for t in doc["citation_sources"]),
                audit_flag=doc["audit_flag"],
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise SchemaViolation(f"bad conflate document: {exc}") from exc


# --- pipeline steps ---------------------------------------------------------


def filter_by_doi(pubs: Iterable[PublicationRecord]) -> tuple[list[PublicationRecord], int]:
    """Keep publications that carry a DOI; count the rejects."""
    pubs = list(pubs)
    kept = [p for p in pubs if p.doi is not None]
    return kept, len(pubs) - len(kept)


def unify_publications(
    scopus: Iterable[PublicationRecord], wos: Iterable[PublicationRecord]
) -> PublicationPartition:
    """Partition the two DOI-filtered publication lists by DOI set algebra.

    Duplicates within one source collapse to a single DOI.
    """
    scopus_dois = frozenset(p.doi for p in scopus if p.doi is not None)
    wos_dois = frozenset(p.doi for p in wos if p.doi is not None)
    common = scopus_dois & wos_dois
    return PublicationPartition(
        common=common,
        unique_scopus=scopus_dois - common,
        unique_wos=wos_dois - common,
        unified=scopus_dois | wos_dois,
    )


def unify_citations(
    citations: Iterable[CitationRecord], unified_pubs: frozenset[Doi]
) -> CitationUnification:
    """Deduplicate citations across sources and restrict to unified targets.

    Citations without a citing DOI fail the second-level DOI filter;
    citations aimed at publications outside the unified set are dropped
    (the citation data derives from the unified publication list).
    """
    keys_by_source: dict[SourceTag, set[CitationKey]] = {}
    by_pub: dict[Doi, set[CitationKey]] = {}
    rejected = 0
    for record in citations:
        if record.citing_doi is None:
            rejected += 1
            continue
        if record.cited_doi not in unified_pubs:
            rejected += 1
            continue
        key = CitationKey(record.cited_doi, record.citing_doi)
        keys_by_source.setdefault(record.source, set()).add(key)
        by_pub.setdefault(record.cited_doi, set()).add(key)

    scopus_keys = keys_by_source.get(SourceTag.SCOPUS, set())
    wos_keys = keys_by_source.get(SourceTag.WOS, set())
    common_count = len(scopus_keys & wos_keys)
    sources = frozenset(tag for tag, keys in keys_by_source.items() if keys)
    # Zero overlap is only suspicious when both sources actually spoke.
    audit = common_count == 0 and len(sources) == 2
    return CitationUnification(
        citations_by_pub={doi: frozenset(keys) for doi, keys in by_pub.items()},
        common_citation_count=common_count,
        rejected_citation_count=rejected,
        citation_sources=sources,
        audit_flag=audit,
    )


def classify_citations(
    unification: CitationUnification,
    profile: AuthorProfile,
    citations: Iterable[CitationRecord],
    partition: PublicationPartition,
    rejected_pub_count: int,
) -> ConflateResult:
    """Mark self and retracted citation keys and assemble the full result.

    A key is a self-citation if any contributing record's citing authors
    intersect the profile's identifiers, and retracted if any source says
    so — an any-source disjunction in both cases.
    """
    kept_keys = set()
    for bucket in unification.citations_by_pub.values():
        kept_keys |= bucket
    own_ids = profile.id_set()
    self_keys: set[CitationKey] = set()
    retracted_keys: set[CitationKey] = set()
    for record in citations:
        if record.citing_doi is None:
            continue
        key = CitationKey(record.cited_doi, record.citing_doi)
        if key not in kept_keys:
            continue
        if record.citing_author_ids & own_ids:
            self_keys.add(key)
        if record.retracted:
            retracted_keys.add(key)
    return ConflateResult(
        unified_pub_dois=partition.unified,
        common_pub_dois=partition.common,
        unique_pub_dois_by_source={
            SourceTag.SCOPUS: partition.unique_scopus,
            SourceTag.WOS: partition.unique_wos,
        },
        rejected_pub_count=rejected_pub_count,
        citations_by_pub=unification.citations_by_pub,
        common_citation_count=unification.common_citation_count,
        rejected_citation_count=unification.rejected_citation_count,
        self_citation_keys=frozenset(self_keys),
        retracted_citation_keys=frozenset(retracted_keys),
        citation_sources=unification.citation_sources,
        audit_flag=unification.audit_flag,
    )


def conflate_author(
    profile: AuthorProfile,
    scopus_pubs: Iterable[PublicationRecord],
    wos_pubs: Iterable[PublicationRecord],
    citations: Iterable[CitationRecord],
) -> ConflateResult:
    """Run the whole pipeline: filter, unify, deduplicate, classify."""
    citations = list(citations)
    scopus_kept, scopus_rejected = filter_by_doi(scopus_pubs)
    wos_kept, wos_rejected = filter_by_doi(wos_pubs)
    partition = unify_publications(scopus_kept, wos_kept)
    unification = unify_citations(citations, partition.unified)
    return classify_citations(
        unification, profile, citations, partition, scopus_rejected + wos_rejected
    )


# --- metrics ----------------------------------------------------------------


def h_index_from_counts(counts: Iterable[int]) -> int:
    """Largest h with at least h entries >= h (descending-sort scan)."""
    ordered = sorted(counts, reverse=True)
    h = 0
    for i, count in enumerate(ordered):
        if count >= i + 1:
            h = i + 1
        else:
            break
    return h


def effective_citation_counts(
    result: ConflateResult, include_self: bool, include_retracted: bool
) -> dict[Doi, int]:
    """Per-publication citation counts after consent-driven exclusions.

    A key that is both self and retracted is excluded once (set union).
    """
    excluded: set[CitationKey] = set()
    if not include_self:
        excluded |= result.self_citation_keys
    if not include_retracted:
        excluded |= result.retracted_citation_keys
    return {
        doi: len(result.citations_by_pub.get(doi, frozenset()) - excluded)
        for doi in result.unified_pub_dois
    }


def compute_metrics(
    result: ConflateResult, include_self: bool, include_retracted: bool
) -> UnifiedMetrics:
    """Unified metrics under the author's two inclusion decisions."""
    counts = effective_citation_counts(result, include_self, include_retracted)
    return UnifiedMetrics(
        h_index=h_index_from_counts(counts.values()),
        publication_count=len(result.unified_pub_dois),
        citation_count=sum(counts.values()),
        included_self=include_self,
        included_retracted=include_retracted,
    )


def audit_report_doc(result: ConflateResult) -> dict:
    """The por.audit.v1 document the CLI emits alongside a conflate run."""
    return {
        "schema": "por.audit.v1",
        "common_citation_count": result.common_citation_count,
        "audit_flag": result.audit_flag,
        "rejected_publications": result.rejected_pub_count,
        "rejected_citations": result.rejected_citation_count,
    }
