"""Walk the conflation pipeline by hand on a tiny two-source dataset.

Shows each stage: DOI filtering, publication set algebra, citation
deduplication, self/retracted classification, the audit trigger, and the
metrics under all four consent combinations.

Run: python demos/01_conflate_pipeline.py
"""

from por_ledger import (
    AuthorProfile,
    CitationRecord,
    PublicationRecord,
    SourceTag,
    compute_metrics,
    conflate_author,
    validate_doi,
)
from por_ledger.conflate import audit_report_doc


def dataset():
    author = AuthorProfile(scopus_id="57200000001", wos_id="A-1234-2019", display_name="A. Example")
    scopus_pubs = [
        PublicationRecord(SourceTag.SCOPUS, "Alpha", 2019, validate_doi("10.1000/a"), frozenset(["57200000001"])),
        PublicationRecord(SourceTag.SCOPUS, "Beta", 2020, validate_doi("10.1000/b"), frozenset(["57200000001"])),
        PublicationRecord(SourceTag.SCOPUS, "Gamma (no DOI yet)", 2021, None, frozenset(["57200000001"])),
    ]
    wos_pubs = [
        PublicationRecord(SourceTag.WOS, "Alpha", 2019, validate_doi("10.1000/a"), frozenset(["A-1234-2019"])),
        PublicationRecord(SourceTag.WOS, "Ceta", 2021, validate_doi("10.1000/c"), frozenset(["A-1234-2019"])),
    ]
    citations = [
        # Scopus's view: one self-citation, two independent ones.
        CitationRecord(SourceTag.SCOPUS, validate_doi("10.1000/a"), validate_doi("10.2000/c1"),
                       frozenset(["57200000001"]), False),
        CitationRecord(SourceTag.SCOPUS, validate_doi("10.1000/a"), validate_doi("10.2000/c3"),
                       frozenset(["99"]), False),
        CitationRecord(SourceTag.SCOPUS, validate_doi("10.1000/b"), validate_doi("10.2000/c4"),
                       frozenset(["88"]), False),
        # WoS's view: a retracted citation, a fresh one, and some noise the
        # pipeline must reject (no citing DOI / target outside the set).
        CitationRecord(SourceTag.WOS, validate_doi("10.1000/a"), validate_doi("10.2000/c2"),
                       frozenset(), True),
        CitationRecord(SourceTag.WOS, validate_doi("10.1000/b"), validate_doi("10.2000/c5"),
                       frozenset(), False),
        CitationRecord(SourceTag.WOS, validate_doi("10.1000/a"), None, frozenset(), False),
        CitationRecord(SourceTag.WOS, validate_doi("10.1000/d"), validate_doi("10.2000/c6"),
                       frozenset(), False),
    ]
    return author, scopus_pubs, wos_pubs, citations


def main():
    author, scopus_pubs, wos_pubs, citations = dataset()
    result = conflate_author(author, scopus_pubs, wos_pubs, citations)

    print(f"author: {author.display_name}  ({author.ref()})")
    print()
    print("publication partition (after DOI filtering):")
    print(f"  unified : {sorted(d.value for d in result.unified_pub_dois)}")
    print(f"  common  : {sorted(d.value for d in result.common_pub_dois)}")
    for tag, dois in sorted(result.unique_pub_dois_by_source.items(), key=lambda kv: kv[0].value):
        print(f"  only {tag.value:6}: {sorted(d.value for d in dois)}")
    print(f"  rejected (no DOI): {result.rejected_pub_count}")
    print()
    print("citations (deduplicated by cited/citing DOI pair):")
    for doi in sorted(result.citations_by_pub):
        citing = sorted(k.citing_doi.value for k in result.citations_by_pub[doi])
        print(f"  {doi.value}: {citing}")
    print(f"  self keys      : {sorted(k.to_pair() for k in result.self_citation_keys)}")
    print(f"  retracted keys : {sorted(k.to_pair() for k in result.retracted_citation_keys)}")
    print(f"  rejected       : {result.rejected_citation_count}")
    print()
    print(f"audit report: {audit_report_doc(result)}")
    print("  (zero cross-source citation overlap while both sources spoke -> audit)")
    print()
    print("metrics under every consent combination:")
    for include_self in (True, False):
        for include_retracted in (True, False):
            m = compute_metrics(result, include_self, include_retracted)
            print(
                f"  self={str(include_self):5} retracted={str(include_retracted):5}"
                f" -> h={m.h_index} pubs={m.publication_count} citations={m.citation_count}"
            )


if __name__ == "__main__":
    main()
