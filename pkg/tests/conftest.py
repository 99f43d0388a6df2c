"""Shared fixtures.

The "canonical author" dataset used across the suite:

    Scopus publications: 10.1000/a, 10.1000/b, plus one record without a DOI
    WoS publications:    10.1000/a, 10.1000/c

    Scopus citations: a<-c1 (self), a<-c3, b<-c4
    WoS citations:    a<-c2 (retracted), b<-c5, one with no citing DOI,
                      one aimed at 10.1000/d (outside the unified set),
                      and a duplicate of b<-c5

Derived ground truth (hand-counted, double-checked by the brute-force
oracles in the unit tests):

    unified pubs 3 (common 1, unique 1+1), rejected pubs 1
    kept citation keys: a:{c1,c2,c3}  b:{c4,c5}  c:{} ; rejected 2
    zero cross-source citation overlap while both sources contributed
      -> audit flag raised
    metrics: include both  -> counts [3,2,0], h=2, citations 5
             exclude both  -> counts [1,2,0], h=1, citations 3
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from por_ledger.bibdata import (
    AuthorProfile,
    SourceTag,
    parse_citations,
    parse_publications,
)
from por_ledger.conflate import ConflateResult, conflate_author
from por_ledger.keys import AuthorKey, Keyring, derive_keypair

SCOPUS_DOC = {
    "schema": "por.bib.v1",
    "source": "SCOPUS",
    "publications": [
        {"doi": "10.1000/a", "title": "Alpha", "year": 2019, "author_ids": ["57200000001"]},
        {"doi": "10.1000/b", "title": "Beta", "year": 2020, "author_ids": ["57200000001"]},
        {"title": "Gamma (preprint, no DOI)", "year": 2021, "author_ids": ["57200000001"]},
    ],
    "citations": [
        {
            "cited_doi": "10.1000/a",
            "citing_doi": "10.2000/c1",
            "citing_author_ids": ["57200000001"],
            "retracted": False,
        },
        {"cited_doi": "10.1000/a", "citing_doi": "10.2000/c3", "citing_author_ids": ["99"], "retracted": False},
        {"cited_doi": "10.1000/b", "citing_doi": "10.2000/c4", "citing_author_ids": ["88"], "retracted": False},
    ],
}

WOS_DOC = {
    "schema": "por.bib.v1",
    "source": "WOS",
    "publications": [
        {"doi": "10.1000/a", "title": "Alpha", "year": 2019, "author_ids": ["A-1234-2019"]},
        {"doi": "10.1000/c", "title": "Ceta", "year": 2021, "author_ids": ["A-1234-2019"]},
    ],
    "citations": [
        {"cited_doi": "10.1000/a", "citing_doi": "10.2000/c2", "citing_author_ids": [], "retracted": True},
        {"cited_doi": "10.1000/b", "citing_doi": "10.2000/c5", "citing_author_ids": [], "retracted": False},
        {"cited_doi": "10.1000/a", "citing_author_ids": [], "retracted": False},
        {"cited_doi": "10.1000/d", "citing_doi": "10.2000/c6", "citing_author_ids": [], "retracted": False},
        {"cited_doi": "10.1000/b", "citing_doi": "10.2000/c5", "citing_author_ids": [], "retracted": False},
    ],
}


@pytest.fixture()
def profile() -> AuthorProfile:
    return AuthorProfile(scopus_id="57200000001", wos_id="A-1234-2019", display_name="A. Example")


@pytest.fixture()
def bib_files(tmp_path: Path) -> tuple[Path, Path]:
    scopus = tmp_path / "scopus_a.json"
    wos = tmp_path / "wos_a.json"
    scopus.write_text(json.dumps(SCOPUS_DOC, indent=2), encoding="utf-8")
    wos.write_text(json.dumps(WOS_DOC, indent=2), encoding="utf-8")
    return scopus, wos


def build_canonical_conflate(profile: AuthorProfile) -> ConflateResult:
    scopus_pubs, _ = parse_publications(SCOPUS_DOC, SourceTag.SCOPUS)
    wos_pubs, _ = parse_publications(WOS_DOC, SourceTag.WOS)
    scopus_cites, _ = parse_citations(SCOPUS_DOC, SourceTag.SCOPUS)
    wos_cites, _ = parse_citations(WOS_DOC, SourceTag.WOS)
    return conflate_author(profile, scopus_pubs, wos_pubs, scopus_cites + wos_cites)


@pytest.fixture()
def canonical_conflate(profile: AuthorProfile) -> ConflateResult:
    return build_canonical_conflate(profile)


@pytest.fixture()
def author_key(profile: AuthorProfile) -> AuthorKey:
    private, public = derive_keypair(b"test-suite-canonical-author")
    return AuthorKey(author_ref=profile.ref(), public_key=public, private_key=private)


@pytest.fixture()
def keyring(author_key: AuthorKey) -> Keyring:
    ring = Keyring()
    ring.add(author_key)
    return ring


@pytest.fixture()
def keyring_file(tmp_path: Path, keyring: Keyring) -> Path:
    path = tmp_path / "keyring.json"
    keyring.save(path)
    return path
