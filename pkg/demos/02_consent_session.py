"""Drive a consent session end to end and poke at the attestation.

The three decisions (self citations, retracted citations, publish) gate
the construction of a signed block payload; the verification rule then
recomputes everything a peer would.

Run: python demos/02_consent_session.py
"""

import dataclasses

from por_ledger import (
    AuthorKey,
    acknowledge_metrics,
    answer_publish,
    answer_retracted,
    answer_self,
    generate_keypair,
    open_session,
    verify_attestation,
)

from importlib import import_module

pipeline_demo = import_module("01_conflate_pipeline")


def main():
    author, scopus_pubs, wos_pubs, citations = pipeline_demo.dataset()
    from por_ledger import conflate_author

    result = conflate_author(author, scopus_pubs, wos_pubs, citations)
    private, public = generate_keypair()
    key = AuthorKey(author_ref=author.ref(), public_key=public, private_key=private)

    session = open_session(author, result)
    print(f"session {session.session_id[:12]}… opened, state={session.state.value}")

    answer_self(session, True)
    print(f"self citations accepted      -> {session.state.value}")
    answer_retracted(session, False)
    print(f"retracted citations rejected -> {session.state.value}")
    m = session.metrics
    print(f"metrics preview: h={m.h_index} pubs={m.publication_count} citations={m.citation_count}")

    acknowledge_metrics(session)
    outcome = answer_publish(session, True, key)
    print(f"publish consent given        -> {session.state.value}")

    payload = outcome.payload
    print()
    print(f"dataset digest : {payload.attestation.dataset_digest[:24]}…")
    print(f"signature      : {payload.attestation.signature[:24]}…")
    print(f"verifies       : {verify_attestation(payload, public)}")

    bumped = dataclasses.replace(
        payload,
        metrics=dataclasses.replace(payload.metrics, citation_count=payload.metrics.citation_count + 1),
    )
    print(f"with one extra claimed citation: verifies = {verify_attestation(bumped, public)}")

    flipped = dataclasses.replace(
        payload,
        attestation=dataclasses.replace(payload.attestation, include_retracted=True),
    )
    print(f"with a flipped consent flag:     verifies = {verify_attestation(flipped, public)}")


if __name__ == "__main__":
    main()
