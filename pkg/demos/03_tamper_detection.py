"""Build a small chain, persist it, corrupt one byte, watch it fail.

Run: python demos/03_tamper_detection.py
"""

import json
import tempfile
from pathlib import Path

from por_ledger import (
    AuthorKey,
    Chain,
    StorageCorrupt,
    acknowledge_metrics,
    answer_publish,
    answer_retracted,
    answer_self,
    append_block,
    conflate_author,
    generate_keypair,
    load_chain,
    open_session,
    persist_chain,
    validate_chain,
)

from importlib import import_module

pipeline_demo = import_module("01_conflate_pipeline")


def publish_once(author, result, key, include_self):
    session = open_session(author, result)
    answer_self(session, include_self)
    answer_retracted(session, True)
    acknowledge_metrics(session)
    return answer_publish(session, True, key).payload


def main():
    author, scopus_pubs, wos_pubs, citations = pipeline_demo.dataset()
    result = conflate_author(author, scopus_pubs, wos_pubs, citations)
    private, public = generate_keypair()
    key = AuthorKey(author_ref=author.ref(), public_key=public, private_key=private)

    chain = Chain.genesis()
    for include_self in (True, False, True):
        payload = publish_once(author, result, key, include_self)
        chain = append_block(chain, payload, payload.author_ref)
    print(f"built a {len(chain)}-block chain, head {chain.head.hash[:16]}…")
    print(f"validate_chain -> {validate_chain(chain)}")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "chain.json"
        persist_chain(chain, path)
        print(f"persisted {path.stat().st_size} bytes; reload equal: {load_chain(path) == chain}")

        doc = json.loads(path.read_text())
        doc["blocks"][2]["payload"]["metrics"]["citation_count"] += 1
        path.write_text(json.dumps(doc))
        print("bumped block 2's citation count by one in the stored file…")
        try:
            load_chain(path)
        except StorageCorrupt as exc:
            print(f"load refused: {exc}")


if __name__ == "__main__":
    main()
