"""Operator and scripting entry point.

Subcommands::

    por ingest    --source scopus|wos --in raw.json --out normalized.json
    por conflate  --scopus s.json --wos w.json --author profile.json --out result.json
    por session run --conflate result.json --self yes --retracted no --publish yes \
                    [--node URL | --key key.json --data-dir DIR] [--clock fixed:MS]
    por chain show|validate [--node URL | --chain FILE | --data-dir DIR] [--keyring FILE]
    por node serve [--port N] [--data-dir DIR] [--peers host:port,...] [--keyring FILE]
    por peers add host:port --node URL
    por keys generate --author profile.json --out key.json [--keyring FILE]

Every command exits 0 on success and nonzero with a machine-readable
``por.error.v1`` document on stderr otherwise. ``--clock fixed:<ms>``
pins timestamps for reproducible (byte-identical) blocks.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import requests

from .bibdata import (
    AuthorProfile,
    SourceTag,
    bib_document,
    ingest_citations,
    ingest_publications,
)
from .clocks import parse_clock_spec
from .conflate import ConflateResult, audit_report_doc, conflate_author
from .errors import FileUnreadable, IoFailure, PorError, SchemaViolation
from .keys import AuthorKey, Keyring, generate_keypair, load_key_file, save_key_file
from .ledger import Chain, append_block, load_chain, persist_chain, validate_chain
from .node import CHAIN_FILENAME, NodeConfig, serve
from .por import acknowledge_metrics, answer_publish, answer_retracted, answer_self, open_session


def _print_doc(doc: dict, stream=None) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True), file=stream or sys.stdout)


def _read_json(path: str) -> dict:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path} is not valid JSON: {exc}") from exc


def _write_json(path: str, doc: dict) -> None:
    try:
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _load_author(path: str) -> AuthorProfile:
    return AuthorProfile.from_doc(_read_json(path))


class _NodeApi:
    """Thin HTTP client for a running node; errors carry the node's doc."""

    def __init__(self, base_url: str, timeout_s: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    def _handle(self, response: requests.Response) -> dict:
        try:
            doc = response.json()
        except json.JSONDecodeError:
            doc = {"schema": "por.error.v1", "error": "BadResponse", "detail": response.text[:500]}
        if response.status_code >= 400:
            error = PorError(doc.get("detail", f"HTTP {response.status_code}"))
            error.code = doc.get("error", "HttpError")
            raise error
        return doc

    def get(self, path: str) -> dict:
        try:
            return self._handle(requests.get(self.base_url + path, timeout=self.timeout_s))
        except requests.RequestException as exc:
            raise IoFailure(f"node unreachable at {self.base_url}: {exc}") from exc

    def post(self, path: str, body: dict | None = None) -> dict:
        try:
            return self._handle(
                requests.post(self.base_url + path, json=body or {}, timeout=self.timeout_s)
            )
        except requests.RequestException as exc:
            raise IoFailure(f"node unreachable at {self.base_url}: {exc}") from exc


# --- commands ----------------------------------------------------------------


def cmd_ingest(args) -> int:
    source = SourceTag.parse(args.source)
    publications, pub_report = ingest_publications(args.infile, source)
    citations, cite_report = ingest_citations(args.infile, source)
    _write_json(args.out, bib_document(source, publications, citations))
    _print_doc(
        {
            "schema": "por.ingest_report.v1",
            "source": source.value,
            "publications": pub_report.to_doc(),
            "citations": cite_report.to_doc(),
            "out": args.out,
        }
    )
    return 0


def _conflate_from_files(scopus_path: str, wos_path: str, author: AuthorProfile) -> ConflateResult:
    scopus_pubs, _ = ingest_publications(scopus_path, SourceTag.SCOPUS)
    wos_pubs, _ = ingest_publications(wos_path, SourceTag.WOS)
    scopus_cites, _ = ingest_citations(scopus_path, SourceTag.SCOPUS)
    wos_cites, _ = ingest_citations(wos_path, SourceTag.WOS)
    return conflate_author(author, scopus_pubs, wos_pubs, scopus_cites + wos_cites)


def cmd_conflate(args) -> int:
    author = _load_author(args.author)
    result = _conflate_from_files(args.scopus, args.wos, author)
    doc = {
        "schema": "por.conflate.v1",
        "author": author.to_doc(),
        "result": result.to_doc(),
        "audit": audit_report_doc(result),
    }
    _write_json(args.out, doc)
    _print_doc(audit_report_doc(result))
    return 0


def _yesno(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("yes", "y", "true"):
        return True
    if lowered in ("no", "n", "false"):
        return False
    raise argparse.ArgumentTypeError(f"expected yes or no, got {value!r}")


def cmd_session_run(args) -> int:
    conflate_doc = _read_json(args.conflate)
    if conflate_doc.get("schema") != "por.conflate.v1":
        raise SchemaViolation("expected a por.conflate.v1 document (from `por conflate`)")
    if args.node:
        return _session_run_remote(args, conflate_doc)
    return _session_run_local(args, conflate_doc)


def _session_run_remote(args, conflate_doc: dict) -> int:
    api = _NodeApi(args.node)
    view = api.post("/sessions", {"conflate": conflate_doc})
    session_id = view["session_id"]
    api.post(f"/sessions/{session_id}/consent", {"stage": "self", "agree": args.self_citations})
    api.post(f"/sessions/{session_id}/consent", {"stage": "retracted", "agree": args.retracted})
    api.post(f"/sessions/{session_id}/consent", {"stage": "ack"})
    final = api.post(f"/sessions/{session_id}/consent", {"stage": "publish", "agree": args.publish})
    outcome = {
        "schema": "por.session_outcome.v1",
        "published": args.publish,
        "state": final["state"],
        "metrics": final["metrics"],
    }
    if "block" in final:
        outcome["block"] = final["block"]
    _print_doc(outcome)
    return 0


def _session_run_local(args, conflate_doc: dict) -> int:
    if not args.key:
        raise SchemaViolation("local session run needs --key (or point --node at a server)")
    author = AuthorProfile.from_doc(conflate_doc.get("author") or {})
    result = ConflateResult.from_doc(conflate_doc.get("result") or {})
    clock = parse_clock_spec(args.clock)
    key = load_key_file(args.key)

    session = open_session(author, result, clock)
    answer_self(session, args.self_citations)
    answer_retracted(session, args.retracted)
    acknowledge_metrics(session)
    outcome = answer_publish(session, args.publish, key if args.publish else None, clock)

    doc = {
        "schema": "por.session_outcome.v1",
        "published": outcome.published,
        "state": session.state.value,
        "metrics": outcome.metrics.to_doc(),
    }
    if outcome.published:
        data_dir = Path(args.data_dir or "por-data")
        data_dir.mkdir(parents=True, exist_ok=True)
        chain_path = data_dir / CHAIN_FILENAME
        chain = load_chain(chain_path) if chain_path.exists() else Chain.genesis()
        chain = append_block(chain, outcome.payload, outcome.payload.author_ref, clock)
        persist_chain(chain, chain_path)
        doc["block"] = chain.head.to_doc()
        doc["chain_file"] = str(chain_path)
    _print_doc(doc)
    return 0


def _resolve_chain_source(args) -> tuple[str | None, str | None]:
    """Returns (node_url, chain_path); exactly one is set."""
    if args.node:
        return args.node, None
    if args.chain:
        return None, args.chain
    if args.data_dir:
        return None, str(Path(args.data_dir) / CHAIN_FILENAME)
    raise SchemaViolation("need --node, --chain, or --data-dir")


def cmd_chain_show(args) -> int:
    node_url, chain_path = _resolve_chain_source(args)
    if node_url:
        _print_doc(_NodeApi(node_url).get("/chain"))
    else:
        _print_doc(load_chain(chain_path, verify=False).to_doc())
    return 0


def cmd_chain_validate(args) -> int:
    node_url, chain_path = _resolve_chain_source(args)
    if node_url:
        verdict = _NodeApi(node_url).get("/chain/validate")
    else:
        resolver = Keyring.load(args.keyring).resolver() if args.keyring else None
        try:
            chain = load_chain(chain_path, verify=False)
        except PorError as exc:
            doc = exc.to_doc()
            verdict = {
                "schema": "por.validate.v1",
                "valid": False,
                "violation": {"index": doc.get("index", 0), "reason": doc.get("reason", "decode")},
            }
        else:
            violation = validate_chain(chain, resolver)
            verdict = {
                "schema": "por.validate.v1",
                "valid": violation is None,
                "violation": violation.to_doc() if violation else None,
            }
    _print_doc(verdict)
    if not verdict["valid"]:
        error = PorError(f"chain invalid at block {verdict['violation']['index']}: {verdict['violation']['reason']}")
        error.code = "ChainInvalid"
        _print_doc(error.to_doc(), stream=sys.stderr)
        return 1
    return 0


def cmd_node_serve(args) -> int:
    config = NodeConfig.from_options(
        port=args.port,
        data_dir=args.data_dir,
        peers=args.peers,
        keyring=args.keyring,
        host=args.host,
        clock=args.clock,
    )
    server = serve(config)
    print(f"node listening on {server.base_url} (data: {config.data_dir})", file=sys.stderr)
    try:
        server.join()
    except KeyboardInterrupt:
        server.stop()
    return 0


def cmd_peers_add(args) -> int:
    _print_doc(_NodeApi(args.node).post("/peers", {"peer": args.peer}))
    return 0


def cmd_keys_generate(args) -> int:
    author = _load_author(args.author)
    private, public = generate_keypair()
    key = AuthorKey(author_ref=author.ref(), public_key=public, private_key=private)
    save_key_file(args.out, key)
    if args.keyring:
        ring = Keyring.load(args.keyring) if Path(args.keyring).exists() else Keyring()
        ring.add(key)
        ring.save(args.keyring)
    _print_doc({"schema": "por.key.v1", "author_ref": key.author_ref, "public_key": public, "out": args.out})
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="por", description="conflate + proof-of-reference ledger tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a por.bib.v1 dataset file")
    p.add_argument("--source", required=True, choices=["scopus", "wos"], help="which source the file came from")
    p.add_argument("--in", dest="infile", required=True, help="input por.bib.v1 file")
    p.add_argument("--out", required=True, help="normalized output file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("conflate", help="run the unification pipeline over two datasets")
    p.add_argument("--scopus", required=True, help="Scopus por.bib.v1 file")
    p.add_argument("--wos", required=True, help="Web of Science por.bib.v1 file")
    p.add_argument("--author", required=True, help="author profile JSON (por.author.v1)")
    p.add_argument("--out", required=True, help="where to write the por.conflate.v1 result")
    p.set_defaults(func=cmd_conflate)

    p = sub.add_parser("session", help="consent session operations")
    session_sub = p.add_subparsers(dest="session_command", required=True)
    run = session_sub.add_parser("run", help="drive the three consents non-interactively")
    run.add_argument("--conflate", required=True, help="por.conflate.v1 file from `por conflate`")
    run.add_argument("--self", dest="self_citations", type=_yesno, required=True, metavar="yes|no",
                     help="count self citations as actual citations")
    run.add_argument("--retracted", type=_yesno, required=True, metavar="yes|no",
                     help="count retracted citations")
    run.add_argument("--publish", type=_yesno, required=True, metavar="yes|no",
                     help="publish the block (no = display metrics only)")
    run.add_argument("--key", help="author key file (local mode signing)")
    run.add_argument("--node", help="node base URL; omit to run locally")
    run.add_argument("--data-dir", help="local mode: chain directory (default por-data)")
    run.add_argument("--clock", help="system (default) or fixed:<ms> for reproducible blocks")
    run.set_defaults(func=cmd_session_run)

    p = sub.add_parser("chain", help="inspect or validate a chain")
    chain_sub = p.add_subparsers(dest="chain_command", required=True)
    for name, func in (("show", cmd_chain_show), ("validate", cmd_chain_validate)):
        c = chain_sub.add_parser(name)
        c.add_argument("--node", help="node base URL")
        c.add_argument("--chain", help="chain file path")
        c.add_argument("--data-dir", help="directory containing chain.json")
        c.add_argument("--keyring", help="keyring for registered-key checks (local validate)")
        c.set_defaults(func=func)

    p = sub.add_parser("node", help="node service operations")
    node_sub = p.add_subparsers(dest="node_command", required=True)
    srv = node_sub.add_parser("serve", help="start the DLT node server")
    srv.add_argument("--port", type=int, help=f"listen port (default {NodeConfig.port} or POR_NODE_PORT)")
    srv.add_argument("--host", help="bind host (default 127.0.0.1)")
    srv.add_argument("--data-dir", help="chain storage directory (or POR_DATA_DIR)")
    srv.add_argument("--peers", help="comma-separated host:port peer list")
    srv.add_argument("--keyring", help="keyring file with registered author keys")
    srv.add_argument("--clock", help="system (default) or fixed:<ms>")
    srv.set_defaults(func=cmd_node_serve)

    p = sub.add_parser("peers", help="peer registry operations")
    peers_sub = p.add_subparsers(dest="peers_command", required=True)
    add = peers_sub.add_parser("add", help="register a peer at a running node")
    add.add_argument("peer", help="host:port of the peer")
    add.add_argument("--node", required=True, help="node base URL")
    add.set_defaults(func=cmd_peers_add)

    p = sub.add_parser("keys", help="author key operations")
    keys_sub = p.add_subparsers(dest="keys_command", required=True)
    gen = keys_sub.add_parser("generate", help="create a keypair for an author profile")
    gen.add_argument("--author", required=True, help="author profile JSON")
    gen.add_argument("--out", required=True, help="key file to write")
    gen.add_argument("--keyring", help="also register the key in this keyring file")
    gen.set_defaults(func=cmd_keys_generate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PorError as exc:
        _print_doc(exc.to_doc(), stream=sys.stderr)
        return 1
    except ValueError as exc:
        _print_doc({"schema": "por.error.v1", "error": "BadArgument", "detail": str(exc)}, stream=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
