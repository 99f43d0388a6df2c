"""The long-running DLT node: ledger + consent sessions behind an HTTP API.

Defaults match the deployment sketch this implements: the node binds port
8080, the author-facing web application is expected on port 5000 (the
node's CORS allowance is derived from that constant).

Endpoints (all JSON, every response carries a ``schema`` field):

    POST /sessions                  open a consent session from datasets
    POST /sessions/{id}/consent     {stage: self|retracted|ack|publish, agree}
    GET  /chain                     full chain document (por.chain.v1)
    GET  /chain/validate            structural + PoR verdict
    POST /blocks                    peer-facing block announcement
    POST /peers                     register a peer address
    POST /sync                      run longest-valid-chain resolution
    GET  /authors/{id}/metrics      latest published metrics for an author

Concurrency: handlers run in a worker threadpool; the chain head and each
session serialize their own mutations, reads snapshot immutable values.
"""

from __future__ import annotations

import json
import secrets
import socket
import threading
from dataclasses import dataclass, field
from pathlib import Path

import requests
import uvicorn
from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .bibdata import AuthorProfile, SourceTag, parse_citations, parse_publications, read_bib_document
from .clocks import parse_clock_spec
from .conflate import ConflateResult, conflate_author
from .errors import (
    ClockSkew,
    FileUnreadable,
    IllegalTransition,
    InvalidPayload,
    IoFailure,
    MalformedDoi,
    PeerUnreachable,
    PorError,
    PortInUse,
    SchemaViolation,
    SignatureFailure,
    StorageCorrupt,
    UnknownAuthor,
    UnknownSession,
)
from .keys import Keyring
from .ledger import Block, Chain, append_block, load_chain, persist_chain, validate_chain
from .netsync import NodeState, PeerAddr, announce_block, receive_block, resolve_conflicts
from .por import (
    DEFAULT_SESSION_TIMEOUT_MS,
    ConsentSession,
    SessionState,
    SessionStore,
    acknowledge_metrics,
    answer_publish,
    answer_retracted,
    answer_self,
)

DEFAULT_NODE_PORT = 8080
DEFAULT_UI_PORT = 5000
CHAIN_FILENAME = "chain.json"

_HTTP_STATUS_BY_ERROR = {
    SchemaViolation: 400,
    MalformedDoi: 400,
    FileUnreadable: 400,
    SignatureFailure: 400,
    UnknownAuthor: 400,
    InvalidPayload: 400,
    ClockSkew: 400,
    UnknownSession: 404,
    IllegalTransition: 409,
    StorageCorrupt: 500,
    IoFailure: 500,
}


def _status_for(error: PorError) -> int:
    for cls, status in _HTTP_STATUS_BY_ERROR.items():
        if isinstance(error, cls):
            return status
    return 500


@dataclass
class NodeConfig:
    host: str = "127.0.0.1"
    port: int = DEFAULT_NODE_PORT
    data_dir: Path = Path("por-data")
    peers: list[PeerAddr] = field(default_factory=list)
    keyring_path: Path | None = None
    clock_spec: str = "system"
    session_timeout_ms: int = DEFAULT_SESSION_TIMEOUT_MS
    peer_timeout_s: float = 3.0

    @classmethod
    def from_options(
        cls,
        port: int | None = None,
        data_dir: str | None = None,
        peers: str | None = None,
        keyring: str | None = None,
        host: str | None = None,
        clock: str | None = None,
        env: dict | None = None,
    ) -> "NodeConfig":
        """Merge CLI flags over environment variables (flags win)."""
        import os

        env = env if env is not None else dict(os.environ)
        if port is None and env.get("POR_NODE_PORT"):
            port = int(env["POR_NODE_PORT"])
        if data_dir is None and env.get("POR_DATA_DIR"):
            data_dir = env["POR_DATA_DIR"]
        peer_list = []
        if peers:
            peer_list = [PeerAddr.parse(p.strip()) for p in peers.split(",") if p.strip()]
        return cls(
            host=host or "127.0.0.1",
            port=port if port is not None else DEFAULT_NODE_PORT,
            data_dir=Path(data_dir) if data_dir else Path("por-data"),
            peers=peer_list,
            keyring_path=Path(keyring) if keyring else None,
            clock_spec=clock or "system",
        )


class PorNode:
    """In-process node: chain, sessions, peers, keyring.

    Refuses to construct over a corrupt chain file (``StorageCorrupt``).
    """

    def __init__(self, config: NodeConfig):
        self.config = config
        self.clock = parse_clock_spec(config.clock_spec)
        self.keyring = Keyring.load(config.keyring_path) if config.keyring_path else Keyring()
        self.config.data_dir.mkdir(parents=True, exist_ok=True)
        self.chain_path = self.config.data_dir / CHAIN_FILENAME
        if self.chain_path.exists():
            chain = load_chain(self.chain_path, self.keyring.resolver())
        else:
            chain = Chain.genesis()
            persist_chain(chain, self.chain_path)
        self.state = NodeState(
            node_id=secrets.token_hex(8),
            chain=chain,
            peers=set(config.peers),
            key_resolver=self.keyring.resolver(),
            self_addr=PeerAddr(host=config.host, port=config.port),
        )
        self.sessions = SessionStore(self.clock, config.session_timeout_ms)
        self._chain_lock = threading.Lock()
        self._peer_client = HttpPeerClient(timeout_s=config.peer_timeout_s)

    # -- sessions -----------------------------------------------------------

    def open_session(self, body: dict) -> dict:
        if not isinstance(body, dict):
            raise SchemaViolation("request body must be an object")
        author, result = _session_inputs(body)
        session = self.sessions.open(author, result)
        return session_view_doc(session)

    def consent(self, session_id: str, stage: str, agree) -> dict:
        session = self.sessions.get(session_id)
        with self.sessions.lock_for(session_id):
            if stage in ("self", "retracted", "publish") and not isinstance(agree, bool):
                raise SchemaViolation(f"stage {stage!r} needs a boolean 'agree'")
            if stage == "self":
                answer_self(session, agree)
            elif stage == "retracted":
                answer_retracted(session, agree)
            elif stage == "ack":
                acknowledge_metrics(session)
            elif stage == "publish":
                return self._publish(session, agree)
            else:
                raise SchemaViolation(f"unknown consent stage {stage!r}")
        return session_view_doc(session)

    def _publish(self, session: ConsentSession, agree: bool) -> dict:
        if not agree:
            answer_publish(session, False)
            return session_view_doc(session)
        signer = self.keyring.signer_for(session.author.ref())
        outcome = answer_publish(session, True, signer, self.clock)
        try:
            with self._chain_lock:
                self.state.chain = append_block(
                    self.state.chain,
                    outcome.payload,
                    outcome.payload.author_ref,
                    self.clock,
                    self.keyring.resolver(),
                )
                block = self.state.chain.head
                persist_chain(self.state.chain, self.chain_path)
        except PorError:
            # Keep the session answerable if the ledger refused the block.
            session.state = SessionState.AWAIT_PUBLISH
            raise
        announce_block(self.state, block, self._peer_client)
        view = session_view_doc(session)
        view["block"] = block.to_doc()
        return view

    # -- chain --------------------------------------------------------------

    def chain_doc(self) -> dict:
        return self.state.chain.to_doc()

    def validate_doc(self) -> dict:
        violation = validate_chain(self.state.chain, self.keyring.resolver())
        return {
            "schema": "por.validate.v1",
            "valid": violation is None,
            "violation": violation.to_doc() if violation else None,
        }

    def receive_block_doc(self, doc: dict) -> dict:
        block = Block.from_doc(doc.get("block") if isinstance(doc, dict) and "block" in doc else doc)
        with self._chain_lock:
            result = receive_block(self.state, block)
            if result.accepted:
                persist_chain(self.state.chain, self.chain_path)
        if result.status == "need_sync":
            self.sync()
        return {"schema": "por.receive.v1", "result": result.status, "reason": result.reason}

    def add_peer(self, doc: dict) -> dict:
        if not isinstance(doc, dict):
            raise SchemaViolation("request body must be an object")
        if "host" in doc or "port" in doc:
            try:
                addr = PeerAddr(host=doc["host"], port=doc["port"])
            except KeyError as exc:
                raise SchemaViolation(f"peer needs host and port, missing {exc}") from exc
        elif "peer" in doc:
            addr = PeerAddr.parse(doc["peer"])
        else:
            raise SchemaViolation("peer registration needs {host, port} or {peer: 'host:port'}")
        self.state.add_peer(addr)
        return {"schema": "por.peers.v1", "peers": [str(p) for p in sorted(self.state.peers)]}

    def sync(self) -> dict:
        with self._chain_lock:
            outcome = resolve_conflicts(self.state, self._peer_client)
            if outcome.adopted:
                persist_chain(self.state.chain, self.chain_path)
        return {
            "schema": "por.sync.v1",
            "adopted": outcome.adopted,
            "chain_length": outcome.chain_length,
            "peers": {str(p): r for p, r in outcome.peer_results.items()},
        }

    def author_metrics(self, author_id: str) -> dict:
        for block in reversed(self.state.chain.blocks):
            if block.payload is None:
                continue
            if _ref_matches(block.author_ref, author_id):
                return {
                    "schema": "por.author_metrics.v1",
                    "author_ref": block.author_ref,
                    "block_index": block.index,
                    "timestamp": block.timestamp,
                    "metrics": block.payload.metrics.to_doc(),
                }
        raise UnknownSession(f"no published metrics for author {author_id!r}")


def _ref_matches(author_ref: str, wanted: str) -> bool:
    if author_ref == wanted:
        return True
    for part in author_ref.split("+"):
        if wanted == part or wanted == part.split(":", 1)[-1]:
            return True
    return False


def _session_inputs(body: dict) -> tuple[AuthorProfile, ConflateResult]:
    """Extract (author, conflate result) from a session-open request.

    Accepts either a precomputed ``conflate`` document or a pair of
    ``scopus``/``wos`` por.bib.v1 datasets (inline objects or server-side
    file paths).
    """
    conflate_doc = body.get("conflate")
    author_doc = body.get("author")
    if conflate_doc is not None:
        if isinstance(conflate_doc, dict) and conflate_doc.get("schema") == "por.conflate.v1":
            result = ConflateResult.from_doc(conflate_doc.get("result", {}))
            if author_doc is None:
                author_doc = conflate_doc.get("author")
        else:
            result = ConflateResult.from_doc(conflate_doc)
        if author_doc is None:
            raise SchemaViolation("session open needs an 'author' profile")
        return AuthorProfile.from_doc(author_doc), result

    if author_doc is None:
        raise SchemaViolation("session open needs an 'author' profile")
    author = AuthorProfile.from_doc(author_doc)
    datasets = {}
    for name, tag in (("scopus", SourceTag.SCOPUS), ("wos", SourceTag.WOS)):
        raw = body.get(name)
        if raw is None:
            raise SchemaViolation(f"session open needs a {name!r} dataset (or a 'conflate' result)")
        if isinstance(raw, str):
            doc = read_bib_document(raw, tag)
        elif isinstance(raw, dict):
            doc = _checked_bib_doc(raw, tag, name)
        else:
            raise SchemaViolation(f"{name!r} must be a por.bib.v1 object or a file path")
        datasets[tag] = doc
    scopus_pubs, _ = parse_publications(datasets[SourceTag.SCOPUS], SourceTag.SCOPUS)
    wos_pubs, _ = parse_publications(datasets[SourceTag.WOS], SourceTag.WOS)
    citations = []
    for tag in (SourceTag.SCOPUS, SourceTag.WOS):
        records, _ = parse_citations(datasets[tag], tag)
        citations.extend(records)
    return author, conflate_author(author, scopus_pubs, wos_pubs, citations)


def _checked_bib_doc(doc: dict, source: SourceTag, name: str) -> dict:
    from .bibdata import BIB_SCHEMA

    if doc.get("schema") != BIB_SCHEMA:
        raise SchemaViolation(f"{name!r} dataset must declare schema {BIB_SCHEMA!r}")
    if SourceTag.parse(doc.get("source", "")) is not source:
        raise SchemaViolation(f"{name!r} dataset declares the wrong source")
    return doc


def session_view_doc(session: ConsentSession) -> dict:
    """What clients (CLI, web UI) see of a session. No client-side math:
    every displayed number originates here."""
    result = session.conflate
    kept = result.all_citation_keys()
    flagged = result.self_citation_keys | result.retracted_citation_keys
    unique = result.unique_pub_dois_by_source
    return {
        "schema": "por.session.v1",
        "session_id": session.session_id,
        "state": session.state.value,
        "author_ref": session.author.ref(),
        "display_name": session.author.display_name,
        "audit_flag": result.audit_flag,
        "breakdown": {
            "publications": {
                "unified": len(result.unified_pub_dois),
                "common": len(result.common_pub_dois),
                "unique_scopus": len(unique.get(SourceTag.SCOPUS, frozenset())),
                "unique_wos": len(unique.get(SourceTag.WOS, frozenset())),
                "rejected": result.rejected_pub_count,
            },
            "citations": {
                "kept": len(kept),
                "self": len(result.self_citation_keys),
                "retracted": len(result.retracted_citation_keys),
                "authentic": len(kept) - len(flagged),
                "common": result.common_citation_count,
                "rejected": result.rejected_citation_count,
            },
        },
        "include_self": session.include_self,
        "include_retracted": session.include_retracted,
        "metrics": session.metrics.to_doc() if session.metrics is not None else None,
    }


class HttpPeerClient:
    """requests-backed transport against peer nodes' HTTP APIs."""

    def __init__(self, timeout_s: float = 3.0):
        self.timeout_s = timeout_s

    def fetch_chain(self, addr: PeerAddr) -> Chain:
        try:
            response = requests.get(f"{addr.url}/chain", timeout=self.timeout_s)
            response.raise_for_status()
            return Chain.from_doc(response.json())
        except (requests.RequestException, json.JSONDecodeError) as exc:
            raise PeerUnreachable(f"fetch from {addr} failed: {exc}") from exc
        except (SchemaViolation, StorageCorrupt) as exc:
            raise PeerUnreachable(f"peer {addr} served an undecodable chain: {exc}") from exc

    def send_block(self, addr: PeerAddr, block: Block) -> str:
        try:
            response = requests.post(
                f"{addr.url}/blocks", json={"block": block.to_doc()}, timeout=self.timeout_s
            )
            response.raise_for_status()
            return response.json().get("result", "unknown")
        except (requests.RequestException, json.JSONDecodeError) as exc:
            raise PeerUnreachable(f"announce to {addr} failed: {exc}") from exc


# --- HTTP surface -------------------------------------------------------------


def create_app(node: PorNode) -> FastAPI:
    app = FastAPI(title="por-ledger node", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[
            f"http://localhost:{DEFAULT_UI_PORT}",
            f"http://127.0.0.1:{DEFAULT_UI_PORT}",
        ],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.node = node

    @app.exception_handler(PorError)
    def _por_error(_request: Request, exc: PorError):
        return JSONResponse(status_code=_status_for(exc), content=exc.to_doc())

    @app.exception_handler(RequestValidationError)
    def _validation_error(_request: Request, exc: RequestValidationError):
        detail = SchemaViolation(f"malformed request body: {exc.errors()[:1]}")
        return JSONResponse(status_code=400, content=detail.to_doc())

    @app.post("/sessions", status_code=201)
    def open_session(body: dict = Body(...)):
        return node.open_session(body)

    @app.post("/sessions/{session_id}/consent")
    def consent(session_id: str, body: dict = Body(...)):
        stage = body.get("stage")
        if not isinstance(stage, str):
            raise SchemaViolation("consent needs a 'stage' of self|retracted|ack|publish")
        return node.consent(session_id, stage, body.get("agree"))

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_view_doc(node.sessions.get(session_id))

    @app.get("/chain")
    def get_chain():
        return node.chain_doc()

    @app.get("/chain/validate")
    def get_chain_validate():
        return node.validate_doc()

    @app.post("/blocks")
    def post_block(body: dict = Body(...)):
        return node.receive_block_doc(body)

    @app.post("/peers")
    def post_peer(body: dict = Body(...)):
        return node.add_peer(body)

    @app.post("/sync")
    def post_sync():
        return node.sync()

    @app.get("/authors/{author_id}/metrics")
    def get_author_metrics(author_id: str):
        return node.author_metrics(author_id)

    return app


class NodeServer:
    """A running node service: uvicorn in a daemon thread."""

    def __init__(self, config: NodeConfig):
        self.config = config
        self.node = PorNode(config)
        self.app = create_app(self.node)
        self._uvicorn = uvicorn.Server(
            uvicorn.Config(self.app, host=config.host, port=config.port, log_level="warning")
        )
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        return f"http://{self.config.host}:{self.config.port}"

    def start(self, wait_s: float = 10.0) -> "NodeServer":
        _probe_port(self.config.host, self.config.port)
        self._thread = threading.Thread(target=self._uvicorn.run, daemon=True)
        self._thread.start()
        import time

        deadline = time.monotonic() + wait_s
        while time.monotonic() < deadline:
            if self._uvicorn.started:
                return self
            if not self._thread.is_alive():
                break
            time.sleep(0.02)
        raise PortInUse(f"node failed to start on {self.config.host}:{self.config.port}")

    def stop(self) -> None:
        self._uvicorn.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=10)

    def join(self) -> None:
        if self._thread is not None:
            self._thread.join()


def _probe_port(host: str, port: int) -> None:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise PortInUse(f"port {port} on {host} is unavailable: {exc}") from exc
    finally:
        probe.close()


def serve(config: NodeConfig) -> NodeServer:
    """Start a node service; raises PortInUse / StorageCorrupt upfront."""
    return NodeServer(config).start()
