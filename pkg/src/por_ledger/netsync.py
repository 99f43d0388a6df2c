"""Peer-to-peer replication: announce, receive, longest-valid-chain sync.

Gossip is push-on-publish plus pull-on-demand: a node announces each new
block to every registered peer; a receiver that discovers it is behind
(gap > 1) pulls full chains and adopts the longest one that passes full
structural and Proof-of-Reference validation. Ties keep the local chain.
A chain containing any block whose attestation fails is never adopted,
regardless of length.

The deterministic simulation harness (:func:`simulate`) drives several
in-process nodes through a scripted sequence of publish / partition /
heal / sync events over an in-memory transport, recording a transcript
for assertions. Given a seed, two runs produce identical transcripts.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from .bibdata import AuthorProfile, CitationRecord, PublicationRecord, SourceTag, validate_doi
from .clocks import Clock, TickingClock, system_clock
from .conflate import conflate_author
from .errors import PeerUnreachable, SchemaViolation, ScriptError
from .keys import AuthorKey, Keyring, derive_keypair
from .ledger import Block, Chain, KeyResolver, append_block, validate_chain
from .por import (
    BlockPayload,
    acknowledge_metrics,
    answer_publish,
    answer_retracted,
    answer_self,
    open_session,
    verify_attestation,
)


@dataclass(frozen=True, order=True)
class PeerAddr:
    host: str
    port: int

    def __post_init__(self):
        if not self.host or any(ch.isspace() for ch in self.host):
            raise SchemaViolation(f"bad peer host: {self.host!r}")
        if not isinstance(self.port, int) or not (1 <= self.port <= 65535):
            raise SchemaViolation(f"peer port out of range: {self.port!r}")

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def __str__(self) -> str:
        return f"{self.host}:{self.port}"

    @classmethod
    def parse(cls, text: str) -> "PeerAddr":
        host, sep, port = text.rpartition(":")
        if not sep or not host:
            raise SchemaViolation(f"peer address must be host:port, got {text!r}")
        try:
            return cls(host=host, port=int(port))
        except ValueError:
            raise SchemaViolation(f"peer port must be an integer, got {port!r}") from None


class PeerClient(Protocol):
    """Transport used to talk to peers; HTTP in production, in-memory in tests."""

    def fetch_chain(self, addr: PeerAddr) -> Chain: ...

    def send_block(self, addr: PeerAddr, block: Block) -> str: ...


@dataclass
class NodeState:
    """One node's replicated state: its chain head and its peer set."""

    node_id: str
    chain: Chain
    peers: set[PeerAddr] = field(default_factory=set)
    key_resolver: KeyResolver | None = None
    self_addr: PeerAddr | None = None

    def add_peer(self, addr: PeerAddr) -> bool:
        if self.self_addr is not None and addr == self.self_addr:
            raise SchemaViolation("a node cannot peer with itself")
        if addr in self.peers:
            return False
        self.peers.add(addr)
        return True


@dataclass(frozen=True)
class Delivery:
    """Per-peer outcome of one block announcement."""

    peer: PeerAddr
    ok: bool
    detail: str


@dataclass(frozen=True)
class ReceiveResult:
    """Verdict on one incoming block announcement."""

    status: str  # "accepted" | "rejected" | "need_sync"
    reason: str = ""

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


def announce_block(state: NodeState, block: Block, client: PeerClient) -> list[Delivery]:
    """Push ``block`` to every peer; unreachable peers are recorded, not fatal."""
    deliveries = []
    for peer in sorted(state.peers):
        try:
            outcome = client.send_block(peer, block)
            deliveries.append(Delivery(peer=peer, ok=True, detail=outcome))
        except PeerUnreachable as exc:
            deliveries.append(Delivery(peer=peer, ok=False, detail=str(exc)))
    return deliveries


def receive_block(state: NodeState, block: Block) -> ReceiveResult:
    """Admit a peer-announced block if it validly extends the local head.

    Replayed or stale announcements are rejected without touching the
    chain (idempotent); a block more than one ahead signals a gap and
    asks for a full sync.
    """
    head = state.chain.head
    if block.index <= head.index:
        return ReceiveResult(status="rejected", reason="duplicate")
    if block.index > head.index + 1:
        return ReceiveResult(status="need_sync", reason=f"gap: local head {head.index}, block {block.index}")
    if block.prev_hash != head.hash:
        return ReceiveResult(status="rejected", reason="link")
    if block.compute_hash() != block.hash:
        return ReceiveResult(status="rejected", reason="hash-mismatch")
    if block.timestamp < head.timestamp:
        return ReceiveResult(status="rejected", reason="timestamp")
    if block.payload is None or block.payload.author_ref != block.author_ref:
        return ReceiveResult(status="rejected", reason="payload")
    registered = state.key_resolver(block.author_ref) if state.key_resolver else None
    if state.key_resolver is not None and registered is None:
        return ReceiveResult(status="rejected", reason="unknown-author")
    if not verify_attestation(block.payload, registered):
        return ReceiveResult(status="rejected", reason="attestation")
    state.chain = Chain(blocks=state.chain.blocks + (block,))
    return ReceiveResult(status="accepted")


@dataclass(frozen=True)
class SyncOutcome:
    adopted: bool
    chain_length: int
    peer_results: dict[PeerAddr, str]


def resolve_conflicts(state: NodeState, client: PeerClient) -> SyncOutcome:
    """Longest-valid-chain rule over every reachable peer.

    Fetches each peer's chain, keeps the longest one that passes full
    validation (attestations included), and adopts it only if strictly
    longer than the local chain — ties keep local. All peers being
    unreachable leaves the state unchanged.
    """
    best = state.chain
    adopted = False
    peer_results: dict[PeerAddr, str] = {}
    for peer in sorted(state.peers):
        try:
            candidate = client.fetch_chain(peer)
        except PeerUnreachable as exc:
            peer_results[peer] = f"unreachable: {exc}"
            continue
        if len(candidate) <= len(best):
            peer_results[peer] = "not-longer"
            continue
        violation = validate_chain(candidate, state.key_resolver)
        if violation is not None:
            peer_results[peer] = f"invalid at {violation.index}: {violation.reason}"
            continue
        best = candidate
        adopted = True
        peer_results[peer] = "adopted"
    state.chain = best
    return SyncOutcome(adopted=adopted, chain_length=len(state.chain), peer_results=peer_results)


# --- deterministic simulation harness ----------------------------------------


class InMemoryNetwork:
    """Loopback transport with partition support, keyed by peer address."""

    def __init__(self):
        self._nodes: dict[PeerAddr, "SimNode"] = {}
        self._groups: list[frozenset[PeerAddr]] | None = None

    def register(self, node: "SimNode") -> None:
        self._nodes[node.addr] = node

    def set_partition(self, groups: list[frozenset[PeerAddr]] | None) -> None:
        self._groups = groups

    def reachable(self, a: PeerAddr, b: PeerAddr) -> bool:
        if self._groups is None:
            return True
        for group in self._groups:
            if a in group and b in group:
                return True
        return False

    def client_for(self, origin: PeerAddr) -> PeerClient:
        network = self

        class _Client:
            def fetch_chain(self, addr: PeerAddr) -> Chain:
                node = network._lookup(origin, addr)
                return node.state.chain

            def send_block(self, addr: PeerAddr, block: Block) -> str:
                node = network._lookup(origin, addr)
                return node.handle_block(block).status

        return _Client()

    def _lookup(self, origin: PeerAddr, addr: PeerAddr) -> "SimNode":
        if not self.reachable(origin, addr):
            raise PeerUnreachable(f"{origin} cannot reach {addr}")
        node = self._nodes.get(addr)
        if node is None:
            raise PeerUnreachable(f"no node at {addr}")
        return node


@dataclass
class SimNode:
    """One simulated node: ledger state plus its view of the network."""

    addr: PeerAddr
    state: NodeState
    network: InMemoryNetwork

    def handle_block(self, block: Block) -> ReceiveResult:
        result = receive_block(self.state, block)
        if result.status == "need_sync":
            resolve_conflicts(self.state, self.network.client_for(self.addr))
        return result

    def publish(self, payload: BlockPayload, clock: Clock) -> tuple[Block, list[Delivery]]:
        self.state.chain = append_block(
            self.state.chain, payload, payload.author_ref, clock, self.state.key_resolver
        )
        block = self.state.chain.head
        deliveries = announce_block(self.state, block, self.network.client_for(self.addr))
        return block, deliveries

    def sync(self) -> SyncOutcome:
        return resolve_conflicts(self.state, self.network.client_for(self.addr))


def _sim_author(index: int, seed: int) -> tuple[AuthorProfile, AuthorKey]:
    profile = AuthorProfile(scopus_id=f"sim{index}", wos_id=f"S-{index:04d}-2020", display_name=f"Sim Author {index}")
    private, public = derive_keypair(f"por-sim:{seed}:{index}".encode())
    return profile, AuthorKey(author_ref=profile.ref(), public_key=public, private_key=private)


def _sim_payload(profile: AuthorProfile, key: AuthorKey, clock: Clock, salt: int) -> BlockPayload:
    """A fully honest payload built through the real consent flow.

    The underlying dataset is tiny but varies with ``salt`` so successive
    publishes produce distinct fingerprints.
    """
    pub_doi = validate_doi(f"10.9000/sim.{salt}")
    pubs_scopus = [
        PublicationRecord(source=SourceTag.SCOPUS, title=f"Sim {salt}", year=2020, doi=pub_doi)
    ]
    pubs_wos = [
        PublicationRecord(source=SourceTag.WOS, title=f"Sim {salt}", year=2020, doi=pub_doi)
    ]
    citations = [
        CitationRecord(
            source=SourceTag.SCOPUS,
            cited_doi=pub_doi,
            citing_doi=validate_doi(f"10.9000/cite.{salt}.{i}"),
        )
        for i in range(2)
    ] + [
        CitationRecord(
            source=SourceTag.WOS,
            cited_doi=pub_doi,
            citing_doi=validate_doi(f"10.9000/cite.{salt}.0"),
        )
    ]
    result = conflate_author(profile, pubs_scopus, pubs_wos, citations)
    session = open_session(profile, result, clock)
    answer_self(session, True)
    answer_retracted(session, True)
    acknowledge_metrics(session)
    outcome = answer_publish(session, True, key, clock)
    assert outcome.payload is not None
    return outcome.payload


@dataclass(frozen=True)
class NodeSnapshot:
    node: int
    length: int
    head_hash: str
    valid: bool


@dataclass(frozen=True)
class TranscriptEntry:
    step: int
    event: str
    result: str
    snapshots: tuple[NodeSnapshot, ...]


@dataclass(frozen=True)
class Transcript:
    entries: tuple[TranscriptEntry, ...]

    def final_snapshots(self) -> tuple[NodeSnapshot, ...]:
        return self.entries[-1].snapshots if self.entries else ()

    def heads_identical(self) -> bool:
        heads = {s.head_hash for s in self.final_snapshots()}
        return len(heads) == 1

    def always_valid(self) -> bool:
        return all(s.valid for e in self.entries for s in e.snapshots)


_EVENT_NAMES = {"publish", "partition", "heal", "sync"}


def _parse_event(event, node_count: int) -> tuple:
    if not isinstance(event, (tuple, list)) or not event or event[0] not in _EVENT_NAMES:
        raise ScriptError(f"unknown event: {event!r}")
    name = event[0]
    if name == "publish":
        if len(event) != 2 or not isinstance(event[1], int) or not (0 <= event[1] < node_count):
            raise ScriptError(f"publish needs a node index in [0, {node_count}): {event!r}")
    elif name == "partition":
        if len(event) != 2 or not isinstance(event[1], (list, tuple)):
            raise ScriptError(f"partition needs a list of node groups: {event!r}")
        seen: set[int] = set()
        for group in event[1]:
            if not isinstance(group, (list, tuple, set, frozenset)):
                raise ScriptError(f"partition group must be a collection: {group!r}")
            for member in group:
                if not isinstance(member, int) or not (0 <= member < node_count) or member in seen:
                    raise ScriptError(f"bad partition member {member!r} in {event!r}")
                seen.add(member)
    elif name == "heal":
        if len(event) != 1:
            raise ScriptError(f"heal takes no arguments: {event!r}")
    elif name == "sync":
        if len(event) != 2 or not (event[1] == "all" or (isinstance(event[1], int) and 0 <= event[1] < node_count)):
            raise ScriptError(f"sync needs a node index or 'all': {event!r}")
    return tuple(event)


def simulate(nodes: int, script: Iterable, seed: int = 0) -> Transcript:
    """Run a scripted multi-node session over the in-memory transport.

    Events: ``("publish", node)``, ``("partition", [[...], [...]])``,
    ``("heal",)``, ``("sync", node | "all")``. The transcript snapshots
    every node after every event (chain length, head fingerprint, full
    validity), and is deterministic for a given seed.
    """
    if nodes < 1:
        raise ScriptError("need at least one node")
    events = [_parse_event(e, nodes) for e in script]

    clock = TickingClock(start_ms=1_000, step_ms=1_000)
    keyring = Keyring()
    authors: list[tuple[AuthorProfile, AuthorKey]] = []
    for i in range(nodes):
        profile, key = _sim_author(i, seed)
        authors.append((profile, key))
        keyring.add(key)

    network = InMemoryNetwork()
    sim_nodes: list[SimNode] = []
    for i in range(nodes):
        addr = PeerAddr(host="sim", port=7000 + i)
        state = NodeState(
            node_id=f"node-{i}",
            chain=Chain.genesis(),
            peers={PeerAddr(host="sim", port=7000 + j) for j in range(nodes) if j != i},
            key_resolver=keyring.resolver(),
            self_addr=addr,
        )
        node = SimNode(addr=addr, state=state, network=network)
        network.register(node)
        sim_nodes.append(node)

    entries: list[TranscriptEntry] = []
    publish_counter = 0

    def snapshot() -> tuple[NodeSnapshot, ...]:
        return tuple(
            NodeSnapshot(
                node=i,
                length=len(node.state.chain),
                head_hash=node.state.chain.head.hash,
                valid=validate_chain(node.state.chain, keyring.resolver()) is None,
            )
            for i, node in enumerate(sim_nodes)
        )

    for step, event in enumerate(events):
        name = event[0]
        if name == "publish":
            node_index = event[1]
            profile, key = authors[node_index]
            payload = _sim_payload(profile, key, clock, salt=publish_counter)
            publish_counter += 1
            block, deliveries = sim_nodes[node_index].publish(payload, clock)
            delivered = sum(d.ok for d in deliveries)
            result = f"block {block.index} by node {node_index}; delivered {delivered}/{len(deliveries)}"
        elif name == "partition":
            groups = [frozenset(PeerAddr(host="sim", port=7000 + m) for m in g) for g in event[1]]
            network.set_partition(groups)
            result = f"partitioned into {len(groups)} groups"
        elif name == "heal":
            network.set_partition(None)
            result = "healed"
        else:  # sync
            targets = range(nodes) if event[1] == "all" else [event[1]]
            outcomes = [f"node {t}: {'adopted' if sim_nodes[t].sync().adopted else 'kept'}" for t in targets]
            result = "; ".join(outcomes)
        entries.append(
            TranscriptEntry(step=step, event=repr(event), result=result, snapshots=snapshot())
        )

    if not entries:
        entries.append(TranscriptEntry(step=0, event="(none)", result="no events", snapshots=snapshot()))
    return Transcript(entries=tuple(entries))
