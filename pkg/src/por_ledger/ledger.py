"""Append-only hash chain of author metrics blocks.

Each block is stamped with a SHA-256 fingerprint of the canonical
encoding of all its fields except the fingerprint itself, and links to
its parent by that fingerprint. Admission cost is attestation
verification — consent replaces proof-of-work. The chain bootstraps from
a fixed genesis block with an all-zero parent fingerprint and no payload.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .canon import ZERO_FINGERPRINT, canonical_json_bytes
from .canon import fingerprint as fingerprint  # re-exported module operation
from .clocks import Clock, system_clock
from .errors import ClockSkew, FileUnreadable, InvalidPayload, IoFailure, SchemaViolation, StorageCorrupt
from .por import BlockPayload, verify_attestation

CHAIN_SCHEMA = "por.chain.v1"

GENESIS_AUTHOR_REF = "genesis"
GENESIS_TIMESTAMP = 0

# ref -> public key hex, or None when no key is registered for the ref
KeyResolver = Callable[[str], Optional[str]]


@dataclass(frozen=True)
class Block:
    """One fingerprinted, timestamped ledger entry."""

    index: int
    timestamp: int  # UTC milliseconds
    author_ref: str
    payload: BlockPayload | None  # None only on genesis
    prev_hash: str
    hash: str

    def _hashable_doc(self) -> dict:
        return {
            "index": self.index,
            "timestamp": self.timestamp,
            "author_ref": self.author_ref,
            "payload": self.payload.to_doc() if self.payload is not None else None,
            "prev_hash": self.prev_hash,
        }

    def compute_hash(self) -> str:
        """Fingerprint of the canonical encoding of every field but ``hash``."""
        return fingerprint(canonical_json_bytes(self._hashable_doc()))

    def to_doc(self) -> dict:
        doc = self._hashable_doc()
        doc["hash"] = self.hash
        return doc

    def to_bytes(self) -> bytes:
        """Canonical wire/storage encoding — bit-exact everywhere."""
        return canonical_json_bytes(self.to_doc())

    @classmethod
    def from_doc(cls, doc: dict) -> "Block":
        if not isinstance(doc, dict):
            raise SchemaViolation("block must be an object")
        try:
            index = doc["index"]
            timestamp = doc["timestamp"]
            author_ref = doc["author_ref"]
            prev_hash = doc["prev_hash"]
            block_hash = doc["hash"]
            raw_payload = doc["payload"]
        except KeyError as exc:
            raise SchemaViolation(f"block missing field {exc}") from exc
        if not isinstance(index, int) or isinstance(index, bool) or index < 0:
            raise SchemaViolation("block index must be a non-negative integer")
        if not isinstance(timestamp, int) or isinstance(timestamp, bool):
            raise SchemaViolation("block timestamp must be an integer (ms)")
        for name, value in (("author_ref", author_ref), ("prev_hash", prev_hash), ("hash", block_hash)):
            if not isinstance(value, str):
                raise SchemaViolation(f"block {name} must be a string")
        payload = BlockPayload.from_doc(raw_payload) if raw_payload is not None else None
        return cls(
            index=index,
            timestamp=timestamp,
            author_ref=author_ref,
            payload=payload,
            prev_hash=prev_hash,
            hash=block_hash,
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        try:
            return cls.from_doc(json.loads(data.decode("utf-8")))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise SchemaViolation(f"block bytes are not valid JSON: {exc}") from exc


def _make_genesis() -> Block:
    header = {
        "index": 0,
        "timestamp": GENESIS_TIMESTAMP,
        "author_ref": GENESIS_AUTHOR_REF,
        "payload": None,
        "prev_hash": ZERO_FINGERPRINT,
    }
    return Block(
        index=0,
        timestamp=GENESIS_TIMESTAMP,
        author_ref=GENESIS_AUTHOR_REF,
        payload=None,
        prev_hash=ZERO_FINGERPRINT,
        hash=fingerprint(canonical_json_bytes(header)),
    )


GENESIS_BLOCK = _make_genesis()


@dataclass(frozen=True)
class Chain:
    """Immutable ordered block list starting at genesis."""

    blocks: tuple[Block, ...]

    @classmethod
    def genesis(cls) -> "Chain":
        return cls(blocks=(GENESIS_BLOCK,))

    @property
    def head(self) -> Block:
        return self.blocks[-1]

    def __len__(self) -> int:
        return len(self.blocks)

    def to_doc(self) -> dict:
        return {"schema": CHAIN_SCHEMA, "blocks": [b.to_doc() for b in self.blocks]}

    @classmethod
    def from_doc(cls, doc: dict) -> "Chain":
        if not isinstance(doc, dict) or doc.get("schema") != CHAIN_SCHEMA:
            raise SchemaViolation(f"expected schema {CHAIN_SCHEMA!r}")
        raw_blocks = doc.get("blocks")
        if not isinstance(raw_blocks, list) or not raw_blocks:
            raise SchemaViolation("chain needs a non-empty block array")
        blocks = []
        for i, raw in enumerate(raw_blocks):
            try:
                blocks.append(Block.from_doc(raw))
            except SchemaViolation as exc:
                raise StorageCorrupt(f"block {i} undecodable: {exc}", index=i, reason="decode") from exc
        return cls(blocks=tuple(blocks))


@dataclass(frozen=True)
class ChainViolation:
    """Lowest-index structural defect found by :func:`validate_chain`."""

    index: int
    reason: str

    def to_doc(self) -> dict:
        return {"index": self.index, "reason": self.reason}


def append_block(
    chain: Chain,
    payload: BlockPayload,
    author_ref: str,
    clock: Clock = system_clock,
    key_resolver: KeyResolver | None = None,
) -> Chain:
    """Extend the chain by one attested block; the old chain is untouched.

    ``key_resolver``, when given, pins the attestation to the author's
    registered public key.
    """
    registered = key_resolver(author_ref) if key_resolver is not None else None
    if key_resolver is not None and registered is None:
        raise InvalidPayload(f"no registered key for author {author_ref!r}")
    if payload.author_ref != author_ref:
        raise InvalidPayload(
            f"payload author {payload.author_ref!r} does not match block author {author_ref!r}"
        )
    if not verify_attestation(payload, registered):
        raise InvalidPayload("attestation failed verification")
    parent = chain.head
    timestamp = clock()
    if timestamp < parent.timestamp:
        raise ClockSkew(f"timestamp {timestamp} precedes parent's {parent.timestamp}")
    header = {
        "index": parent.index + 1,
        "timestamp": timestamp,
        "author_ref": author_ref,
        "payload": payload.to_doc(),
        "prev_hash": parent.hash,
    }
    block = Block(
        index=parent.index + 1,
        timestamp=timestamp,
        author_ref=author_ref,
        payload=payload,
        prev_hash=parent.hash,
        hash=fingerprint(canonical_json_bytes(header)),
    )
    return Chain(blocks=chain.blocks + (block,))


def validate_chain(chain: Chain, key_resolver: KeyResolver | None = None) -> ChainViolation | None:
    """Full structural + Proof-of-Reference check.

    Returns ``None`` for a valid chain, else the lowest violating index
    with a reason: genesis fixity, index continuity, parent links, hash
    recomputation, timestamp monotonicity, and attestation verification
    are all enforced.
    """
    if not chain.blocks:
        return ChainViolation(0, "empty")
    if chain.blocks[0] != GENESIS_BLOCK:
        return ChainViolation(0, "genesis-mismatch")
    for i in range(1, len(chain.blocks)):
        block = chain.blocks[i]
        parent = chain.blocks[i - 1]
        if block.index != i:
            return ChainViolation(i, "index")
        if block.prev_hash != parent.hash:
            return ChainViolation(i, "link")
        if block.compute_hash() != block.hash:
            return ChainViolation(i, "hash-mismatch")
        if block.timestamp < parent.timestamp:
            return ChainViolation(i, "timestamp")
        if block.payload is None:
            return ChainViolation(i, "missing-payload")
        if block.payload.author_ref != block.author_ref:
            return ChainViolation(i, "author-mismatch")
        registered = key_resolver(block.author_ref) if key_resolver is not None else None
        if key_resolver is not None and registered is None:
            return ChainViolation(i, "unknown-author")
        if not verify_attestation(block.payload, registered):
            return ChainViolation(i, "attestation")
    return None


def is_valid(chain: Chain, key_resolver: KeyResolver | None = None) -> bool:
    return validate_chain(chain, key_resolver) is None


# --- persistence ------------------------------------------------------------


def persist_chain(chain: Chain, path: str | Path) -> None:
    """Write the chain document atomically (temp file + rename)."""
    path = Path(path)
    data = canonical_json_bytes(chain.to_doc())
    try:
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot persist chain to {path}: {exc}") from exc


def load_chain(
    path: str | Path, key_resolver: KeyResolver | None = None, verify: bool = True
) -> Chain:
    """Load a persisted chain; partial or tampered files are rejected.

    With ``verify`` (the default) the loaded chain must pass
    :func:`validate_chain`, so corruption surfaces as
    :class:`StorageCorrupt` carrying the violating index.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError as exc:
        raise FileUnreadable(f"no chain file at {path}") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read chain file {path}: {exc}") from exc
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise StorageCorrupt(f"chain file {path} is not valid JSON: {exc}", reason="decode") from exc
    try:
        chain = Chain.from_doc(doc)
    except SchemaViolation as exc:
        raise StorageCorrupt(f"chain file {path}: {exc}", reason="decode") from exc
    if verify:
        violation = validate_chain(chain, key_resolver)
        if violation is not None:
            raise StorageCorrupt(
                f"chain file {path} invalid at block {violation.index}: {violation.reason}",
                index=violation.index,
                reason=violation.reason,
            )
    return chain
