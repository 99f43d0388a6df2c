"""Canonical byte encoding and fingerprinting.

Everything that gets hashed or signed goes through ``canonical_json_bytes``:
JSON with lexicographically sorted keys, no insignificant whitespace, ASCII
escapes only. Two structurally equal documents always produce identical
bytes, which keeps block hashes and attestation signatures stable across
processes and machines.
"""

from __future__ import annotations

import hashlib
import json

# All-zero digest used as the genesis block's parent fingerprint.
ZERO_FINGERPRINT = "0" * 64


def canonical_json_bytes(value) -> bytes:
    """Deterministic JSON encoding of ``value`` (UTF-8 bytes)."""
    return json.dumps(
        value,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=True,
        allow_nan=False,
    ).encode("utf-8")


def fingerprint(data: bytes) -> str:
    """256-bit digest of ``data``, lowercase hex."""
    return hashlib.sha256(data).hexdigest()


def fingerprint_doc(value) -> str:
    """Fingerprint of the canonical encoding of a JSON-able value."""
    return fingerprint(canonical_json_bytes(value))
