"""Ed25519 key material: generation, detached signing, keyrings.

One asymmetric keypair per author, registered at the node. Keys travel as
32-byte lowercase hex strings; signatures as 64-byte hex. Ed25519 signing
is deterministic, so identical attestation bytes always yield identical
signatures — a property the block parity tests rely on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import FileUnreadable, SchemaViolation, SignatureFailure, UnknownAuthor

ALGORITHM = "ed25519"
KEY_SCHEMA = "por.key.v1"
KEYRING_SCHEMA = "por.keyring.v1"


def _private_to_hex(key: Ed25519PrivateKey) -> str:
    from cryptography.hazmat.primitives.serialization import (
        Encoding,
        NoEncryption,
        PrivateFormat,
    )

    return key.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption()).hex()


def _public_to_hex(key: Ed25519PublicKey) -> str:
    from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

    return key.public_bytes(Encoding.Raw, PublicFormat.Raw).hex()


def generate_keypair() -> tuple[str, str]:
    """Fresh random keypair as ``(private_hex, public_hex)``."""
    private = Ed25519PrivateKey.generate()
    return _private_to_hex(private), _public_to_hex(private.public_key())


def derive_keypair(seed: bytes) -> tuple[str, str]:
    """Keypair derived deterministically from ``seed``.

    Only for test fixtures and the simulation harness; real authors get
    ``generate_keypair``.
    """
    private = Ed25519PrivateKey.from_private_bytes(hashlib.sha256(seed).digest())
    return _private_to_hex(private), _public_to_hex(private.public_key())


def sign(private_hex: str, message: bytes) -> str:
    """Detached signature over ``message``, hex-encoded."""
    try:
        key = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(private_hex))
        return key.sign(message).hex()
    except (ValueError, TypeError) as exc:
        raise SignatureFailure(f"cannot sign: {exc}") from exc


def verify(public_hex: str, message: bytes, signature_hex: str) -> bool:
    try:
        key = Ed25519PublicKey.from_public_bytes(bytes.fromhex(public_hex))
        key.verify(bytes.fromhex(signature_hex), message)
        return True
    except (ValueError, TypeError, InvalidSignature):
        return False


@dataclass(frozen=True)
class AuthorKey:
    """Registered key material for one author.

    ``private_key`` is present only for authors hosted at this node.
    """

    author_ref: str
    public_key: str
    private_key: str | None = None

    def can_sign(self) -> bool:
        return self.private_key is not None

    def to_doc(self) -> dict:
        doc = {"author_ref": self.author_ref, "public_key": self.public_key}
        if self.private_key is not None:
            doc["private_key"] = self.private_key
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "AuthorKey":
        try:
            return cls(
                author_ref=doc["author_ref"],
                public_key=doc["public_key"],
                private_key=doc.get("private_key"),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaViolation(f"bad key entry: {exc}") from exc


class Keyring:
    """Author-ref -> key registry, loadable from a por.keyring.v1 file."""

    def __init__(self, keys: list[AuthorKey] | None = None):
        self._keys: dict[str, AuthorKey] = {}
        for key in keys or []:
            self.add(key)

    def add(self, key: AuthorKey) -> None:
        self._keys[key.author_ref] = key

    def __contains__(self, author_ref: str) -> bool:
        return author_ref in self._keys

    def __len__(self) -> int:
        return len(self._keys)

    def public_key_for(self, author_ref: str) -> str | None:
        key = self._keys.get(author_ref)
        return key.public_key if key else None

    def signer_for(self, author_ref: str) -> AuthorKey:
        key = self._keys.get(author_ref)
        if key is None or not key.can_sign():
            raise UnknownAuthor(f"no signing key registered for {author_ref!r}")
        return key

    def resolver(self):
        """Lookup callable for chain validation (ref -> public key hex or None)."""
        return self.public_key_for

    def to_doc(self) -> dict:
        return {
            "schema": KEYRING_SCHEMA,
            "algorithm": ALGORITHM,
            "keys": [self._keys[ref].to_doc() for ref in sorted(self._keys)],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_doc(), indent=2), encoding="utf-8")

    @classmethod
    def from_doc(cls, doc: dict) -> "Keyring":
        if not isinstance(doc, dict) or doc.get("schema") != KEYRING_SCHEMA:
            raise SchemaViolation(f"expected schema {KEYRING_SCHEMA!r}")
        return cls([AuthorKey.from_doc(entry) for entry in doc.get("keys", [])])

    @classmethod
    def load(cls, path: str | Path) -> "Keyring":
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise FileUnreadable(f"cannot read keyring {path}: {exc}") from exc
        try:
            return cls.from_doc(json.loads(raw))
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"keyring {path} is not valid JSON: {exc}") from exc


def save_key_file(path: str | Path, key: AuthorKey) -> None:
    doc = {"schema": KEY_SCHEMA, "algorithm": ALGORITHM, **key.to_doc()}
    Path(path).write_text(json.dumps(doc, indent=2), encoding="utf-8")


def load_key_file(path: str | Path) -> AuthorKey:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read key file {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"key file {path} is not valid JSON: {exc}") from exc
    if doc.get("schema") != KEY_SCHEMA:
        raise SchemaViolation(f"expected schema {KEY_SCHEMA!r} in {path}")
    return AuthorKey.from_doc(doc)
