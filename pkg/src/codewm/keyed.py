"""Secret-keyed SHA-256 digests.

All randomised decisions (rule ordering, operand order, decoy parity) go
through :func:`digest`, which prefixes the 32-byte secret to the payload.
Without the key an observer cannot predict which rules form the mark or
which way an operand pair "should" be ordered.
"""

from __future__ import annotations

import enum
import hashlib
import os
import re
import secrets
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import DigestCollision, KeyFileError

KEY_ENV = "CODEWM_KEY_FILE"
_HEX64 = re.compile(r"^[0-9a-f]{64}$")


@dataclass(frozen=True)
class SecretKey:
    key_bytes: bytes = field(repr=False)
    key_id: str = ""

    def __post_init__(self):
        if len(self.key_bytes) != 32:
            raise KeyFileError(f"secret key must be 32 bytes, got {len(self.key_bytes)}")
        if not self.key_id:
            object.__setattr__(self, "key_id", hexdigest(self, b"key-id")[:8])

    @classmethod
    def from_hex(cls, text: str) -> "SecretKey":
        text = text.strip()
        if not _HEX64.match(text):
            raise KeyFileError("key must be exactly 64 lowercase hex characters")
        return cls(bytes.fromhex(text))

    @classmethod
    def generate(cls) -> "SecretKey":
        return cls(secrets.token_bytes(32))

    def to_hex(self) -> str:
        return self.key_bytes.hex()


class Order(enum.Enum):
    KEEP = "keep"
    SWAP = "swap"


def _payload(payload: bytes | str) -> bytes:
    return payload.encode("utf-8") if isinstance(payload, str) else payload


def digest(key: SecretKey, payload: bytes | str) -> bytes:
    return hashlib.sha256(key.key_bytes + _payload(payload)).digest()


def hexdigest(key: SecretKey, payload: bytes | str) -> str:
    return hashlib.sha256(key.key_bytes + _payload(payload)).hexdigest()


def parity(key: SecretKey, payload: bytes | str) -> int:
    """Lowest-order bit of the digest read as a big-endian integer."""
    return digest(key, payload)[-1] & 1


def digest_int(key: SecretKey, payload: bytes | str) -> int:
    return int.from_bytes(digest(key, payload), "big")


@dataclass(frozen=True)
class RuleOrdering:
    ordered_rule_ids: tuple[str, ...]
    key_id: str

    def __iter__(self):
        return iter(self.ordered_rule_ids)

    def __len__(self):
        return len(self.ordered_rule_ids)

    def __getitem__(self, item):
        return self.ordered_rule_ids[item]


def sort_rules(key: SecretKey, applicable: Iterable[str]) -> RuleOrdering:
    """Ascending order of the keyed hex digest of each rule id."""
    ids = set(applicable)
    keyed = {rid: hexdigest(key, rid) for rid in ids}
    if len(set(keyed.values())) != len(keyed):
        raise DigestCollision("two rule ids share a keyed digest")
    ordered = tuple(sorted(ids, key=keyed.__getitem__))
    return RuleOrdering(ordered, key.key_id)


def operand_order(key: SecretKey, left: str, right: str) -> Order:
    """Larger keyed digest goes first; ties keep the current order."""
    if hexdigest(key, left) >= hexdigest(key, right):
        return Order.KEEP
    return Order.SWAP


def canonical_text(text: str) -> str:
    return "".join(text.split())


# -- key files ---------------------------------------------------------------


def write_key_file(path: str | os.PathLike, key: SecretKey | None = None) -> SecretKey:
    key = key or SecretKey.generate()
    path = Path(path)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as fh:
        fh.write(key.to_hex() + "\n")
    os.chmod(path, 0o600)
    return key


def load_key(path: str | os.PathLike | None = None) -> SecretKey:
    """Load a key from ``path``, falling back to ``$CODEWM_KEY_FILE``."""
    if path is None:
        path = os.environ.get(KEY_ENV)
    if not path:
        raise KeyFileError(f"no key given: pass --key or set {KEY_ENV}")
    try:
        text = Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise KeyFileError(f"cannot read key file {path}: {exc}") from exc
    lines = text.splitlines()
    if len(lines) != 1:
        raise KeyFileError(f"key file {path} must hold a single line")
    return SecretKey.from_hex(lines[0])
