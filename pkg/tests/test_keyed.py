import hashlib
import os
import stat

import pytest
from hypothesis import given, settings, strategies as st

from codewm.errors import KeyFileError
from codewm.keyed import (
    KEY_ENV, Order, SecretKey, canonical_text, digest, hexdigest, load_key, operand_order,
    parity, sort_rules, write_key_file,
)
from codewm.rules import RULES

ALL_IDS = [r.rule_id for r in RULES]


def test_digest_is_sha256_of_key_then_payload(golden_key):
    assert digest(golden_key, "a") == hashlib.sha256(golden_key.key_bytes + b"a").digest()
    assert hexdigest(golden_key, b"a") == digest(golden_key, "a").hex()


def test_digest_differs_between_payloads_and_keys(golden_key, second_key):
    assert digest(golden_key, "a") != digest(golden_key, "b")
    assert digest(golden_key, "a") != digest(second_key, "a")


def test_digest_is_stable(golden_key):
    assert digest(golden_key, "payload") == digest(golden_key, "payload")


def test_parity_is_lowest_bit(golden_key):
    d = digest(golden_key, "A")
    assert parity(golden_key, "A") == int.from_bytes(d, "big") % 2


def test_key_id_is_digest_prefix(golden_key):
    assert golden_key.key_id == hexdigest(golden_key, "key-id")[:8]


def test_key_bytes_not_in_repr(golden_key):
    assert golden_key.to_hex() not in repr(golden_key)


def test_sort_rules_singleton(golden_key):
    assert list(sort_rules(golden_key, {"R1-unnecessary-else"})) == ["R1-unnecessary-else"]


def test_sort_rules_ascending_hex(golden_key):
    ordering = sort_rules(golden_key, ALL_IDS)
    hexes = [hexdigest(golden_key, r) for r in ordering]
    assert hexes == sorted(hexes)
    assert sorted(ordering) == sorted(ALL_IDS)
    assert ordering.key_id == golden_key.key_id


def test_sort_rules_deterministic(golden_key):
    assert sort_rules(golden_key, ALL_IDS) == sort_rules(golden_key, reversed(ALL_IDS))


def test_shipped_keys_give_different_permutations(golden_key, second_key):
    assert list(sort_rules(golden_key, ALL_IDS)) != list(sort_rules(second_key, ALL_IDS))


def test_operand_order_table_example(golden_key):
    # the golden key satisfies Hash("a") < Hash("b"), so "a + b" becomes "b + a"
    assert hexdigest(golden_key, "a") < hexdigest(golden_key, "b")
    assert operand_order(golden_key, "a", "b") is Order.SWAP


def test_operand_order_tie_keeps(golden_key):
    assert operand_order(golden_key, "x", "x") is Order.KEEP


@given(st.text(min_size=1, max_size=12), st.text(min_size=1, max_size=12))
@settings(max_examples=100)
def test_operand_order_antisymmetric(x, y):
    key = SecretKey(bytes(range(32)))
    a, b = operand_order(key, x, y), operand_order(key, y, x)
    if x == y:
        assert a is b is Order.KEEP
    else:
        assert a is not b


def test_canonical_text_drops_whitespace():
    assert canonical_text(" a  *\n b ") == "a*b"


def test_key_file_roundtrip(tmp_path):
    path = tmp_path / "k.key"
    key = write_key_file(path)
    text = path.read_text()
    assert len(text.strip()) == 64 and text.strip() == text.strip().lower()
    assert stat.S_IMODE(os.stat(path).st_mode) == 0o600
    assert load_key(path) == key


def test_generated_keys_differ():
    assert SecretKey.generate() != SecretKey.generate()


@pytest.mark.parametrize("content", ["", "abc\n", "G" * 64 + "\n", "AB" * 32 + "\n", "ab" * 32 + "\nab\n"])
def test_malformed_key_files_rejected(tmp_path, content):
    path = tmp_path / "bad.key"
    path.write_text(content)
    with pytest.raises(KeyFileError):
        load_key(path)


def test_missing_key_file(tmp_path):
    with pytest.raises(KeyFileError):
        load_key(tmp_path / "nope.key")


def test_env_fallback(tmp_path, monkeypatch):
    path = tmp_path / "env.key"
    key = write_key_file(path)
    monkeypatch.setenv(KEY_ENV, str(path))
    assert load_key() == key
    monkeypatch.delenv(KEY_ENV)
    with pytest.raises(KeyFileError):
        load_key()


def test_wrong_length_key_bytes():
    with pytest.raises(KeyFileError):
        SecretKey(b"short")
