import hashlib

import pytest
from cryptography.hazmat.primitives import hashes

from ajwt.core.canonical import Checksum, canonical_json, compute_checksum, compute_step_sequence_hash

# Digests below were produced with `openssl dgst -sha256` over hand-written bytes.
EMPTY_SHA256 = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
EMPTY_LIST = "4f53cda18c2baa0c0354bb5f9a3ecbe5ed12ab4d8e11ba873c2f11161202b945"
AB = "0473ef2dc0d324ab659d3580c1134e9d812035905c4781fdd6d529b0c6860e13"
BA = "02d8bc3008a9bb0dcc4b86d7fd3428ced792355c733c19756bec5a56dc61b2c5"
CODE_ANALYSIS = "c0edd22b926cff88ba73047eeab529942295d7c7b631e4f50b8b7d7edeea4261"
CODE_ANALYSIS_PATCH = "12c386e3aad0baef0338129859e74ea48ee1cfaf97abd576ed395db2bc901540"


def oracle_sha256(data: bytes) -> str:
    h = hashes.Hash(hashes.SHA256())
    h.update(data)
    return h.finalize().hex()


def test_empty_input_checksum():
    assert str(compute_checksum(b"")) == "sha256:" + EMPTY_SHA256


def test_checksum_is_deterministic():
    assert compute_checksum(b"abc") == compute_checksum(b"abc")


def test_flipped_bit_changes_checksum():
    data = bytearray(b"agent identity")
    flipped = bytearray(data)
    flipped[3] ^= 0x01
    assert str(compute_checksum(bytes(data))) == "sha256:" + oracle_sha256(bytes(data))
    assert str(compute_checksum(bytes(flipped))) == "sha256:" + oracle_sha256(bytes(flipped))
    assert compute_checksum(bytes(data)) != compute_checksum(bytes(flipped))


def test_rendering_round_trips():
    c = compute_checksum(b"x")
    assert Checksum.parse(str(c)) == c
    assert Checksum.parse("sha256 " + c.hex) == c


@pytest.mark.parametrize(
    "text", ["sha256:abc", "md5:" + "0" * 64, "sha256:" + "G" * 64, "", "sha256:" + "A" * 64]
)
def test_malformed_checksums_rejected(text):
    with pytest.raises(ValueError):
        Checksum.parse(text)


def test_digest_length_enforced():
    with pytest.raises(ValueError):
        Checksum(b"\x00" * 31)


def test_canonical_json_layout():
    assert canonical_json({"b": 1, "a": [1, "x"], "c": {"z": None, "y": True}}) == (
        b'{"a":[1,"x"],"b":1,"c":{"y":true,"z":null}}'
    )
    assert canonical_json({"k": "é"}) == '{"k":"é"}'.encode("utf-8")


@pytest.mark.parametrize(
    "steps,expected",
    [
        ([], EMPTY_LIST),
        (["a", "b"], AB),
        (["b", "a"], BA),
        (["code_analysis"], CODE_ANALYSIS),
        (["code_analysis", "patch"], CODE_ANALYSIS_PATCH),
    ],
)
def test_step_sequence_hash_vectors(steps, expected):
    assert str(compute_step_sequence_hash(steps)) == "sha256:" + expected


def test_step_sequence_hash_order_and_prefix_sensitive():
    assert compute_step_sequence_hash(["a", "b"]) != compute_step_sequence_hash(["b", "a"])
    assert compute_step_sequence_hash(["code_analysis"]) != compute_step_sequence_hash(
        ["code_analysis", "patch"]
    )


def test_hashlib_and_oracle_agree_on_fixed_input():
    assert hashlib.sha256(b"[]").hexdigest() == oracle_sha256(b"[]") == EMPTY_LIST
