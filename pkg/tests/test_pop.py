import pytest

from ajwt.core.pop import (
    MalformedSignatureError,
    MissingCoveredHeaderError,
    PopKeyPair,
    StaleSignatureError,
    UnsupportedKeyError,
    content_digest,
    generate_pop_keypair,
    jwk_thumbprint,
    public_key_from_jwk,
    sign_http_request,
    thumbprint_b64url,
    verify_http_signature,
)

NOW = 1719570900
HEADERS = {"Authorization": "Bearer tok"}
DIGEST = content_digest(b'{"patch": 1}')

# Ed25519 thumbprint example published in RFC 8037, appendix A.3
RFC8037_JWK = {"kty": "OKP", "crv": "Ed25519", "x": "11qYAYKxCrfVS_7TyWQHOg7hcvPapiMlrwIaaPcHURo"}
RFC8037_THUMBPRINT = "kPrK_qmxVWaYVA9wwBF6Iuo3vVzz7TxHCTwXBygrS4k"


@pytest.fixture(scope="module")
def key():
    return generate_pop_keypair("patcher", NOW)


def test_rfc8037_thumbprint_vector():
    assert thumbprint_b64url(RFC8037_JWK) == RFC8037_THUMBPRINT
    assert thumbprint_b64url(public_key_from_jwk(RFC8037_JWK)) == RFC8037_THUMBPRINT


def test_thumbprint_deterministic_and_distinct(key):
    assert jwk_thumbprint(key) == jwk_thumbprint(key)
    other = generate_pop_keypair("patcher", NOW)
    assert jwk_thumbprint(key) != jwk_thumbprint(other)


def test_unsupported_key_type():
    with pytest.raises(UnsupportedKeyError):
        jwk_thumbprint({"kty": "RSA", "n": "x", "e": "AQAB"})
    with pytest.raises(UnsupportedKeyError):
        jwk_thumbprint(PopKeyPair(kid="k", public=b"\x00" * 32, key_type="EC/P-256"))


def test_kid_shape(key):
    assert key.kid.startswith("agent:patcher#2024-06-28T")
    assert "Ed25519PrivateKey" not in repr(key)


def _sign(key, target="/repo/patches", created=NOW):
    return sign_http_request("POST", target, HEADERS, DIGEST, key, created)


def test_sign_then_verify(key):
    si, sig = _sign(key)
    assert si.startswith('sig1=("@method" "@request-target" "authorization" "content-digest");created=')
    assert verify_http_signature("POST", "/repo/patches", HEADERS, DIGEST, si, sig, key, NOW)


def test_other_public_key_rejects(key):
    si, sig = _sign(key)
    other = generate_pop_keypair("planner", NOW)
    assert not verify_http_signature("POST", "/repo/patches", HEADERS, DIGEST, si, sig, other, NOW)


def test_changed_body_digest_rejects(key):
    si, sig = _sign(key)
    assert not verify_http_signature(
        "POST", "/repo/patches", HEADERS, content_digest(b"other"), si, sig, key, NOW
    )


def test_different_path_rejects(key):
    si, sig = _sign(key)
    assert not verify_http_signature("POST", "/repo/delete", HEADERS, DIGEST, si, sig, key, NOW)


def test_stale_signature(key):
    si, sig = _sign(key, created=NOW - 61)
    with pytest.raises(StaleSignatureError):
        verify_http_signature("POST", "/repo/patches", HEADERS, DIGEST, si, sig, key, NOW, max_skew=60)
    si, sig = _sign(key, created=NOW - 60)
    assert verify_http_signature("POST", "/repo/patches", HEADERS, DIGEST, si, sig, key, NOW, max_skew=60)


def test_missing_covered_header(key):
    with pytest.raises(MissingCoveredHeaderError):
        sign_http_request("POST", "/x", {}, DIGEST, key, NOW)


@pytest.mark.parametrize(
    "si,sig",
    [
        ("", "sig1=:AAAA:"),
        ('sig1=("@method");created=1;keyid="k";alg="ed25519"', "sig1=:AAAA:"),
        ('sig1=("@method" "@request-target" "authorization" "content-digest");created=1;keyid="k";alg="ed25519"', "nope"),
    ],
)
def test_malformed_headers(key, si, sig):
    with pytest.raises(MalformedSignatureError):
        verify_http_signature("POST", "/x", HEADERS, DIGEST, si, sig, key, NOW)
