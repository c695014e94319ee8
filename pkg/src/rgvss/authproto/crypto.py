"""Cryptographic primitives behind a suite id carried in every frame.

Suite 0x01: SHA-256 digests, ChaCha20-Poly1305 AEAD with 12-byte nonces,
Ed25519 signatures, X25519 ephemeral key agreement.
"""

from __future__ import annotations

import hashlib
import os

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from .errors import AeadFailure

KEY_SIZE = 32
NONCE_SIZE = 12
DIGEST_SIZE = 32
SIGNATURE_SIZE = 64
PUBLIC_KEY_SIZE = 32
TAG_SIZE = 16


class CryptoSuite:
    suite_id = 0x01
    name = "sha256+chacha20poly1305+ed25519+x25519"

    def digest(self, data: bytes) -> bytes:
        return hashlib.sha256(data).digest()

    def random_bytes(self, n: int) -> bytes:
        return os.urandom(n)

    def seal(self, key: bytes, plaintext: bytes, aad: bytes = b"") -> bytes:
        """Return ``nonce || ciphertext`` with a fresh random nonce."""
        nonce = self.random_bytes(NONCE_SIZE)
        return nonce + ChaCha20Poly1305(key).encrypt(nonce, plaintext, aad)

    def open(self, key: bytes, blob: bytes, aad: bytes = b"") -> bytes:
        if len(blob) < NONCE_SIZE + TAG_SIZE:
            raise AeadFailure("ciphertext too short")
        nonce, ct = blob[:NONCE_SIZE], blob[NONCE_SIZE:]
        try:
            return ChaCha20Poly1305(key).decrypt(nonce, ct, aad)
        except InvalidTag:
            raise AeadFailure("authentication tag mismatch") from None

    def signing_key(self) -> Ed25519PrivateKey:
        return Ed25519PrivateKey.generate()

    def public_bytes(self, key: Ed25519PrivateKey) -> bytes:
        return key.public_key().public_bytes_raw()

    def sign(self, key: Ed25519PrivateKey, data: bytes) -> bytes:
        return key.sign(data)

    def verify(self, public_key: bytes, signature: bytes, data: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(public_key).verify(signature, data)
        except (InvalidSignature, ValueError):
            return False
        return True

    def ephemeral(self) -> tuple[X25519PrivateKey, bytes]:
        key = X25519PrivateKey.generate()
        return key, key.public_key().public_bytes_raw()

    def agree(self, key: X25519PrivateKey, peer_public: bytes) -> bytes:
        return key.exchange(X25519PublicKey.from_public_bytes(peer_public))


DEFAULT_SUITE = CryptoSuite()
SUITES = {DEFAULT_SUITE.suite_id: DEFAULT_SUITE}
