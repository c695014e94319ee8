"""Session keys and the byte strings signed during the handshake.

The handshake runs in three flights:

1. user -> server ``HandshakeInit``: user id, fresh nonce and an X25519
   ephemeral public key, signed with the user's Ed25519 key.
2. server -> user ``HandshakeAck``: server nonce and ephemeral key, signed
   over the full transcript (both ids, both nonces, both ephemerals).
3. user -> server ``HandshakeConfirm``, encrypted under the new key: the
   user's signature over the same transcript.

The session key is SHA-256 over a label, the X25519 shared secret and the
transcript.  The server stores it only after flight 3 verifies.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SessionExpired
from .wire import lp

DEFAULT_BUDGET = 64


@dataclass
class SessionKey:
    """Symmetric key shared by ``parties``, valid for ``budget`` more messages."""

    key: bytes
    parties: tuple[str, str]
    budget: int = DEFAULT_BUDGET

    def use(self) -> bytes:
        if self.budget <= 0:
            raise SessionExpired(f"session {self.parties[0]}<->{self.parties[1]} expired")
        self.budget -= 1
        return self.key

    @property
    def expired(self) -> bool:
        return self.budget <= 0

    def __repr__(self):
        return f"SessionKey(parties={self.parties}, budget={self.budget})"


def init_signed_bytes(user: str, server: str, nonce: bytes, ephemeral: bytes) -> bytes:
    return b"rgvss/hs-init/v1" + lp(user.encode()) + lp(server.encode()) + lp(nonce) + lp(ephemeral)


def transcript_bytes(
    user: str, server: str, client_nonce: bytes, server_nonce: bytes,
    client_ephemeral: bytes, server_ephemeral: bytes,
) -> bytes:
    return b"rgvss/hs/v1" + b"".join(
        lp(x) for x in (
            user.encode(), server.encode(), client_nonce, server_nonce,
            client_ephemeral, server_ephemeral,
        )
    )


def ack_signed_bytes(transcript: bytes) -> bytes:
    return b"rgvss/hs-ack/v1" + transcript


def confirm_signed_bytes(transcript: bytes) -> bytes:
    return b"rgvss/hs-confirm/v1" + transcript


def derive_key(suite, shared: bytes, transcript: bytes) -> bytes:
    return suite.digest(b"rgvss/session/v1" + shared + transcript)
