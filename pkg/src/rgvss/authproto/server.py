"""The trusted server: generates shares, signs their digests, brokers keys."""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from ..bitimage import BinaryImage, canonical_bytes
from ..randgrid import SchemeParams, ShareSet, split
from ..rng import RandomSource, make_source
from . import session as hs
from .crypto import DEFAULT_SUITE, PUBLIC_KEY_SIZE, CryptoSuite
from .errors import (
    BadSignature,
    DuplicatePrincipal,
    NoSession,
    ProtocolError,
    ReplayDetected,
    UnexpectedMessage,
    UnknownPrincipal,
)
from .session import DEFAULT_BUDGET, SessionKey
from .wire import (
    NONCE_BYTES,
    CommGrant,
    CommRequest,
    DigestNotice,
    DigestRecord,
    ErrorFrame,
    HandshakeAck,
    HandshakeConfirm,
    HandshakeInit,
    MsgType,
    check_principal_id,
    decode_frame,
    encode,
    nonce_reply,
    open_frame,
    record_signed_bytes,
)

ACCEPTED = "accepted"


@dataclass
class Outcome:
    """Result of delivering one frame to an endpoint."""

    verdict: str
    replies: list[tuple[str, bytes]] = field(default_factory=list)
    view: object = None


@dataclass
class _PendingHandshake:
    key: bytes
    transcript: bytes


class NonceWindow:
    """Remembers the last ``size`` nonces."""

    def __init__(self, size: int = 1024):
        self._order: deque[bytes] = deque()
        self._seen: set[bytes] = set()
        self.size = size

    def check_and_add(self, nonce: bytes) -> None:
        if nonce in self._seen:
            raise ReplayDetected(f"nonce {nonce.hex()} already seen")
        self._order.append(nonce)
        self._seen.add(nonce)
        if len(self._order) > self.size:
            self._seen.discard(self._order.popleft())

    def __contains__(self, nonce: bytes) -> bool:
        return nonce in self._seen


class TrustedServer:
    def __init__(
        self,
        server_id: str = "S",
        suite: CryptoSuite = DEFAULT_SUITE,
        session_budget: int = DEFAULT_BUDGET,
        nonce_window: int = 1024,
    ):
        self.id = check_principal_id(server_id)
        self.suite = suite
        self._signing_key = suite.signing_key()
        self.public_key = suite.public_bytes(self._signing_key)
        self.session_budget = session_budget
        self.principals: dict[str, bytes] = {}
        self.share_set: ShareSet | None = None
        self.shares: dict[str, tuple[int, BinaryImage]] = {}
        self.records: dict[str, DigestRecord] = {}
        self.sessions: dict[str, SessionKey] = {}
        self.pair_keys: dict[tuple[str, str], bytes] = {}
        self.nonces = NonceWindow(nonce_window)
        self._pending: dict[str, _PendingHandshake] = {}
        self._lock = threading.Lock()

    # -- administration -------------------------------------------------

    def register_principal(self, principal_id: str, public_key: bytes) -> None:
        check_principal_id(principal_id)
        if principal_id in self.principals or principal_id == self.id:
            raise DuplicatePrincipal(f"{principal_id!r} is already registered")
        if len(public_key) != PUBLIC_KEY_SIZE:
            raise ValueError(f"public key must be {PUBLIC_KEY_SIZE} bytes")
        self.principals[principal_id] = bytes(public_key)

    def _require(self, principal_id: str) -> None:
        if principal_id not in self.principals:
            raise UnknownPrincipal(f"{principal_id!r} is not registered")

    def provision(
        self,
        secret: BinaryImage,
        params: SchemeParams,
        owners: Sequence[str],
        rng: RandomSource | None = None,
    ) -> list[tuple[BinaryImage, DigestRecord]]:
        """Split ``secret`` and sign a digest of every share.

        Shares are handed out in ``owners`` order: owner ``i`` gets share
        ``i + 1``.  The server keeps the genuine shares and records.
        """
        if len(owners) != params.n:
            raise ValueError(f"{params.n} shares but {len(owners)} owners")
        if len(set(owners)) != len(owners):
            raise ValueError("owners must be distinct")
        for owner in owners:
            self._require(owner)
        if (params.width, params.height) != secret.size:
            raise ValueError("scheme dimensions do not match the secret")
        share_set = split(secret, params.kind, params.n, rng or make_source())

        out = []
        with self._lock:
            self.share_set = share_set
            self.shares.clear()
            self.records.clear()
            for index, (owner, share) in enumerate(zip(owners, share_set.shares), start=1):
                digest = self.suite.digest(canonical_bytes(share))
                sig = self.suite.sign(
                    self._signing_key, record_signed_bytes(self.id, owner, index, digest)
                )
                record = DigestRecord(self.id, owner, index, digest, sig)
                self.shares[owner] = (index, share)
                self.records[owner] = record
                out.append((share, record))
        return out

    # -- message handling -----------------------------------------------

    def handle(self, src: str, data: bytes) -> Outcome:
        """Process one incoming frame from channel ``src``.

        Any protocol fault becomes an error frame sent back to ``src``.
        """
        with self._lock:
            try:
                return self._dispatch(src, data)
            except ProtocolError as exc:
                return Outcome(exc.verdict, [(src, encode(ErrorFrame.from_exception(exc)))])

    def _dispatch(self, src: str, data: bytes) -> Outcome:
        frame = decode_frame(data)
        if frame.type == MsgType.HANDSHAKE_INIT:
            return self._on_init(src, open_frame(frame))
        if frame.type == MsgType.HANDSHAKE_CONFIRM:
            pending = self._pending.get(src)
            if pending is None:
                raise UnexpectedMessage(f"no handshake in progress with {src!r}")
            msg = open_frame(frame, pending.key)
            return self._on_confirm(src, msg, pending)
        if frame.type == MsgType.COMM_REQUEST:
            sess = self._session(src)
            msg = open_frame(frame, sess.use())
            return self._on_request(src, msg, sess)
        if frame.type == MsgType.ERROR:
            return Outcome(open_frame(frame).verdict)
        raise UnexpectedMessage(f"server does not accept {frame.type.name}")

    def _session(self, principal: str) -> SessionKey:
        sess = self.sessions.get(principal)
        if sess is None:
            raise NoSession(f"no session with {principal!r}")
        return sess

    def _on_init(self, src: str, msg: HandshakeInit) -> Outcome:
        if msg.user != src or msg.server != self.id:
            raise BadSignature("handshake identities do not match the channel")
        self._require(msg.user)
        signed = hs.init_signed_bytes(msg.user, msg.server, msg.nonce, msg.ephemeral)
        if not self.suite.verify(self.principals[msg.user], msg.signature, signed):
            raise BadSignature(f"handshake signature from {msg.user!r} invalid")
        self.nonces.check_and_add(msg.nonce)
        eph_key, eph_pub = self.suite.ephemeral()
        nonce = self.suite.random_bytes(NONCE_BYTES)
        transcript = hs.transcript_bytes(msg.user, self.id, msg.nonce, nonce, msg.ephemeral, eph_pub)
        try:
            shared = self.suite.agree(eph_key, msg.ephemeral)
        except ValueError:
            raise BadSignature("degenerate ephemeral key") from None
        key = hs.derive_key(self.suite, shared, transcript)
        sig = self.suite.sign(self._signing_key, hs.ack_signed_bytes(transcript))
        self._pending[msg.user] = _PendingHandshake(key, transcript)
        ack = HandshakeAck(self.id, msg.user, msg.nonce, nonce, eph_pub, sig)
        return Outcome(ACCEPTED, [(src, encode(ack, suite=self.suite))], msg)

    def _on_confirm(self, src: str, msg: HandshakeConfirm, pending: _PendingHandshake) -> Outcome:
        del self._pending[src]
        if msg.user != src:
            raise BadSignature("confirmation names a different user")
        if not self.suite.verify(
            self.principals[src], msg.signature, hs.confirm_signed_bytes(pending.transcript)
        ):
            raise BadSignature(f"key confirmation from {src!r} invalid")
        # one message (the confirmation) already went through this key
        self.sessions[src] = SessionKey(pending.key, (src, self.id), self.session_budget - 1)
        return Outcome(ACCEPTED, [], msg)

    def _on_request(self, src: str, msg: CommRequest, sess: SessionKey) -> Outcome:
        if msg.requester != src:
            raise BadSignature("requester does not match the channel")
        self._require(msg.peer)
        if msg.peer == msg.requester:
            raise UnexpectedMessage("cannot open a channel to oneself")
        self.nonces.check_and_add(msg.nonce)
        pair_key = self.suite.random_bytes(32)
        self.pair_keys[(msg.requester, msg.peer)] = pair_key
        grant = CommGrant(nonce_reply(msg.nonce), pair_key)
        return Outcome(ACCEPTED, [(src, encode(grant, sess.use(), self.suite))], msg)

    # -- server-initiated messages ----------------------------------------

    def issue_digest_notice(self, owner: str, receiver: str) -> bytes:
        """DigestNotice for ``receiver`` about ``owner``'s genuine share."""
        with self._lock:
            record = self.records.get(owner)
            if record is None:
                raise UnknownPrincipal(f"no digest record for {owner!r}")
            pair_key = self.pair_keys.get((owner, receiver))
            if pair_key is None:
                raise NoSession(f"no {owner}->{receiver} session key issued")
            sess = self._session(receiver)
            notice = DigestNotice(owner, pair_key, record)
            return encode(notice, sess.use(), self.suite)
