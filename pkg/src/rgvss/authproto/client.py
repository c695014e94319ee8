"""Share holders and receiver-side verification."""

from __future__ import annotations

import hmac
from dataclasses import dataclass

from ..bitimage import BinaryImage, PbmParseError, canonical_bytes, load_pbm
from ..randgrid import stack
from . import session as hs
from .crypto import DEFAULT_SUITE, CryptoSuite
from .errors import (
    BadSignature,
    DigestMismatch,
    MalformedShare,
    NoSession,
    OwnerMismatch,
    ProtocolError,
    UnexpectedMessage,
)
from .server import ACCEPTED, Outcome
from .session import DEFAULT_BUDGET, SessionKey
from .wire import (
    NONCE_BYTES,
    CommGrant,
    CommRequest,
    DigestNotice,
    DigestRecord,
    ErrorFrame,
    HandshakeConfirm,
    HandshakeInit,
    MsgType,
    ShareTransfer,
    check_principal_id,
    decode,
    decode_frame,
    encode,
    nonce_reply,
    open_frame,
)

BUFFERED = "buffered"


def verify_and_reconstruct(
    own_share: BinaryImage,
    transfer: ShareTransfer,
    notice: DigestNotice,
    server_public_key: bytes,
    suite: CryptoSuite = DEFAULT_SUITE,
) -> BinaryImage:
    """Stack ``own_share`` with the received share if it is the genuine one.

    The server's signature is checked first; only then is the digest of
    the received share compared with the signed one.  Raises
    :class:`BadSignature`, :class:`OwnerMismatch`, :class:`MalformedShare`
    or :class:`DigestMismatch`.
    """
    record = notice.record
    if not suite.verify(server_public_key, record.signature, record.signed_bytes()):
        raise BadSignature("digest record is not signed by the server")
    if record.owner != notice.owner or transfer.sender != notice.owner:
        raise OwnerMismatch(
            f"share from {transfer.sender!r}, notice about {notice.owner!r}, record for {record.owner!r}"
        )
    try:
        received = load_pbm(transfer.share)
    except (PbmParseError, ValueError) as exc:
        raise MalformedShare(str(exc)) from None
    computed = suite.digest(canonical_bytes(received))
    if not hmac.compare_digest(computed, record.digest):
        raise DigestMismatch(record.digest, computed)
    if received.size != own_share.size:
        raise MalformedShare(f"received share is {received.size}, own share is {own_share.size}")
    return stack([own_share, received])


@dataclass
class _Handshake:
    ephemeral_key: object
    init: HandshakeInit


class Principal:
    """A share holder: runs the handshake, requests channels, sends and verifies shares.

    Transfers that arrive before the matching digest notice are buffered;
    :meth:`reconstruct` decrypts and verifies them once the notice is in.
    """

    def __init__(
        self,
        name: str,
        server_id: str,
        server_public_key: bytes,
        suite: CryptoSuite = DEFAULT_SUITE,
        session_budget: int = DEFAULT_BUDGET,
    ):
        self.name = check_principal_id(name)
        self.server_id = server_id
        self.server_public_key = server_public_key
        self.suite = suite
        self.session_budget = session_budget
        self._signing_key = suite.signing_key()
        self.public_key = suite.public_bytes(self._signing_key)
        self.server_session: SessionKey | None = None
        self.pair_keys: dict[str, SessionKey] = {}
        self.share: BinaryImage | None = None
        self.record: DigestRecord | None = None
        self.inbox: dict[str, bytes] = {}
        self.notices: dict[str, DigestNotice] = {}
        self.last_error: ErrorFrame | None = None
        self._handshake: _Handshake | None = None
        self._requests: dict[bytes, str] = {}

    def accept_provision(self, share: BinaryImage, record: DigestRecord) -> None:
        self.share = share
        self.record = record

    # -- outgoing ---------------------------------------------------------

    def start_handshake(self) -> bytes:
        eph_key, eph_pub = self.suite.ephemeral()
        nonce = self.suite.random_bytes(NONCE_BYTES)
        sig = self.suite.sign(
            self._signing_key, hs.init_signed_bytes(self.name, self.server_id, nonce, eph_pub)
        )
        init = HandshakeInit(self.name, self.server_id, nonce, eph_pub, sig)
        self._handshake = _Handshake(eph_key, init)
        return encode(init, suite=self.suite)

    def request_channel(self, peer: str, nonce: bytes | None = None) -> bytes:
        if self.server_session is None:
            raise NoSession("handshake with the server first")
        nonce = nonce if nonce is not None else self.suite.random_bytes(NONCE_BYTES)
        self._requests[nonce_reply(nonce)] = peer
        msg = CommRequest(self.name, peer, nonce)
        return encode(msg, self.server_session.use(), self.suite)

    def send_share(self, peer: str, share: BinaryImage | None = None) -> bytes:
        """Encrypt ``share`` (default: own share) for ``peer`` under the pair key."""
        sess = self.pair_keys.get(peer)
        if sess is None:
            raise NoSession(f"no session key with {peer!r}")
        share = self.share if share is None else share
        if share is None:
            raise ValueError("no share to send")
        return encode(ShareTransfer(self.name, canonical_bytes(share)), sess.use(), self.suite)

    # -- incoming ---------------------------------------------------------

    def handle(self, src: str, data: bytes) -> Outcome:
        try:
            return self._dispatch(src, data)
        except ProtocolError as exc:
            return Outcome(exc.verdict, [(src, encode(ErrorFrame.from_exception(exc)))])

    def _dispatch(self, src: str, data: bytes) -> Outcome:
        frame = decode_frame(data)
        if frame.type == MsgType.ERROR:
            err = open_frame(frame)
            self.last_error = err
            return Outcome(err.verdict, [], err)
        if frame.type == MsgType.SHARE_TRANSFER:
            # the pair key arrives with the digest notice
            self.inbox[src] = data
            return Outcome(BUFFERED)
        if src != self.server_id:
            raise UnexpectedMessage(f"{frame.type.name} from {src!r}")
        if frame.type == MsgType.HANDSHAKE_ACK:
            return self._on_ack(open_frame(frame))
        if self.server_session is None:
            raise NoSession("no session with the server")
        if frame.type == MsgType.COMM_GRANT:
            grant = open_frame(frame, self.server_session.use())
            return self._on_grant(grant)
        if frame.type == MsgType.DIGEST_NOTICE:
            notice = open_frame(frame, self.server_session.use())
            self.notices[notice.owner] = notice
            self.pair_keys[notice.owner] = SessionKey(
                notice.session_key, (notice.owner, self.name), self.session_budget
            )
            return Outcome(ACCEPTED, [], notice)
        raise UnexpectedMessage(f"client does not accept {frame.type.name}")

    def _on_ack(self, ack) -> Outcome:
        pending = self._handshake
        if pending is None:
            raise UnexpectedMessage("no handshake in progress")
        init = pending.init
        if ack.user != self.name or ack.server != self.server_id or ack.client_nonce != init.nonce:
            raise BadSignature("handshake reply does not match our request")
        transcript = hs.transcript_bytes(
            self.name, self.server_id, init.nonce, ack.nonce, init.ephemeral, ack.ephemeral
        )
        if not self.suite.verify(self.server_public_key, ack.signature, hs.ack_signed_bytes(transcript)):
            self._handshake = None
            raise BadSignature("server handshake signature invalid")
        try:
            shared = self.suite.agree(pending.ephemeral_key, ack.ephemeral)
        except ValueError:
            raise BadSignature("degenerate ephemeral key") from None
        key = hs.derive_key(self.suite, shared, transcript)
        self._handshake = None
        self.server_session = SessionKey(key, (self.name, self.server_id), self.session_budget)
        confirm = HandshakeConfirm(
            self.name, self.suite.sign(self._signing_key, hs.confirm_signed_bytes(transcript))
        )
        reply = encode(confirm, self.server_session.use(), self.suite)
        return Outcome(ACCEPTED, [(self.server_id, reply)], ack)

    def _on_grant(self, grant: CommGrant) -> Outcome:
        peer = self._requests.pop(grant.nonce_reply, None)
        if peer is None:
            raise UnexpectedMessage("grant does not answer any outstanding request")
        self.pair_keys[peer] = SessionKey(grant.session_key, (self.name, peer), self.session_budget)
        return Outcome(ACCEPTED, [], grant)

    # -- verification -----------------------------------------------------

    def open_transfer(self, sender: str) -> ShareTransfer:
        data = self.inbox.get(sender)
        if data is None:
            raise UnexpectedMessage(f"no share received from {sender!r}")
        sess = self.pair_keys.get(sender)
        if sess is None:
            raise NoSession(f"no session key with {sender!r}")
        transfer = decode(data, sess.use())
        if not isinstance(transfer, ShareTransfer):
            raise UnexpectedMessage("buffered frame is not a share transfer")
        return transfer

    def reconstruct(self, sender: str) -> BinaryImage:
        """Verify the share buffered from ``sender`` and stack it with ours."""
        if self.share is None:
            raise ValueError("no own share provisioned")
        notice = self.notices.get(sender)
        if notice is None:
            raise UnexpectedMessage(f"no digest notice for {sender!r}")
        transfer = self.open_transfer(sender)
        return verify_and_reconstruct(self.share, transfer, notice, self.server_public_key, self.suite)
