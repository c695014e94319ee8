"""Bit-exact frame codec.

Frame layout::

    total length (4, big-endian, counts the whole frame)
    version (1) = 0x01
    message type (1)
    crypto suite id (1)
    payload

Payload fields are octet strings each prefixed with a 2-byte big-endian
length, in the order the message class declares them.  Encrypted
messages carry ``nonce(12) || AEAD ciphertext`` of that field sequence,
with the 7 header bytes as associated data.  An error frame (type 0xFF)
carries one code byte followed by ASCII detail text.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, fields
from typing import BinaryIO, ClassVar

from .crypto import DEFAULT_SUITE, NONCE_SIZE, SUITES, TAG_SIZE, CryptoSuite
from .errors import ErrorCode, FrameError, NoSession, ProtocolError

VERSION = 0x01
HEADER_SIZE = 7
MAX_FRAME = 1 << 20
MAX_FIELD = 0xFFFF
MAX_ID = 64
NONCE_BYTES = 16

_HEADER = struct.Struct(">IBBB")


class MsgType(enum.IntEnum):
    HANDSHAKE_INIT = 0x01
    HANDSHAKE_ACK = 0x02
    HANDSHAKE_CONFIRM = 0x03
    COMM_REQUEST = 0x10
    COMM_GRANT = 0x11
    SHARE_TRANSFER = 0x20
    DIGEST_NOTICE = 0x30
    ERROR = 0xFF


def check_principal_id(name: str) -> str:
    if not isinstance(name, str) or not name:
        raise ValueError("principal id must be a non-empty string")
    try:
        raw = name.encode("ascii")
    except UnicodeEncodeError:
        raise ValueError(f"principal id {name!r} is not ASCII") from None
    if len(raw) > MAX_ID:
        raise ValueError(f"principal id longer than {MAX_ID} bytes")
    if not all(0x20 <= b < 0x7F for b in raw):
        raise ValueError(f"principal id {name!r} contains control characters")
    return name


def nonce_reply(nonce: bytes) -> bytes:
    """``nonce + 1`` modulo 2**128, big-endian."""
    value = (int.from_bytes(nonce, "big") + 1) % (1 << (8 * NONCE_BYTES))
    return value.to_bytes(NONCE_BYTES, "big")


# -- field encoding -----------------------------------------------------------

def lp(data: bytes) -> bytes:
    if len(data) > MAX_FIELD:
        raise ValueError(f"field of {len(data)} bytes exceeds the {MAX_FIELD}-byte limit")
    return len(data).to_bytes(2, "big") + data


def split_fields(data: bytes) -> list[bytes]:
    out = []
    pos = 0
    while pos < len(data):
        if pos + 2 > len(data):
            raise FrameError(ErrorCode.MALFORMED, "dangling field length")
        n = int.from_bytes(data[pos:pos + 2], "big")
        pos += 2
        if pos + n > len(data):
            raise FrameError(ErrorCode.MALFORMED, "field overruns payload")
        out.append(data[pos:pos + n])
        pos += n
    return out


# Field kinds: "id" (principal name), "u16", "bytes", an int for fixed-size
# bytes, or a nested message class.

def _encode_value(kind, value) -> bytes:
    if kind == "id":
        return check_principal_id(value).encode("ascii")
    if kind == "u16":
        return int(value).to_bytes(2, "big")
    if isinstance(kind, int):
        if len(value) != kind:
            raise ValueError(f"expected {kind} bytes, got {len(value)}")
        return bytes(value)
    if isinstance(kind, type):
        return value.body()
    return bytes(value)


def _decode_value(kind, raw: bytes):
    if kind == "id":
        try:
            return check_principal_id(raw.decode("ascii"))
        except (UnicodeDecodeError, ValueError) as exc:
            raise FrameError(ErrorCode.MALFORMED, f"bad principal id: {exc}") from None
    if kind == "u16":
        if len(raw) != 2:
            raise FrameError(ErrorCode.MALFORMED, "u16 field must be 2 bytes")
        return int.from_bytes(raw, "big")
    if isinstance(kind, int):
        if len(raw) != kind:
            raise FrameError(ErrorCode.MALFORMED, f"expected {kind}-byte field, got {len(raw)}")
        return raw
    if isinstance(kind, type):
        return kind.from_body(raw)
    return raw


class _Fields:
    """Mixin: length-prefixed encoding of a dataclass's declared fields."""

    SCHEMA: ClassVar[tuple] = ()

    def body(self) -> bytes:
        return b"".join(
            lp(_encode_value(kind, getattr(self, f.name)))
            for f, kind in zip(fields(self), self.SCHEMA)
        )

    @classmethod
    def from_body(cls, data: bytes):
        parts = split_fields(data)
        if len(parts) != len(cls.SCHEMA):
            raise FrameError(
                ErrorCode.MALFORMED, f"{cls.__name__} needs {len(cls.SCHEMA)} fields, got {len(parts)}"
            )
        return cls(*(_decode_value(kind, raw) for kind, raw in zip(cls.SCHEMA, parts)))


@dataclass(frozen=True)
class DigestRecord(_Fields):
    """Server-signed digest of one genuine share."""

    server: str
    owner: str
    index: int
    digest: bytes
    signature: bytes

    SCHEMA = ("id", "id", "u16", 32, 64)

    def signed_bytes(self) -> bytes:
        return record_signed_bytes(self.server, self.owner, self.index, self.digest)


def record_signed_bytes(server: str, owner: str, index: int, digest: bytes) -> bytes:
    return b"rgvss/digest/v1" + lp(server.encode()) + lp(owner.encode()) + index.to_bytes(2, "big") + lp(digest)


class Message(_Fields):
    TYPE: ClassVar[MsgType]
    ENCRYPTED: ClassVar[bool] = True

    @property
    def type_name(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class HandshakeInit(Message):
    user: str
    server: str
    nonce: bytes
    ephemeral: bytes
    signature: bytes

    TYPE = MsgType.HANDSHAKE_INIT
    ENCRYPTED = False
    SCHEMA = ("id", "id", NONCE_BYTES, 32, 64)


@dataclass(frozen=True)
class HandshakeAck(Message):
    server: str
    user: str
    client_nonce: bytes
    nonce: bytes
    ephemeral: bytes
    signature: bytes

    TYPE = MsgType.HANDSHAKE_ACK
    ENCRYPTED = False
    SCHEMA = ("id", "id", NONCE_BYTES, NONCE_BYTES, 32, 64)


@dataclass(frozen=True)
class HandshakeConfirm(Message):
    user: str
    signature: bytes

    TYPE = MsgType.HANDSHAKE_CONFIRM
    SCHEMA = ("id", 64)


@dataclass(frozen=True)
class CommRequest(Message):
    requester: str
    peer: str
    nonce: bytes

    TYPE = MsgType.COMM_REQUEST
    SCHEMA = ("id", "id", NONCE_BYTES)


@dataclass(frozen=True)
class CommGrant(Message):
    nonce_reply: bytes
    session_key: bytes

    TYPE = MsgType.COMM_GRANT
    SCHEMA = (NONCE_BYTES, 32)


@dataclass(frozen=True)
class ShareTransfer(Message):
    sender: str
    share: bytes

    TYPE = MsgType.SHARE_TRANSFER
    SCHEMA = ("id", "bytes")


@dataclass(frozen=True)
class DigestNotice(Message):
    owner: str
    session_key: bytes
    record: DigestRecord

    TYPE = MsgType.DIGEST_NOTICE
    SCHEMA = ("id", 32, DigestRecord)


@dataclass(frozen=True)
class ErrorFrame:
    code: int
    detail: str = ""

    TYPE: ClassVar[MsgType] = MsgType.ERROR
    ENCRYPTED: ClassVar[bool] = False

    type_name = "Error"

    @property
    def verdict(self) -> str:
        try:
            return ErrorCode(self.code).verdict
        except ValueError:
            return f"Error{self.code:#04x}"

    def body(self) -> bytes:
        return bytes([self.code]) + self.detail.encode("ascii", "replace")[:1024]

    @classmethod
    def from_body(cls, data: bytes) -> "ErrorFrame":
        if not data:
            raise FrameError(ErrorCode.MALFORMED, "error frame without code")
        return cls(data[0], data[1:].decode("ascii", "replace"))

    @classmethod
    def from_exception(cls, exc) -> "ErrorFrame":
        return cls(int(exc.code), str(exc.detail))


MESSAGE_TYPES: dict[int, type] = {
    cls.TYPE: cls
    for cls in (
        HandshakeInit, HandshakeAck, HandshakeConfirm, CommRequest,
        CommGrant, ShareTransfer, DigestNotice, ErrorFrame,
    )
}


# -- frames -------------------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    type: MsgType
    suite: int
    payload: bytes
    header: bytes


def encode(msg, key: bytes | None = None, suite: CryptoSuite = DEFAULT_SUITE) -> bytes:
    """Serialize ``msg``; encrypted message types need ``key``."""
    body = msg.body()
    if msg.ENCRYPTED:
        if key is None:
            raise ValueError(f"{msg.type_name} must be encrypted; no key given")
        total = HEADER_SIZE + NONCE_SIZE + len(body) + TAG_SIZE
    else:
        total = HEADER_SIZE + len(body)
    if total > MAX_FRAME:
        raise ValueError(f"frame of {total} bytes exceeds {MAX_FRAME}")
    header = _HEADER.pack(total, VERSION, int(msg.TYPE), suite.suite_id)
    payload = suite.seal(key, body, header) if msg.ENCRYPTED else body
    return header + payload


def decode_frame(data: bytes) -> Frame:
    """Validate the header; raises :class:`FrameError` on any framing fault."""
    if len(data) < 4:
        raise FrameError(ErrorCode.TRUNCATED, f"{len(data)} bytes is shorter than a length field")
    total = int.from_bytes(data[:4], "big")
    if total < HEADER_SIZE or total > MAX_FRAME:
        raise FrameError(ErrorCode.BAD_LENGTH, f"declared length {total} out of range")
    if len(data) < total:
        raise FrameError(ErrorCode.TRUNCATED, f"declared {total} bytes, received {len(data)}")
    if len(data) > total:
        raise FrameError(ErrorCode.BAD_LENGTH, f"declared {total} bytes, received {len(data)}")
    version, mtype, suite = data[4], data[5], data[6]
    if version != VERSION:
        raise FrameError(ErrorCode.BAD_VERSION, f"unsupported version {version}")
    if mtype not in MESSAGE_TYPES:
        raise FrameError(ErrorCode.BAD_TYPE, f"unknown message type {mtype:#04x}")
    if suite not in SUITES:
        raise FrameError(ErrorCode.BAD_SUITE, f"unknown crypto suite {suite:#04x}")
    return Frame(MsgType(mtype), suite, data[HEADER_SIZE:], data[:HEADER_SIZE])


def open_frame(frame: Frame, key: bytes | None = None):
    cls = MESSAGE_TYPES[frame.type]
    if cls.ENCRYPTED:
        if key is None:
            raise NoSession(f"{cls.__name__} is encrypted and no key is held")
        body = SUITES[frame.suite].open(key, frame.payload, frame.header)
    else:
        body = frame.payload
    return cls.from_body(body)


def decode(data: bytes, key: bytes | None = None):
    return open_frame(decode_frame(data), key)


def peek_type(data: bytes) -> MsgType:
    return decode_frame(data).type


def safe_decode(data: bytes, key: bytes | None = None):
    """Like :func:`decode` but turns any protocol fault into an ErrorFrame."""
    try:
        return decode(data, key)
    except ProtocolError as exc:
        return ErrorFrame.from_exception(exc)


def error_frame(code: ErrorCode, detail: str = "") -> bytes:
    return encode(ErrorFrame(int(code), detail))


# -- streams ------------------------------------------------------------------

def read_frame(stream: BinaryIO) -> bytes | None:
    """Read one frame from a blocking byte stream; ``None`` on clean EOF."""
    head = _read_exact(stream, 4)
    if not head:
        return None
    if len(head) < 4:
        raise FrameError(ErrorCode.TRUNCATED, "stream ended inside length field")
    total = int.from_bytes(head, "big")
    if total < HEADER_SIZE or total > MAX_FRAME:
        raise FrameError(ErrorCode.BAD_LENGTH, f"declared length {total} out of range")
    rest = _read_exact(stream, total - 4)
    if len(rest) < total - 4:
        raise FrameError(ErrorCode.TRUNCATED, f"stream ended after {4 + len(rest)} of {total} bytes")
    return head + rest


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            break
        buf += chunk
    return buf
