from __future__ import annotations

import enum


class ErrorCode(enum.IntEnum):
    """Error-frame codes.  ``verdict`` is the name used in transcripts."""

    BAD_LENGTH = 0x01
    TRUNCATED = 0x02
    BAD_VERSION = 0x03
    BAD_TYPE = 0x04
    BAD_SUITE = 0x05
    MALFORMED = 0x06
    AEAD_FAILURE = 0x10
    BAD_SIGNATURE = 0x11
    REPLAY = 0x12
    NO_SESSION = 0x13
    SESSION_EXPIRED = 0x14
    UNKNOWN_PRINCIPAL = 0x15
    UNEXPECTED = 0x16
    DIGEST_MISMATCH = 0x20
    OWNER_MISMATCH = 0x21
    MALFORMED_SHARE = 0x22

    @property
    def verdict(self) -> str:
        return _VERDICTS[self]


_VERDICTS = {
    ErrorCode.BAD_LENGTH: "BadLength",
    ErrorCode.TRUNCATED: "Truncated",
    ErrorCode.BAD_VERSION: "BadVersion",
    ErrorCode.BAD_TYPE: "BadType",
    ErrorCode.BAD_SUITE: "BadSuite",
    ErrorCode.MALFORMED: "Malformed",
    ErrorCode.AEAD_FAILURE: "AeadFailure",
    ErrorCode.BAD_SIGNATURE: "BadSignature",
    ErrorCode.REPLAY: "Replay",
    ErrorCode.NO_SESSION: "NoSession",
    ErrorCode.SESSION_EXPIRED: "SessionExpired",
    ErrorCode.UNKNOWN_PRINCIPAL: "UnknownPrincipal",
    ErrorCode.UNEXPECTED: "Unexpected",
    ErrorCode.DIGEST_MISMATCH: "DigestMismatch",
    ErrorCode.OWNER_MISMATCH: "OwnerMismatch",
    ErrorCode.MALFORMED_SHARE: "MalformedShare",
}


class ProtocolError(Exception):
    code = ErrorCode.UNEXPECTED

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.code.verdict)
        self.detail = detail

    @property
    def verdict(self) -> str:
        return self.code.verdict


class FrameError(ProtocolError):
    """Connection-level framing problem; ``code`` says which."""

    def __init__(self, code: ErrorCode, detail: str = ""):
        self.code = code
        super().__init__(detail)


class AeadFailure(ProtocolError):
    code = ErrorCode.AEAD_FAILURE


class BadSignature(ProtocolError):
    code = ErrorCode.BAD_SIGNATURE


class ReplayDetected(ProtocolError):
    code = ErrorCode.REPLAY


class NoSession(ProtocolError):
    code = ErrorCode.NO_SESSION


class SessionExpired(ProtocolError):
    code = ErrorCode.SESSION_EXPIRED


class UnknownPrincipal(ProtocolError):
    code = ErrorCode.UNKNOWN_PRINCIPAL


class UnexpectedMessage(ProtocolError):
    code = ErrorCode.UNEXPECTED


class OwnerMismatch(ProtocolError):
    code = ErrorCode.OWNER_MISMATCH


class MalformedShare(ProtocolError):
    code = ErrorCode.MALFORMED_SHARE


class DigestMismatch(ProtocolError):
    """Received share does not hash to the server-signed digest."""

    code = ErrorCode.DIGEST_MISMATCH

    def __init__(self, expected: bytes, actual: bytes):
        super().__init__(f"expected {expected.hex()}, computed {actual.hex()}")
        self.expected = expected
        self.actual = actual


class DuplicatePrincipal(ValueError):
    pass
