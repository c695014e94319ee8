"""Trusted-server share authentication.

The server generates every share and signs a digest of each one.  When a
holder forwards its share to a peer, the peer receives the signed digest
from the server and refuses to stack a share that does not match it.
"""

from .client import Principal, verify_and_reconstruct
from .crypto import DEFAULT_SUITE, CryptoSuite
from .errors import (
    AeadFailure,
    BadSignature,
    DigestMismatch,
    DuplicatePrincipal,
    ErrorCode,
    FrameError,
    MalformedShare,
    NoSession,
    OwnerMismatch,
    ProtocolError,
    ReplayDetected,
    SessionExpired,
    UnexpectedMessage,
    UnknownPrincipal,
)
from .scenario import (
    SCENARIOS,
    Collude,
    ForgeNotice,
    Handshake,
    IssueNotice,
    Reconstruct,
    Replay,
    RequestChannel,
    ScenarioResult,
    ScriptError,
    SendShare,
    builtin_scenario,
    run_scenario,
)
from .server import Outcome, TrustedServer
from .session import SessionKey
from .transport import LoopbackTransport, StreamLink, serve_stream

__all__ = [
    "AeadFailure",
    "BadSignature",
    "builtin_scenario",
    "Collude",
    "CryptoSuite",
    "DEFAULT_SUITE",
    "DigestMismatch",
    "DuplicatePrincipal",
    "ErrorCode",
    "ForgeNotice",
    "FrameError",
    "Handshake",
    "handshake",
    "IssueNotice",
    "LoopbackTransport",
    "MalformedShare",
    "NoSession",
    "Outcome",
    "OwnerMismatch",
    "Principal",
    "ProtocolError",
    "Reconstruct",
    "Replay",
    "ReplayDetected",
    "RequestChannel",
    "run_scenario",
    "ScenarioResult",
    "SCENARIOS",
    "ScriptError",
    "SendShare",
    "serve_stream",
    "SessionExpired",
    "SessionKey",
    "StreamLink",
    "TrustedServer",
    "UnexpectedMessage",
    "UnknownPrincipal",
    "verify_and_reconstruct",
]


def handshake(server: TrustedServer, user: Principal, transport: LoopbackTransport | None = None) -> SessionKey:
    """Run the three-flight handshake in-process and return the user's key.

    Raises the rejection reported by whichever side aborted.
    """
    if transport is None:
        transport = LoopbackTransport()
        transport.attach(server.id, server)
        transport.attach(user.name, user)
    entries = transport.send(user.name, server.id, user.start_handshake())
    for entry in entries:
        if entry.verdict != "accepted":
            raise _REJECTIONS.get(entry.verdict, ProtocolError)(f"handshake aborted: {entry.verdict}")
    if user.name not in server.sessions or user.server_session is None:
        raise ProtocolError("handshake did not complete")
    return user.server_session


_REJECTIONS = {
    "BadSignature": BadSignature,
    "AeadFailure": AeadFailure,
    "Replay": ReplayDetected,
    "UnknownPrincipal": UnknownPrincipal,
    "NoSession": NoSession,
}
