"""Message channels between endpoints.

:class:`LoopbackTransport` delivers frames in-process, FIFO, and records a
transcript.  :func:`serve_stream` drives an endpoint over any pair of
blocking byte streams (a TCP socket's ``makefile`` for instance) using the
length-prefixed frame format.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import BinaryIO, Protocol

from .errors import FrameError
from .wire import MESSAGE_TYPES, ErrorFrame, decode_frame, encode, read_frame

ACCEPTING = frozenset({"accepted", "buffered"})


class Endpoint(Protocol):
    def handle(self, src: str, data: bytes): ...


@dataclass
class TranscriptEntry:
    direction: str
    src: str
    dst: str
    type_name: str
    verdict: str
    frame: bytes | None = None
    view: object = None

    def line(self) -> str:
        return f"{self.direction} {self.src}→{self.dst} {self.type_name} [{self.verdict}]"


def frame_type_name(data: bytes) -> str:
    try:
        return _TYPE_NAMES[decode_frame(data).type]
    except FrameError:
        return "Garbage"


_TYPE_NAMES = {t: "Error" if cls is ErrorFrame else cls.__name__ for t, cls in MESSAGE_TYPES.items()}


class LoopbackTransport:
    def __init__(self):
        self.endpoints: dict[str, Endpoint] = {}
        self.transcript: list[TranscriptEntry] = []

    def attach(self, name: str, endpoint: Endpoint) -> None:
        self.endpoints[name] = endpoint

    def send(self, src: str, dst: str, data: bytes, direction: str = "SEND") -> list[TranscriptEntry]:
        """Deliver ``data`` and every reply it triggers; returns the new entries.

        ``src`` is the channel the frame arrives on.  For ``INJECT`` it is
        the identity an attacker claims, which the transport cannot check.
        """
        queue = deque([(direction, src, dst, data)])
        entries = []
        while queue:
            direction, s, d, frame = queue.popleft()
            endpoint = self.endpoints.get(d)
            if endpoint is None:
                raise KeyError(f"no endpoint named {d!r}")
            outcome = endpoint.handle(s, frame)
            entry = TranscriptEntry(direction, s, d, frame_type_name(frame), outcome.verdict, frame, outcome.view)
            self.transcript.append(entry)
            entries.append(entry)
            for reply_dst, reply in outcome.replies:
                queue.append(("SEND", d, reply_dst, reply))
        return entries


class StreamLink:
    """Frames over a pair of blocking binary streams."""

    def __init__(self, rfile: BinaryIO, wfile: BinaryIO):
        self.rfile = rfile
        self.wfile = wfile

    def send(self, data: bytes) -> None:
        self.wfile.write(data)
        self.wfile.flush()

    def recv(self) -> bytes | None:
        return read_frame(self.rfile)


def serve_stream(endpoint: Endpoint, peer: str, link: StreamLink) -> None:
    """Feed frames from ``link`` to ``endpoint`` until EOF.

    Replies addressed to ``peer`` go back over the link; framing errors are
    answered with an error frame and end the connection.
    """
    while True:
        try:
            data = link.recv()
        except FrameError as exc:
            link.send(encode(ErrorFrame.from_exception(exc)))
            return
        if data is None:
            return
        outcome = endpoint.handle(peer, data)
        for dst, reply in outcome.replies:
            if dst == peer:
                link.send(reply)
