"""Scripted protocol runs over the loopback transport.

A script is a list of step objects.  :func:`run_scenario` registers the
principals with a fresh server, provisions a (2, n) share set (one share
per principal, in order), and then executes the steps, recording every
frame and a verdict per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..bitimage import BinaryImage, RegionMask
from ..cheatgen import AttackScenario, FakeImageSpec, fake_grids_for_colluders
from ..randgrid import SchemeKind, SchemeParams
from ..rng import make_source
from .crypto import DEFAULT_SUITE
from .errors import ProtocolError
from .server import ACCEPTED, TrustedServer
from .client import Principal
from .transport import ACCEPTING, LoopbackTransport, TranscriptEntry
from .wire import DigestNotice, DigestRecord, MsgType, encode, record_signed_bytes


class ScriptError(ValueError):
    """The script names an unknown principal or runs a step out of order."""


@dataclass(frozen=True)
class Handshake:
    user: str


@dataclass(frozen=True)
class RequestChannel:
    requester: str
    peer: str


@dataclass(frozen=True)
class SendShare:
    """``sender`` ships a share to ``receiver``.

    ``share`` overrides what is sent; ``fake`` sends the grid forged by an
    earlier :class:`Collude` step.
    """

    sender: str
    receiver: str
    share: BinaryImage | None = None
    fake: bool = False


@dataclass(frozen=True)
class IssueNotice:
    owner: str
    receiver: str


@dataclass(frozen=True)
class Reconstruct:
    receiver: str
    sender: str


@dataclass(frozen=True)
class Collude:
    colluders: tuple[str, ...]
    victim: str
    mask: RegionMask


@dataclass(frozen=True)
class Replay:
    """``attacker`` re-injects ``origin``'s last frame of ``kind`` to the server."""

    attacker: str
    origin: str
    kind: MsgType = MsgType.COMM_REQUEST


@dataclass(frozen=True)
class ForgeNotice:
    """Deliver a notice whose digest record is signed by a non-server key."""

    owner: str
    receiver: str


Step = Handshake | RequestChannel | SendShare | IssueNotice | Reconstruct | Collude | Replay | ForgeNotice


def _names(step) -> list[str]:
    if isinstance(step, Handshake):
        return [step.user]
    if isinstance(step, RequestChannel):
        return [step.requester, step.peer]
    if isinstance(step, SendShare):
        return [step.sender, step.receiver]
    if isinstance(step, (IssueNotice, ForgeNotice)):
        return [step.owner, step.receiver]
    if isinstance(step, Reconstruct):
        return [step.receiver, step.sender]
    if isinstance(step, Collude):
        return list(step.colluders) + [step.victim]
    if isinstance(step, Replay):
        return [step.attacker, step.origin]
    raise ScriptError(f"unknown step {step!r}")


@dataclass
class StepVerdict:
    step: object
    verdict: str


@dataclass
class ScenarioResult:
    transcript: list[TranscriptEntry]
    verdicts: list[StepVerdict]
    server: TrustedServer
    principals: dict[str, Principal]
    reconstructions: dict[tuple[str, str], BinaryImage] = field(default_factory=dict)
    fakes: dict[str, BinaryImage] = field(default_factory=dict)

    @property
    def final_verdict(self) -> str:
        recon = [v for v in self.verdicts if isinstance(v.step, Reconstruct)]
        pick = recon[-1] if recon else self.verdicts[-1]
        return pick.verdict

    def summary_line(self) -> str:
        verdict = self.final_verdict
        return "RECONSTRUCTED OK" if verdict == ACCEPTED else f"REJECTED: {verdict}"

    def matches(self, expected: str) -> bool:
        """Final verdict is ``expected`` and every earlier step was accepted."""
        if not self.verdicts or self.verdicts[-1].verdict != expected:
            return False
        return self.final_verdict == expected and all(
            v.verdict in ACCEPTING for v in self.verdicts[:-1]
        )

    def lines(self) -> list[str]:
        return [e.line() for e in self.transcript]


def run_scenario(
    steps: Sequence[Step],
    *,
    secret: BinaryImage,
    principals: Sequence[str] = ("A", "B", "C"),
    seed: int | None = None,
    server_id: str = "S",
    suite=DEFAULT_SUITE,
) -> ScenarioResult:
    known = set(principals)
    for step in steps:
        for name in _names(step):
            if name not in known:
                raise ScriptError(f"step {step!r} references unknown principal {name!r}")

    rng = make_source(seed)
    server = TrustedServer(server_id, suite)
    transport = LoopbackTransport()
    transport.attach(server_id, server)
    actors: dict[str, Principal] = {}
    for name in principals:
        actor = Principal(name, server_id, server.public_key, suite)
        server.register_principal(name, actor.public_key)
        transport.attach(name, actor)
        actors[name] = actor
    params = SchemeParams(SchemeKind.SCHEME_2N, len(principals), secret.width, secret.height)
    for name, (share, record) in zip(principals, server.provision(secret, params, principals, rng)):
        actors[name].accept_provision(share, record)

    result = ScenarioResult(transport.transcript, [], server, actors)
    sent: dict[tuple[str, MsgType], bytes] = {}
    attack_rng = rng.spawn(1)

    for step in steps:
        entries: list[TranscriptEntry] = []
        if isinstance(step, Handshake):
            entries = transport.send(step.user, server_id, actors[step.user].start_handshake())
        elif isinstance(step, RequestChannel):
            actor = actors[step.requester]
            if actor.server_session is None:
                raise ScriptError(f"{step.requester} requests a channel before its handshake")
            frame = actor.request_channel(step.peer)
            sent[(step.requester, MsgType.COMM_REQUEST)] = frame
            entries = transport.send(step.requester, server_id, frame)
        elif isinstance(step, SendShare):
            actor = actors[step.sender]
            if step.receiver not in actor.pair_keys:
                raise ScriptError(f"{step.sender} sends to {step.receiver} before a channel exists")
            share = step.share
            if step.fake:
                if step.sender not in result.fakes:
                    raise ScriptError(f"{step.sender} has no forged grid; run Collude first")
                share = result.fakes[step.sender]
            frame = actor.send_share(step.receiver, share)
            sent[(step.sender, MsgType.SHARE_TRANSFER)] = frame
            entries = transport.send(step.sender, step.receiver, frame)
        elif isinstance(step, IssueNotice):
            if step.receiver not in server.sessions:
                raise ScriptError(f"notice for {step.receiver} before its handshake")
            if (step.owner, step.receiver) not in server.pair_keys:
                raise ScriptError(f"notice before {step.owner} requested a channel to {step.receiver}")
            entries = transport.send(server_id, step.receiver, server.issue_digest_notice(step.owner, step.receiver))
        elif isinstance(step, ForgeNotice):
            sess = server.sessions.get(step.receiver)
            pair_key = server.pair_keys.get((step.owner, step.receiver))
            if sess is None or pair_key is None:
                raise ScriptError("forged notice needs the receiver session and the pair key")
            entries = transport.send(
                server_id, step.receiver, _forged_notice(server, step.owner, pair_key, sess.use()), "INJECT"
            )
        elif isinstance(step, Replay):
            frame = sent.get((step.origin, step.kind))
            if frame is None:
                raise ScriptError(f"nothing from {step.origin} of type {step.kind.name} to replay")
            entries = transport.send(step.origin, server_id, frame, "INJECT")
        elif isinstance(step, Collude):
            result.fakes.update(_collude(server, step, secret, attack_rng))
            result.verdicts.append(StepVerdict(step, ACCEPTED))
            continue
        elif isinstance(step, Reconstruct):
            entry = _reconstruct(actors[step.receiver], step, result)
            transport.transcript.append(entry)
            entries = [entry]
        else:
            raise ScriptError(f"unknown step {step!r}")

        bad = [e.verdict for e in entries if e.verdict not in ACCEPTING]
        result.verdicts.append(StepVerdict(step, bad[0] if bad else entries[0].verdict))
    return result


def _reconstruct(actor: Principal, step: Reconstruct, result: ScenarioResult) -> TranscriptEntry:
    if step.sender not in actor.inbox:
        raise ScriptError(f"{step.receiver} has no share from {step.sender}")
    if step.sender not in actor.notices:
        raise ScriptError(f"{step.receiver} has no digest notice about {step.sender}")
    view = None
    try:
        view = actor.open_transfer(step.sender)
        image = actor.reconstruct(step.sender)
    except ProtocolError as exc:
        verdict = exc.verdict
    else:
        verdict = ACCEPTED
        result.reconstructions[(step.receiver, step.sender)] = image
    return TranscriptEntry("VERIFY", step.sender, step.receiver, "ShareTransfer", verdict, None, view)


def _collude(server: TrustedServer, step: Collude, secret: BinaryImage, rng) -> dict[str, BinaryImage]:
    index = {owner: idx for owner, (idx, _) in server.shares.items()}
    scenario = AttackScenario(
        server.share_set,
        tuple(index[c] for c in step.colluders),
        index[step.victim],
        FakeImageSpec(step.mask),
    )
    fakes = fake_grids_for_colluders(scenario, secret, rng)
    by_index = dict(zip(scenario.colluders, fakes))
    return {c: by_index[index[c]] for c in step.colluders}


def _forged_notice(server: TrustedServer, owner: str, pair_key: bytes, channel_key: bytes) -> bytes:
    suite = server.suite
    rogue = suite.signing_key()
    genuine = server.records[owner]
    sig = suite.sign(rogue, record_signed_bytes(server.id, owner, genuine.index, genuine.digest))
    record = DigestRecord(server.id, owner, genuine.index, genuine.digest, sig)
    return encode(DigestNotice(owner, pair_key, record), channel_key, suite)


# -- built-in scripts -----------------------------------------------------------

def demo_secret(size: int = 64) -> BinaryImage:
    """White square with a black frame and a black plus sign."""
    if size < 16:
        raise ValueError("demo secret needs size >= 16")
    img = np.zeros((size, size), dtype=np.uint8)
    t = size // 16
    img[:t, :] = img[-t:, :] = img[:, :t] = img[:, -t:] = 1
    lo, hi = 7 * size // 16, 9 * size // 16
    img[lo:hi, 2 * t:-2 * t] = 1
    img[2 * t:-2 * t, lo:hi] = 1
    return BinaryImage(img)


def demo_mask(size: int = 64) -> RegionMask:
    """Square in the upper-left white quadrant of :func:`demo_secret`."""
    side = size // 4
    return RegionMask.rect(size, size, size // 8, size // 8, side, side)


def _honest_prefix(a: str, b: str) -> list:
    return [
        Handshake(a),
        RequestChannel(a, b),
        SendShare(a, b),
        Handshake(b),
        IssueNotice(a, b),
        Reconstruct(b, a),
    ]


@dataclass(frozen=True)
class BuiltinScenario:
    name: str
    steps: tuple
    expected: str
    secret: BinaryImage


SCENARIOS = ("honest", "attack", "replay", "forge")


def builtin_scenario(name: str, size: int = 64) -> BuiltinScenario:
    secret = demo_secret(size)
    if name == "honest":
        steps, expected = _honest_prefix("A", "B"), ACCEPTED
    elif name == "attack":
        steps = _honest_prefix("A", "B") + [
            Collude(("A", "B"), "C", demo_mask(size)),
            Handshake("A"),
            RequestChannel("A", "C"),
            SendShare("A", "C", fake=True),
            Handshake("C"),
            IssueNotice("A", "C"),
            Reconstruct("C", "A"),
        ]
        expected = "DigestMismatch"
    elif name == "replay":
        steps = [Handshake("A"), RequestChannel("A", "B"), Replay("B", "A", MsgType.COMM_REQUEST)]
        expected = "Replay"
    elif name == "forge":
        steps = [
            Handshake("A"),
            RequestChannel("A", "B"),
            SendShare("A", "B"),
            Handshake("B"),
            ForgeNotice("A", "B"),
            Reconstruct("B", "A"),
        ]
        expected = "BadSignature"
    else:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    return BuiltinScenario(name, tuple(steps), expected, secret)
