"""Acceptance gate: one test per criterion, at the stated tolerance and time budget.

Expected statistics come from the per-pixel enumeration in ``oracles``.
"""

import hashlib
import itertools
import random
import time
from fractions import Fraction

import numpy as np
import pytest
from oracles import fake_stack_transmission, transmission_2n, transmission_chain
from proto_helpers import Network
from samples import SPLIT_SEED42_DIGEST, half_secret, random_message, text_secret

from rgvss.authproto import DigestMismatch, builtin_scenario, run_scenario
from rgvss.authproto.client import Principal
from rgvss.authproto.server import TrustedServer
from rgvss.authproto.wire import (
    MESSAGE_TYPES,
    ErrorCode,
    ErrorFrame,
    decode,
    encode,
    safe_decode,
)
from rgvss.bitimage import BinaryImage, RegionMask, region_fraction_white, save_pbm
from rgvss.cheatgen import FakeImageSpec, fake_grid, make_fake_secret
from rgvss.cli import main
from rgvss.randgrid import (
    proper_subsets,
    split_2n,
    split_chain_nn,
    stack,
    transmission_report,
)
from rgvss.rng import RandomSource

TOL = 0.03


def report(number, ok, detail):
    print(f"[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")


@pytest.mark.criterion(1, "white pixels of every (2, n) share copy the first grid")
def test_c1_white_pixel_agreement():
    start = time.perf_counter()
    violations = 0
    for seed in range(50):
        secret = BinaryImage(np.random.default_rng(seed).integers(0, 2, (64, 64)))
        shares = split_2n(secret, 5, RandomSource(seed))
        white = secret.bits == 0
        g1 = shares.share(1).bits[white]
        violations += sum(int((s.bits[white] != g1).sum()) for s in shares.shares[1:])
    elapsed = time.perf_counter() - start
    report(1, violations == 0 and elapsed < 1, f"{violations} violations in {elapsed:.3f}s")
    assert violations == 0
    assert elapsed < 1.0


@pytest.mark.criterion(2, "(2, n) pair stacks: white 0.50, black 0.25")
def test_c2_pair_contrast():
    expected = transmission_2n(5, (1, 2))
    assert expected == {0: Fraction(1, 2), 1: Fraction(1, 4)}
    start = time.perf_counter()
    secret = half_secret(128)
    shares = split_2n(secret, 5, RandomSource(2))
    reports = {
        pair: transmission_report(stack([shares.share(i) for i in pair]), secret)
        for pair in itertools.combinations(range(1, 6), 2)
    }
    elapsed = time.perf_counter() - start
    worst_w = max(abs(r.white - 0.5) for r in reports.values())
    worst_b = max(abs(r.black - 0.25) for r in reports.values())
    report(2, len(reports) == 10 and worst_w <= TOL and worst_b <= TOL and elapsed < 1,
           f"10 pairs, max |dw|={worst_w:.4f} |db|={worst_b:.4f} in {elapsed:.3f}s")
    assert len(reports) == 10
    for r in reports.values():
        assert r.white == pytest.approx(float(expected[0]), abs=TOL)
        assert r.black == pytest.approx(float(expected[1]), abs=TOL)
    assert elapsed < 1.0


@pytest.mark.criterion(3, "a single share shows no contrast")
def test_c3_single_share():
    secret = half_secret(128)
    shares = split_2n(secret, 5, RandomSource(3))
    gaps = [abs(r.white - r.black) for r in (transmission_report(s, secret) for s in shares.shares)]
    report(3, max(gaps) <= TOL, "max |w-b| = " + ", ".join(f"{g:.4f}" for g in gaps))
    assert all(g <= TOL for g in gaps)


@pytest.mark.criterion(4, "(n, n) chain: full stack exact, proper subsets blind")
@pytest.mark.parametrize("n", [2, 3, 4])
def test_c4_chain(n):
    full = transmission_chain(n, range(1, n + 1))
    assert full == {0: Fraction(1, 2 ** (n - 1)), 1: Fraction(0)}
    for subset in proper_subsets(n):
        oracle = transmission_chain(n, subset)
        assert oracle[0] == oracle[1]

    secret = half_secret(128)
    shares = split_chain_nn(secret, n, RandomSource(40 + n))
    rep = transmission_report(stack(shares.shares), secret)
    gaps = [
        abs(r.white - r.black)
        for r in (transmission_report(stack([shares.share(i) for i in sub]), secret) for sub in proper_subsets(n))
    ]
    ok = rep.black == 0 and abs(rep.white - float(full[0])) <= TOL and max(gaps) <= TOL
    report(4, ok, f"n={n} full white={rep.white:.4f} black={rep.black:.4f}, "
                  f"{len(gaps)} subsets max |w-b|={max(gaps):.4f}")
    assert rep.black == 0.0
    assert rep.white == pytest.approx(float(full[0]), abs=TOL)
    assert max(gaps) <= TOL


@pytest.mark.criterion(5, "fake grid: altered block reads black to the victim")
def test_c5_attack_fidelity():
    assert fake_stack_transmission(True, 0) == Fraction(1, 4)
    assert fake_stack_transmission(False, 0) == Fraction(1, 2)
    secret = half_secret(128)
    shares = split_2n(secret, 3, RandomSource(5))
    block = RegionMask.rect(128, 128, 16, 48, 32, 32)
    fg = fake_grid(secret, make_fake_secret(secret, FakeImageSpec(block)), shares.share(1), RandomSource(6))
    recon = stack([fg, shares.share(3)])
    altered = region_fraction_white(recon, block)
    unaltered = region_fraction_white(recon, RegionMask((secret.bits == 0) & ~block.flags))
    outside_equal = np.array_equal(fg.bits[~block.flags], shares.share(1).bits[~block.flags])
    report(5, abs(altered - 0.25) <= TOL and abs(unaltered - 0.5) <= TOL and outside_equal,
           f"altered={altered:.4f} unaltered_white={unaltered:.4f} outside-mask equal={outside_equal}")
    assert altered == pytest.approx(0.25, abs=TOL)
    assert unaltered == pytest.approx(0.50, abs=TOL)
    assert outside_equal


@pytest.mark.criterion(6, "honest protocol run reconstructs the library stack")
def test_c6_defense_soundness():
    scenario = builtin_scenario("honest")
    agreed = 0
    for seed in range(20):
        result = run_scenario(scenario.steps, secret=scenario.secret, seed=seed)
        assert result.matches("accepted"), seed
        direct = split_2n(scenario.secret, 3, RandomSource(seed))
        if result.reconstructions[("B", "A")] == stack([direct.share(2), direct.share(1)]):
            agreed += 1
    report(6, agreed == 20, f"{agreed}/20 seeds bit-identical")
    assert agreed == 20


@pytest.mark.criterion(7, "tampered, fake, forged and replayed shares are all rejected")
def test_c7_defense_completeness():
    start = time.perf_counter()
    net = Network()
    net.provision(half_secret(16), seed=7)
    genuine = net.users["A"].share
    rejected = 0
    for y, x in itertools.product(range(16), range(16)):
        bits = genuine.bits.copy()
        bits[y, x] ^= 1
        receiver = net.deliver("A", "B", BinaryImage(bits))
        try:
            receiver.reconstruct("A")
        except DigestMismatch:
            rejected += 1
    verdicts = {}
    for name in ("attack", "forge", "replay"):
        b = builtin_scenario(name)
        result = run_scenario(b.steps, secret=b.secret, seed=1)
        verdicts[name] = result.final_verdict if result.matches(b.expected) else f"unexpected {result.final_verdict}"
    elapsed = time.perf_counter() - start
    ok = (rejected == 256 and verdicts == {"attack": "DigestMismatch", "forge": "BadSignature", "replay": "Replay"}
          and elapsed < 5)
    report(7, ok, f"{rejected}/256 tamper rejections, {verdicts}, {elapsed:.2f}s")
    assert rejected == 256
    assert verdicts == {"attack": "DigestMismatch", "forge": "BadSignature", "replay": "Replay"}
    assert elapsed < 5.0


@pytest.mark.criterion(8, "frame codec is lossless and faults become error frames")
def test_c8_wire_determinism():
    key = bytes(range(32))
    rnd = random.Random(8)
    lossless = 0
    bad_frames = 0
    samples = []
    for cls in MESSAGE_TYPES.values():
        k = key if cls.ENCRYPTED else None
        for _ in range(1000):
            msg = random_message(cls, rnd)
            data = encode(msg, k)
            lossless += decode(data, k) == msg
        samples.append(data)

    server = TrustedServer()
    user = Principal("A", server.id, server.public_key)
    server.register_principal("A", user.public_key)
    for data in samples:
        length = int.from_bytes(data[:4], "big")
        corrupt = [data[:cut] for cut in range(len(data))]
        corrupt += [(length + d).to_bytes(4, "big") + data[4:] for d in (-7, -1, 1, 1 << 21)]
        corrupt += [(0).to_bytes(4, "big") + data[4:], b"\xff\xff\xff\xff" + data[4:]]
        for bad in corrupt:
            err = safe_decode(bad, key)
            codes_ok = isinstance(err, ErrorFrame) and err.code in (ErrorCode.TRUNCATED, ErrorCode.BAD_LENGTH)
            # endpoints answer with an error frame instead of raising
            for endpoint in (server, user):
                outcome = endpoint.handle("A" if endpoint is server else "S", bad)
                reply = decode(outcome.replies[0][1])
                codes_ok &= isinstance(reply, ErrorFrame) and reply.code == err.code
            bad_frames += codes_ok
            assert codes_ok, bad
    total = 1000 * len(MESSAGE_TYPES)
    report(8, lossless == total, f"{lossless}/{total} lossless round trips, {bad_frames} corrupted frames answered")
    assert lossless == total


@pytest.mark.criterion(9, "seeded split output is byte-identical and frozen")
def test_c9_reproducibility(tmp_path, capsys):
    secret = tmp_path / "secret.pbm"
    secret.write_bytes(save_pbm(text_secret()))
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["split", str(secret), "--scheme", "2n", "-n", "3", "--out-dir", str(out), "--seed", "42"]) == 0
        h = hashlib.sha256()
        for name in ("share_1.pbm", "share_2.pbm", "share_3.pbm", "manifest.json"):
            h.update((out / name).read_bytes())
        digests.append(h.hexdigest())
    capsys.readouterr()
    ok = digests[0] == digests[1] == SPLIT_SEED42_DIGEST
    report(9, ok, f"run digests {digests[0][:16]}.. {digests[1][:16]}.., frozen {SPLIT_SEED42_DIGEST[:16]}..")
    assert digests[0] == digests[1]
    assert digests[0] == SPLIT_SEED42_DIGEST
