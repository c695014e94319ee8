"""Command-line interface: ``rgvss split|stack|analyze|attack|simulate``.

Exit status: 0 on success (for ``simulate``: the expected verdict was
reached), 1 on data or I/O errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .bitimage import (
    BinaryImage,
    PbmParseError,
    RegionMask,
    canonical_bytes,
    load_image,
    region_fraction_white,
    save_pbm,
)
from .cheatgen import AlterationError, AttackScenario, FakeImageSpec, fake_grids_for_colluders
from .randgrid import SchemeKind, SchemeParams, ShareSet, split, stack, transmission_report
from .rng import make_source


class CliError(Exception):
    """Data error: reported on stderr, exit status 1."""


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return value


def _threshold(text: str) -> int:
    value = int(text)
    if not 0 <= value <= 255:
        raise argparse.ArgumentTypeError("threshold must be in [0, 255]")
    return value


def _read(path: str | Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _load(path: str | Path, threshold: int = 128) -> BinaryImage:
    try:
        return load_image(_read(path), threshold)
    except (PbmParseError, ValueError) as exc:
        raise CliError(f"{path}: {exc}") from None


def _write(path: Path, data: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _format(args) -> str:
    return args.format.upper()


def cmd_split(args) -> int:
    secret = _load(args.input, args.threshold)
    rng = make_source(args.seed)
    shares = split(secret, args.scheme, args.n, rng)
    out_dir = Path(args.out_dir)
    entries = []
    for index, share in enumerate(shares.shares, start=1):
        name = f"share_{index}.pbm"
        _write(out_dir / name, save_pbm(share, _format(args), shares.share_meta(index)))
        entries.append({
            "index": index,
            "file": name,
            "sha256": hashlib.sha256(canonical_bytes(share)).hexdigest(),
        })
    manifest = {
        "scheme": shares.params.kind.value,
        "n": shares.params.n,
        "k": shares.params.k,
        "width": secret.width,
        "height": secret.height,
        "shares": entries,
    }
    if shares.seed is not None:
        manifest["seed"] = shares.seed
    _write(out_dir / "manifest.json", (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    print(f"wrote {args.n} shares ({shares.params.kind.value}, k={shares.params.k}) to {out_dir}")
    return 0


def cmd_stack(args) -> int:
    images = [_load(p) for p in args.shares]
    for path, img in zip(args.shares[1:], images[1:]):
        if img.size != images[0].size:
            raise CliError(
                f"dimension mismatch: {args.shares[0]} is {images[0].width}x{images[0].height}, "
                f"{path} is {img.width}x{img.height}"
            )
    _write(Path(args.out), save_pbm(stack(images), _format(args)))
    return 0


def _report_line(recon: BinaryImage, secret: BinaryImage) -> str:
    try:
        rep = transmission_report(recon, secret)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    return f"white={rep.white:.4f} black={rep.black:.4f} contrast={rep.contrast:.4f}"


def cmd_analyze(args) -> int:
    recon, secret = _load(args.recon), _load(args.secret)
    if recon.size != secret.size:
        raise CliError(f"dimension mismatch: {recon.size} vs {secret.size}")
    print(_report_line(recon, secret))
    return 0


def _load_share_dir(directory: Path) -> dict[int, BinaryImage]:
    shares = {}
    for path in sorted(directory.glob("share_*.pbm")):
        img = _load(path)
        meta = dict(img.meta)
        if meta.get("scheme", SchemeKind.SCHEME_2N.value) != SchemeKind.SCHEME_2N.value:
            raise CliError(f"{path}: attack applies to the 2n scheme only")
        try:
            index = int(meta.get("index") or path.stem.split("_")[1])
        except (IndexError, ValueError):
            raise CliError(f"{path}: cannot tell the share index") from None
        shares[index] = img
    if not shares:
        raise CliError(f"no share_*.pbm files in {directory}")
    return shares


def cmd_attack(args) -> int:
    secret = _load(args.secret)
    shares = _load_share_dir(Path(args.shares_dir))
    mask_img = _load(args.mask)
    if mask_img.size != secret.size:
        raise CliError(
            f"mask is {mask_img.width}x{mask_img.height}, secret is {secret.width}x{secret.height}"
        )
    n = max(shares)
    if sorted(shares) != list(range(1, n + 1)):
        raise CliError(f"share indices {sorted(shares)} are not 1..{n}")
    if args.victim not in shares:
        raise CliError(f"victim index {args.victim} outside 1..{n}")
    mask = RegionMask.from_image(mask_img)
    share_set = ShareSet(
        SchemeParams(SchemeKind.SCHEME_2N, n, secret.width, secret.height),
        tuple(shares[i] for i in range(1, n + 1)),
        None,
    )
    colluders = tuple(i for i in range(1, n + 1) if i != args.victim)
    try:
        scenario = AttackScenario(share_set, colluders, args.victim, FakeImageSpec(mask))
        fakes = fake_grids_for_colluders(scenario, secret, make_source(args.seed))
    except (AlterationError, ValueError) as exc:
        raise CliError(str(exc)) from None

    out_dir = Path(args.out_dir)
    for index, fake in zip(scenario.colluders, fakes):
        meta = share_set.share_meta(index, include_seed=False)
        _write(out_dir / f"share_{index}.pbm", save_pbm(fake, _format(args), meta))

    victim = shares[args.victim]
    if mask.count() == 0:
        print("no alteration: fake grids equal the genuine colluder shares")
        return 0
    unaltered_white = RegionMask((secret.bits == 0) & ~mask.flags)
    black = RegionMask(secret.bits == 1)
    for index, fake in zip(scenario.colluders, fakes):
        recon = stack([fake, victim])
        parts = [f"altered={region_fraction_white(recon, mask):.4f}"]
        if unaltered_white.count():
            parts.append(f"unaltered_white={region_fraction_white(recon, unaltered_white):.4f}")
        if black.count():
            parts.append(f"black={region_fraction_white(recon, black):.4f}")
        print(f"fake {index} + share {args.victim}: " + " ".join(parts))
    return 0


def cmd_simulate(args) -> int:
    # deferred: the image commands should not need the crypto backend
    from .authproto import builtin_scenario, run_scenario

    scenario = builtin_scenario(args.scenario, args.size)
    result = run_scenario(scenario.steps, secret=scenario.secret, seed=args.seed)
    for line in result.lines():
        print(line)
    ok = result.matches(scenario.expected)
    if not ok:
        print(f"UNEXPECTED: wanted {scenario.expected}")
    print(result.summary_line())
    return 0 if ok else 1


def _add_randomness(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--seed", type=_seed, help="deterministic bit stream (testing only)")
    group.add_argument(
        "--secure-random", action="store_true",
        help="draw grid bits from the OS CSPRNG (default when no seed is given)",
    )


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("p1", "p4"), default="p4", help="PBM flavour to write")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rgvss", description="Random-grid visual secret sharing.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="split a secret image into shares")
    p.add_argument("input", help="secret image (PBM, or PGM binarized at --threshold)")
    p.add_argument("--scheme", choices=[k.value for k in SchemeKind], default="2n")
    p.add_argument("-n", type=int, required=True, help="number of shares")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threshold", type=_threshold, default=128)
    _add_randomness(p)
    _add_format(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stack", help="superimpose two or more shares")
    p.add_argument("shares", nargs="+")
    p.add_argument("-o", "--out", required=True)
    _add_format(p)
    p.set_defaults(func=cmd_stack)

    p = sub.add_parser("analyze", help="light transmission of a reconstruction")
    p.add_argument("recon")
    p.add_argument("secret")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("attack", help="forge fake grids against a victim share")
    p.add_argument("secret")
    p.add_argument("shares_dir")
    p.add_argument("--mask", required=True, help="PBM whose black pixels mark the alteration")
    p.add_argument("--victim", type=int, required=True, help="1-based index of the honest share")
    p.add_argument("--out-dir", required=True)
    _add_randomness(p)
    _add_format(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("simulate", help="run a built-in protocol scenario")
    p.add_argument("scenario", choices=("honest", "attack", "replay", "forge"))
    p.add_argument("--size", type=int, default=64, help="side of the demo secret (>= 16)")
    _add_randomness(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "split" and args.n < 2:
        parser.error("-n must be at least 2")
    if args.command == "stack" and len(args.shares) < 2:
        parser.error("stack needs at least two shares")
    if args.command == "simulate" and args.size < 16:
        parser.error("--size must be at least 16")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"rgvss: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
