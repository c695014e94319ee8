"""Random-grid share generation, stacking and transmission measurement.

Two constructions are provided:

* ``Scheme2N`` -- any two of ``n`` shares reveal the secret.  Share 1 is a
  random grid; every other share copies it on white secret pixels and
  draws a fresh bit on black ones.
* ``SchemeNNChain`` -- all ``n`` shares are required.  The secret is split
  into a random grid and an intermediate grid, the intermediate grid is
  split again, and so on until ``n`` shares exist.  Each split copies the
  random grid on white pixels and complements it on black pixels, so the
  full stack is exactly black wherever the secret is.

Share indices are 1-based everywhere outside this module's internals.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .bitimage import BinaryImage, black_region, region_fraction_white, white_region
from .rng import RandomSource


class SchemeKind(str, enum.Enum):
    SCHEME_2N = "2n"
    NN_CHAIN = "nn"


@dataclass(frozen=True)
class SchemeParams:
    kind: SchemeKind
    n: int
    width: int
    height: int
    k: int = field(default=0)

    def __post_init__(self):
        kind = SchemeKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.n < 2:
            raise ValueError("a scheme needs at least 2 shares")
        expected_k = 2 if kind is SchemeKind.SCHEME_2N else self.n
        if self.k == 0:
            object.__setattr__(self, "k", expected_k)
        elif self.k != expected_k:
            raise ValueError(f"{kind.value} scheme requires k={expected_k}, got {self.k}")


@dataclass(frozen=True)
class ShareSet:
    params: SchemeParams
    shares: tuple[BinaryImage, ...]
    seed: int | None

    def __post_init__(self):
        if len(self.shares) != self.params.n:
            raise ValueError(f"expected {self.params.n} shares, got {len(self.shares)}")
        for s in self.shares:
            if s.size != (self.params.width, self.params.height):
                raise ValueError("share dimensions do not match scheme parameters")

    def share(self, index: int) -> BinaryImage:
        """Share ``index`` (1-based)."""
        if not 1 <= index <= len(self.shares):
            raise IndexError(f"share index {index} outside 1..{len(self.shares)}")
        return self.shares[index - 1]

    def share_meta(self, index: int, include_seed: bool = True) -> list[tuple[str, str]]:
        """PBM comment metadata describing share ``index``."""
        meta = [
            ("scheme", self.params.kind.value),
            ("index", str(index)),
            ("n", str(self.params.n)),
            ("k", str(self.params.k)),
        ]
        if include_seed and self.seed is not None:
            meta.append(("seed", str(self.seed)))
        return meta


class TransmissionReport(NamedTuple):
    white: float
    black: float
    contrast: float


def _check_same(a: BinaryImage, b: BinaryImage) -> None:
    if a.size != b.size:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")


def gen_random_grid(width: int, height: int, rng: RandomSource) -> BinaryImage:
    if width < 1 or height < 1:
        raise ValueError("grid dimensions must be at least 1")
    return BinaryImage(rng.grid(width, height))


def create_share_2n(secret: BinaryImage, g1: BinaryImage, rng: RandomSource) -> BinaryImage:
    """Copy ``g1`` on white secret pixels, fresh random bit on black ones.

    One random bit is consumed per black pixel, in row-major order.
    """
    _check_same(secret, g1)
    black = secret.bits == 1
    out = g1.bits.copy()
    out[black] = rng.bits(int(black.sum()))
    return BinaryImage(out)


def split_2n(secret: BinaryImage, n: int, rng: RandomSource) -> ShareSet:
    params = SchemeParams(SchemeKind.SCHEME_2N, n, secret.width, secret.height)
    g1 = gen_random_grid(secret.width, secret.height, rng)
    shares = [g1] + [create_share_2n(secret, g1, rng) for _ in range(n - 1)]
    return ShareSet(params, tuple(shares), rng.seed)


def split_chain_nn(secret: BinaryImage, n: int, rng: RandomSource) -> ShareSet:
    params = SchemeParams(SchemeKind.NN_CHAIN, n, secret.width, secret.height)
    current = secret.bits
    shares = []
    for _ in range(n - 1):
        g = rng.grid(secret.width, secret.height)
        shares.append(BinaryImage(g))
        # white: copy g, black: complement g
        current = g ^ current
    shares.append(BinaryImage(current))
    return ShareSet(params, tuple(shares), rng.seed)


def split(secret: BinaryImage, kind: SchemeKind | str, n: int, rng: RandomSource) -> ShareSet:
    kind = SchemeKind(kind)
    if kind is SchemeKind.SCHEME_2N:
        return split_2n(secret, n, rng)
    return split_chain_nn(secret, n, rng)


def stack(shares: Sequence[BinaryImage]) -> BinaryImage:
    """Superimpose shares: pixelwise OR, black is opaque."""
    shares = list(shares)
    if not shares:
        raise ValueError("nothing to stack")
    out = shares[0].bits.copy()
    for s in shares[1:]:
        _check_same(shares[0], s)
        out |= s.bits
    return BinaryImage(out)


def transmission_report(recon: BinaryImage, secret: BinaryImage) -> TransmissionReport:
    """Light transmission of ``recon`` over the secret's white and black regions."""
    _check_same(recon, secret)
    black = secret.popcount()
    if black == 0 or black == recon.width * recon.height:
        raise ValueError("secret is all one colour; contrast is undefined")
    white_t = region_fraction_white(recon, white_region(secret))
    black_t = region_fraction_white(recon, black_region(secret))
    return TransmissionReport(white_t, black_t, white_t - black_t)


def proper_subsets(n: int):
    """All non-empty proper subsets of share indices 1..n."""
    for r in range(1, n):
        yield from itertools.combinations(range(1, n + 1), r)
