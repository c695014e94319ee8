"""Fake-grid collusion attack against the (2, n) random-grid scheme.

Colluders who can reconstruct the secret pick white pixels to blacken,
then forge a grid that copies their own share wherever the image is left
alone and is random wherever it was altered.  Stacked with an honest
share, the forged grid shows the altered image with the same statistics
as a genuine reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitimage import BinaryImage, RegionMask
from .randgrid import SchemeKind, ShareSet
from .rng import RandomSource


class AlterationError(ValueError):
    """The alteration mask flags a pixel that is already black."""

    def __init__(self, x: int, y: int):
        super().__init__(f"mask flags black secret pixel at x={x} y={y}; only white pixels may be altered")
        self.x = x
        self.y = y


@dataclass(frozen=True)
class FakeImageSpec:
    alteration: RegionMask

    def check(self, secret: BinaryImage) -> None:
        if (self.alteration.width, self.alteration.height) != secret.size:
            raise ValueError(
                f"mask is {self.alteration.width}x{self.alteration.height}, "
                f"secret is {secret.width}x{secret.height}"
            )
        bad = np.argwhere(self.alteration.flags & (secret.bits == 1))
        if len(bad):
            y, x = (int(v) for v in bad[0])
            raise AlterationError(x, y)


@dataclass(frozen=True)
class AttackScenario:
    share_set: ShareSet
    colluders: tuple[int, ...]
    victim: int
    spec: FakeImageSpec

    def __post_init__(self):
        object.__setattr__(self, "colluders", tuple(sorted(set(self.colluders))))
        if self.share_set.params.kind is not SchemeKind.SCHEME_2N:
            raise ValueError("the fake-grid attack is defined for the (2, n) scheme only")
        n = self.share_set.params.n
        for idx in self.colluders + (self.victim,):
            if not 1 <= idx <= n:
                raise IndexError(f"share index {idx} outside 1..{n}")
        if self.victim in self.colluders:
            raise ValueError("the victim cannot also be a colluder")
        if len(self.colluders) < self.share_set.params.k:
            raise ValueError(
                f"need at least k={self.share_set.params.k} colluders to recover the secret"
            )


def make_fake_secret(secret: BinaryImage, spec: FakeImageSpec) -> BinaryImage:
    spec.check(secret)
    return BinaryImage(secret.bits | spec.alteration.flags.astype(np.uint8))


def fake_grid(
    secret: BinaryImage,
    fake_secret: BinaryImage,
    colluder_share: BinaryImage,
    rng: RandomSource,
) -> BinaryImage:
    """Forge a share: keep ``colluder_share`` where the images agree, random elsewhere.

    The equality test runs on the clean secret rather than on a noisy
    stacked reconstruction, so the branch is exactly "was this pixel
    altered".  One random bit is drawn per altered pixel, row-major.
    """
    if not (secret.size == fake_secret.size == colluder_share.size):
        raise ValueError(
            f"dimension mismatch: {secret.size}, {fake_secret.size}, {colluder_share.size}"
        )
    altered = secret.bits != fake_secret.bits
    out = colluder_share.bits.copy()
    out[altered] = rng.bits(int(altered.sum()))
    return BinaryImage(out)


def fake_grids_for_colluders(
    scenario: AttackScenario, secret: BinaryImage, rng: RandomSource
) -> list[BinaryImage]:
    """One forged grid per colluder, each derived from that colluder's share."""
    fake_secret = make_fake_secret(secret, scenario.spec)
    return [
        fake_grid(secret, fake_secret, scenario.share_set.share(idx), rng)
        for idx in scenario.colluders
    ]
