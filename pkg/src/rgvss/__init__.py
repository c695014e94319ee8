"""Random-grid visual secret sharing with server-signed share digests."""

from .bitimage import (
    BinaryImage,
    GrayImage,
    PbmParseError,
    RegionMask,
    binarize,
    canonical_bytes,
    diff_mask,
    load_pbm,
    load_pgm,
    region_fraction_white,
    save_pbm,
)
from .cheatgen import (
    AlterationError,
    AttackScenario,
    FakeImageSpec,
    fake_grid,
    fake_grids_for_colluders,
    make_fake_secret,
)
from .randgrid import (
    SchemeKind,
    SchemeParams,
    ShareSet,
    TransmissionReport,
    create_share_2n,
    gen_random_grid,
    split,
    split_2n,
    split_chain_nn,
    stack,
    transmission_report,
)
from .rng import RandomSource, SecureRandomSource, make_source

__version__ = "0.1.0"

__all__ = [
    "AlterationError",
    "AttackScenario",
    "binarize",
    "BinaryImage",
    "canonical_bytes",
    "create_share_2n",
    "diff_mask",
    "fake_grid",
    "fake_grids_for_colluders",
    "FakeImageSpec",
    "gen_random_grid",
    "GrayImage",
    "load_pbm",
    "load_pgm",
    "make_fake_secret",
    "make_source",
    "PbmParseError",
    "RandomSource",
    "region_fraction_white",
    "RegionMask",
    "save_pbm",
    "SchemeKind",
    "SchemeParams",
    "SecureRandomSource",
    "ShareSet",
    "split",
    "split_2n",
    "split_chain_nn",
    "stack",
    "transmission_report",
    "TransmissionReport",
]
