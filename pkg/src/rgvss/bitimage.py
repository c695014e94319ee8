"""Binary images, PBM/PGM I/O and pixel-set helpers.

Pixel convention throughout the package: 0 is white (transparent), 1 is
black (opaque).  This matches PBM, so no inversion happens on load or save.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

import numpy as np

MAX_SIDE = 1 << 16

Meta = tuple[tuple[str, str], ...]

_WS = b" \t\r\n\v\f"
_META_RE = re.compile(r"^\s*([A-Za-z0-9_.-]+)=(.*?)\s*$")


class PbmParseError(ValueError):
    """Raised for malformed Netpbm input; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def _check_dims(height: int, width: int) -> None:
    if not (1 <= width <= MAX_SIDE and 1 <= height <= MAX_SIDE):
        raise ValueError(f"image dimensions {width}x{height} outside 1..{MAX_SIDE}")


class BinaryImage:
    """Immutable bit matrix stored row-major as a read-only ``uint8`` array.

    ``meta`` holds ``key=value`` pairs read from PBM comments.  It is
    carried along for convenience but does not take part in equality.
    """

    __slots__ = ("_bits", "meta")

    def __init__(self, bits, meta: Iterable[tuple[str, str]] = ()):
        arr = np.array(bits, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError("bits must be a 2-D matrix")
        _check_dims(*arr.shape)
        if arr.size and arr.max() > 1:
            raise ValueError("bits must contain only 0 and 1")
        arr.setflags(write=False)
        self._bits = arr
        self.meta: Meta = tuple((str(k), str(v)) for k, v in meta)

    @classmethod
    def zeros(cls, width: int, height: int) -> "BinaryImage":
        return cls(np.zeros((height, width), dtype=np.uint8))

    @classmethod
    def ones(cls, width: int, height: int) -> "BinaryImage":
        return cls(np.ones((height, width), dtype=np.uint8))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def width(self) -> int:
        return self._bits.shape[1]

    @property
    def height(self) -> int:
        return self._bits.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        """(width, height), the order used in PBM headers and messages."""
        return self.width, self.height

    def popcount(self) -> int:
        return int(self._bits.sum(dtype=np.int64))

    def invert(self) -> "BinaryImage":
        return BinaryImage(1 - self._bits)

    def tolist(self) -> list[list[int]]:
        return self._bits.tolist()

    def with_meta(self, meta: Iterable[tuple[str, str]]) -> "BinaryImage":
        return BinaryImage(self._bits, meta)

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return np.array_equal(self._bits, other._bits)

    def __hash__(self):
        return hash((self._bits.shape, self._bits.tobytes()))

    def __repr__(self):
        return f"BinaryImage({self.width}x{self.height}, black={self.popcount()})"


class GrayImage:
    """Immutable 8-bit grayscale matrix (0 = black, 255 = white)."""

    __slots__ = ("_levels",)

    def __init__(self, levels):
        raw = np.asarray(levels)
        if raw.ndim != 2:
            raise ValueError("levels must be a 2-D matrix")
        _check_dims(*raw.shape)
        if raw.size and (raw.min() < 0 or raw.max() > 255):
            raise ValueError("intensities must lie in [0, 255]")
        arr = raw.astype(np.uint8)
        arr.setflags(write=False)
        self._levels = arr

    @property
    def levels(self) -> np.ndarray:
        return self._levels

    @property
    def width(self) -> int:
        return self._levels.shape[1]

    @property
    def height(self) -> int:
        return self._levels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self._levels, other._levels)

    __hash__ = None


class RegionMask:
    """Boolean pixel selection with the same layout as a BinaryImage."""

    __slots__ = ("_flags",)

    def __init__(self, flags):
        arr = np.array(flags, dtype=bool)
        if arr.ndim != 2:
            raise ValueError("flags must be a 2-D matrix")
        _check_dims(*arr.shape)
        arr.setflags(write=False)
        self._flags = arr

    @classmethod
    def empty(cls, width: int, height: int) -> "RegionMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def full(cls, width: int, height: int) -> "RegionMask":
        return cls(np.ones((height, width), dtype=bool))

    @classmethod
    def rect(cls, width: int, height: int, x: int, y: int, w: int, h: int) -> "RegionMask":
        """Mask selecting the ``w`` x ``h`` block whose top-left corner is (x, y)."""
        flags = np.zeros((height, width), dtype=bool)
        flags[y:y + h, x:x + w] = True
        return cls(flags)

    @classmethod
    def from_image(cls, img: BinaryImage) -> "RegionMask":
        """Black pixels of ``img`` become selected pixels."""
        return cls(img.bits.astype(bool))

    @property
    def flags(self) -> np.ndarray:
        return self._flags

    @property
    def width(self) -> int:
        return self._flags.shape[1]

    @property
    def height(self) -> int:
        return self._flags.shape[0]

    def count(self) -> int:
        return int(self._flags.sum())

    def __invert__(self) -> "RegionMask":
        return RegionMask(~self._flags)

    def __and__(self, other: "RegionMask") -> "RegionMask":
        return RegionMask(self._flags & other._flags)

    def __or__(self, other: "RegionMask") -> "RegionMask":
        return RegionMask(self._flags | other._flags)

    def to_image(self) -> BinaryImage:
        return BinaryImage(self._flags.astype(np.uint8))

    def __eq__(self, other):
        if not isinstance(other, RegionMask):
            return NotImplemented
        return np.array_equal(self._flags, other._flags)

    __hash__ = None

    def __repr__(self):
        return f"RegionMask({self.width}x{self.height}, selected={self.count()})"


def white_region(img: BinaryImage) -> RegionMask:
    return RegionMask(img.bits == 0)


def black_region(img: BinaryImage) -> RegionMask:
    return RegionMask(img.bits == 1)


# -- Netpbm parsing ---------------------------------------------------------

class _Header:
    """Tokenizer over a Netpbm header that tracks byte offsets and comments."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.meta: list[tuple[str, str]] = []

    def skip(self) -> None:
        data = self.data
        while self.pos < len(data):
            c = data[self.pos:self.pos + 1]
            if c in (b" ", b"\t", b"\r", b"\n", b"\v", b"\f"):
                self.pos += 1
            elif c == b"#":
                end = data.find(b"\n", self.pos)
                if end < 0:
                    end = len(data)
                text = data[self.pos + 1:end].decode("ascii", "replace")
                m = _META_RE.match(text)
                if m:
                    self.meta.append((m.group(1), m.group(2)))
                self.pos = end + 1 if end < len(data) else end
            else:
                return

    def integer(self, what: str, limit: int) -> int:
        self.skip()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos:self.pos + 1].isdigit():
            self.pos += 1
        if start == self.pos:
            if self.pos >= len(self.data):
                raise PbmParseError(f"truncated header, expected {what}", start)
            raise PbmParseError(f"expected {what}", start)
        digits = self.data[start:self.pos]
        if len(digits) > 12 or int(digits) > limit:
            raise PbmParseError(f"{what} {digits.decode()} exceeds {limit}", start)
        value = int(digits)
        if value < 1:
            raise PbmParseError(f"{what} must be positive", start)
        return value

    def single_whitespace(self) -> None:
        if self.pos >= len(self.data):
            raise PbmParseError("truncated header", self.pos)
        if self.data[self.pos] not in _WS:
            raise PbmParseError("expected whitespace before raster", self.pos)
        self.pos += 1


def _magic(data: bytes, allowed: Sequence[bytes]) -> bytes:
    magic = data[:2]
    if magic not in allowed:
        raise PbmParseError(f"bad magic {magic!r}, expected one of {list(allowed)}", 0)
    return magic


def load_pbm(data: bytes) -> BinaryImage:
    """Parse a P1 or P4 stream.

    Header comments of the form ``# key=value`` end up in ``image.meta``.
    Trailing bytes after the raster are ignored.
    """
    magic = _magic(data, (b"P1", b"P4"))
    hdr = _Header(data)
    hdr.pos = 2
    width = hdr.integer("width", MAX_SIDE)
    height = hdr.integer("height", MAX_SIDE)

    if magic == b"P4":
        hdr.single_whitespace()
        stride = (width + 7) // 8
        need = stride * height
        raster = data[hdr.pos:hdr.pos + need]
        if len(raster) < need:
            raise PbmParseError(
                f"truncated raster: need {need} bytes, have {len(raster)}", hdr.pos + len(raster)
            )
        packed = np.frombuffer(raster, dtype=np.uint8).reshape(height, stride)
        bits = np.unpackbits(packed, axis=1)[:, :width]
        return BinaryImage(bits, hdr.meta)

    need = width * height
    out = np.empty(need, dtype=np.uint8)
    count = 0
    pos = hdr.pos
    while count < need:
        if pos >= len(data):
            raise PbmParseError(f"truncated raster: got {count} of {need} pixels", pos)
        c = data[pos]
        if c == 0x30 or c == 0x31:
            out[count] = c - 0x30
            count += 1
            pos += 1
        elif c in _WS:
            pos += 1
        elif c == 0x23:
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        else:
            raise PbmParseError(f"unexpected byte {bytes([c])!r} in P1 raster", pos)
    return BinaryImage(out.reshape(height, width), hdr.meta)


def _meta_lines(meta: Iterable[tuple[str, str]]) -> bytes:
    lines = []
    for key, value in meta:
        key, value = str(key), str(value)
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", key):
            raise ValueError(f"invalid metadata key {key!r}")
        if "\n" in value or "\r" in value:
            raise ValueError(f"metadata value for {key!r} contains a newline")
        lines.append(f"# {key}={value}\n")
    return "".join(lines).encode("ascii")


def save_pbm(img: BinaryImage, format: str = "P4", meta: Iterable[tuple[str, str]] = ()) -> bytes:
    """Serialize ``img``; ``meta`` entries become comment lines after the magic."""
    fmt = format.upper()
    if fmt not in ("P1", "P4"):
        raise ValueError(f"unsupported PBM format {format!r}")
    header = fmt.encode() + b"\n" + _meta_lines(meta) + f"{img.width} {img.height}\n".encode()
    if fmt == "P4":
        return header + np.packbits(img.bits, axis=1).tobytes()
    # 35 pixels per line keeps P1 lines within the 70-character limit
    rows = []
    digits = np.where(img.bits == 1, "1", "0")
    for row in digits:
        for i in range(0, len(row), 35):
            rows.append(" ".join(row[i:i + 35]))
    return header + ("\n".join(rows) + "\n").encode("ascii")


def canonical_bytes(img: BinaryImage) -> bytes:
    """P4 bytes without metadata: the identity used for share digests."""
    return save_pbm(img, "P4")


def load_pgm(data: bytes) -> GrayImage:
    """Parse P2 or P5; intensities are rescaled to 0..255 if maxval differs."""
    magic = _magic(data, (b"P2", b"P5"))
    hdr = _Header(data)
    hdr.pos = 2
    width = hdr.integer("width", MAX_SIDE)
    height = hdr.integer("height", MAX_SIDE)
    maxval = hdr.integer("maxval", 65535)
    need = width * height

    if magic == b"P5":
        hdr.single_whitespace()
        nbytes = 1 if maxval < 256 else 2
        raster = data[hdr.pos:hdr.pos + need * nbytes]
        if len(raster) < need * nbytes:
            raise PbmParseError("truncated raster", hdr.pos + len(raster))
        values = np.frombuffer(raster, dtype=np.uint8 if nbytes == 1 else ">u2").astype(np.int64)
    else:
        tokens = data[hdr.pos:].split()
        tokens = [t for t in tokens if not t.startswith(b"#")]
        if len(tokens) < need:
            raise PbmParseError("truncated raster", len(data))
        try:
            values = np.array([int(t) for t in tokens[:need]], dtype=np.int64)
        except ValueError:
            raise PbmParseError("non-numeric sample in P2 raster", hdr.pos) from None
    if values.max(initial=0) > maxval:
        raise PbmParseError("sample exceeds maxval", hdr.pos)
    if maxval != 255:
        values = (values * 255 + maxval // 2) // maxval
    return GrayImage(values.reshape(height, width))


def load_image(data: bytes, threshold: int = 128) -> BinaryImage:
    """Load PBM directly, or PGM through :func:`binarize`."""
    if data[:2] in (b"P2", b"P5"):
        return binarize(load_pgm(data), threshold)
    return load_pbm(data)


# -- pixel operations ---------------------------------------------------------

def binarize(img: GrayImage, threshold: int = 128) -> BinaryImage:
    """Global threshold: intensity below ``threshold`` becomes black."""
    if not 0 <= threshold <= 255:
        raise ValueError("threshold must lie in [0, 255]")
    return BinaryImage((img.levels < threshold).astype(np.uint8))


def _same_shape(a, b) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def diff_mask(a: BinaryImage, b: BinaryImage) -> RegionMask:
    _same_shape(a, b)
    return RegionMask(a.bits != b.bits)


def region_fraction_white(img: BinaryImage, mask: RegionMask) -> float:
    """Fraction of the selected pixels that are white."""
    _same_shape(img, mask)
    selected = mask.count()
    if selected == 0:
        raise ValueError("mask selects no pixels")
    white = int(np.count_nonzero(img.bits[mask.flags] == 0))
    return white / selected
