"""Sample inputs shared by several test modules."""

import numpy as np

from rgvss.authproto.wire import (
    MAX_ID,
    CommGrant,
    CommRequest,
    DigestNotice,
    DigestRecord,
    ErrorFrame,
    HandshakeAck,
    HandshakeConfirm,
    HandshakeInit,
    ShareTransfer,
)
from rgvss.bitimage import BinaryImage


# sha256 over share_1..share_3 and manifest.json for `split --seed 42` of text_secret()
SPLIT_SEED42_DIGEST = "cfb47efa5d9307391bb12655d482b1f835028b61861d71113a2ae2e0480661b1"


def text_secret(size=128):
    """Black right-hand band and top strip, about 42% black."""
    bits = np.zeros((size, size), dtype=np.uint8)
    bits[:, 5 * size // 8:] = 1
    bits[:10, :] = 1
    return BinaryImage(bits)


def half_secret(size=128):
    """Left half white, right half black."""
    bits = np.zeros((size, size), dtype=np.uint8)
    bits[:, size // 2:] = 1
    return BinaryImage(bits)


PRINTABLE = "".join(chr(c) for c in range(0x20, 0x7F))


def rand_id(rnd):
    return "".join(rnd.choice(PRINTABLE) for _ in range(rnd.randint(1, MAX_ID)))


def rand_bytes(rnd, n):
    return rnd.randbytes(n)


def rand_record(rnd):
    return DigestRecord(rand_id(rnd), rand_id(rnd), rnd.randint(0, 0xFFFF), rand_bytes(rnd, 32), rand_bytes(rnd, 64))


def random_message(cls, rnd):
    if cls is HandshakeInit:
        return cls(rand_id(rnd), rand_id(rnd), rand_bytes(rnd, 16), rand_bytes(rnd, 32), rand_bytes(rnd, 64))
    if cls is HandshakeAck:
        return cls(rand_id(rnd), rand_id(rnd), rand_bytes(rnd, 16), rand_bytes(rnd, 16),
                   rand_bytes(rnd, 32), rand_bytes(rnd, 64))
    if cls is HandshakeConfirm:
        return cls(rand_id(rnd), rand_bytes(rnd, 64))
    if cls is CommRequest:
        return cls(rand_id(rnd), rand_id(rnd), rand_bytes(rnd, 16))
    if cls is CommGrant:
        return cls(rand_bytes(rnd, 16), rand_bytes(rnd, 32))
    if cls is ShareTransfer:
        return cls(rand_id(rnd), rand_bytes(rnd, rnd.randint(0, 2048)))
    if cls is DigestNotice:
        return cls(rand_id(rnd), rand_bytes(rnd, 32), rand_record(rnd))
    if cls is ErrorFrame:
        return cls(rnd.randint(0, 255), "".join(rnd.choice(PRINTABLE) for _ in range(rnd.randint(0, 200))))
    raise AssertionError(cls)
