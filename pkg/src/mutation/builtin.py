"""
Built-in byte-level mutator.

Fallback when no synthesized mutator passes its dry run, and the baseline for
ablations. One operation per call, chosen from a ``random.Random`` seeded with
the request's rng_seed, so the output is a pure function of its arguments.
"""

import random
import re
from enum import Enum
from typing import List, Optional

# AFL-style interesting values, as decimal text tokens
INTERESTING_VALUES = (
    -1, 0, 1, 2, 16, 32, 64, 100, 127, 128, 255, 256, 512,
    1000, 1024, 4096, 32767, 65535, 100000, 1000000000,
)
_TOKEN_RE = re.compile(rb"\S+")


class MutationOp(str, Enum):
    """Byte-level mutation operations."""
    BITFLIP = "bitflip"
    BYTE_OVERWRITE = "byte_overwrite"
    CHUNK_DUPLICATE = "chunk_duplicate"
    CHUNK_DELETE = "chunk_delete"
    TOKEN_SPLICE = "token_splice"


def splice_token(data: bytes, index: int, replacement: bytes) -> bytes:
    """
    Replace the index-th whitespace-separated token, keeping separators.

    Args:
        data: Input bytes
        index: Token position (0-based)
        replacement: New token

    Returns:
        Bytes with one token replaced (unchanged when index is out of range)
    """
    spans = [m.span() for m in _TOKEN_RE.finditer(data)]
    if not 0 <= index < len(spans):
        return data
    start, end = spans[index]
    return data[:start] + replacement + data[end:]


def random_line(rng: random.Random) -> bytes:
    """A short line of random integers."""
    count = rng.randint(1, 8)
    return (" ".join(str(rng.randint(0, 100)) for _ in range(count)) + "\n").encode("ascii")


def _replacement_token(rng: random.Random, tokens: List[bytes], donors: List[bytes]) -> bytes:
    roll = rng.random()
    if roll < 0.4:
        return str(rng.choice(INTERESTING_VALUES)).encode("ascii")
    if roll < 0.7 or not (tokens or donors):
        return str(rng.randint(0, 10 ** rng.randint(1, 6))).encode("ascii")
    return rng.choice(tokens + donors)


def apply_op(op: MutationOp, data: bytes, rng: random.Random, add_seed: Optional[bytes] = None) -> bytes:
    """Apply one operation to non-empty data."""
    buf = bytearray(data)

    if op == MutationOp.BITFLIP:
        pos = rng.randrange(len(buf))
        buf[pos] ^= 1 << rng.randrange(8)
        return bytes(buf)

    if op == MutationOp.BYTE_OVERWRITE:
        pos = rng.randrange(len(buf))
        buf[pos] = rng.randrange(256)
        return bytes(buf)

    if op == MutationOp.CHUNK_DUPLICATE:
        start = rng.randrange(len(buf))
        end = rng.randint(start + 1, min(len(buf), start + 64))
        at = rng.randint(0, len(buf))
        return bytes(buf[:at] + buf[start:end] + buf[at:])

    if op == MutationOp.CHUNK_DELETE:
        if len(buf) < 2:
            return apply_op(MutationOp.BITFLIP, data, rng)
        start = rng.randrange(len(buf) - 1)
        end = rng.randint(start + 1, min(len(buf) - 1, start + 32) + 1)
        if end - start >= len(buf):
            end = len(buf) - 1
        return bytes(buf[:start] + buf[end:])

    # token splice
    tokens = _TOKEN_RE.findall(data)
    if not tokens:
        return apply_op(MutationOp.BYTE_OVERWRITE, data, rng)
    donors = _TOKEN_RE.findall(add_seed) if add_seed else []
    index = rng.randrange(len(tokens))
    return splice_token(data, index, _replacement_token(rng, tokens, donors))


def builtin_mutate(
    seed: bytes,
    rng_seed: int,
    max_size: int,
    add_seed: Optional[bytes] = None,
) -> bytes:
    """
    Mutate a seed with one randomly chosen operation.

    Args:
        seed: Input to mutate (empty seeds get a fresh random line)
        rng_seed: 64-bit seed for the operation's randomness
        max_size: Output size cap (> 0)

    Returns:
        Mutated bytes of at most max_size
    """
    if max_size <= 0:
        raise ValueError("max_size must be positive")

    rng = random.Random(rng_seed)
    if not seed:
        return random_line(rng)[:max_size]

    op = rng.choice(list(MutationOp))
    return apply_op(op, seed, rng, add_seed)[:max_size]
