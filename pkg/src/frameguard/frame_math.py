"""Power-of-two frame arithmetic.

A frame is a memory block of size 2**n that is aligned by its own size
(an "n-frame").  Every byte region [lo, hi] has a unique wrapper frame:
the smallest frame containing the whole region.  Its log-size falls out
of a single XOR and a leading-zero count, which is what lets per-object
metadata be located from a pointer without any search structure.

Addresses are plain ints restricted to a 48-bit space.  Arithmetic is
exact; out-of-range regions are rejected, never silently masked.
"""

from __future__ import annotations

from dataclasses import dataclass

ADDRESS_BITS = 48
ADDRESS_MASK = (1 << ADDRESS_BITS) - 1
MAX_FRAME_LOG = 63
SLOT_BITS = 15              # slots are 15-frames
SLOT_SIZE = 1 << SLOT_BITS


class RegionError(ValueError):
    """Malformed byte region (lo > hi, or outside the 48-bit space)."""


@dataclass(frozen=True)
class WrapperFrame:
    """Smallest size-aligned power-of-two block containing a region."""

    n: int        # log2 of the frame size, in [0, 63]
    base: int     # frame base address, aligned by 2**n

    @property
    def size(self) -> int:
        return 1 << self.n


def _check_region(lo: int, hi: int) -> None:
    if lo < 0 or hi > ADDRESS_MASK:
        raise RegionError(f"region [{lo:#x}, {hi:#x}] outside the 48-bit space")
    if lo > hi:
        raise RegionError(f"region lower bound {lo:#x} above upper bound {hi:#x}")


def wrapper_frame(lo: int, hi: int) -> WrapperFrame:
    """Wrapper frame of the inclusive byte region [lo, hi].

    The XOR of the bounds has its highest set bit at the first position
    where they differ, so the frame log-size is 64 minus the leading
    zero count of the XOR, i.e. its bit length.  A single-byte region
    (XOR of zero) gets a 0-frame.
    """
    _check_region(lo, hi)
    n = (lo ^ hi).bit_length()
    # hi < 2**48 bounds the XOR, so n never exceeds the address width
    assert n <= ADDRESS_BITS
    return WrapperFrame(n, lo & ~((1 << n) - 1))


def wrapper_frame_oracle(lo: int, hi: int) -> int:
    """Reference wrapper-frame log-size found by linear scan.

    Deliberately naive: the smallest n whose 2**n-sized buckets put lo
    and hi in the same bucket.  Exists to cross-check wrapper_frame and
    must stay independent of it.
    """
    _check_region(lo, hi)
    for n in range(MAX_FRAME_LOG + 1):
        if lo >> n == hi >> n:
            return n
    raise AssertionError("unreachable for regions inside the 48-bit space")


def slot_base(addr: int) -> int:
    """Base of the 2**15-byte slot containing addr (addr untagged)."""
    return addr & ~(SLOT_SIZE - 1)


def in_frame(p: int, q: int, n: int) -> bool:
    """True iff untagged addresses p and q lie in the same n-frame."""
    if not 0 <= n <= MAX_FRAME_LOG:
        raise ValueError(f"frame log {n} outside [0, {MAX_FRAME_LOG}]")
    return (p ^ q) >> n == 0
