"""Runtime verification of tagged-pointer accesses.

Every check resolves the header from the pointer's tag, reads the raw
object size, and classifies the outcome as a verdict.  Checks never
raise for bad accesses; a replay run keeps going and collects every
violation.  The bounds rule for an access of s bytes at untagged
address p with object base b and raw size z:

    p <  b            -> underflow (protects the header as well)
    p + s - 1 > b+z-1 -> overflow
    otherwise         -> ok

One-past-end pointers still resolve because the wrapper frame was
computed with fake padding, so the overflow is reported with the right
referent instead of being lost.

The arithmetic check is a pure bit test that two addresses share a
frame; it needs no metadata and tolerates pointers into the padding.
Pointers that leave the frame lose their referent, which is exactly
what it reports.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .arena import Arena
from .frame_math import SLOT_BITS, in_frame, slot_base
from .metadata import HEADER_SIZE, ArenaRangeError
from .tagging import MAX_BIG_TAG, MIN_BIG_TAG, TagError, decode, is_untagged, untag
from .verdicts import Verdict, VerdictKind


@dataclass(frozen=True)
class AccessRequest:
    """One pending dereference: pointer, width in bytes, direction."""

    tagged: int
    access_size: int
    is_store: bool = False

    def __post_init__(self) -> None:
        if self.access_size < 1:
            raise ValueError("access size must be at least 1")


@dataclass
class CheckCounters:
    access_checks: int = 0
    arith_checks: int = 0
    lookups_small: int = 0
    lookups_big: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "access_checks": self.access_checks,
            "arith_checks": self.arith_checks,
            "lookups_small": self.lookups_small,
            "lookups_big": self.lookups_big,
        }


class Checker:
    """Read-only verifier over an arena's metadata."""

    def __init__(self, arena: Arena):
        self.arena = arena
        self.counters = CheckCounters()

    # -- resolution ---------------------------------------------------

    def _resolve_header(self, tagged: int) -> tuple[int, Verdict | None, int]:
        """(header_addr, failing verdict, untagged address) for a tagged value."""
        flag, tag, addr = decode(tagged)
        if flag:
            self.counters.lookups_small += 1
            return slot_base(addr) + tag, None, addr
        if not MIN_BIG_TAG <= tag <= MAX_BIG_TAG:
            raise TagError(f"value {tagged:#x} carries no resolvable tag")
        self.counters.lookups_big += 1
        try:
            division, slot = self.arena.table.entry_index(addr, tag)
        except ArenaRangeError:
            return 0, Verdict(VerdictKind.OUT_OF_FRAME, address=addr), addr
        content = self.arena.table.get_entry(division, slot)
        if content == 0:
            # vacated (or never-filled) entry: released or phantom object
            return 0, Verdict(VerdictKind.USE_AFTER_FREE, address=addr), addr
        return content, None, addr

    # -- checks -------------------------------------------------------

    def check_access(self, req: AccessRequest) -> tuple[Verdict, int]:
        """Verify one load or store; returns (verdict, untagged address).

        Untracked plain addresses pass through unchecked.  The untagged
        address comes back either way so the caller can dereference it.
        """
        self.counters.access_checks += 1
        raw = req.tagged
        if is_untagged(raw):
            return Verdict(VerdictKind.UNTRACKED, address=raw,
                           access_size=req.access_size), raw
        header_addr, fail, addr = self._resolve_header(raw)
        if fail is not None:
            return replace(fail, access_size=req.access_size), addr
        header = self.arena.read_header(header_addr)
        if header is None:
            # the tag arithmetic landed on bytes that never held metadata
            return Verdict(VerdictKind.USE_AFTER_FREE, address=addr,
                           access_size=req.access_size), addr
        record = self.arena.record_at(header_addr)
        alloc_id = record.id if record is not None else None
        obj_base = header_addr + HEADER_SIZE
        if addr < obj_base:
            return Verdict(VerdictKind.UNDERFLOW, address=addr, alloc_id=alloc_id,
                           access_size=req.access_size), addr
        if addr + req.access_size - 1 > obj_base + header.size - 1:
            return Verdict(VerdictKind.OVERFLOW, address=addr, alloc_id=alloc_id,
                           access_size=req.access_size), addr
        return Verdict(VerdictKind.OK, address=addr, alloc_id=alloc_id,
                       access_size=req.access_size), addr

    def check_arith(self, old: int, new: int) -> Verdict:
        """Frame-escape test for a pointer arithmetic step.

        No metadata is touched: the new value is fine as long as it
        shares the old value's wrapper frame (the slot, for small-
        framed objects).  Pointers into the fake padding pass here and
        only fail if dereferenced.
        """
        self.counters.arith_checks += 1
        if is_untagged(old):
            return Verdict(VerdictKind.UNTRACKED, address=untag(new))
        flag, tag, old_addr = decode(old)
        if flag:
            n = SLOT_BITS
        elif MIN_BIG_TAG <= tag <= MAX_BIG_TAG:
            n = tag
        else:
            raise TagError(f"value {old:#x} carries no resolvable tag")
        new_addr = untag(new)
        if in_frame(old_addr, new_addr, n):
            return Verdict(VerdictKind.OK, address=new_addr)
        return Verdict(VerdictKind.OUT_OF_FRAME, address=new_addr)

    def check_memcpy(self, dst: int, src: int, n: int) -> Verdict:
        """Both operands of an n-byte copy, destination judged first."""
        if n < 0:
            raise ValueError("byte count must be non-negative")
        if n == 0:
            return Verdict(VerdictKind.OK, access_size=0)
        dst_v, _ = self.check_access(AccessRequest(dst, n, is_store=True))
        if dst_v.is_violation:
            return replace(dst_v, operand="dst")
        src_v, _ = self.check_access(AccessRequest(src, n))
        if src_v.is_violation:
            return replace(src_v, operand="src")
        if dst_v.kind is VerdictKind.UNTRACKED and src_v.kind is VerdictKind.UNTRACKED:
            return Verdict(VerdictKind.UNTRACKED, access_size=n)
        return Verdict(VerdictKind.OK, access_size=n)

    def check_memset(self, dst: int, n: int) -> Verdict:
        """Single-operand variant of the copy check (n-byte fill)."""
        if n < 0:
            raise ValueError("byte count must be non-negative")
        if n == 0:
            return Verdict(VerdictKind.OK, access_size=0)
        v, _ = self.check_access(AccessRequest(dst, n, is_store=True))
        return replace(v, operand="dst") if v.is_violation else v

    def check_strcpy(self, dst: int, src: int, src_strlen: int) -> Verdict:
        """String copy up to the terminator.

        Safe iff the destination can hold src_strlen bytes plus the
        terminator from the destination address onward.  The source is
        only untagged, never bounds-checked: copying stops at its
        terminator regardless of the source array's size.
        """
        if src_strlen < 0:
            raise ValueError("string length must be non-negative")
        untag(src)
        v, _ = self.check_access(AccessRequest(dst, src_strlen + 1, is_store=True))
        return replace(v, operand="dst") if v.is_violation else v

    def check_strncpy(self, dst: int, src: int, n: int) -> Verdict:
        """Bounded string copy: both arrays must hold at least n bytes,
        so metadata for both operands is retrieved."""
        if n < 0:
            raise ValueError("byte count must be non-negative")
        if n == 0:
            return Verdict(VerdictKind.OK, access_size=0)
        dst_v, _ = self.check_access(AccessRequest(dst, n, is_store=True))
        if dst_v.is_violation:
            return replace(dst_v, operand="dst")
        src_v, _ = self.check_access(AccessRequest(src, n))
        if src_v.is_violation:
            return replace(src_v, operand="src")
        if dst_v.kind is VerdictKind.UNTRACKED and src_v.kind is VerdictKind.UNTRACKED:
            return Verdict(VerdictKind.UNTRACKED, access_size=n)
        return Verdict(VerdictKind.OK, access_size=n)

    def check_free(self, tagged: int) -> Verdict:
        """Deallocation check and release, delegated to the arena."""
        return self.arena.free(tagged)
