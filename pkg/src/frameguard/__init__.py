"""Frame-tagged pointer runtime for memory-safety checking.

The library models a 48-bit arena whose allocator places a 16-byte
metadata header directly below every object, computes the object's
power-of-two wrapper frame, and encodes the header's location in the
otherwise unused top 16 bits of the pointer: a slot offset for small
frames, the frame's log-size for big ones, resolved through a compact
per-division entry table.  Runtime checks untag pointers, fetch the
header, and classify each access, copy, or free as in-bounds or as a
specific violation.  A trace-replay harness and CLI drive the stack on
synthetic workloads with known fault manifests.
"""

from .frame_math import (
    ADDRESS_BITS,
    ADDRESS_MASK,
    MAX_FRAME_LOG,
    SLOT_BITS,
    SLOT_SIZE,
    RegionError,
    WrapperFrame,
    in_frame,
    slot_base,
    wrapper_frame,
    wrapper_frame_oracle,
)
from .tagging import (
    FLAG_BIT,
    MAX_BIG_TAG,
    MIN_BIG_TAG,
    TAG_MASK,
    TAG_SHIFT,
    DecodedPointer,
    TagError,
    decode,
    encode_big,
    encode_small,
    is_untagged,
    rebase,
    untag,
)
from .verdicts import Verdict, VerdictKind
from .metadata import (
    DIVISION_BITS,
    DIVISION_SIZE,
    ENTRIES_PER_DIVISION,
    HEADER_SIZE,
    ArenaRangeError,
    DivisionTable,
    EntryConflictError,
    Header,
)
from .arena import (
    BIG,
    DEFAULT_ARENA_BASE,
    DEFAULT_ARENA_SIZE,
    SMALL,
    AllocationRecord,
    Arena,
    ArenaExhausted,
    ArenaStats,
)
from .checker import AccessRequest, CheckCounters, Checker
from .harness import (
    EngineConfig,
    RunReport,
    TraceEvent,
    TraceRuntimeError,
    TraceSyntaxError,
    WorkloadParams,
    emit_report,
    format_trace,
    gen_workload,
    parse_trace,
    run_trace,
)

__version__ = "0.1.0"
