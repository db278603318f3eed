"""Small shared helpers."""

from __future__ import annotations

import os


def thread_cap() -> int:
    """Width cap for parallel maps, from the COHADM_THREADS variable.

    0 or unset means auto (bounded by the CPU count); any positive value
    caps the width at that number. Parallel sections write disjoint
    slices, so results do not depend on the width.
    """
    raw = os.environ.get("COHADM_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value <= 0:
        return min(8, os.cpu_count() or 1)
    return value
