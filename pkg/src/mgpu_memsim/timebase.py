"""Integer-picosecond time base shared by every component model.

All simulated time is kept in integer picoseconds so that bandwidth
arithmetic is exact and runs are bit-reproducible.  Bandwidth-to-time
conversions round up: a transfer never finishes earlier than the
byte count divided by the link rate.
"""

PS_PER_NS = 1_000
PS_PER_US = 1_000_000
PS_PER_SEC = 1_000_000_000_000


def ns(value: float) -> int:
    """Nanoseconds -> picoseconds."""
    return round(value * PS_PER_NS)


def occupancy_ps(nbytes: int, bw_bytes_per_sec: int) -> int:
    """Ceiling time to push `nbytes` through a `bw_bytes_per_sec` resource."""
    if nbytes < 0:
        raise ValueError("negative byte count")
    return -(-nbytes * PS_PER_SEC // bw_bytes_per_sec)
