"""Links, paths, and transfer timing under contention.

Transfers are store-and-forward per hop with FIFO next-free
bookkeeping: on each link the transfer starts at
max(arrival, link.next_free), occupies ceil(bytes / bw), then pays the
hop latency before arriving at the next hop.  A link's rated bandwidth
is its bidirectional total -- both directions book against one shared
pool, the same accounting that makes 32 port links add up to the
system's 1 TB/s aggregate -- while the byte and busy ledgers stay
per-direction for reporting.  Control messages (read requests) cost
only hop latency and never occupy link bandwidth; occupancy and the
byte ledger track data legs only.
"""

from __future__ import annotations

from .errors import SimulationIntegrityError
from .timebase import occupancy_ps

DIR_AB = 0  # endpoint_a -> endpoint_b (leaf -> switch; lower -> higher island)
DIR_BA = 1

ONCHIP = "onchip"
OFFCHIP = "offchip"


class Link:
    """One bidirectional link with a shared bandwidth pool."""

    __slots__ = ("link_id", "endpoint_a", "endpoint_b", "bw_bytes_per_sec",
                 "hop_latency_ps", "kind", "next_free", "bytes_dir",
                 "busy_ps_dir", "first_use_ps")

    def __init__(self, link_id: str, endpoint_a: str, endpoint_b: str,
                 bw_bytes_per_sec: int, hop_latency_ps: int,
                 kind: str) -> None:
        if bw_bytes_per_sec <= 0:
            raise SimulationIntegrityError(f"link {link_id}: bw must be > 0")
        self.link_id = link_id
        self.endpoint_a = endpoint_a
        self.endpoint_b = endpoint_b
        self.bw_bytes_per_sec = bw_bytes_per_sec
        self.hop_latency_ps = hop_latency_ps
        self.kind = kind
        self.next_free = 0
        self.bytes_dir = [0, 0]
        self.busy_ps_dir = [0, 0]
        self.first_use_ps = -1

    def __repr__(self) -> str:
        return f"Link({self.link_id})"


Hop = tuple[Link, int]
Path = tuple[Hop, ...]


def transfer(path: Path, nbytes: int, ready: int) -> int:
    """Move `nbytes` along `path`, booking occupancy; returns completion."""
    if nbytes < 1:
        raise SimulationIntegrityError("transfer needs at least 1 byte")
    arrival = ready
    for link, direction in path:
        start = arrival
        if link.next_free > start:
            start = link.next_free
        occ = occupancy_ps(nbytes, link.bw_bytes_per_sec)
        link.next_free = start + occ
        link.bytes_dir[direction] += nbytes
        link.busy_ps_dir[direction] += occ
        if link.first_use_ps < 0:
            link.first_use_ps = start
        arrival = start + occ + link.hop_latency_ps
    return arrival


def request_latency(path: Path) -> int:
    """Pure hop latency of a control message along `path` (no occupancy)."""
    return sum(link.hop_latency_ps for link, _ in path)


def reverse_path(path: Path) -> Path:
    return tuple((link, DIR_BA if d == DIR_AB else DIR_AB)
                 for link, d in reversed(path))


def path_hop_count(path: Path) -> int:
    return len(path)


def offchip_hops(path: Path) -> int:
    return sum(1 for link, _ in path if link.kind == OFFCHIP)


def route(topology, src: str, dst: str) -> Path:
    """Canonical path between two device identifiers.

    Accepted identifiers: ``G<g>.L2B<b>`` (an L2 bank), ``CPU``,
    ``DRAM<n>`` (a DRAM bank).  Paths always run requester-side to
    memory-side; use reverse_path() for the return leg.
    """
    dst_bank = _parse_bank(dst)
    if dst_bank is None:
        raise SimulationIntegrityError(f"route: {dst!r} is not a DRAM bank")
    if src == "CPU":
        return topology.path_cpu_to_bank(dst_bank)
    src_bank = _parse_bank(src)
    if src_bank is not None:
        return topology.path_bank_to_bank(src_bank, dst_bank)
    if src.startswith("G") and ".L2B" in src:
        gpu_text, _, bank_text = src[1:].partition(".L2B")
        return topology.path_l2_to_bank(int(gpu_text), int(bank_text),
                                        dst_bank)
    raise SimulationIntegrityError(f"route: unknown source device {src!r}")


def _parse_bank(name: str) -> int | None:
    if name.startswith("DRAM") and name[4:].isdigit():
        return int(name[4:])
    return None
