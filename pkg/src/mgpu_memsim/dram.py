"""Banked main-memory service model.

Each bank serializes its requests: service starts at
max(arrival, busy_until) and takes the fixed access latency plus a
bandwidth-proportional occupancy.  No row-buffer or refresh modeling;
throughput effects come from bank-level parallelism only.
"""

from __future__ import annotations

from .timebase import occupancy_ps


class DramBank:
    __slots__ = ("bank_id", "capacity_bytes", "access_latency_ps",
                 "bw_bytes_per_sec", "busy_until", "accesses", "bytes_served")

    def __init__(self, bank_id: int, capacity_bytes: int,
                 access_latency_ps: int, bw_bytes_per_sec: int) -> None:
        self.bank_id = bank_id
        self.capacity_bytes = capacity_bytes
        self.access_latency_ps = access_latency_ps
        self.bw_bytes_per_sec = bw_bytes_per_sec
        self.busy_until = 0
        self.accesses = 0
        self.bytes_served = 0

    def service(self, nbytes: int, arrival: int) -> int:
        """Serve one request; returns its completion time."""
        start = arrival if arrival > self.busy_until else self.busy_until
        completion = (start + self.access_latency_ps
                      + occupancy_ps(nbytes, self.bw_bytes_per_sec))
        self.busy_until = completion
        self.accesses += 1
        self.bytes_served += nbytes
        return completion
