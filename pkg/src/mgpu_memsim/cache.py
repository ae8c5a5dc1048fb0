"""Set-associative cache and TLB models with LRU replacement.

The L1 data caches are write-through no-allocate: a write updates
recency on a hit, never inserts on a miss, and is always forwarded to
the next level, so no L1 line is ever dirty.  The L2 banks are
write-back: writes allocate (without a fill fetch) and mark the line
dirty; evicting a dirty line surfaces it to the caller so the engine
can charge the writeback traffic.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError


class WritePolicy(Enum):
    WRITE_THROUGH_NO_ALLOCATE = "wt_noalloc"
    WRITE_BACK = "writeback"


@dataclass(frozen=True)
class CacheGeometry:
    capacity_bytes: int
    associativity: int
    line_bytes: int
    write_policy: WritePolicy

    @property
    def num_sets(self) -> int:
        return self.capacity_bytes // (self.associativity * self.line_bytes)

    def check(self) -> "CacheGeometry":
        if self.capacity_bytes % (self.associativity * self.line_bytes):
            raise ConfigError("cache capacity not divisible by assoc * line")
        sets = self.num_sets
        if sets < 1 or sets & (sets - 1):
            raise ConfigError("cache set count must be a power of two")
        return self


@dataclass(frozen=True)
class TlbGeometry:
    sets: int
    ways: int

    def check(self) -> "TlbGeometry":
        if self.sets < 1 or self.sets & (self.sets - 1):
            raise ConfigError("TLB set count must be a power of two")
        if self.ways < 1:
            raise ConfigError("TLB ways must be >= 1")
        return self


@dataclass(slots=True)
class AccessResult:
    hit: bool
    evicted_line_addr: int | None = None
    evicted_dirty: bool = False


class SetAssocCache:
    """LRU cache state: per set, an OrderedDict tag -> dirty flag,
    least recently used first."""

    def __init__(self, geometry: CacheGeometry) -> None:
        self.geometry = geometry.check()
        self._sets: list[OrderedDict[int, bool]] = [
            OrderedDict() for _ in range(geometry.num_sets)]

    def access(self, paddr: int, is_write: bool) -> AccessResult:
        geo = self.geometry
        line = paddr // geo.line_bytes
        ways = self._sets[line % geo.num_sets]
        tag = line // geo.num_sets

        if tag in ways:
            ways.move_to_end(tag)
            if is_write and geo.write_policy is WritePolicy.WRITE_BACK:
                ways[tag] = True
            return AccessResult(hit=True)

        if is_write and geo.write_policy is WritePolicy.WRITE_THROUGH_NO_ALLOCATE:
            return AccessResult(hit=False)  # no allocate; forwarded by caller

        evicted_addr = None
        evicted_dirty = False
        if len(ways) >= geo.associativity:
            old_tag, old_dirty = ways.popitem(last=False)
            evicted_line = old_tag * geo.num_sets + (line % geo.num_sets)
            evicted_addr = evicted_line * geo.line_bytes
            evicted_dirty = old_dirty
        ways[tag] = bool(
            is_write and geo.write_policy is WritePolicy.WRITE_BACK)
        return AccessResult(False, evicted_addr, evicted_dirty)


class Tlb:
    """LRU translation cache keyed by virtual page number."""

    def __init__(self, geometry: TlbGeometry) -> None:
        self.geometry = geometry.check()
        self._sets: list[OrderedDict[int, None]] = [
            OrderedDict() for _ in range(geometry.sets)]

    def access(self, vpn: int) -> bool:
        """Touch `vpn`; True on hit.  Misses insert (evicting LRU)."""
        ways = self._sets[vpn % self.geometry.sets]
        if vpn in ways:
            ways.move_to_end(vpn)
            return True
        if len(ways) >= self.geometry.ways:
            ways.popitem(last=False)
        ways[vpn] = None
        return False

    def invalidate(self, vpn: int) -> None:
        ways = self._sets[vpn % self.geometry.sets]
        ways.pop(vpn, None)
