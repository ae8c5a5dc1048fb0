"""Virtual-to-physical page mapping under three placement policies.

Policy is fixed by the memory organization:

* shared mode      -> interleaved round-robin: a global placement counter
  assigns consecutive new pages to neighboring DRAM banks;
* per-GPU (rdma)   -> owner-local: pages land in the first toucher's own
  bank island, round-robin among its banks;
* unified (um)     -> first touch: like owner-local, plus an owner field
  that fault handling updates when migrating the page.

The table is pure bookkeeping: it never schedules events or charges
time.  The engine turns the returned outcomes (new placement, remote
owner, migration job) into latencies and transfers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .config import CPU_ISLAND, MODE_RDMA, MODE_TSM, MODE_UM, SystemConfig
from .errors import SimOutOfMemoryError, SimulationIntegrityError


class PlacementPolicy(Enum):
    INTERLEAVED_RR = "interleaved_rr"
    LOCAL_OWNER = "local_owner"
    FIRST_TOUCH = "first_touch"


POLICY_FOR_MODE = {
    MODE_TSM: PlacementPolicy.INTERLEAVED_RR,
    MODE_RDMA: PlacementPolicy.LOCAL_OWNER,
    MODE_UM: PlacementPolicy.FIRST_TOUCH,
}


@dataclass(slots=True)
class PageTableEntry:
    vpn: int
    ppn: int
    home_bank: int
    owner: int | None  # island index; meaningful in um mode only
    placement_time: int
    migration_count: int = 0
    # Islands that already paid the one-time remote-mapping cost (rdma)
    remote_mapped_by: set[int] = field(default_factory=set)


@dataclass(slots=True)
class TranslateResult:
    entry: PageTableEntry
    newly_placed: bool
    remote: bool  # resolved bank lies outside the requester's island


@dataclass(frozen=True)
class MigrationJob:
    """One page worth of data to move over the off-chip path."""
    vpn: int
    src_bank: int
    dst_bank: int
    nbytes: int


class _FramePool:
    """Per-bank physical frame allocator: fresh counter + LIFO free list."""

    __slots__ = ("bank", "capacity", "next_fresh", "free_slots")

    def __init__(self, bank: int, capacity: int) -> None:
        self.bank = bank
        self.capacity = capacity
        self.next_fresh = 0
        self.free_slots: list[int] = []

    @property
    def available(self) -> int:
        return self.capacity - self.next_fresh + len(self.free_slots)

    def alloc(self) -> int:
        if self.free_slots:
            return self.free_slots.pop()
        if self.next_fresh >= self.capacity:
            raise SimOutOfMemoryError(f"bank {self.bank} has no free frame")
        slot = self.next_fresh
        self.next_fresh += 1
        return slot

    def free(self, slot: int) -> None:
        self.free_slots.append(slot)


class PageTable:
    def __init__(self, cfg: SystemConfig,
                 banks_by_island: dict[int, list[int]]) -> None:
        if not cfg.validated:
            raise SimulationIntegrityError("config must be validated first")
        self.cfg = cfg
        self.mode = cfg.mode
        self.policy = POLICY_FOR_MODE[cfg.mode]
        self.page_size = cfg.page_size_bytes
        self.banks_by_island = banks_by_island
        self.all_banks: list[int] = sorted(
            b for banks in banks_by_island.values() for b in banks)
        self.total_banks = len(self.all_banks)
        self.frames_per_bank = cfg.frames_per_bank
        self._pools = {b: _FramePool(b, cfg.frames_per_bank)
                       for b in self.all_banks}
        self.entries: dict[int, PageTableEntry] = {}
        self._global_rr = 0
        self._island_rr = {island: 0 for island in banks_by_island}
        self.placements = 0
        self.migrations = 0

    # -- lookups -----------------------------------------------------

    def bank_island(self, bank: int) -> int | None:
        """Owning island of a bank; None in shared mode (no islands)."""
        if self.mode == MODE_TSM:
            return None
        gpu_banks = self.cfg.gpu_dram_banks_total
        if bank < gpu_banks:
            return bank // self.cfg.dram_banks_per_gpu_share
        return CPU_ISLAND

    def is_remote(self, entry: PageTableEntry, requester_island: int) -> bool:
        if self.mode == MODE_TSM:
            return False
        if self.mode == MODE_UM:
            return entry.owner != requester_island
        return self.bank_island(entry.home_bank) != requester_island

    def translate(self, vaddr: int, requester_island: int,
                  now: int) -> TranslateResult:
        """Resolve a virtual byte address to its page entry.

        An unmapped page is placed on the spot (the fault-service
        outcome); the caller charges whatever that costs in its mode.
        """
        vpn = vaddr // self.page_size
        entry = self.entries.get(vpn)
        if entry is not None:
            return TranslateResult(entry, False,
                                   self.is_remote(entry, requester_island))
        entry = self.place_page(vpn, requester_island, now)
        return TranslateResult(entry, True,
                               self.is_remote(entry, requester_island))

    def locate(self, entry: PageTableEntry, vaddr: int) -> tuple[int, int]:
        """(bank, byte offset within bank) for a mapped address."""
        offset_in_page = vaddr % self.page_size
        slot = entry.ppn % self.frames_per_bank
        return entry.home_bank, slot * self.page_size + offset_in_page

    def paddr(self, entry: PageTableEntry, vaddr: int) -> int:
        return entry.ppn * self.page_size + vaddr % self.page_size

    # -- placement ---------------------------------------------------

    def place_page(self, vpn: int, requester_island: int,
                   now: int) -> PageTableEntry:
        if vpn in self.entries:
            raise SimulationIntegrityError(f"vpn {vpn} already mapped")
        if self.policy is PlacementPolicy.INTERLEAVED_RR:
            bank = self._pick_rr_bank(self.all_banks)
            owner = None
        else:
            island = requester_island
            bank = self._pick_island_bank(island)
            owner = island if self.policy is PlacementPolicy.FIRST_TOUCH else None
        entry = PageTableEntry(
            vpn=vpn, ppn=self._alloc_frame(bank), home_bank=bank,
            owner=owner, placement_time=now)
        self.entries[vpn] = entry
        self.placements += 1
        return entry

    def _pick_rr_bank(self, banks: list[int]) -> int:
        k = self._global_rr
        self._global_rr += 1
        n = len(banks)
        for probe in range(n):  # skip full banks; desk scale never loops
            bank = banks[(k + probe) % n]
            if self._pools[bank].available > 0:
                return bank
        raise SimOutOfMemoryError("all banks full")

    def _pick_island_bank(self, island: int) -> int:
        banks = self.banks_by_island.get(island)
        if not banks:
            raise SimulationIntegrityError(f"island {island} has no banks")
        k = self._island_rr[island]
        self._island_rr[island] = k + 1
        n = len(banks)
        for probe in range(n):
            bank = banks[(k + probe) % n]
            if self._pools[bank].available > 0:
                return bank
        raise SimOutOfMemoryError(f"island {island} banks full")

    def _alloc_frame(self, bank: int) -> int:
        slot = self._pools[bank].alloc()
        return bank * self.frames_per_bank + slot

    # -- migration (um) ----------------------------------------------

    def migrate_page(self, vpn: int, new_owner: int, now: int) -> MigrationJob:
        """Move a page's frame into `new_owner`'s island.

        Returns the transfer job for the engine to execute; the mapping
        is updated immediately (the engine orders the time cost).
        """
        if self.mode != MODE_UM:
            raise SimulationIntegrityError(
                "migrate_page is only legal in um mode")
        entry = self.entries.get(vpn)
        if entry is None:
            raise SimulationIntegrityError(f"migrating unmapped vpn {vpn}")
        if entry.owner == new_owner:
            raise SimulationIntegrityError(
                f"vpn {vpn} already owned by island {new_owner}")
        src_bank = entry.home_bank
        dst_bank = self._pick_island_bank(new_owner)
        old_slot = entry.ppn % self.frames_per_bank
        entry.ppn = self._alloc_frame(dst_bank)
        self._pools[src_bank].free(old_slot)
        entry.home_bank = dst_bank
        entry.owner = new_owner
        entry.migration_count += 1
        entry.placement_time = now
        self.migrations += 1
        return MigrationJob(vpn=vpn, src_bank=src_bank, dst_bank=dst_bank,
                            nbytes=self.page_size)

    # -- pre-placement directives -------------------------------------

    def pre_place(self, vaddr: int, nbytes: int, island: int,
                  now: int = 0) -> int:
        """Pre-touch a byte range into an island's memory (workload
        placement directive).  In shared mode the island is ignored and
        pages follow the round-robin policy.  Already-mapped pages are
        left alone.  Returns the number of pages placed."""
        first = vaddr // self.page_size
        last = (vaddr + nbytes - 1) // self.page_size
        placed = 0
        for vpn in range(first, last + 1):
            if vpn in self.entries:
                continue
            if self.policy is PlacementPolicy.INTERLEAVED_RR:
                self.place_page(vpn, island, now)
            else:
                bank = self._pick_island_bank(island)
                owner = (island if self.policy is PlacementPolicy.FIRST_TOUCH
                         else None)
                self.entries[vpn] = PageTableEntry(
                    vpn=vpn, ppn=self._alloc_frame(bank), home_bank=bank,
                    owner=owner, placement_time=now)
                self.placements += 1
            placed += 1
        return placed
