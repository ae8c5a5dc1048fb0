"""Runs one (config, workload) pair to completion and collects statistics.

Request model
-------------
Each issuing device (a CU or the CPU) keeps one request outstanding:
its next trace record issues when the previous one completes, its
explicit dependency (if any) has completed, and no earlier global
barrier is still pending.  A record at or below cache-line size walks
the cache hierarchy; larger records are treated as streaming bulk
traffic, split at page boundaries, and bypass the caches (they still
pay translation and traverse the same links and banks).  All resource
bookings happen in event order, so runs are bit-reproducible.

Mode-specific behavior on a remote-resolving access:

* tsm   -- cannot happen; every bank is shared.
* rdma  -- the access crosses the off-chip link; the first touch of a
  page by a non-home island additionally pays the one-time
  remote-mapping overhead, serialized per island (models the runtime's
  per-page peer-mapping work; this is the fixed remote-access cost that
  larger transfers amortize).
* um    -- the access takes a page fault: fault-service overhead
  (serialized per island) plus a whole-page migration over the
  off-chip path, after which the access proceeds locally.  With
  `um_remote_direct_map` the fault is instead served by remote access,
  rdma-style, without migration.

Caching of remote data (rdma): read lines are cached in the
requester's L1 only; writes to remote lines are forwarded uncached to
the home bank.  Local lines use L1 (write-through, no-allocate) and
the address-sliced write-back L2 banks.
"""

from __future__ import annotations

import hashlib
import json

from .cache import (CacheGeometry, SetAssocCache, Tlb, TlbGeometry,
                    WritePolicy)
from .config import (CPU_ISLAND, KIB, MODE_RDMA, MODE_TSM, MODE_UM,
                     SystemConfig)
from .dram import DramBank
from .errors import SimulationIntegrityError, TraceFormatError
from .events import Event, EventQueue, run_to_completion
from .interconnect import (ONCHIP, request_latency, reverse_path, transfer)
from .paging import PageTable
from .report import Comparison, StatsReport, mean_speedups
from .timebase import ns
from .topology import Topology, build_topology
from .workloads import OP_BARRIER, OP_COPY, OP_WRITE, Workload

COUNTER_KEYS = (
    "records_processed", "bytes_requested",
    "l1_hits", "l1_misses", "l2_hits", "l2_misses",
    "tlb_misses", "dram_accesses", "dram_writebacks",
    "remote_accesses", "remote_map_events",
    "page_faults", "migrations", "explicit_copy_bytes",
)


class Simulation:
    def __init__(self, cfg: SystemConfig, workload: Workload) -> None:
        if not cfg.validated:
            raise SimulationIntegrityError("config must be validated first")
        self.cfg = cfg
        self.workload = workload
        self.topo: Topology = build_topology(cfg)
        self.page_table = PageTable(cfg, self.topo.banks_by_island)
        self.queue = EventQueue()

        self.banks = {
            bank_id: DramBank(bank_id, cfg.dram_bank_bytes,
                              ns(cfg.dram_access_ns),
                              cfg.dram_bank_bw_bytes)
            for bank_id in self.topo.bank_links
        }

        self._l1_geo = CacheGeometry(
            cfg.l1_vector_kb * KIB, cfg.l1_assoc, cfg.cacheline_bytes,
            WritePolicy.WRITE_THROUGH_NO_ALLOCATE)
        self._l2_geo = CacheGeometry(
            cfg.l2_bank_kb * KIB, cfg.l2_assoc, cfg.cacheline_bytes,
            WritePolicy.WRITE_BACK)
        self._l1_tlb_geo = TlbGeometry(cfg.l1_tlb_sets, cfg.l1_tlb_ways)
        self._l2_tlb_geo = TlbGeometry(cfg.l2_tlb_sets, cfg.l2_tlb_ways)
        self._l1: dict[tuple[int, int], SetAssocCache] = {}
        self._l2: dict[tuple[int, int], SetAssocCache] = {}
        self._l1_tlb: dict[tuple[int, int], Tlb] = {}
        self._l2_tlb: dict[int, Tlb] = {}

        # latency table in ps
        self._l1_hit = ns(cfg.l1_hit_ns)
        self._l2_hit = ns(cfg.l2_hit_ns)
        self._tlb_walk = ns(cfg.tlb_miss_ns)
        self._um_fault = ns(cfg.um_fault_overhead_ns)
        self._remote_map = ns(cfg.remote_map_overhead_ns)
        self._compute = ns(cfg.compute_ns_per_record)

        # per-island serialized services
        self._map_free: dict[int, int] = {}
        self._fault_free: dict[int, int] = {}

        self.counters = {key: 0 for key in COUNTER_KEYS}
        self.snapshots: list[dict] = []

        # record driving state
        self.records = workload.records
        self._check_workload_fits()
        self.completed: list[int | None] = [None] * len(self.records)
        self._issued: list[bool] = [False] * len(self.records)
        self._device_queue: dict[str, list[int]] = {}
        self._device_pos: dict[str, int] = {}
        self._device_busy: dict[str, bool] = {}
        self._dep_waiters: dict[int, list[int]] = {}
        self._barriers: list[int] = []
        for idx, rec in enumerate(self.records):
            if rec.op == OP_BARRIER:
                self._barriers.append(idx)
            else:
                self._device_queue.setdefault(rec.device, []).append(idx)
        for device in self._device_queue:
            self._device_pos[device] = 0
            self._device_busy[device] = False
        self._barrier_ptr = 0
        self._window_remaining = self._count_window()
        self._handlers = {device: self._on_device_event
                          for device in self._device_queue}
        self._handlers["ALL"] = self._on_device_event

    def _check_workload_fits(self) -> None:
        cfg = self.cfg
        seen: set[str] = set()
        for rec in self.records:
            if rec.device in seen or rec.device == "ALL":
                continue
            seen.add(rec.device)
            island, cu = self._parse_device(rec.device)
            if island != CPU_ISLAND and (island >= cfg.num_gpus
                                         or cu >= cfg.cus_per_gpu):
                raise TraceFormatError(
                    f"record device {rec.device} does not exist in a "
                    f"{cfg.num_gpus}-GPU, {cfg.cus_per_gpu}-CU system")
        for p in self.workload.placements:
            if p.island != CPU_ISLAND and p.island >= cfg.num_gpus:
                raise TraceFormatError(
                    f"placement island G{p.island} does not exist")
            if p.island == CPU_ISLAND and cfg.mode != MODE_TSM \
                    and CPU_ISLAND not in self.topo.banks_by_island:
                raise TraceFormatError("no CPU island in this topology")

    # -- component lookup (lazy, deterministic creation order) --------

    def _l1_cache(self, island: int, cu: int) -> SetAssocCache:
        key = (island, cu)
        cache = self._l1.get(key)
        if cache is None:
            cache = self._l1[key] = SetAssocCache(self._l1_geo)
        return cache

    def _l2_cache(self, island: int, l2_slice: int) -> SetAssocCache:
        key = (island, l2_slice)
        cache = self._l2.get(key)
        if cache is None:
            cache = self._l2[key] = SetAssocCache(self._l2_geo)
        return cache

    def _l1_tlb_for(self, island: int, cu: int) -> Tlb:
        key = (island, cu)
        tlb = self._l1_tlb.get(key)
        if tlb is None:
            geo = (self._l2_tlb_geo if island == CPU_ISLAND
                   else self._l1_tlb_geo)  # CPU has a single, larger TLB
            tlb = self._l1_tlb[key] = Tlb(geo)
        return tlb

    def _l2_tlb_for(self, island: int) -> Tlb:
        tlb = self._l2_tlb.get(island)
        if tlb is None:
            tlb = self._l2_tlb[island] = Tlb(self._l2_tlb_geo)
        return tlb

    # -- record driving ------------------------------------------------

    def _count_window(self) -> int:
        end = (self._barriers[self._barrier_ptr]
               if self._barrier_ptr < len(self._barriers)
               else len(self.records))
        start = (self._barriers[self._barrier_ptr - 1] + 1
                 if self._barrier_ptr > 0 else 0)
        return sum(1 for i in range(start, end)
                   if self.records[i].op != OP_BARRIER)

    def _window_end(self) -> int:
        if self._barrier_ptr < len(self._barriers):
            return self._barriers[self._barrier_ptr]
        return len(self.records)

    def _try_issue(self, device: str, now: int) -> None:
        if self._device_busy[device]:
            return
        queue = self._device_queue[device]
        pos = self._device_pos[device]
        if pos >= len(queue):
            return
        idx = queue[pos]
        if idx > self._window_end():
            return  # blocked behind an unreleased barrier
        rec = self.records[idx]
        if rec.dep is not None and self.completed[rec.dep] is None:
            self._dep_waiters.setdefault(rec.dep, []).append(idx)
            return
        self._device_pos[device] = pos + 1
        self._device_busy[device] = True
        self._issued[idx] = True
        self.queue.schedule(Event(now, device, "issue", idx))

    def _on_device_event(self, event: Event) -> None:
        idx = event.payload
        if event.kind == "issue":
            done = self._process_record(idx, event.time)
            self.queue.schedule(
                Event(done, self.records[idx].device, "complete", idx))
        elif event.kind == "complete":
            self._complete(idx, event.time)
        else:
            raise SimulationIntegrityError(f"unknown event kind {event.kind}")

    def _complete(self, idx: int, now: int) -> None:
        rec = self.records[idx]
        self.completed[idx] = now
        self.counters["records_processed"] += 1
        self._device_busy[rec.device] = False
        self._window_remaining -= 1
        if self._window_remaining == 0 and self._barrier_ptr < len(
                self._barriers):
            self._release_barrier(now)
        else:
            self._try_issue(rec.device, now)
        for waiter in self._dep_waiters.pop(idx, ()):  # re-check dependents
            self._try_issue(self.records[waiter].device, now)

    def _release_barrier(self, now: int) -> None:
        barrier_idx = self._barriers[self._barrier_ptr]
        self.completed[barrier_idx] = now
        self._barrier_ptr += 1
        self._window_remaining = self._count_window()
        self._snapshot(barrier_idx, now)
        for device in self._device_queue:
            self._try_issue(device, now)
        if self._window_remaining == 0 and self._barrier_ptr < len(
                self._barriers):
            self._release_barrier(now)  # empty phase between barriers

    def _snapshot(self, record_index: int, now: int) -> None:
        snap = {
            "record_index": record_index,
            "time_ps": now,
            "bytes_on_offchip_links": self._link_bytes("offchip"),
            "bytes_on_switch_links": self._link_bytes(ONCHIP),
            "explicit_copy_bytes": self.counters["explicit_copy_bytes"],
            "dram_accesses": self.counters["dram_accesses"],
            "remote_accesses": self.counters["remote_accesses"],
        }
        self.snapshots.append(snap)

    def _link_bytes(self, kind: str) -> int:
        return sum(link.bytes_dir[0] + link.bytes_dir[1]
                   for link in self.topo.links.values() if link.kind == kind)

    # -- access processing ----------------------------------------------

    @staticmethod
    def _parse_device(device: str) -> tuple[int, int]:
        if device == "CPU":
            return CPU_ISLAND, 0
        gpu_text, _, cu_text = device[1:].partition(".C")
        return int(gpu_text), int(cu_text)

    def _process_record(self, idx: int, now: int) -> int:
        rec = self.records[idx]
        if rec.op == OP_COPY:
            self.counters["explicit_copy_bytes"] += rec.size
            return now
        island, cu = self._parse_device(rec.device)
        t = now + self._compute
        is_write = rec.op == OP_WRITE
        self.counters["bytes_requested"] += rec.size

        if rec.size <= self.cfg.cacheline_bytes:
            return self._access_cached(island, cu, rec.vaddr, rec.size,
                                       is_write, t)
        done = t
        addr, remaining = rec.vaddr, rec.size
        page = self.cfg.page_size_bytes
        while remaining:
            span = min(remaining, page - addr % page)
            c = self._access_bulk(island, cu, addr, span, is_write, t)
            if c > done:
                done = c
            addr += span
            remaining -= span
        return done

    def _translate(self, island: int, cu: int, vaddr: int,
                   t: int) -> tuple:
        """Translation plus all paging-side time: TLB walk, um fault
        service with migration, rdma first-touch remote mapping.
        Returns (entry, time, still_remote)."""
        result = self.page_table.translate(vaddr, island, t)
        if result.newly_placed:
            self.counters["page_faults"] += 1
        vpn = vaddr // self.cfg.page_size_bytes
        if not self._l1_tlb_for(island, cu).access(vpn):
            if not self._l2_tlb_for(island).access(vpn):
                self.counters["tlb_misses"] += 1
                t += self._tlb_walk
        entry = result.entry
        remote = result.remote
        if not remote:
            return entry, t, False

        self.counters["remote_accesses"] += 1
        mode = self.cfg.mode
        if mode == MODE_UM and not self.cfg.um_remote_direct_map:
            self.counters["page_faults"] += 1
            free = self._fault_free.get(island, 0)
            start = t if t > free else free
            service_done = start + self._um_fault
            job = self.page_table.migrate_page(vpn, island, service_done)
            path = self.topo.path_bank_to_bank(job.src_bank, job.dst_bank)
            migrated = transfer(path, job.nbytes, service_done)
            self._fault_free[island] = migrated
            self.counters["migrations"] += 1
            return entry, migrated, False
        if mode == MODE_RDMA and island not in entry.remote_mapped_by:
            free = self._map_free.get(island, 0)
            start = t if t > free else free
            t = start + self._remote_map
            self._map_free[island] = t
            entry.remote_mapped_by.add(island)
            self.counters["remote_map_events"] += 1
        return entry, t, True

    def _route_from(self, island: int, l2_slice: int, bank: int):
        if island == CPU_ISLAND:
            return self.topo.path_cpu_to_bank(bank)
        return self.topo.path_l2_to_bank(island, l2_slice, bank)

    def _access_cached(self, island: int, cu: int, vaddr: int, size: int,
                       is_write: bool, t: int) -> int:
        entry, t, remote = self._translate(island, cu, vaddr, t)
        paddr = self.page_table.paddr(entry, vaddr)
        line = self.cfg.cacheline_bytes
        l2_slice = (paddr // line) % self.cfg.l2_banks_per_gpu
        res = self._l1_cache(island, cu).access(paddr, is_write)
        t += self._l1_hit
        c = self.counters

        if not is_write:
            if res.hit:
                c["l1_hits"] += 1
                return t
            c["l1_misses"] += 1
            if remote or island == CPU_ISLAND:
                # no L2 on this path: remote data caches in L1 only;
                # the CPU has a single cache level
                return self._mem_read(island, l2_slice, entry.home_bank,
                                      line, t)
            l2res = self._l2_cache(island, l2_slice).access(paddr, False)
            t += self._l2_hit
            if l2res.hit:
                c["l2_hits"] += 1
                return t
            c["l2_misses"] += 1
            if l2res.evicted_dirty:
                self._writeback(island, l2res.evicted_line_addr, t)
            return self._mem_read(island, l2_slice, entry.home_bank, line, t)

        # write: through L1 (never allocates), completes at L2 for local
        # lines, at the home bank for remote/CPU traffic
        if res.hit:
            c["l1_hits"] += 1
        else:
            c["l1_misses"] += 1
        if remote or island == CPU_ISLAND:
            return self._mem_write(island, l2_slice, entry.home_bank,
                                   size, t)
        l2res = self._l2_cache(island, l2_slice).access(paddr, True)
        t += self._l2_hit
        if l2res.hit:
            c["l2_hits"] += 1
        else:
            c["l2_misses"] += 1
            if l2res.evicted_dirty:
                self._writeback(island, l2res.evicted_line_addr, t)
        return t

    def _access_bulk(self, island: int, cu: int, vaddr: int, nbytes: int,
                     is_write: bool, t: int) -> int:
        entry, t, _remote = self._translate(island, cu, vaddr, t)
        # bulk streams stripe page-by-page across the L2 port links
        l2_slice = (vaddr // self.cfg.page_size_bytes
                    ) % self.cfg.l2_banks_per_gpu
        if is_write:
            return self._mem_write(island, l2_slice, entry.home_bank,
                                   nbytes, t)
        return self._mem_read(island, l2_slice, entry.home_bank, nbytes, t)

    def _mem_read(self, island: int, l2_slice: int, bank_id: int,
                  nbytes: int, t: int) -> int:
        path = self._route_from(island, l2_slice, bank_id)
        arrive = t + request_latency(path)
        bank_done = self.banks[bank_id].service(nbytes, arrive)
        self.counters["dram_accesses"] += 1
        return transfer(reverse_path(path), nbytes, bank_done)

    def _mem_write(self, island: int, l2_slice: int, bank_id: int,
                   nbytes: int, t: int) -> int:
        path = self._route_from(island, l2_slice, bank_id)
        arrive = transfer(path, nbytes, t)
        self.counters["dram_accesses"] += 1
        return self.banks[bank_id].service(nbytes, arrive)

    def _writeback(self, island: int, line_addr: int, t: int) -> None:
        """Evicted dirty L2 line drains to its home bank, fire-and-forget."""
        bank_id = (line_addr // self.cfg.page_size_bytes
                   ) // self.cfg.frames_per_bank
        line = self.cfg.cacheline_bytes
        l2_slice = (line_addr // line) % self.cfg.l2_banks_per_gpu
        path = self._route_from(island, l2_slice, bank_id)
        arrive = transfer(path, line, t)
        self.banks[bank_id].service(line, arrive)
        self.counters["dram_accesses"] += 1
        self.counters["dram_writebacks"] += 1

    # -- top level -------------------------------------------------------

    def run(self) -> StatsReport:
        for placement in self.workload.placements:
            self.page_table.pre_place(placement.vaddr, placement.nbytes,
                                      placement.island)
        for device in self._device_queue:
            self._try_issue(device, 0)
        if self._window_remaining == 0 and self._barrier_ptr < len(
                self._barriers):
            self._release_barrier(0)  # leading barrier with no traffic
        makespan = run_to_completion(self.queue, self._handlers)
        if self.queue.scheduled_count != self.queue.popped_count:
            raise SimulationIntegrityError("event conservation violated")
        not_done = sum(1 for c in self.completed if c is None)
        if not_done:
            raise SimulationIntegrityError(
                f"{not_done} records never completed (dependency deadlock?)")
        if self.cfg.mode == MODE_TSM:
            if self.counters["remote_accesses"] or self._link_bytes("offchip"):
                raise SimulationIntegrityError(
                    "remote traffic observed in shared-memory mode")
        return self._build_report(makespan)

    def _build_report(self, makespan: int) -> StatsReport:
        cfg = self.cfg
        l2_link_bytes = sum(
            link.bytes_dir[0] + link.bytes_dir[1]
            for link in self.topo.l2_links.values())
        derived = {
            "total_mm_bytes": cfg.total_mm_bytes,
            "total_capacity_bytes": cfg.total_capacity_bytes,
            "aggregate_l2_mm_bw_bytes_per_sec": cfg.aggregate_l2_mm_bw,
            "switch_ports": cfg.switch_ports,
            "record_count": len(self.records),
            "request_bytes": self.workload.request_bytes(),
            "bytes_on_offchip_links": self._link_bytes("offchip"),
            "bytes_on_switch_links": self._link_bytes(ONCHIP),
            "bytes_on_l2_switch_links": l2_link_bytes,
            "delivered_l2_mm_bytes_per_sec": (
                l2_link_bytes * 1_000_000_000_000 / makespan
                if makespan else 0.0),
        }
        links = [
            {
                "id": link.link_id,
                "kind": link.kind,
                "bytes_ab": link.bytes_dir[0],
                "bytes_ba": link.bytes_dir[1],
                "busy_ps_ab": link.busy_ps_dir[0],
                "busy_ps_ba": link.busy_ps_dir[1],
            }
            for link in self.topo.links.values()
            if link.bytes_dir[0] or link.bytes_dir[1]
        ]
        counters = dict(self.counters)
        counters["bytes_on_offchip_links"] = derived["bytes_on_offchip_links"]
        counters["bytes_on_switch_links"] = derived["bytes_on_switch_links"]
        return StatsReport(
            mode=cfg.mode,
            workload=self.workload.name,
            seed=int(self.workload.meta.get("seed", 0)),
            sim_time_ps=makespan,
            counters=counters,
            derived=derived,
            links=links,
            barrier_snapshots=list(self.snapshots),
            fingerprint=fingerprint(cfg, self.workload),
        )


def fingerprint(cfg: SystemConfig, workload: Workload) -> str:
    """Stable hash over the validated config and workload identity."""
    payload = {
        "config": cfg.public_items(),
        "workload": workload.name,
        "records": workload.digest(),
        "seed": workload.meta.get("seed", 0),
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def simulate(cfg: SystemConfig, workload: Workload) -> StatsReport:
    """Run `workload` on a system described by `cfg`; deterministic."""
    return Simulation(cfg, workload).run()


def compare(cfg_base: SystemConfig, workloads: list[Workload],
            modes: list[str], baseline: str = MODE_RDMA) -> Comparison:
    """One simulate per (workload, mode) with identical inputs; speedups
    are baseline_time / mode_time, baseline defaulting to rdma."""
    if len(modes) < 2:
        raise SimulationIntegrityError("compare needs at least 2 modes")
    if baseline not in modes:
        raise SimulationIntegrityError(
            f"baseline {baseline!r} not among modes {modes}")
    times: dict[tuple[str, str], int] = {}
    reports: dict[tuple[str, str], StatsReport] = {}
    for workload in workloads:
        for mode in modes:
            cfg = cfg_base.replace(mode=mode).validate()
            report = simulate(cfg, workload)
            times[(workload.name, mode)] = report.sim_time_ps
            reports[(workload.name, mode)] = report
    results = []
    for workload in workloads:
        base_time = times[(workload.name, baseline)]
        for mode in modes:
            t = times[(workload.name, mode)]
            results.append({
                "workload": workload.name,
                "mode": mode,
                "sim_time_ps": t,
                "speedup_vs_baseline": (base_time / t) if t else 1.0,
                "fingerprint": reports[(workload.name, mode)].fingerprint,
            })
    return Comparison(
        baseline=baseline, modes=list(modes),
        workloads=[w.name for w in workloads], results=results,
        mean_speedup=mean_speedups(results, list(modes)))
