"""Builds the system graph for each memory organization.

Shared mode (tsm): every L2 bank and every DRAM bank hangs off one
central switch, so each memory access is a two-hop trip (L2 -> switch,
switch -> bank) and no off-chip link exists at all.

Per-GPU modes (rdma, um): each GPU is a memory island -- its L2 banks
and its DRAM share an island switch -- and islands (including the CPU
with its own banks) are joined pairwise by off-chip links that carry
the slower, higher-latency remote path.

The switch itself is non-blocking; only the port links contend.
"""

from __future__ import annotations

from .config import CPU_ISLAND, MODE_TSM, SystemConfig
from .errors import SimulationIntegrityError
from .interconnect import (DIR_AB, DIR_BA, OFFCHIP, ONCHIP, Link, Path)
from .timebase import ns


class Topology:
    def __init__(self, cfg: SystemConfig) -> None:
        self.cfg = cfg
        self.mode = cfg.mode
        self.links: dict[str, Link] = {}
        self.l2_links: dict[tuple[int, int], Link] = {}
        self.bank_links: dict[int, Link] = {}
        self.cpu_link: Link | None = None
        self.offchip_links: dict[tuple[int, int], Link] = {}
        self.banks_by_island: dict[int, list[int]] = {}
        self.total_banks = 0
        self._path_memo: dict[tuple, Path] = {}

    # -- construction helpers -----------------------------------------

    def _add(self, link: Link) -> Link:
        if link.link_id in self.links:
            raise SimulationIntegrityError(f"duplicate link {link.link_id}")
        self.links[link.link_id] = link
        return link

    # -- island / bank queries ----------------------------------------

    def bank_island(self, bank: int) -> int:
        """Island that physically hosts `bank` (valid in any mode)."""
        gpu_banks = self.cfg.gpu_dram_banks_total
        if bank < gpu_banks:
            return bank // self.cfg.dram_banks_per_gpu_share
        return CPU_ISLAND

    # -- canonical paths ----------------------------------------------

    def path_l2_to_bank(self, gpu: int, l2_bank: int, bank: int) -> Path:
        key = ("l2", gpu, l2_bank, bank)
        path = self._path_memo.get(key)
        if path is None:
            path = self._build_l2_path(gpu, l2_bank, bank)
            self._path_memo[key] = path
        return path

    def path_cpu_to_bank(self, bank: int) -> Path:
        key = ("cpu", bank)
        path = self._path_memo.get(key)
        if path is None:
            path = self._build_cpu_path(bank)
            self._path_memo[key] = path
        return path

    def path_bank_to_bank(self, src_bank: int, dst_bank: int) -> Path:
        key = ("bank", src_bank, dst_bank)
        path = self._path_memo.get(key)
        if path is None:
            up = (self.bank_links[src_bank], DIR_AB)
            down = (self.bank_links[dst_bank], DIR_BA)
            hops = [up]
            if self.mode != MODE_TSM:
                src_i = self.bank_island(src_bank)
                dst_i = self.bank_island(dst_bank)
                if src_i != dst_i:
                    hops.append(self._offchip_hop(src_i, dst_i))
            hops.append(down)
            path = tuple(hops)
            self._path_memo[key] = path
        return path

    def _build_l2_path(self, gpu: int, l2_bank: int, bank: int) -> Path:
        try:
            up = (self.l2_links[(gpu, l2_bank)], DIR_AB)
            down = (self.bank_links[bank], DIR_BA)
        except KeyError as exc:
            raise SimulationIntegrityError(
                f"unroutable: G{gpu}.L2B{l2_bank} -> DRAM{bank}") from exc
        if self.mode == MODE_TSM:
            return (up, down)
        bank_i = self.bank_island(bank)
        if bank_i == gpu:
            return (up, down)
        return (up, self._offchip_hop(gpu, bank_i), down)

    def _build_cpu_path(self, bank: int) -> Path:
        if self.cpu_link is None:
            raise SimulationIntegrityError("topology has no CPU port")
        up = (self.cpu_link, DIR_AB)
        down = (self.bank_links[bank], DIR_BA)
        if self.mode == MODE_TSM:
            return (up, down)
        bank_i = self.bank_island(bank)
        if bank_i == CPU_ISLAND:
            return (up, down)
        return (up, self._offchip_hop(CPU_ISLAND, bank_i), down)

    def _offchip_hop(self, src_island: int, dst_island: int):
        lo, hi = min(src_island, dst_island), max(src_island, dst_island)
        link = self.offchip_links.get((lo, hi))
        if link is None:
            raise SimulationIntegrityError(
                f"no off-chip link between islands {src_island} and "
                f"{dst_island}")
        return (link, DIR_AB if src_island == lo else DIR_BA)


def build_topology(cfg: SystemConfig) -> Topology:
    if not cfg.validated:
        raise SimulationIntegrityError("config must be validated first")
    topo = Topology(cfg)
    bw = cfg.link_bw_bytes
    hop = ns(cfg.switch_hop_ns)
    gpu_banks = cfg.gpu_dram_banks_total

    if cfg.mode == MODE_TSM:
        sw = "sw"
        for g in range(cfg.num_gpus):
            for b in range(cfg.l2_banks_per_gpu):
                topo.l2_links[(g, b)] = topo._add(Link(
                    f"l2.g{g}.b{b}<->{sw}", f"G{g}.L2B{b}", sw, bw, hop,
                    ONCHIP))
        for d in range(gpu_banks):
            topo.bank_links[d] = topo._add(Link(
                f"{sw}<->dram{d}", f"DRAM{d}", sw, bw, hop, ONCHIP))
        topo.cpu_link = topo._add(Link(f"cpu<->{sw}", "CPU", sw, bw, hop,
                                       ONCHIP))
        topo.banks_by_island = {0: list(range(gpu_banks))}
        topo.total_banks = gpu_banks
        return topo

    # Per-GPU islands with a CPU island; off-chip links pairwise
    offchip_bw = cfg.offchip_bw_bytes
    offchip_hop = ns(cfg.offchip_hop_ns)
    islands = [CPU_ISLAND] + list(range(cfg.num_gpus))
    for g in range(cfg.num_gpus):
        sw = f"sw.g{g}"
        for b in range(cfg.l2_banks_per_gpu):
            topo.l2_links[(g, b)] = topo._add(Link(
                f"l2.g{g}.b{b}<->{sw}", f"G{g}.L2B{b}", sw, bw, hop, ONCHIP))
        lo = g * cfg.dram_banks_per_gpu_share
        for d in range(lo, lo + cfg.dram_banks_per_gpu_share):
            topo.bank_links[d] = topo._add(Link(
                f"{sw}<->dram{d}", f"DRAM{d}", sw, bw, hop, ONCHIP))
        topo.banks_by_island[g] = list(
            range(lo, lo + cfg.dram_banks_per_gpu_share))
    topo.cpu_link = topo._add(Link(
        "cpu<->sw.cpu", "CPU", "sw.cpu", bw, hop, ONCHIP))
    cpu_lo = gpu_banks
    for d in range(cpu_lo, cpu_lo + cfg.cpu_dram_banks):
        topo.bank_links[d] = topo._add(Link(
            f"sw.cpu<->dram{d}", f"DRAM{d}", "sw.cpu", bw, hop, ONCHIP))
    topo.banks_by_island[CPU_ISLAND] = list(
        range(cpu_lo, cpu_lo + cfg.cpu_dram_banks))
    for i, lo_island in enumerate(islands):
        for hi_island in islands[i + 1:]:
            a = "sw.cpu" if lo_island == CPU_ISLAND else f"sw.g{lo_island}"
            b = f"sw.g{hi_island}"
            topo.offchip_links[(lo_island, hi_island)] = topo._add(Link(
                f"{a}<->{b}", a, b, offchip_bw, offchip_hop, OFFCHIP))
    topo.total_banks = gpu_banks + cfg.cpu_dram_banks
    return topo
