"""System configuration: device counts, geometries, bandwidths, latencies.

Every field can be overridden from a flat key-value config file
(``key = value``, ``#`` comments); see README for the schema.  Defaults
describe a 4-GPU desk-scale system: 32 CUs per GPU at 1 GHz, 16KB 4-way
L1 vector caches, 8 x 256KB 16-way L2 banks per GPU, 16 x 512MB DRAM
banks per GPU share (32 GB total), 4KB pages, and 32 GB/s bidirectional
links both for switch ports and for the off-chip (PCIe-4-class) paths.

Bandwidth fields are decimal gigabytes per second per direction;
capacities are binary (KB = 1024).  Latency fields are documented
calibration parameters: the architecture tables pin bandwidths and
geometries but no latencies, so the values below are model inputs,
not measurements.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigError

MODE_TSM = "tsm"
MODE_RDMA = "rdma"
MODE_UM = "um"
MODES = (MODE_TSM, MODE_RDMA, MODE_UM)

GB_PER_SEC = 1_000_000_000  # bandwidth unit: bytes/s, decimal
KIB = 1024
MIB = 1024 * 1024

# Island index used for the CPU wherever GPUs use 0..num_gpus-1.
CPU_ISLAND = -1


@dataclass
class SystemConfig:
    """Full parameterization of one simulated system.

    `validate()` must be called before the config is used to build a
    topology; it checks invariants and fills the derived totals.
    """

    mode: str = MODE_TSM

    # Structure
    num_gpus: int = 4
    cus_per_gpu: int = 32
    cu_clock_ghz: float = 1.0

    # Caches (data path uses the vector L1; scalar/instruction caches are
    # carried for completeness but no bundled workload issues such traffic)
    l1_vector_kb: int = 16
    l1_assoc: int = 4
    l1_count_per_gpu: int = 32
    l1_scalar_kb: int = 16
    l1_scalar_count_per_gpu: int = 8
    l1i_kb: int = 32
    l1i_count_per_gpu: int = 8
    l2_banks_per_gpu: int = 8
    l2_bank_kb: int = 256
    l2_assoc: int = 16
    cacheline_bytes: int = 64

    # TLBs
    l1_tlb_sets: int = 1
    l1_tlb_ways: int = 32
    l1_tlb_count_per_gpu: int = 48
    l2_tlb_sets: int = 32
    l2_tlb_ways: int = 16

    # Memory
    dram_banks_per_gpu_share: int = 16
    dram_bank_mb: int = 512
    cpu_dram_banks: int = 16  # CPU-private banks; only exist in rdma/um modes
    page_size_bytes: int = 4096

    # Bandwidths (GB/s, each direction)
    link_bw_gbps: int = 32
    offchip_bw_gbps: int = 32
    dram_bank_bw_gbps: int = 32  # per-bank service rate; port-matched default

    # Latency table (ns) -- calibration parameters, see module docstring
    l1_hit_ns: int = 1
    l2_hit_ns: int = 10
    switch_hop_ns: int = 20
    dram_access_ns: int = 50
    offchip_hop_ns: int = 400
    tlb_miss_ns: int = 200
    um_fault_overhead_ns: int = 20_000
    remote_map_overhead_ns: int = 2_000
    compute_ns_per_record: int = 0

    # Unified-memory fault service: migrate by default; when True, remote
    # faults are served by direct remote access instead (no migration)
    um_remote_direct_map: bool = False

    # Derived (filled by validate)
    total_mm_bytes: int = field(init=False, default=0)
    total_capacity_bytes: int = field(init=False, default=0)
    aggregate_l2_mm_bw: int = field(init=False, default=0)
    switch_ports: int = field(init=False, default=0)
    frames_per_bank: int = field(init=False, default=0)
    validated: bool = field(init=False, default=False)

    # -- helpers ----------------------------------------------------

    @property
    def dram_bank_bytes(self) -> int:
        return self.dram_bank_mb * MIB

    @property
    def gpu_dram_banks_total(self) -> int:
        return self.num_gpus * self.dram_banks_per_gpu_share

    @property
    def link_bw_bytes(self) -> int:
        return self.link_bw_gbps * GB_PER_SEC

    @property
    def offchip_bw_bytes(self) -> int:
        return self.offchip_bw_gbps * GB_PER_SEC

    @property
    def dram_bank_bw_bytes(self) -> int:
        return self.dram_bank_bw_gbps * GB_PER_SEC

    def validate(self) -> "SystemConfig":
        """Check all invariants, fill derived totals, and return self.

        Raises ConfigError naming the offending field.
        """
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in (
            "num_gpus", "cus_per_gpu", "l1_vector_kb", "l1_assoc",
            "l1_count_per_gpu", "l2_banks_per_gpu", "l2_bank_kb", "l2_assoc",
            "cacheline_bytes", "l1_tlb_sets", "l1_tlb_ways", "l2_tlb_sets",
            "l2_tlb_ways", "dram_banks_per_gpu_share", "dram_bank_mb",
            "page_size_bytes",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("link_bw_gbps", "offchip_bw_gbps", "dram_bank_bw_gbps"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name}: bandwidth must be > 0")
        if self.cpu_dram_banks < 0:
            raise ConfigError("cpu_dram_banks must be >= 0")
        if self.mode in (MODE_RDMA, MODE_UM) and self.cpu_dram_banks < 1:
            raise ConfigError("cpu_dram_banks must be >= 1 in rdma/um modes")

        if not _power_of_two(self.page_size_bytes):
            raise ConfigError("page_size_bytes: page size must be a power of two")
        if not _power_of_two(self.cacheline_bytes):
            raise ConfigError("cacheline_bytes must be a power of two")
        if self.l1_count_per_gpu != self.cus_per_gpu:
            raise ConfigError(
                "l1_count_per_gpu must equal cus_per_gpu (one L1 per CU)")
        for cap_kb, assoc, name in (
            (self.l1_vector_kb, self.l1_assoc, "l1_vector_kb"),
            (self.l2_bank_kb, self.l2_assoc, "l2_bank_kb"),
        ):
            cap = cap_kb * KIB
            if cap % (assoc * self.cacheline_bytes):
                raise ConfigError(f"{name} not divisible by assoc * line size")
            if not _power_of_two(cap // (assoc * self.cacheline_bytes)):
                raise ConfigError(f"{name}: set count must be a power of two")
        for sets, name in ((self.l1_tlb_sets, "l1_tlb_sets"),
                           (self.l2_tlb_sets, "l2_tlb_sets")):
            if not _power_of_two(sets):
                raise ConfigError(f"{name} must be a power of two")
        if self.dram_bank_bytes % self.page_size_bytes:
            raise ConfigError("page_size_bytes must divide dram bank capacity")

        self.total_mm_bytes = self.gpu_dram_banks_total * self.dram_bank_bytes
        cpu_banks = self.cpu_dram_banks if self.mode != MODE_TSM else 0
        self.total_capacity_bytes = (
            self.total_mm_bytes + cpu_banks * self.dram_bank_bytes)
        self.aggregate_l2_mm_bw = (
            self.num_gpus * self.l2_banks_per_gpu * self.link_bw_bytes)
        # Per-bank ports: every L2 bank and DRAM bank gets its own switch
        # port, plus one for the CPU.  Reported, not forced to any nominal
        # port count.
        self.switch_ports = (
            self.num_gpus * self.l2_banks_per_gpu
            + self.gpu_dram_banks_total + 1)
        self.frames_per_bank = self.dram_bank_bytes // self.page_size_bytes
        self.validated = True
        return self

    def replace(self, **overrides: Any) -> "SystemConfig":
        """Fresh unvalidated copy with `overrides` applied."""
        base = {
            f.name: getattr(self, f.name)
            for f in dataclasses.fields(self) if f.init
        }
        base.update(overrides)
        return SystemConfig(**base)

    def public_items(self) -> list[tuple[str, Any]]:
        """(name, value) for every settable field, declaration order."""
        return [(f.name, getattr(self, f.name))
                for f in dataclasses.fields(self) if f.init]


def _power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SystemConfig) if f.init}


def config_from_mapping(values: dict[str, str]) -> SystemConfig:
    """Build a SystemConfig from string key-value pairs (unvalidated)."""
    kwargs: dict[str, Any] = {}
    for key, raw in values.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[key] = _coerce(key, raw)
    return SystemConfig(**kwargs)


def _coerce(key: str, raw: str) -> Any:
    ftype = _FIELD_TYPES[key]
    text = raw.strip()
    try:
        if ftype in ("int", int):
            return int(text, 0)
        if ftype in ("float", float):
            return float(text)
        if ftype in ("bool", bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: bad value {raw!r}") from exc
    return text


def load_config_file(path: str) -> SystemConfig:
    """Parse a flat `key = value` config file into a SystemConfig."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            values[key.strip()] = value.strip()
    return config_from_mapping(values)
