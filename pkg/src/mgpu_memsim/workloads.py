"""Memory-request stream generators and the trace file format.

A workload is a list of trace records plus optional placement
directives (pre-touching byte ranges into a chosen island's memory,
which the round-robin policy of shared mode is free to ignore).

Trace text format, one record per line::

    # comment
    #@ place <island> <hex-vaddr> <bytes>     placement pragma
    <device> <op> <hex-vaddr> <size> [dep-index]

where device is ``CPU``, ``ALL`` (barriers only) or ``G<g>.C<c>``, and
op is ``R`` (read), ``W`` (write), ``C`` (explicit-copy marker) or
``B`` (global barrier).  A copy marker carries the copied byte count
for the copy-traffic ledger; the data movement itself is expressed by
the read/write records that follow it.  A record with a dep index
never issues before that record completes.

Generators are pure functions of (spec, seed) and safe to call
concurrently.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field

from .config import CPU_ISLAND
from .errors import TraceFormatError

PAGE = 4096  # virtual layout granularity used by the generators

OP_READ = "R"
OP_WRITE = "W"
OP_COPY = "C"
OP_BARRIER = "B"

SGEMM_DISTRIBUTIONS = ("L100R0", "L67R33", "L33R67", "L0R100")
DNN_ALGORITHMS = ("memcpy", "p2p", "shared")

_DEVICE_RE = re.compile(r"^(CPU|ALL|G(\d+)\.C(\d+))$")


@dataclass(slots=True)
class TraceRecord:
    device: str
    op: str
    vaddr: int
    size: int
    dep: int | None = None


@dataclass
class Placement:
    vaddr: int
    nbytes: int
    island: int  # CPU_ISLAND or GPU index


@dataclass
class Workload:
    name: str
    records: list[TraceRecord]
    placements: list[Placement] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def request_bytes(self) -> int:
        return sum(r.size for r in self.records
                   if r.op in (OP_READ, OP_WRITE))

    def copy_marker_bytes(self) -> int:
        return sum(r.size for r in self.records if r.op == OP_COPY)

    def digest(self) -> str:
        h = hashlib.sha256()
        for r in self.records:
            h.update(f"{r.device}|{r.op}|{r.vaddr}|{r.size}|{r.dep}\n"
                     .encode())
        for p in self.placements:
            h.update(f"place|{p.island}|{p.vaddr}|{p.nbytes}\n".encode())
        return h.hexdigest()


def _island_name(island: int) -> str:
    return "CPU" if island == CPU_ISLAND else f"G{island}"


def _parse_island(token: str) -> int:
    if token == "CPU":
        return CPU_ISLAND
    if token.startswith("G") and token[1:].isdigit():
        return int(token[1:])
    raise TraceFormatError(f"bad island {token!r}")


# ---------------------------------------------------------------------
# Matrix-multiply access-pattern generator
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class SgemmSpec:
    """Tiled matrix-multiply traffic for C = A x B on GPU0.

    The distribution picks which operand matrices live in GPU0's vs
    GPU1's memory: L100R0 puts A, B and C local to GPU0; L67R33 moves C
    to GPU1; L33R67 moves B and C; L0R100 puts all three on GPU1.  Only
    the memory traffic is modeled (panel reads of A and B, a read and a
    write per C tile); the arithmetic itself is not simulated.
    """
    n: int
    tile: int = 32
    element_bytes: int = 4
    distribution: str = "L100R0"

    def check(self) -> "SgemmSpec":
        if self.tile < 1 or self.n < self.tile:
            raise TraceFormatError("sgemm: need n >= tile >= 1")
        if self.n % self.tile:
            raise TraceFormatError("sgemm: tile must divide n")
        if self.distribution not in SGEMM_DISTRIBUTIONS:
            raise TraceFormatError(
                f"sgemm: distribution must be one of {SGEMM_DISTRIBUTIONS}")
        if self.element_bytes < 1:
            raise TraceFormatError("sgemm: element_bytes must be >= 1")
        return self


_SGEMM_REMOTE_MATRICES = {
    "L100R0": (),
    "L67R33": ("C",),
    "L33R67": ("B", "C"),
    "L0R100": ("A", "B", "C"),
}


def _page_ceil(nbytes: int) -> int:
    return -(-nbytes // PAGE) * PAGE


def gen_sgemm(spec: SgemmSpec, cus_per_gpu: int = 32) -> Workload:
    spec.check()
    n, tile, eb = spec.n, spec.tile, spec.element_bytes
    nt = n // tile
    matrix_bytes = n * n * eb
    base_a = 0x1000_0000
    base_b = base_a + _page_ceil(matrix_bytes)
    base_c = base_b + _page_ceil(matrix_bytes)
    panel = tile * n * eb  # one row/column panel of A or B
    ctile = tile * tile * eb

    remote = _SGEMM_REMOTE_MATRICES[spec.distribution]
    placements = [
        Placement(base_a, matrix_bytes, 1 if "A" in remote else 0),
        Placement(base_b, matrix_bytes, 1 if "B" in remote else 0),
        Placement(base_c, matrix_bytes, 1 if "C" in remote else 0),
    ]

    records: list[TraceRecord] = []
    for job in range(nt * nt):
        ti, tj = divmod(job, nt)
        dev = f"G0.C{job % cus_per_gpu}"
        records.append(TraceRecord(dev, OP_READ, base_a + ti * panel, panel))
        records.append(TraceRecord(dev, OP_READ, base_b + tj * panel, panel))
        records.append(TraceRecord(dev, OP_READ, base_c + job * ctile, ctile))
        records.append(TraceRecord(dev, OP_WRITE, base_c + job * ctile, ctile))

    name = f"sgemm_n{n}_t{tile}_{spec.distribution}"
    meta = {
        "kind": "sgemm", "n": n, "tile": tile,
        "element_bytes": eb, "distribution": spec.distribution,
        # closed-form traffic ledger: A+B panel reads and C tile traffic
        "bytes_ab_read": 2 * nt * nt * panel,
        "bytes_c": 2 * n * n * eb,
        "footprint_bytes": 3 * matrix_bytes,
        "remote_matrices": list(remote),
    }
    return Workload(name, records, placements, meta)


# ---------------------------------------------------------------------
# DNN weight-update traffic generators
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class DnnWuSpec:
    """Data-parallel weight-update step on a 2-GPU system.

    Three orchestrations of the same step: explicit peer copies
    (``memcpy``), direct remote reads (``p2p``), and everything through
    one shared address range (``shared``).  Forward/backward passes are
    collapsed to their memory ledger: one gradient write of W bytes per
    GPU.  Weights start in CPU memory.
    """
    algorithm: str
    weight_bytes: int = 1 << 20
    num_gpus: int = 2

    def check(self) -> "DnnWuSpec":
        if self.algorithm not in DNN_ALGORITHMS:
            raise TraceFormatError(
                f"dnn: algorithm must be one of {DNN_ALGORITHMS}")
        if self.weight_bytes < 1:
            raise TraceFormatError("dnn: weight_bytes must be >= 1")
        if self.num_gpus < 2:
            raise TraceFormatError("dnn: needs at least 2 GPUs")
        return self


def gen_dnn_wu(spec: DnnWuSpec) -> Workload:
    spec.check()
    w = spec.weight_bytes
    stride = _page_ceil(w)
    weights = 0x2000_0000
    wg0 = weights + stride
    wg1 = wg0 + stride
    g0 = wg1 + stride
    g1 = g0 + stride
    gcopy = g1 + stride

    g0dev, g1dev = "G0.C0", "G1.C0"
    rec: list[TraceRecord] = []
    add = rec.append

    if spec.algorithm == "memcpy":
        add(TraceRecord(g0dev, OP_COPY, wg0, w))     # weights -> GPU0
        add(TraceRecord(g0dev, OP_READ, weights, w))
        add(TraceRecord(g0dev, OP_WRITE, wg0, w))
        add(TraceRecord(g1dev, OP_COPY, wg1, w))     # weights -> GPU1
        add(TraceRecord(g1dev, OP_READ, weights, w))
        add(TraceRecord(g1dev, OP_WRITE, wg1, w))
        add(TraceRecord(g0dev, OP_WRITE, g0, w))     # FP+BP gradients
        add(TraceRecord(g1dev, OP_WRITE, g1, w))
        add(TraceRecord("ALL", OP_BARRIER, 0, 0))
        add(TraceRecord(g0dev, OP_COPY, gcopy, w))   # gradient GPU1 -> GPU0
        add(TraceRecord(g0dev, OP_READ, g1, w))
        add(TraceRecord(g0dev, OP_WRITE, gcopy, w))
        add(TraceRecord(g0dev, OP_READ, g0, w))      # weight update
        add(TraceRecord(g0dev, OP_READ, gcopy, w))
        add(TraceRecord(g0dev, OP_WRITE, wg0, w))
        add(TraceRecord("ALL", OP_BARRIER, 0, 0))
        add(TraceRecord(g1dev, OP_COPY, wg1, w))     # weights GPU0 -> GPU1
        add(TraceRecord(g1dev, OP_READ, wg0, w))
        add(TraceRecord(g1dev, OP_WRITE, wg1, w))
        explicit = 4 * w
    elif spec.algorithm == "p2p":
        add(TraceRecord(g0dev, OP_COPY, wg0, w))     # weights -> GPU0
        add(TraceRecord(g0dev, OP_READ, weights, w))
        add(TraceRecord(g0dev, OP_WRITE, wg0, w))
        add(TraceRecord(g0dev, OP_WRITE, g0, w))     # FP+BP gradients
        add(TraceRecord(g1dev, OP_WRITE, g1, w))
        add(TraceRecord("ALL", OP_BARRIER, 0, 0))
        add(TraceRecord(g0dev, OP_READ, g0, w))      # weight update; g1 is
        add(TraceRecord(g0dev, OP_READ, g1, w))      # read in place on GPU1
        add(TraceRecord(g0dev, OP_WRITE, wg0, w))
        explicit = w
    else:  # shared
        add(TraceRecord(g0dev, OP_WRITE, g0, w))     # FP+BP gradients
        add(TraceRecord(g1dev, OP_WRITE, g1, w))
        add(TraceRecord("ALL", OP_BARRIER, 0, 0))
        add(TraceRecord(g0dev, OP_READ, g0, w))      # weight update in place
        add(TraceRecord(g0dev, OP_READ, g1, w))
        add(TraceRecord(g0dev, OP_WRITE, weights, w))
        explicit = 0

    name = f"dnn_{spec.algorithm}_w{w}"
    meta = {
        "kind": "dnn", "algorithm": spec.algorithm, "weight_bytes": w,
        "explicit_copy_bytes": explicit,
    }
    return Workload(name, rec, [Placement(weights, w, CPU_ISLAND)], meta)


# ---------------------------------------------------------------------
# Synthetic local/remote mixes
# ---------------------------------------------------------------------

def gen_synthetic(local_fraction: float, total_accesses: int,
                  size_bytes: int = 64, seed: int = 0,
                  num_gpus: int = 4, cus_per_gpu: int = 32,
                  region_pages: int = 1024,
                  read_fraction: float = 0.7) -> Workload:
    """Seeded pseudorandom access stream with a target locality.

    Each GPU owns one pre-placed region; a record targets its own
    region with probability `local_fraction`, otherwise a uniformly
    chosen other GPU's region, so under owner-local placement the
    expected remote fraction is 1 - local_fraction.
    """
    if not 0.0 <= local_fraction <= 1.0:
        raise TraceFormatError("synthetic: local_fraction must be in [0, 1]")
    if total_accesses < 0:
        raise TraceFormatError("synthetic: total_accesses must be >= 0")
    if size_bytes < 1:
        raise TraceFormatError("synthetic: size_bytes must be >= 1")
    if size_bytes > PAGE and size_bytes % PAGE:
        raise TraceFormatError(
            "synthetic: sizes above a page must be page multiples")
    if num_gpus < 2 and local_fraction < 1.0:
        raise TraceFormatError("synthetic: remote accesses need >= 2 GPUs")

    rng = random.Random(seed)
    region_bytes = region_pages * PAGE
    bases = [0x4000_0000 + g * 2 * region_bytes for g in range(num_gpus)]
    placements = [Placement(bases[g], region_bytes, g)
                  for g in range(num_gpus)]

    pages_span = region_pages - (size_bytes - 1) // PAGE
    slots_per_page = PAGE // size_bytes if size_bytes <= PAGE else 1
    records: list[TraceRecord] = []
    remote_count = 0
    for k in range(total_accesses):
        gpu = k % num_gpus
        cu = (k // num_gpus) % cus_per_gpu
        if rng.random() < local_fraction:
            target = gpu
        else:
            target = rng.randrange(num_gpus - 1)
            if target >= gpu:
                target += 1
            remote_count += 1
        page = rng.randrange(pages_span)
        offset = (rng.randrange(slots_per_page) * size_bytes
                  if size_bytes <= PAGE else 0)
        vaddr = bases[target] + page * PAGE + offset
        op = OP_READ if rng.random() < read_fraction else OP_WRITE
        records.append(TraceRecord(f"G{gpu}.C{cu}", op, vaddr, size_bytes))

    name = f"synthetic_l{local_fraction:g}_n{total_accesses}_s{size_bytes}"
    meta = {
        "kind": "synthetic", "local_fraction": local_fraction,
        "total_accesses": total_accesses, "size_bytes": size_bytes,
        "seed": seed, "remote_records": remote_count,
    }
    return Workload(name, records, placements, meta)


# ---------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------

def save_trace(workload: Workload, path: str) -> None:
    lines = [f"# trace: {workload.name}"]
    for key in sorted(workload.meta):
        lines.append(f"# meta {key} = {workload.meta[key]}")
    for p in workload.placements:
        lines.append(f"#@ place {_island_name(p.island)} "
                     f"0x{p.vaddr:x} {p.nbytes}")
    for r in workload.records:
        dep = f" {r.dep}" if r.dep is not None else ""
        lines.append(f"{r.device} {r.op} 0x{r.vaddr:x} {r.size}{dep}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_trace(path: str, name: str | None = None) -> Workload:
    records: list[TraceRecord] = []
    placements: list[Placement] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line.startswith("#@"):
                placements.append(_parse_pragma(line, path, lineno))
                continue
            if not line or line.startswith("#"):
                continue
            records.append(_parse_record(line, len(records), path, lineno))
    if name is None:
        name = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return Workload(name, records, placements, {"kind": "trace",
                                                "source": path})


def _parse_pragma(line: str, path: str, lineno: int) -> Placement:
    parts = line.split()
    if len(parts) != 5 or parts[1] != "place":
        raise TraceFormatError(f"{path}:{lineno}: bad pragma {line!r}")
    try:
        island = _parse_island(parts[2])
        vaddr = int(parts[3], 0)
        nbytes = int(parts[4], 0)
    except (ValueError, TraceFormatError) as exc:
        raise TraceFormatError(f"{path}:{lineno}: {exc}") from exc
    if nbytes < 1:
        raise TraceFormatError(f"{path}:{lineno}: placement needs >= 1 byte")
    return Placement(vaddr, nbytes, island)


def _parse_record(line: str, index: int, path: str,
                  lineno: int) -> TraceRecord:
    parts = line.split()
    if len(parts) not in (4, 5):
        raise TraceFormatError(
            f"{path}:{lineno}: expected 'device op vaddr size [dep]'")
    device, op, vaddr_text, size_text = parts[:4]
    m = _DEVICE_RE.match(device)
    if not m:
        raise TraceFormatError(f"{path}:{lineno}: bad device {device!r}")
    if op not in (OP_READ, OP_WRITE, OP_COPY, OP_BARRIER):
        raise TraceFormatError(f"{path}:{lineno}: bad op {op!r}")
    if device == "ALL" and op != OP_BARRIER:
        raise TraceFormatError(
            f"{path}:{lineno}: device ALL is only valid for barriers")
    try:
        vaddr = int(vaddr_text, 0)
        size = int(size_text, 0)
    except ValueError as exc:
        raise TraceFormatError(f"{path}:{lineno}: {exc}") from exc
    if vaddr < 0:
        raise TraceFormatError(f"{path}:{lineno}: negative address")
    if op == OP_BARRIER:
        if size != 0:
            raise TraceFormatError(f"{path}:{lineno}: barrier size must be 0")
    elif size < 1:
        raise TraceFormatError(f"{path}:{lineno}: size must be >= 1")
    dep = None
    if len(parts) == 5:
        try:
            dep = int(parts[4], 0)
        except ValueError as exc:
            raise TraceFormatError(f"{path}:{lineno}: {exc}") from exc
        if dep < 0 or dep >= index:
            raise TraceFormatError(
                f"{path}:{lineno}: dep {dep} must name an earlier record")
    return TraceRecord(device, op, vaddr, size, dep)


# ---------------------------------------------------------------------
# Workload spec strings (CLI surface) and the bundled suite
# ---------------------------------------------------------------------

def parse_workload_spec(text: str, seed: int = 0,
                        cus_per_gpu: int = 32,
                        num_gpus: int = 4) -> Workload:
    """Build a workload from a CLI spec string or load a trace file.

    Specs: ``sgemm:n=256,tile=32,dist=L0R100``,
    ``dnn:alg=memcpy,w=1048576``,
    ``synthetic:local=0.5,n=20000,size=64``; anything else is treated
    as a trace file path.
    """
    kind, sep, args_text = text.partition(":")
    if not sep or kind not in ("sgemm", "dnn", "synthetic"):
        return load_trace(text)
    args: dict[str, str] = {}
    if args_text:
        for item in args_text.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise TraceFormatError(f"workload spec: bad item {item!r}")
            args[key.strip()] = value.strip()
    try:
        if kind == "sgemm":
            spec = SgemmSpec(
                n=int(args.pop("n")),
                tile=int(args.pop("tile", "32")),
                element_bytes=int(args.pop("element_bytes", "4")),
                distribution=args.pop("dist", "L100R0"))
            _reject_extras(kind, args)
            return gen_sgemm(spec, cus_per_gpu=cus_per_gpu)
        if kind == "dnn":
            dspec = DnnWuSpec(
                algorithm=args.pop("alg"),
                weight_bytes=int(args.pop("w", str(1 << 20))))
            _reject_extras(kind, args)
            return gen_dnn_wu(dspec)
        return gen_synthetic(
            local_fraction=float(args.pop("local")),
            total_accesses=int(args.pop("n")),
            size_bytes=int(args.pop("size", "64")),
            seed=int(args.pop("seed", str(seed))),
            num_gpus=int(args.pop("gpus", str(num_gpus))),
            cus_per_gpu=cus_per_gpu,
            region_pages=int(args.pop("region_pages", "1024")),
            read_fraction=float(args.pop("read", "0.7")))
    except KeyError as exc:
        raise TraceFormatError(f"workload spec {kind}: missing {exc}") from exc
    except ValueError as exc:
        raise TraceFormatError(f"workload spec {kind}: {exc}") from exc


def _reject_extras(kind: str, args: dict[str, str]) -> None:
    if args:
        raise TraceFormatError(
            f"workload spec {kind}: unknown keys {sorted(args)}")


def bundled_suite(seed: int = 0, num_gpus: int = 4,
                  cus_per_gpu: int = 32) -> list[Workload]:
    """The eight stock workloads used by the comparison experiments."""
    suite = [
        gen_sgemm(SgemmSpec(n=256, tile=32, distribution="L100R0"),
                  cus_per_gpu),
        gen_sgemm(SgemmSpec(n=256, tile=32, distribution="L67R33"),
                  cus_per_gpu),
        gen_sgemm(SgemmSpec(n=256, tile=32, distribution="L0R100"),
                  cus_per_gpu),
        gen_dnn_wu(DnnWuSpec("memcpy")),
        gen_dnn_wu(DnnWuSpec("p2p")),
        gen_dnn_wu(DnnWuSpec("shared")),
        gen_synthetic(1.0, 20_000, seed=seed, num_gpus=num_gpus,
                      cus_per_gpu=cus_per_gpu),
        gen_synthetic(0.25, 20_000, seed=seed + 1, num_gpus=num_gpus,
                      cus_per_gpu=cus_per_gpu),
    ]
    return suite
