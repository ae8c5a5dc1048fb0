"""Acceptance suite: one test per shipped guarantee, one line printed each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the PASS lines;
a failing criterion shows up as an ordinary pytest failure.
"""

import json
import os
import random
import subprocess
import sys

import pytest

from mgpu_memsim import (DnnWuSpec, SgemmSpec, SystemConfig, bundled_suite,
                         gen_dnn_wu, gen_sgemm, gen_synthetic, simulate)
from mgpu_memsim.events import Event, EventQueue
from mgpu_memsim.paging import PageTable
from mgpu_memsim.topology import build_topology

from test_cache import NaiveLruCache, small_cache
from test_paging import _replay_reference_map

PAGE = 4096


def _cfg(mode, **kw):
    return SystemConfig(mode=mode, **kw).validate()


def test_criterion_1_remote_elimination():
    # every bundled workload, shared mode: zero remote accesses and
    # zero off-chip bytes; exact
    cfg = _cfg("tsm")
    for workload in bundled_suite(seed=0):
        report = simulate(cfg, workload)
        assert report.counters["remote_accesses"] == 0, workload.name
        assert report.counters["bytes_on_offchip_links"] == 0, workload.name
        assert report.derived["bytes_on_offchip_links"] == 0, workload.name
    print("\nACCEPTANCE 1 remote elimination (8 workloads, tsm): PASS")


def test_criterion_2_amortization_trend():
    # all-remote vs all-local matrix-multiply runtime ratio: > 1
    # everywhere and non-increasing as n grows (fixed per-page remote
    # cost amortizes against n^3 traffic)
    cfg = _cfg("rdma")
    ratios = []
    for n in (256, 512, 1024, 2048):
        times = {}
        for dist in ("L0R100", "L100R0"):
            workload = gen_sgemm(SgemmSpec(n=n, tile=32, distribution=dist))
            times[dist] = simulate(cfg, workload).sim_time_ps
        ratios.append(times["L0R100"] / times["L100R0"])
    for ratio in ratios:
        assert ratio > 1.0, ratios
    for earlier, later in zip(ratios, ratios[1:]):
        assert later <= earlier, ratios
    print(f"\nACCEPTANCE 2 amortization trend "
          f"{[f'{r:.2f}' for r in ratios]}: PASS")


def test_criterion_3_mode_ordering():
    # sharing-heavy workloads: tsm strictly fastest, um strictly
    # slowest, and tsm at least 1.5x over rdma at default calibration
    workloads = [gen_dnn_wu(DnnWuSpec("shared")),
                 gen_synthetic(0.25, 20_000, seed=1)]
    for workload in workloads:
        times = {mode: simulate(_cfg(mode), workload).sim_time_ps
                 for mode in ("tsm", "rdma", "um")}
        assert times["tsm"] < times["rdma"] < times["um"], (
            workload.name, times)
        speedup = times["rdma"] / times["tsm"]
        assert speedup >= 1.5, (workload.name, speedup)
    print("\nACCEPTANCE 3 mode ordering tsm < rdma < um, "
          "tsm/rdma >= 1.5x: PASS")


def test_criterion_4_dnn_copy_ledgers():
    # explicit inter-device copy bytes: 4W for the memcpy scheme, W
    # crossing off-chip during the weight update for p2p, 0 for shared
    cfg = _cfg("rdma")
    w = 1 << 20

    report = simulate(cfg, gen_dnn_wu(DnnWuSpec("memcpy", w)))
    assert report.counters["explicit_copy_bytes"] == 4 * w

    report = simulate(cfg, gen_dnn_wu(DnnWuSpec("p2p", w)))
    assert report.counters["explicit_copy_bytes"] == w
    wu_offchip = (report.counters["bytes_on_offchip_links"]
                  - report.barrier_snapshots[-1]["bytes_on_offchip_links"])
    assert wu_offchip == w

    report = simulate(cfg, gen_dnn_wu(DnnWuSpec("shared", w)))
    assert report.counters["explicit_copy_bytes"] == 0
    print("\nACCEPTANCE 4 dnn copy ledgers 4W / W / 0: PASS")


def test_criterion_5_configuration_totals_and_throughput_cap():
    cfg = _cfg("tsm")
    assert cfg.total_mm_bytes == 32 * 1024 ** 3  # 32 GB main memory
    assert cfg.aggregate_l2_mm_bw == 1_024_000_000_000  # 32x32 GB/s ports
    workload = gen_synthetic(1.0, 200, size_bytes=2 << 20, seed=9,
                             region_pages=32_768, read_fraction=0.5)
    report = simulate(cfg, workload)
    delivered = report.derived["delivered_l2_mm_bytes_per_sec"]
    assert delivered <= cfg.aggregate_l2_mm_bw
    assert delivered >= 0.5 * cfg.aggregate_l2_mm_bw  # genuinely saturating
    print(f"\nACCEPTANCE 5 totals 32GB / 1.024 TB/s; delivered "
          f"{delivered / 1e9:.0f} GB/s <= cap: PASS")


def test_criterion_6_oracle_equivalence():
    # cache vs brute-force LRU on 10k random accesses
    rng = random.Random(606)
    cache = small_cache(num_sets=8, ways=2)
    reference = NaiveLruCache(8, 2, 64)
    for _ in range(10_000):
        addr = rng.randrange(4096) * 64
        assert cache.access(addr, False).hit == reference.read(addr)

    # event queue pop order vs full sort on 1000 random events
    rng = random.Random(607)
    queue = EventQueue()
    events = [queue.schedule(Event(rng.randrange(5000), "x", "k", i))
              for i in range(1000)]
    expected = [e.payload for e in
                sorted(events, key=lambda e: (e.time, e.seq))]
    popped = []
    while len(queue):
        popped.append(queue.pop().payload)
    assert popped == expected

    # page placement vs replay-built reference, all three policies,
    # 10k touches
    rng = random.Random(608)
    touches = [(rng.randrange(2000), rng.randrange(4))
               for _ in range(10_000)]
    for mode in ("tsm", "rdma", "um"):
        cfg = SystemConfig(mode=mode, dram_banks_per_gpu_share=4,
                           dram_bank_mb=16, cpu_dram_banks=2).validate()
        table = PageTable(cfg, build_topology(cfg).banks_by_island)
        for vpn, island in touches:
            result = table.translate(vpn * PAGE, island, 0)
            if mode == "um" and result.remote:
                table.migrate_page(vpn, island, 0)
        expected_map = _replay_reference_map(mode, touches, table)
        actual = {vpn: e.home_bank for vpn, e in table.entries.items()}
        assert actual == expected_map, mode
    print("\nACCEPTANCE 6 oracle equivalence (cache, events, placement): "
          "PASS")


def test_criterion_7_compare_determinism(tmp_path):
    # two CLI `compare` runs with identical inputs (and different hash
    # seeds) must produce byte-identical json
    outputs = []
    for run, hashseed in ((1, "101"), (2, "202")):
        outdir = tmp_path / f"run{run}"
        env = dict(os.environ, PYTHONHASHSEED=hashseed)
        proc = subprocess.run(
            [sys.executable, "-m", "mgpu_memsim.cli", "compare",
             "--modes", "tsm,rdma,um",
             "--workload", "synthetic:local=0.25,n=2000,size=64",
             "--workload", "dnn:alg=shared,w=262144",
             "--seed", "7", "--out", str(outdir)],
            env=env, capture_output=True, text=True, timeout=300)
        assert proc.returncode == 0, proc.stderr
        outputs.append((outdir / "comparison.json").read_bytes())
    assert outputs[0] == outputs[1]
    parsed = json.loads(outputs[0])
    assert parsed["baseline"] == "rdma"
    print("\nACCEPTANCE 7 byte-identical compare output: PASS")
