import pytest
from hypothesis import given, settings, strategies as st

from mgpu_memsim.config import CPU_ISLAND
from mgpu_memsim.errors import TraceFormatError
from mgpu_memsim.workloads import (DnnWuSpec, SgemmSpec, TraceRecord,
                                   Workload, bundled_suite, gen_dnn_wu,
                                   gen_sgemm, gen_synthetic, load_trace,
                                   parse_workload_spec, save_trace)


# -- sgemm ------------------------------------------------------------

def test_sgemm_closed_form_byte_ledger():
    w = gen_sgemm(SgemmSpec(n=256, tile=16))
    # panel reads of A and B: 2 * n^3 / tile * element_bytes
    assert w.meta["bytes_ab_read"] == 2 * 256 ** 3 * 4 // 16
    assert w.meta["bytes_c"] == 2 * 256 * 256 * 4
    total = sum(r.size for r in w.records if r.op == "R")
    writes = sum(r.size for r in w.records if r.op == "W")
    assert total == w.meta["bytes_ab_read"] + w.meta["bytes_c"] // 2
    assert writes == w.meta["bytes_c"] // 2


def test_sgemm_distribution_placements():
    local = gen_sgemm(SgemmSpec(n=64, tile=16, distribution="L100R0"))
    assert all(p.island == 0 for p in local.placements)
    remote = gen_sgemm(SgemmSpec(n=64, tile=16, distribution="L0R100"))
    assert all(p.island == 1 for p in remote.placements)
    third = gen_sgemm(SgemmSpec(n=64, tile=16, distribution="L67R33"))
    assert [p.island for p in third.placements] == [0, 0, 1]
    two_thirds = gen_sgemm(SgemmSpec(n=64, tile=16, distribution="L33R67"))
    assert [p.island for p in two_thirds.placements] == [0, 1, 1]


def test_sgemm_remote_footprint_fraction():
    # remote share of the matrix footprint is 0, 1/3, 2/3, 1
    for dist, expected in [("L100R0", 0.0), ("L67R33", 1 / 3),
                           ("L33R67", 2 / 3), ("L0R100", 1.0)]:
        w = gen_sgemm(SgemmSpec(n=64, tile=16, distribution=dist))
        remote = sum(p.nbytes for p in w.placements if p.island == 1)
        total = sum(p.nbytes for p in w.placements)
        assert remote / total == pytest.approx(expected)


def test_sgemm_issued_by_gpu0_only():
    w = gen_sgemm(SgemmSpec(n=64, tile=16))
    assert all(r.device.startswith("G0.") for r in w.records)


def test_sgemm_validation():
    with pytest.raises(TraceFormatError):
        gen_sgemm(SgemmSpec(n=100, tile=16))
    with pytest.raises(TraceFormatError):
        gen_sgemm(SgemmSpec(n=64, tile=16, distribution="L50R50"))


# -- dnn --------------------------------------------------------------

def test_dnn_memcpy_ledger():
    w = gen_dnn_wu(DnnWuSpec("memcpy", 1 << 20))
    assert w.copy_marker_bytes() == 4 << 20  # 4W explicit copies
    assert w.meta["explicit_copy_bytes"] == 4 << 20


def test_dnn_p2p_ledger():
    w = gen_dnn_wu(DnnWuSpec("p2p", 1 << 20))
    assert w.copy_marker_bytes() == 1 << 20


def test_dnn_shared_has_no_copies():
    w = gen_dnn_wu(DnnWuSpec("shared", 1 << 20))
    assert w.copy_marker_bytes() == 0
    assert all(r.op != "C" for r in w.records)


def test_dnn_weights_initialized_in_cpu_memory():
    for alg in ("memcpy", "p2p", "shared"):
        w = gen_dnn_wu(DnnWuSpec(alg))
        assert w.placements[0].island == CPU_ISLAND


def test_dnn_wu_reads_two_gradients():
    w = gen_dnn_wu(DnnWuSpec("shared", 4096))
    barrier = next(i for i, r in enumerate(w.records) if r.op == "B")
    wu = w.records[barrier + 1:]
    assert [r.op for r in wu] == ["R", "R", "W"]
    assert all(r.device == "G0.C0" for r in wu)


# -- synthetic --------------------------------------------------------

def test_synthetic_deterministic_for_fixed_seed():
    a = gen_synthetic(0.5, 500, seed=9)
    b = gen_synthetic(0.5, 500, seed=9)
    assert a.records == b.records
    assert a.digest() == b.digest()
    c = gen_synthetic(0.5, 500, seed=10)
    assert c.records != a.records


def test_synthetic_all_local_has_zero_remote_records():
    w = gen_synthetic(1.0, 2000, seed=3)
    assert w.meta["remote_records"] == 0


def test_synthetic_locality_within_one_percent():
    w = gen_synthetic(0.5, 100_000, seed=42)
    remote_fraction = w.meta["remote_records"] / 100_000
    assert abs(remote_fraction - 0.5) < 0.01


def test_synthetic_records_target_prearranged_regions():
    w = gen_synthetic(0.0, 300, seed=1, num_gpus=2)
    regions = {p.island: (p.vaddr, p.vaddr + p.nbytes) for p in w.placements}
    for r in w.records:
        gpu = int(r.device[1:].partition(".")[0])
        lo, hi = regions[1 - gpu]  # all-remote: always the other island
        assert lo <= r.vaddr < hi


def test_synthetic_validation():
    with pytest.raises(TraceFormatError):
        gen_synthetic(1.5, 10)
    with pytest.raises(TraceFormatError):
        gen_synthetic(0.5, 10, size_bytes=6000)  # not a page multiple


# -- trace files ------------------------------------------------------

def test_empty_trace_file(tmp_path):
    path = tmp_path / "empty.trace"
    path.write_text("")
    w = load_trace(str(path))
    assert w.records == []


def test_single_line_record(tmp_path):
    path = tmp_path / "one.trace"
    path.write_text("G0.C3 R 0x1000 64\n")
    w = load_trace(str(path))
    assert w.records == [TraceRecord("G0.C3", "R", 0x1000, 64)]


def test_roundtrip_dnn_trace(tmp_path):
    original = gen_dnn_wu(DnnWuSpec("memcpy", 8192))
    path = str(tmp_path / "dnn.trace")
    save_trace(original, path)
    loaded = load_trace(path)
    assert loaded.records == original.records
    assert [(p.vaddr, p.nbytes, p.island) for p in loaded.placements] == \
           [(p.vaddr, p.nbytes, p.island) for p in original.placements]


@settings(max_examples=40)
@given(st.lists(st.tuples(
    st.sampled_from(["CPU", "G0.C0", "G1.C7"]),
    st.sampled_from(["R", "W"]),
    st.integers(0, 1 << 40),
    st.integers(1, 1 << 20)), max_size=40))
def test_roundtrip_random_records(tmp_path_factory, rows):
    records = [TraceRecord(d, op, va, size) for d, op, va, size in rows]
    w = Workload("random", records)
    path = str(tmp_path_factory.mktemp("traces") / "r.trace")
    save_trace(w, path)
    assert load_trace(path).records == records


def test_parse_error_reports_line_number(tmp_path):
    path = tmp_path / "bad.trace"
    path.write_text("G0.C0 R 0x0 64\nG0.C0 Q 0x0 64\n")
    with pytest.raises(TraceFormatError, match=":2"):
        load_trace(str(path))


def test_dangling_dependency_rejected(tmp_path):
    path = tmp_path / "dep.trace"
    path.write_text("G0.C0 R 0x0 64 5\n")
    with pytest.raises(TraceFormatError, match="earlier record"):
        load_trace(str(path))


def test_bad_device_rejected(tmp_path):
    path = tmp_path / "dev.trace"
    path.write_text("GPU0 R 0x0 64\n")
    with pytest.raises(TraceFormatError, match="device"):
        load_trace(str(path))


def test_barrier_line_parses(tmp_path):
    path = tmp_path / "b.trace"
    path.write_text("G0.C0 W 0x0 64\nALL B 0x0 0\nG1.C0 R 0x0 64 0\n")
    w = load_trace(str(path))
    assert w.records[1].op == "B"
    assert w.records[2].dep == 0


# -- spec strings -----------------------------------------------------

def test_parse_workload_spec_strings():
    w = parse_workload_spec("sgemm:n=64,tile=16,dist=L0R100")
    assert w.meta["distribution"] == "L0R100"
    w = parse_workload_spec("dnn:alg=p2p,w=4096")
    assert w.meta["weight_bytes"] == 4096
    w = parse_workload_spec("synthetic:local=0.25,n=100,size=64", seed=7)
    assert w.meta["seed"] == 7


def test_parse_workload_spec_trace_path(tmp_path):
    path = tmp_path / "t.trace"
    path.write_text("CPU R 0x0 64\n")
    w = parse_workload_spec(str(path))
    assert w.records[0].device == "CPU"


def test_parse_workload_spec_rejects_unknown_keys():
    with pytest.raises(TraceFormatError, match="unknown keys"):
        parse_workload_spec("sgemm:n=64,tile=16,bogus=1")
    with pytest.raises(TraceFormatError, match="missing"):
        parse_workload_spec("dnn:w=4096")


def test_bundled_suite_contents():
    suite = bundled_suite(seed=0)
    assert len(suite) == 8
    kinds = [w.meta["kind"] for w in suite]
    assert kinds.count("sgemm") == 3
    assert kinds.count("dnn") == 3
    assert kinds.count("synthetic") == 2
    assert len({w.name for w in suite}) == 8
