#!/usr/bin/env python3
"""Run the bundled workload suite across all three memory organizations.

Produces comparison.{json,csv,plotdata} plus a printed speedup table
(rdma baseline).  This is the headline experiment: grouped per-workload
speedup bars of the shared organization and unified memory against the
per-GPU rdma baseline.
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mgpu_memsim import SystemConfig, bundled_suite, compare, emit
from mgpu_memsim.config import load_config_file


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default="results/comparison")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--modes", default="tsm,rdma,um")
    args = parser.parse_args()

    cfg = (load_config_file(args.config) if args.config
           else SystemConfig()).validate()
    modes = args.modes.split(",")
    suite = bundled_suite(seed=args.seed, num_gpus=cfg.num_gpus,
                          cus_per_gpu=cfg.cus_per_gpu)

    started = time.time()
    comparison = compare(cfg, suite, modes)
    elapsed = time.time() - started

    os.makedirs(args.out, exist_ok=True)
    for fmt in ("json", "csv", "plotdata"):
        emit(comparison, fmt, os.path.join(args.out, f"comparison.{fmt}"))

    print(f"{len(suite)} workloads x {len(modes)} modes in {elapsed:.1f}s")
    print(f"{'workload':<34} " + "".join(f"{m:>12}" for m in modes))
    for name in comparison.workloads:
        row = "".join(f"{comparison.speedup_of(name, m):>11.2f}x"
                      for m in modes)
        print(f"{name:<34} {row}")
    for mode, means in comparison.mean_speedup.items():
        print(f"mean[{mode}]: arithmetic {means['arithmetic']:.2f}x, "
              f"geometric {means['geometric']:.2f}x")
    print(f"outputs in {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
