"""Command line interface: simulate, compare, sweep.

Exit codes: 0 success, 2 configuration error, 3 workload/trace error,
4 simulation integrity error (including simulated out-of-memory).
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import (MODES, SystemConfig, config_from_mapping,
                     load_config_file)
from .engine import compare, simulate
from .errors import (ConfigError, SimOutOfMemoryError,
                     SimulationIntegrityError, TraceFormatError)
from .report import emit
from .workloads import parse_workload_spec

SEED_ENV = "MGPU_MEMSIM_SEED"

# Averages reported for an instruction-level simulation of a 4-GPU
# system over 12 benchmark applications.  Printed for context only;
# this cost model does not target them.
REFERENCE_TSM_VS_RDMA = 3.9
REFERENCE_TSM_VS_UM = 8.2


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TraceFormatError as exc:
        print(f"workload error: {exc}", file=sys.stderr)
        return 3
    except (SimulationIntegrityError, SimOutOfMemoryError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgpu-memsim",
        description="Desk-scale simulator of multi-GPU memory organizations "
                    "(shared tsm, per-GPU rdma, unified um)")
    sub = parser.add_subparsers(required=True)

    sim = sub.add_parser("simulate", help="run one workload in one mode")
    _common_args(sim)
    sim.add_argument("--mode", choices=MODES, default=None,
                     help="memory organization (default: config file mode)")
    sim.set_defaults(func=_cmd_simulate)

    cmp_parser = sub.add_parser("compare",
                                help="run workloads across modes")
    _common_args(cmp_parser)
    cmp_parser.add_argument("--modes", default="tsm,rdma,um",
                            help="comma-separated mode list")
    cmp_parser.add_argument("--baseline", default="rdma")
    cmp_parser.set_defaults(func=_cmd_compare)

    sweep = sub.add_parser("sweep", help="vary one config key over a range")
    _common_args(sweep)
    sweep.add_argument("--mode", choices=MODES, default=None)
    sweep.add_argument("--param", required=True,
                       help="key=v1,v2,... or key=start:stop:step")
    sweep.set_defaults(func=_cmd_sweep)
    return parser


def _common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="flat key=value file")
    p.add_argument("--workload", action="append", required=True,
                   help="workload spec string or trace file (repeatable)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None,
                   help=f"workload seed (overrides ${SEED_ENV})")


def _load_cfg(args) -> SystemConfig:
    cfg = (load_config_file(args.config) if args.config
           else SystemConfig())
    mode = getattr(args, "mode", None)
    if mode:
        cfg = cfg.replace(mode=mode)
    return cfg.validate()


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env, 0)
        except ValueError as exc:
            raise ConfigError(f"${SEED_ENV} is not an integer: {env!r}"
                              ) from exc
    return 0


def _workloads(args, cfg: SystemConfig):
    seed = _seed(args)
    return [parse_workload_spec(spec, seed=seed,
                                cus_per_gpu=cfg.cus_per_gpu,
                                num_gpus=cfg.num_gpus)
            for spec in args.workload]


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    out = _outdir(args)
    for workload in _workloads(args, cfg):
        report = simulate(cfg, workload)
        base = os.path.join(out, f"report_{workload.name}_{cfg.mode}")
        emit(report, "json", base + ".json")
        emit(report, "csv", base + ".csv")
        print(f"{workload.name} [{cfg.mode}] sim_time "
              f"{report.sim_time_ps / 1e6:.3f} us  "
              f"remote {report.counters['remote_accesses']}  "
              f"offchip_bytes {report.counters['bytes_on_offchip_links']}  "
              f"-> {base}.json")
    return 0


def _cmd_compare(args) -> int:
    cfg = _load_cfg(args)
    out = _outdir(args)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r} in --modes")
    workloads = _workloads(args, cfg)
    comparison = compare(cfg, workloads, modes, baseline=args.baseline)
    base = os.path.join(out, "comparison")
    emit(comparison, "json", base + ".json")
    emit(comparison, "csv", base + ".csv")
    emit(comparison, "plotdata", base + ".plotdata")

    print(f"speedup vs {comparison.baseline} "
          f"(simulated time ratio, higher is faster):")
    for row in comparison.results:
        print(f"  {row['workload']:<34} {row['mode']:<5} "
              f"{row['sim_time_ps'] / 1e6:>12.3f} us   "
              f"x{row['speedup_vs_baseline']:.3f}")
    for mode, means in comparison.mean_speedup.items():
        print(f"  mean[{mode}] arithmetic x{means['arithmetic']:.3f} "
              f"geometric x{means['geometric']:.3f}")
    print(f"  context: a published instruction-level study of a 4-GPU "
          f"system reports average speedups of x{REFERENCE_TSM_VS_RDMA} "
          f"(tsm vs rdma) and x{REFERENCE_TSM_VS_UM} (tsm vs um) on 12 "
          f"benchmarks; those magnitudes are not targets of this model.")
    print(f"  -> {base}.json")
    return 0


def _parse_param(text: str) -> tuple[str, list[str]]:
    key, eq, value = text.partition("=")
    if not eq:
        raise ConfigError("--param needs key=v1,v2,... or key=start:stop:step")
    key = key.strip()
    if ":" in value:
        parts = value.split(":")
        if len(parts) != 3:
            raise ConfigError("--param range must be start:stop:step")
        try:
            start, stop, step = (int(p, 0) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"--param range: {exc}") from exc
        if step <= 0:
            raise ConfigError("--param range step must be > 0")
        return key, [str(v) for v in range(start, stop + 1, step)]
    values = [v.strip() for v in value.split(",") if v.strip()]
    if not values:
        raise ConfigError("--param has no values")
    return key, values


def _cmd_sweep(args) -> int:
    base_cfg = _load_cfg(args)
    out = _outdir(args)
    key, values = _parse_param(args.param)
    rows = []
    for value in values:
        override = config_from_mapping({key: value})
        cfg = base_cfg.replace(**{key: getattr(override, key)}).validate()
        for workload in _workloads(args, cfg):
            report = simulate(cfg, workload)
            tag = f"{workload.name}_{cfg.mode}_{key}{value}"
            emit(report, "json", os.path.join(out, f"report_{tag}.json"))
            rows.append((workload.name, value, report.sim_time_ps))
            print(f"{workload.name} [{cfg.mode}] {key}={value} "
                  f"sim_time {report.sim_time_ps / 1e6:.3f} us")
    summary = os.path.join(out, f"sweep_{key}.csv")
    with open(summary, "w", encoding="utf-8", newline="") as fh:
        fh.write("workload,%s,sim_time_ps\n" % key)
        for name, value, ps in rows:
            fh.write(f"{name},{value},{ps}\n")
    print(f"  -> {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
