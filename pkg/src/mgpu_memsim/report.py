"""Result containers and their stable serializations (json/csv/plotdata).

Serialized field order is fixed so that identical runs produce
byte-identical files; nothing time-of-day or environment dependent is
ever written.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field


@dataclass
class StatsReport:
    mode: str
    workload: str
    seed: int
    sim_time_ps: int
    counters: dict
    derived: dict
    links: list
    barrier_snapshots: list
    fingerprint: str

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "report",
            "fingerprint": self.fingerprint,
            "mode": self.mode,
            "workload": self.workload,
            "seed": self.seed,
            "sim_time_ps": self.sim_time_ps,
            "counters": dict(self.counters),
            "derived": dict(self.derived),
            "barrier_snapshots": list(self.barrier_snapshots),
            "links": list(self.links),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StatsReport":
        return cls(
            mode=data["mode"], workload=data["workload"], seed=data["seed"],
            sim_time_ps=data["sim_time_ps"], counters=data["counters"],
            derived=data["derived"], links=data["links"],
            barrier_snapshots=data["barrier_snapshots"],
            fingerprint=data["fingerprint"])


@dataclass
class Comparison:
    baseline: str
    modes: list[str]
    workloads: list[str]
    results: list[dict]  # rows: workload, mode, sim_time_ps, speedup, ...
    mean_speedup: dict = field(default_factory=dict)

    def time_of(self, workload: str, mode: str) -> int:
        for row in self.results:
            if row["workload"] == workload and row["mode"] == mode:
                return row["sim_time_ps"]
        raise KeyError((workload, mode))

    def speedup_of(self, workload: str, mode: str) -> float:
        for row in self.results:
            if row["workload"] == workload and row["mode"] == mode:
                return row["speedup_vs_baseline"]
        raise KeyError((workload, mode))

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "comparison",
            "baseline": self.baseline,
            "modes": list(self.modes),
            "workloads": list(self.workloads),
            "results": list(self.results),
            "mean_speedup": dict(self.mean_speedup),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Comparison":
        return cls(baseline=data["baseline"], modes=data["modes"],
                   workloads=data["workloads"], results=data["results"],
                   mean_speedup=data["mean_speedup"])


def mean_speedups(results: list[dict], modes: list[str]) -> dict:
    """Arithmetic and geometric mean speedup per mode across workloads."""
    means: dict = {}
    for mode in modes:
        values = [row["speedup_vs_baseline"] for row in results
                  if row["mode"] == mode]
        if not values:
            continue
        arith = sum(values) / len(values)
        geo = math.exp(sum(math.log(v) for v in values) / len(values))
        means[mode] = {"arithmetic": arith, "geometric": geo}
    return means


# ---------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------

FORMATS = ("json", "csv", "plotdata")


def emit(obj, fmt: str, path: str) -> str:
    """Write a report or comparison to `path` in `fmt`; returns path."""
    if fmt == "json":
        _write_text(path, json.dumps(obj.to_dict(), indent=2) + "\n")
    elif fmt == "csv":
        _emit_csv(obj, path)
    elif fmt == "plotdata":
        _emit_plotdata(obj, path)
    else:
        raise ValueError(f"unknown format {fmt!r}; pick from {FORMATS}")
    return path


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _emit_csv(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if isinstance(obj, StatsReport):
            writer.writerow(["key", "value"])
            writer.writerow(["mode", obj.mode])
            writer.writerow(["workload", obj.workload])
            writer.writerow(["seed", obj.seed])
            writer.writerow(["sim_time_ps", obj.sim_time_ps])
            for key, value in obj.counters.items():
                writer.writerow([key, value])
            for key, value in obj.derived.items():
                writer.writerow([key, value])
            writer.writerow(["fingerprint", obj.fingerprint])
        else:
            writer.writerow(["workload", "mode", "sim_time_ps",
                             "speedup_vs_baseline"])
            for row in obj.results:
                writer.writerow([row["workload"], row["mode"],
                                 row["sim_time_ps"],
                                 row["speedup_vs_baseline"]])


def _emit_plotdata(obj, path: str) -> None:
    """Grouped-bar data: one row per (workload, mode) with the speedup."""
    lines = ["# workload mode speedup"]
    if isinstance(obj, StatsReport):
        for key, value in obj.counters.items():
            lines.append(f"{obj.workload} {key} {value}")
    else:
        for row in obj.results:
            lines.append(f"{row['workload']} {row['mode']} "
                         f"{row['speedup_vs_baseline']}")
    _write_text(path, "\n".join(lines) + "\n")


def load_json(path: str):
    """Parse an emitted json file back into its dataclass."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("kind") == "comparison":
        return Comparison.from_dict(data)
    return StatsReport.from_dict(data)
