"""Desk-scale discrete-event simulator of multi-GPU memory hierarchies.

Three memory organizations of the same GPU hardware are compared:

* ``tsm``  -- one physically shared main memory behind a central
  switch; no remote accesses exist at all;
* ``rdma`` -- per-GPU memory islands with direct remote access over
  off-chip links;
* ``um``   -- a unified view with first-touch placement and page
  migration on remote faults.
"""

from .config import (CPU_ISLAND, MODE_RDMA, MODE_TSM, MODE_UM, MODES,
                     SystemConfig, load_config_file)
from .engine import Simulation, compare, fingerprint, simulate
from .errors import (ConfigError, SimOutOfMemoryError,
                     SimulationIntegrityError, TraceFormatError)
from .report import Comparison, StatsReport, emit, load_json
from .workloads import (DnnWuSpec, Placement, SgemmSpec, TraceRecord,
                        Workload, bundled_suite, gen_dnn_wu, gen_sgemm,
                        gen_synthetic, load_trace, parse_workload_spec,
                        save_trace)

__version__ = "0.1.0"

__all__ = [
    "CPU_ISLAND", "MODES", "MODE_RDMA", "MODE_TSM", "MODE_UM",
    "SystemConfig", "load_config_file",
    "Simulation", "simulate", "compare", "fingerprint",
    "ConfigError", "TraceFormatError", "SimulationIntegrityError",
    "SimOutOfMemoryError",
    "Comparison", "StatsReport", "emit", "load_json",
    "Workload", "TraceRecord", "Placement", "SgemmSpec", "DnnWuSpec",
    "gen_sgemm", "gen_dnn_wu", "gen_synthetic", "load_trace", "save_trace",
    "parse_workload_spec", "bundled_suite",
    "__version__",
]
