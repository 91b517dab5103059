"""Analytical design-space exploration for compute-in-memory GEMM accelerators."""

from .archspec import (
    BaselinePe,
    CimEngine,
    CimPrimitive,
    MemoryLevel,
    SystemConfig,
    build_config,
    data_dir,
    iso_area_count,
    load_config,
    load_primitive,
    load_system_template,
)
from .costmodel import (
    AccessCounts,
    Result,
    count_accesses,
    compute_cycles,
    energy_breakdown,
    evaluate,
    link_cycles,
    total_energy_pj,
)
from .mapper import (
    LoopNest,
    Mapping,
    Partition,
    SpatialMap,
    choose_partition,
    decide_loop_order,
    heuristic_search,
    map_gemm,
    optimize_dimension,
    validate_mapping,
)
from .workload import (
    GemmShape,
    Suite,
    attention_to_gemms,
    conv_to_gemm,
    fc_to_gemm,
    load_suite,
    synthetic_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AccessCounts",
    "BaselinePe",
    "CimEngine",
    "CimPrimitive",
    "GemmShape",
    "LoopNest",
    "Mapping",
    "MemoryLevel",
    "Partition",
    "Result",
    "SpatialMap",
    "Suite",
    "SystemConfig",
    "attention_to_gemms",
    "build_config",
    "choose_partition",
    "compute_cycles",
    "conv_to_gemm",
    "count_accesses",
    "data_dir",
    "decide_loop_order",
    "energy_breakdown",
    "evaluate",
    "fc_to_gemm",
    "heuristic_search",
    "iso_area_count",
    "link_cycles",
    "load_config",
    "load_primitive",
    "load_suite",
    "load_system_template",
    "map_gemm",
    "optimize_dimension",
    "synthetic_sweep",
    "total_energy_pj",
    "validate_mapping",
    "__version__",
]
