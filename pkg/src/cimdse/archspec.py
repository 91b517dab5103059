"""Hardware description: CiM primitives, memory levels, and system configs."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .jsonutil import as_rational, load_json, rational_to_json

PRIMITIVE_KINDS = ("analog", "digital")
CELL_TYPES = ("sram6t", "sram8t", "other")

# memory levels a CiM engine may replace
CIM_PLACEMENT_LEVELS = ("RF", "SMEM")

PLACEMENTS = ("baseline", "cim_rf", "cim_smem_configA", "cim_smem_configB")


def data_dir() -> Path:
    """Root of the bundled data files; CIMDSE_DATA_DIR overrides it."""
    override = os.environ.get("CIMDSE_DATA_DIR")
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / "data"


def _positive_int(name: str, value) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value


@dataclass(frozen=True)
class CimPrimitive:
    """One compute-in-memory array macro.

    r_p x c_p weights are exercised in parallel each step; r_h x c_h groups
    are held and stepped through sequentially, so the array stores
    r_p*c_p*r_h*c_h weights and exposes the same number of MAC positions.
    """

    name: str
    kind: str
    cell: str
    r_p: int
    c_p: int
    r_h: int
    c_h: int
    energy_per_mac_pj: Fraction
    cycles_per_step: int
    area_overhead: Fraction
    weight_bits_per_cell: int = 1

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValueError("primitive name must be a non-empty string")
        if self.kind not in PRIMITIVE_KINDS:
            raise ValueError(f"kind must be one of {PRIMITIVE_KINDS}, got {self.kind!r}")
        if self.cell not in CELL_TYPES:
            raise ValueError(f"cell must be one of {CELL_TYPES}, got {self.cell!r}")
        for field in ("r_p", "c_p", "r_h", "c_h", "cycles_per_step", "weight_bits_per_cell"):
            _positive_int(field, getattr(self, field))
        object.__setattr__(self, "energy_per_mac_pj", as_rational(self.energy_per_mac_pj))
        object.__setattr__(self, "area_overhead", as_rational(self.area_overhead))
        if self.energy_per_mac_pj <= 0:
            raise ValueError("energy_per_mac_pj must be positive")
        if self.area_overhead < 1:
            raise ValueError(f"area_overhead must be >= 1, got {self.area_overhead}")

    @property
    def storage_weights(self) -> int:
        return self.r_p * self.c_p * self.r_h * self.c_h

    @property
    def mac_units(self) -> int:
        return self.storage_weights

    def storage_bytes(self, bit_precision: int = 8) -> int:
        if bit_precision % 8:
            raise ValueError(f"bit_precision {bit_precision} is not a whole number of bytes")
        return self.storage_weights * (bit_precision // 8)

    def cells_per_weight(self, bit_precision: int = 8) -> int:
        if bit_precision % self.weight_bits_per_cell:
            raise ValueError(
                f"{self.weight_bits_per_cell}-bit cells cannot hold "
                f"{bit_precision}-bit weights evenly"
            )
        return bit_precision // self.weight_bits_per_cell

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "cell": self.cell,
            "r_p": self.r_p,
            "c_p": self.c_p,
            "r_h": self.r_h,
            "c_h": self.c_h,
            "energy_per_mac_pj": rational_to_json(self.energy_per_mac_pj),
            "cycles_per_step": self.cycles_per_step,
            "area_overhead": rational_to_json(self.area_overhead),
            "weight_bits_per_cell": self.weight_bits_per_cell,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CimPrimitive":
        if not isinstance(obj, dict):
            raise ValueError(f"expected an object for a primitive, got {obj!r}")
        return cls(
            name=obj.get("name"),
            kind=obj.get("kind"),
            cell=obj.get("cell"),
            r_p=obj.get("r_p"),
            c_p=obj.get("c_p"),
            r_h=obj.get("r_h"),
            c_h=obj.get("c_h"),
            energy_per_mac_pj=as_rational(obj.get("energy_per_mac_pj")),
            cycles_per_step=obj.get("cycles_per_step"),
            area_overhead=as_rational(obj.get("area_overhead")),
            weight_bits_per_cell=obj.get("weight_bits_per_cell", 1),
        )


def load_primitive(path) -> CimPrimitive:
    return CimPrimitive.from_json(load_json(path))


@dataclass(frozen=True)
class MemoryLevel:
    """One level of the memory hierarchy.

    capacity_bytes None means unbounded (main memory).  The bandwidth is
    for the link toward the compute side; None means it never binds.
    """

    name: str
    capacity_bytes: int | None
    bandwidth_bytes_per_cycle: Fraction | None
    energy_per_byte_pj: Fraction

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValueError("level name must be a non-empty string")
        if self.capacity_bytes is not None:
            _positive_int(f"{self.name} capacity_bytes", self.capacity_bytes)
        if self.bandwidth_bytes_per_cycle is not None:
            bw = as_rational(self.bandwidth_bytes_per_cycle)
            if bw <= 0:
                raise ValueError(f"{self.name} bandwidth must be positive, got {bw}")
            object.__setattr__(self, "bandwidth_bytes_per_cycle", bw)
        energy = as_rational(self.energy_per_byte_pj)
        if energy < 0:
            raise ValueError(f"{self.name} energy_per_byte_pj must be non-negative")
        object.__setattr__(self, "energy_per_byte_pj", energy)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "capacity_bytes": self.capacity_bytes,
            "bandwidth_bytes_per_cycle": (
                None
                if self.bandwidth_bytes_per_cycle is None
                else rational_to_json(self.bandwidth_bytes_per_cycle)
            ),
            "energy_per_byte_pj": rational_to_json(self.energy_per_byte_pj),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MemoryLevel":
        if not isinstance(obj, dict):
            raise ValueError(f"expected an object for a memory level, got {obj!r}")
        capacity = obj.get("capacity_bytes")
        if isinstance(capacity, str):
            if capacity not in ("inf", "unbounded"):
                raise ValueError(f"invalid capacity {capacity!r}")
            capacity = None
        bandwidth = obj.get("bandwidth_bytes_per_cycle")
        return cls(
            name=obj.get("name"),
            capacity_bytes=capacity,
            bandwidth_bytes_per_cycle=None if bandwidth is None else as_rational(bandwidth),
            energy_per_byte_pj=as_rational(obj.get("energy_per_byte_pj")),
        )


@dataclass(frozen=True)
class BaselinePe:
    """Tensor-core style MAC grid used as the reference engine."""

    rows: int = 16
    cols: int = 16
    simd: int = 4
    energy_per_mac_pj: Fraction = Fraction(26, 100)

    def __post_init__(self):
        for field in ("rows", "cols", "simd"):
            _positive_int(field, getattr(self, field))
        energy = as_rational(self.energy_per_mac_pj)
        if energy <= 0:
            raise ValueError("energy_per_mac_pj must be positive")
        object.__setattr__(self, "energy_per_mac_pj", energy)

    @property
    def mac_units(self) -> int:
        return self.rows * self.cols * self.simd

    def to_json(self) -> dict:
        return {
            "type": "baseline",
            "rows": self.rows,
            "cols": self.cols,
            "simd": self.simd,
            "energy_per_mac_pj": rational_to_json(self.energy_per_mac_pj),
        }


@dataclass(frozen=True)
class CimEngine:
    """A bank of identical CiM primitives standing in for one memory level."""

    primitive: CimPrimitive
    at_level: str
    primitive_count: int
    staging_energy_pj: Fraction = Fraction(2, 100)

    def __post_init__(self):
        if not isinstance(self.primitive, CimPrimitive):
            raise ValueError("primitive must be a CimPrimitive")
        if self.at_level not in CIM_PLACEMENT_LEVELS:
            raise ValueError(
                f"at_level must be one of {CIM_PLACEMENT_LEVELS}, got {self.at_level!r}"
            )
        _positive_int("primitive_count", self.primitive_count)
        energy = as_rational(self.staging_energy_pj)
        if energy < 0:
            raise ValueError("staging_energy_pj must be non-negative")
        object.__setattr__(self, "staging_energy_pj", energy)

    def to_json(self) -> dict:
        return {
            "type": "cim",
            "at_level": self.at_level,
            "primitive_count": self.primitive_count,
            "staging_energy_pj": rational_to_json(self.staging_energy_pj),
            "primitive": self.primitive.to_json(),
        }


def _engine_from_json(obj) -> BaselinePe | CimEngine:
    if not isinstance(obj, dict):
        raise ValueError(f"expected an object for an engine, got {obj!r}")
    kind = obj.get("type")
    if kind == "baseline":
        return BaselinePe(
            rows=obj.get("rows", 16),
            cols=obj.get("cols", 16),
            simd=obj.get("simd", 4),
            energy_per_mac_pj=as_rational(obj.get("energy_per_mac_pj", Fraction(26, 100))),
        )
    if kind == "cim":
        return CimEngine(
            primitive=CimPrimitive.from_json(obj.get("primitive")),
            at_level=obj.get("at_level"),
            primitive_count=obj.get("primitive_count"),
            staging_energy_pj=as_rational(obj.get("staging_energy_pj", Fraction(2, 100))),
        )
    raise ValueError(f"unknown engine type {kind!r}")


@dataclass(frozen=True)
class SystemConfig:
    """A full system: memory levels outermost-first plus a compute engine."""

    name: str
    levels: tuple[MemoryLevel, ...]
    engine: BaselinePe | CimEngine
    reduction_energy_pj: Fraction = Fraction(5, 100)
    clock_ghz: Fraction = Fraction(1)

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValueError("config name must be a non-empty string")
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ValueError("a config needs at least one memory level")
        names = [lvl.name for lvl in levels]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate level names: {names}")
        # capacities must not grow toward compute; None reads as unbounded
        prev_cap = math.inf
        prev_name = None
        for lvl in levels:
            cap = math.inf if lvl.capacity_bytes is None else lvl.capacity_bytes
            if cap > prev_cap:
                raise ValueError(
                    f"capacity grows from {prev_name} to {lvl.name} moving toward compute"
                )
            prev_cap, prev_name = cap, lvl.name
        if isinstance(self.engine, CimEngine) and self.engine.at_level in names:
            raise ValueError(
                f"level {self.engine.at_level} is replaced by the CiM engine "
                "and must not stay in levels"
            )
        if not isinstance(self.engine, (BaselinePe, CimEngine)):
            raise ValueError("engine must be a BaselinePe or CimEngine")
        reduction = as_rational(self.reduction_energy_pj)
        if reduction < 0:
            raise ValueError("reduction_energy_pj must be non-negative")
        object.__setattr__(self, "reduction_energy_pj", reduction)
        clock = as_rational(self.clock_ghz)
        if clock <= 0:
            raise ValueError("clock_ghz must be positive")
        object.__setattr__(self, "clock_ghz", clock)

    def level(self, name: str) -> MemoryLevel:
        for lvl in self.levels:
            if lvl.name == name:
                return lvl
        raise KeyError(f"no level named {name!r} in config {self.name!r}")

    def has_level(self, name: str) -> bool:
        return any(lvl.name == name for lvl in self.levels)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "levels": [lvl.to_json() for lvl in self.levels],
            "engine": self.engine.to_json(),
            "reduction_energy_pj": rational_to_json(self.reduction_energy_pj),
            "clock_ghz": rational_to_json(self.clock_ghz),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SystemConfig":
        if not isinstance(obj, dict):
            raise ValueError(f"expected an object for a config, got {obj!r}")
        raw_levels = obj.get("levels")
        if not isinstance(raw_levels, list):
            raise ValueError("'levels' must be an array")
        return cls(
            name=obj.get("name"),
            levels=tuple(MemoryLevel.from_json(lvl) for lvl in raw_levels),
            engine=_engine_from_json(obj.get("engine")),
            reduction_energy_pj=as_rational(obj.get("reduction_energy_pj", Fraction(5, 100))),
            clock_ghz=as_rational(obj.get("clock_ghz", 1)),
        )


def load_config(path) -> SystemConfig:
    return SystemConfig.from_json(load_json(path))


def iso_area_count(primitive: CimPrimitive, capacity_bytes: int | None,
                   bit_precision: int = 8) -> int:
    """How many primitives fit in the silicon area of a memory of this size.

    Weight storage is SRAM on both sides; the primitive pays area_overhead
    per stored byte for its compute periphery.
    """
    if capacity_bytes is None:
        raise ValueError("cannot size primitives against an unbounded level")
    per_primitive = primitive.storage_bytes(bit_precision) * primitive.area_overhead
    count = int(Fraction(capacity_bytes) / per_primitive)
    if count < 1:
        raise ValueError(
            f"primitive {primitive.name} does not fit in {capacity_bytes} bytes "
            f"(needs {per_primitive} byte-equivalents)"
        )
    return count


def load_system_template(root=None) -> SystemConfig:
    root = Path(root) if root is not None else data_dir()
    return load_config(root / "system-default.json")


def build_config(placement: str, primitive: CimPrimitive | None = None,
                 root=None) -> SystemConfig:
    """Assemble one of the standard system placements.

    baseline          full hierarchy, tensor-core style engine
    cim_rf            primitives sized to the RF footprint, replacing the RF
    cim_smem_configA  same primitive budget as cim_rf, placed at SMEM
    cim_smem_configB  primitives sized to the whole SMEM footprint
    """
    canonical = {p.lower(): p for p in PLACEMENTS}.get(str(placement).lower())
    if canonical is None:
        raise ValueError(f"unknown placement {placement!r}, expected one of {PLACEMENTS}")
    template = load_system_template(root)
    by_name = {lvl.name: lvl for lvl in template.levels}
    for required in ("DRAM", "SMEM", "RF", "PEBUF"):
        if required not in by_name:
            raise ValueError(f"system template is missing level {required}")
    if canonical == "baseline":
        return template
    if primitive is None:
        raise ValueError(f"placement {canonical} needs a primitive")
    rf_cap = by_name["RF"].capacity_bytes
    smem_cap = by_name["SMEM"].capacity_bytes
    staging = by_name["PEBUF"].energy_per_byte_pj
    if canonical == "cim_rf":
        keep, at, count = ("DRAM", "SMEM"), "RF", iso_area_count(primitive, rf_cap)
    elif canonical == "cim_smem_configA":
        keep, at, count = ("DRAM",), "SMEM", iso_area_count(primitive, rf_cap)
    else:
        keep, at, count = ("DRAM",), "SMEM", iso_area_count(primitive, smem_cap)
    return SystemConfig(
        name=canonical,
        levels=tuple(lvl for lvl in template.levels if lvl.name in keep),
        engine=CimEngine(primitive, at, count, staging),
        reduction_energy_pj=template.reduction_energy_pj,
        clock_ghz=template.clock_ghz,
    )
