"""Access counting, energy, timing, and the headline metrics.

Counting walks the flattened loop structure once per hierarchy level.  A
tensor's fetch count at a level is the product of all loop trip counts
from the innermost loop indexing that tensor outward; multiplied by the
transfer granularity at that level this gives exact traffic.  Traffic is
booked single-ended at the providing level.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .archspec import CimEngine, SystemConfig
from .mapper import Mapping, heuristic_search, map_gemm, validate_mapping
from .workload import GemmShape

_REL = {"A": frozenset("MK"), "B": frozenset("KN"), "Z": frozenset("MN")}


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class AccessCounts:
    """Element counts per level and tensor, plus partial-sum reductions."""

    levels: dict
    reductions: int

    def level_elements(self, name: str) -> int:
        tensors = self.levels[name]
        return sum(t["reads"] + t["writes"] for t in tensors.values())


def count_accesses(gemm: GemmShape, cfg: SystemConfig, mapping: Mapping) -> AccessCounts:
    nests = mapping.nests
    cim = mapping.is_cim
    s_k, s_n = mapping.spatial_k, mapping.spatial_n

    cum_m, cum_n, cum_k = [], [], []
    tm = tn = tk = 1
    for nest in nests:
        tm *= nest.f_m
        tn *= nest.f_n
        tk *= nest.f_k
        cum_m.append(tm)
        cum_n.append(tn)
        cum_k.append(tk)

    def flatten(start: int):
        loops = []
        for nest in nests[start:]:
            for dim in reversed(nest.order):
                trip = nest.factor(dim)
                if trip > 1:
                    loops.append((dim, trip))
        return loops

    def fetch_rounds(loops, relevant) -> int:
        total = 1
        seen = False
        for dim, trip in loops:
            if not seen and dim in relevant:
                seen = True
            if seen:
                total *= trip
        return total

    def distinct_tiles(loops, relevant) -> int:
        total = 1
        for dim, trip in loops:
            if dim in relevant:
                total *= trip
        return total

    feed_gran = {"A": s_k, "B": s_k * s_n, "Z": s_n}

    def held_gran(i: int):
        return {
            "A": cum_m[i] * s_k * cum_k[i],
            "B": s_k * cum_k[i] * s_n * cum_n[i],
            "Z": cum_m[i] * s_n * cum_n[i],
        }

    smem_present = any(nest.level == "SMEM" for nest in nests)
    # B is pinned in the arrays, so its DRAM traffic equals the feed count
    feed_b = fetch_rounds(flatten(0), _REL["B"]) * feed_gran["B"] if cim else 0

    levels = {}
    for i, nest in enumerate(nests):
        if cim:
            if nest.level == "DRAM" and smem_present:
                start, gran = i, held_gran(i - 1)
            else:
                start, gran = 0, feed_gran
        else:
            start, gran = i, (feed_gran if i == 0 else held_gran(i - 1))
        loops = flatten(start)

        entry = {}
        entry["A"] = {"reads": fetch_rounds(loops, _REL["A"]) * gran["A"], "writes": 0}
        if cim:
            if nest.level == "CIMBUF":
                entry["B"] = {"reads": 0, "writes": feed_b}
            elif nest.level == "DRAM":
                entry["B"] = {"reads": feed_b, "writes": 0}
            else:
                entry["B"] = {"reads": 0, "writes": 0}
        else:
            entry["B"] = {"reads": fetch_rounds(loops, _REL["B"]) * gran["B"], "writes": 0}
        f_z = fetch_rounds(loops, _REL["Z"])
        d_z = distinct_tiles(loops, _REL["Z"])
        entry["Z"] = {"reads": (f_z - d_z) * gran["Z"], "writes": f_z * gran["Z"]}
        levels[nest.level] = entry

    k_outer = 1
    for nest in nests[mapping.reduce_level:]:
        k_outer *= nest.f_k
    reductions = (k_outer - 1) * gemm.m * gemm.n if k_outer > 1 else 0
    return AccessCounts(levels=levels, reductions=reductions)


def energy_breakdown(gemm: GemmShape, cfg: SystemConfig, mapping: Mapping,
                     counts: AccessCounts | None = None) -> dict[str, Fraction]:
    """Picojoules per hierarchy level plus 'mac' and 'reduction' entries."""
    if counts is None:
        counts = count_accesses(gemm, cfg, mapping)
    bpe = gemm.bytes_per_element
    engine = cfg.engine
    cim = isinstance(engine, CimEngine)
    out = {}
    for name in counts.levels:
        if cim and name == "CIMBUF":
            per_byte = engine.staging_energy_pj
        else:
            per_byte = cfg.level(name).energy_per_byte_pj
        out[name] = counts.level_elements(name) * bpe * per_byte
    mac = engine.primitive.energy_per_mac_pj if cim else engine.energy_per_mac_pj
    out["mac"] = gemm.m * gemm.n * gemm.k * mac
    out["reduction"] = counts.reductions * cfg.reduction_energy_pj
    return out


def total_energy_pj(gemm: GemmShape, cfg: SystemConfig, mapping: Mapping,
                    counts: AccessCounts | None = None) -> Fraction:
    return sum(energy_breakdown(gemm, cfg, mapping, counts).values(), Fraction(0))


def compute_cycles(gemm: GemmShape, cfg: SystemConfig, mapping: Mapping) -> int:
    engine = cfg.engine
    if isinstance(engine, CimEngine):
        prim = engine.primitive
        steps = mapping.factor_product("M")
        for nest in mapping.nests:
            steps *= nest.f_n * nest.f_k
        steps *= _ceil_div(mapping.spatial.k_rows, prim.r_p)
        steps *= _ceil_div(mapping.spatial.n_cols, prim.c_p)
        return steps * prim.cycles_per_step
    work = (mapping.factor_product("M") * mapping.factor_product("N")
            * mapping.factor_product("K"))
    return _ceil_div(work, engine.mac_units)


def link_cycles(gemm: GemmShape, cfg: SystemConfig, counts: AccessCounts) -> dict[str, int]:
    bpe = gemm.bytes_per_element
    links = {}
    for name in counts.levels:
        if not cfg.has_level(name):
            continue
        bandwidth = cfg.level(name).bandwidth_bytes_per_cycle
        if bandwidth is None:
            continue
        ratio = Fraction(counts.level_elements(name) * bpe) / bandwidth
        links[name] = _ceil_div(ratio.numerator, ratio.denominator)
    return links


@dataclass(frozen=True)
class Result:
    gemm: GemmShape
    config: str
    mapping: Mapping
    counts: AccessCounts
    energy_pj: dict
    total_pj: Fraction
    compute_cycles: int
    link_cycles: dict
    total_cycles: int
    bound: str
    tops_per_w: Fraction
    gflops: Fraction
    utilization: Fraction


def evaluate(gemm: GemmShape, cfg: SystemConfig, mapping: Mapping | None = None,
             mapper: str = "priority", seed: int = 0, invalid_limit: int = 100000,
             link_model: str = "max") -> Result:
    """Map (if needed) and cost one GEMM on one system.

    link_model picks how concurrent link transfers share time: "max"
    overlaps them, "sum" serializes them.  Compute always overlaps data
    movement; the slower side sets total_cycles.
    """
    if link_model not in ("max", "sum"):
        raise ValueError(f"link_model must be 'max' or 'sum', got {link_model!r}")
    if mapping is None:
        if mapper == "priority":
            mapping = map_gemm(gemm, cfg)
        elif mapper == "heuristic":
            mapping = heuristic_search(gemm, cfg, seed=seed, invalid_limit=invalid_limit)
            if mapping is None:
                raise ValueError("heuristic search found no mapping (invalid_limit too small)")
        else:
            raise ValueError(f"mapper must be 'priority' or 'heuristic', got {mapper!r}")
    problems = validate_mapping(gemm, cfg, mapping)
    if problems:
        raise ValueError(f"invalid mapping for {gemm}: {', '.join(problems)}")

    counts = count_accesses(gemm, cfg, mapping)
    breakdown = energy_breakdown(gemm, cfg, mapping, counts)
    total_pj = sum(breakdown.values(), Fraction(0))
    compute = compute_cycles(gemm, cfg, mapping)
    links = link_cycles(gemm, cfg, counts)
    if links:
        pressure = max(links.values()) if link_model == "max" else sum(links.values())
    else:
        pressure = 0
    total_cycles = max(compute, pressure)
    bound = "compute" if compute >= pressure else "memory"

    engine = cfg.engine
    if isinstance(engine, CimEngine):
        prim = engine.primitive
        occupied = (mapping.factor_product("K") * mapping.factor_product("N")
                    * engine.primitive_count * prim.storage_weights)
        utilization = Fraction(gemm.k * gemm.n, occupied)
    else:
        utilization = Fraction(gemm.m * gemm.n * gemm.k,
                               engine.mac_units * compute)

    return Result(
        gemm=gemm,
        config=cfg.name,
        mapping=mapping,
        counts=counts,
        energy_pj=breakdown,
        total_pj=total_pj,
        compute_cycles=compute,
        link_cycles=links,
        total_cycles=total_cycles,
        bound=bound,
        tops_per_w=Fraction(gemm.ops) / total_pj,
        gflops=Fraction(gemm.ops) * cfg.clock_ghz / total_cycles,
        utilization=utilization,
    )
