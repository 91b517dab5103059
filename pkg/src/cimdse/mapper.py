"""Mapping GEMMs onto the memory hierarchy and compute engines.

A mapping is a stack of loop nests, innermost (compute) first.  Each nest
carries temporal tiling factors for M, N, K and a loop order written
outermost-first ("MNK" runs M outside, K inside).  CiM mappings also carry
a partition (how many primitives split K and N) and a spatial residency
(how many weight rows and columns each primitive holds).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .archspec import BaselinePe, CimEngine, CimPrimitive, SystemConfig
from .workload import GemmShape

ORDERS = ("MNK", "MKN", "KMN", "KNM", "NMK", "NKM")

# balance guard: spans of engaged primitives along K and N may differ by
# at most this factor (strict) before a partition is rejected
_BALANCE_LIMIT = 4


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _smallest_prime_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


def _divisors(n: int) -> list[int]:
    small, large = [], []
    f = 1
    while f * f <= n:
        if n % f == 0:
            small.append(f)
            if f != n // f:
                large.append(n // f)
        f += 1
    small.extend(reversed(large))
    return small


@dataclass(frozen=True, slots=True)
class LoopNest:
    level: str
    f_m: int
    f_n: int
    f_k: int
    order: str

    def __post_init__(self):
        for name in ("f_m", "f_n", "f_k"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.order not in ORDERS:
            raise ValueError(f"order must be a permutation of MNK, got {self.order!r}")

    def factor(self, dim: str) -> int:
        return {"M": self.f_m, "N": self.f_n, "K": self.f_k}[dim]

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "factors": [self.f_m, self.f_n, self.f_k],
            "order": self.order,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LoopNest":
        if not isinstance(obj, dict):
            raise ValueError(f"expected an object for a loop nest, got {obj!r}")
        factors = obj.get("factors")
        if not isinstance(factors, list) or len(factors) != 3:
            raise ValueError(f"'factors' must be [f_m, f_n, f_k], got {factors!r}")
        return cls(obj.get("level"), factors[0], factors[1], factors[2], obj.get("order"))


@dataclass(frozen=True, slots=True)
class Partition:
    """How many primitives split the K rows and N columns."""

    p_k: int
    p_n: int

    def __post_init__(self):
        for name in ("p_k", "p_n"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True, slots=True)
class SpatialMap:
    """Weight rows and columns resident in each engaged primitive."""

    k_rows: int
    n_cols: int

    def __post_init__(self):
        for name in ("k_rows", "n_cols"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class Mapping:
    nests: tuple[LoopNest, ...]
    partition: Partition | None = None
    spatial: SpatialMap | None = None
    reduce_level: int | None = None

    def __post_init__(self):
        nests = tuple(self.nests)
        object.__setattr__(self, "nests", nests)
        if not nests:
            raise ValueError("a mapping needs at least one loop nest")
        if (self.partition is None) != (self.spatial is None):
            raise ValueError("partition and spatial must be given together")
        if self.reduce_level is None:
            object.__setattr__(self, "reduce_level", 1 if self.is_cim else 2)
        if not 0 <= self.reduce_level <= len(nests):
            raise ValueError(f"reduce_level {self.reduce_level} out of range")

    @property
    def is_cim(self) -> bool:
        return self.partition is not None

    def factor_product(self, dim: str) -> int:
        total = 1
        for nest in self.nests:
            total *= nest.factor(dim)
        return total

    @property
    def spatial_k(self) -> int:
        return self.partition.p_k * self.spatial.k_rows if self.is_cim else 1

    @property
    def spatial_n(self) -> int:
        return self.partition.p_n * self.spatial.n_cols if self.is_cim else 1

    def padded_dims(self) -> tuple[int, int, int]:
        """(M, N, K) extents the mapping actually walks, padding included."""
        return (
            self.factor_product("M"),
            self.spatial_n * self.factor_product("N"),
            self.spatial_k * self.factor_product("K"),
        )

    def to_json(self) -> dict:
        out = {}
        if self.is_cim:
            out["partition"] = {"p_k": self.partition.p_k, "p_n": self.partition.p_n}
            out["spatial"] = {"k_rows": self.spatial.k_rows, "n_cols": self.spatial.n_cols}
        out["nests"] = [nest.to_json() for nest in self.nests]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Mapping":
        if not isinstance(obj, dict):
            raise ValueError(f"expected an object for a mapping, got {obj!r}")
        raw_nests = obj.get("nests")
        if not isinstance(raw_nests, list) or not raw_nests:
            raise ValueError("'nests' must be a non-empty array")
        nests = tuple(LoopNest.from_json(nest) for nest in raw_nests)
        partition = spatial = None
        if "partition" in obj or "spatial" in obj:
            part = obj.get("partition") or {}
            spat = obj.get("spatial") or {}
            partition = Partition(part.get("p_k"), part.get("p_n"))
            spatial = SpatialMap(spat.get("k_rows"), spat.get("n_cols"))
        return cls(nests=nests, partition=partition, spatial=spatial)


def decide_loop_order(f_m: int, f_n: int, f_k: int) -> str:
    """Pick a loop order for one nest, larger trip counts toward the outside."""
    if f_m > f_n:
        if f_n > f_k:
            return "MNK"
        if f_m > f_k:
            return "MKN"
        return "KMN"
    if f_n < f_k:
        return "KNM"
    if f_m > f_k:
        return "NMK"
    return "NKM"


def optimize_dimension(remaining: int, fixed_bytes: int, scaled_bytes: int,
                       capacity: int | None) -> int:
    """Grow a tiling factor over the divisors of `remaining` while the
    footprint fixed_bytes + scaled_bytes*factor stays within capacity.

    Growth steps by the smallest prime factor of what is left, so the
    result always divides `remaining`.  Unbounded capacity takes it all.
    """
    if remaining < 1:
        raise ValueError(f"remaining must be positive, got {remaining}")
    if capacity is None:
        return remaining
    factor = 1
    while factor < remaining:
        step = _smallest_prime_factor(remaining // factor)
        if fixed_bytes + scaled_bytes * factor * step <= capacity:
            factor *= step
        else:
            break
    return factor


def _residency(gemm: GemmShape, prim: CimPrimitive, p_k: int, p_n: int):
    """Spatial extents and streaming rounds for one partition choice."""
    span_k = prim.r_p * prim.r_h
    span_n = prim.c_p * prim.c_h
    k_ext = min(gemm.k, p_k * span_k)
    n_ext = min(gemm.n, p_n * span_n)
    k_rows = min(span_k, _ceil_div(k_ext, p_k))
    n_cols = min(span_n, _ceil_div(n_ext, p_n))
    s_k, s_n = p_k * k_rows, p_n * n_cols
    k_rounds = _ceil_div(gemm.k, s_k)
    n_rounds = _ceil_div(gemm.n, s_n)
    return k_ext, n_ext, k_rows, n_cols, s_k, s_n, k_rounds, n_rounds


def choose_partition(gemm: GemmShape, prim: CimPrimitive,
                     primitive_count: int) -> tuple[Partition, SpatialMap]:
    """Split the array bank across K and N.

    Candidates are capped so no partition overshoots a dimension by more
    than one primitive span.  Unbalanced splits (engaged row span vs
    column span differing by 4x or more) are dropped, then the survivor
    with the best (coverage, parallel lanes, streaming traffic) wins.
    Ties prefer more column splits and fewer row splits.
    """
    k, n, m = gemm.k, gemm.n, gemm.m
    span_k = prim.r_p * prim.r_h
    span_n = prim.c_p * prim.c_h
    max_pk = min(primitive_count, _ceil_div(k, prim.r_p))
    max_pn = min(primitive_count, _ceil_div(n, prim.c_p))

    candidates = []
    for p_k in range(1, max_pk + 1):
        for p_n in range(1, max_pn + 1):
            if p_k * p_n > primitive_count:
                continue
            k_ext, n_ext, k_rows, n_cols, s_k, s_n, k_rounds, n_rounds = _residency(
                gemm, prim, p_k, p_n
            )
            rows_engaged = _ceil_div(k_ext, span_k)
            cols_engaged = _ceil_div(n_ext, span_n)
            skew = Fraction(max(rows_engaged, cols_engaged), min(rows_engaged, cols_engaged))
            balanced = p_k * p_n == 1 or skew < _BALANCE_LIMIT
            k_bar = s_k * k_rounds
            n_bar = s_n * n_rounds
            traffic = m * k_bar * n_rounds + k_bar * n_bar + m * n_bar * (2 * (k_rounds - 1) + 1)
            lanes = min(k_ext, p_k * prim.r_p) * min(n_ext, p_n * prim.c_p)
            key = (k_ext * n_ext, lanes, -traffic, p_n, -p_k)
            candidates.append((balanced, skew, key, p_k, p_n, k_rows, n_cols))

    pool = [c for c in candidates if c[0]]
    if not pool:
        # (1,1) is always balanced, so this is a safety net only
        least = min(c[1] for c in candidates)
        pool = [c for c in candidates if c[1] == least]
    best = max(pool, key=lambda c: c[2])
    _, _, _, p_k, p_n, k_rows, n_cols = best
    return Partition(p_k, p_n), SpatialMap(k_rows, n_cols)


def _map_cim(gemm: GemmShape, cfg: SystemConfig) -> Mapping:
    engine = cfg.engine
    prim = engine.primitive
    partition, spatial = choose_partition(gemm, prim, engine.primitive_count)
    s_k = partition.p_k * spatial.k_rows
    s_n = partition.p_n * spatial.n_cols
    k_rounds = _ceil_div(gemm.k, s_k)
    n_rounds = _ceil_div(gemm.n, s_n)
    m = gemm.m
    bpe = gemm.bytes_per_element

    if not cfg.has_level("SMEM"):
        # engine sits at SMEM: stream rounds straight from DRAM
        nests = (
            LoopNest("CIMBUF", m, 1, 1, "NKM"),
            LoopNest("DRAM", 1, n_rounds, k_rounds, decide_loop_order(1, n_rounds, k_rounds)),
        )
        return Mapping(nests=nests, partition=partition, spatial=spatial, reduce_level=1)

    cap = cfg.level("SMEM").capacity_bytes
    if m * (s_k + s_n) * bpe <= cap:
        # resident: all M rows of one A panel and one Z panel fit; widen
        # the panels over K rounds first, then N rounds
        f_k = optimize_dimension(k_rounds, m * s_n * bpe, m * s_k * bpe, cap)
        f_n = optimize_dimension(n_rounds, m * s_k * f_k * bpe, m * s_n * bpe, cap)
        f_nd, f_kd = n_rounds // f_n, k_rounds // f_k
        nests = (
            LoopNest("CIMBUF", m, 1, 1, "NKM"),
            LoopNest("SMEM", 1, f_n, f_k, decide_loop_order(1, f_n, f_k)),
            LoopNest("DRAM", 1, f_nd, f_kd, decide_loop_order(1, f_nd, f_kd)),
        )
    else:
        # stream: chunk M so one chunk of A and Z fits; weights stay put
        # because the M chunks run innermost at DRAM
        m_t = 1
        for d in _divisors(m):
            if d * (s_k + s_n) * bpe <= cap:
                m_t = d
        nests = (
            LoopNest("CIMBUF", m_t, 1, 1, "NKM"),
            LoopNest("SMEM", 1, 1, 1, "NKM"),
            LoopNest("DRAM", m // m_t, n_rounds, k_rounds,
                     decide_loop_order(1, n_rounds, k_rounds)),
        )
    return Mapping(nests=nests, partition=partition, spatial=spatial, reduce_level=1)


def _k_inner_order(f_m: int, f_n: int) -> str:
    # output stationary above the RF: K always innermost
    return "MNK" if f_m > f_n else "NMK"


def _map_baseline(gemm: GemmShape, cfg: SystemConfig) -> Mapping:
    m, n, k = gemm.m, gemm.n, gemm.k
    bpe = gemm.bytes_per_element
    rf_cap = cfg.level("RF").capacity_bytes
    smem_cap = cfg.level("SMEM").capacity_bytes

    # RF tile: grow the smaller of (m1, n1) first, ties prefer n, while a
    # Z tile plus one A column and one B row still fit
    m1 = n1 = 1
    while True:
        attempts = ("n", "m") if n1 <= m1 else ("m", "n")
        grown = False
        for dim in attempts:
            if dim == "m":
                left = m // m1
                if left == 1:
                    continue
                cand_m, cand_n = m1 * _smallest_prime_factor(left), n1
            else:
                left = n // n1
                if left == 1:
                    continue
                cand_m, cand_n = m1, n1 * _smallest_prime_factor(left)
            if (cand_m * cand_n + cand_m + cand_n) * bpe <= rf_cap:
                m1, n1 = cand_m, cand_n
                grown = True
                break
        if not grown:
            break
    k1 = optimize_dimension(k, m1 * n1 * bpe, (m1 + n1) * bpe, rf_cap)

    m2 = optimize_dimension(m // m1, k1 * n1 * bpe, m1 * (k1 + n1) * bpe, smem_cap)
    k2 = optimize_dimension(k // k1, m1 * m2 * n1 * bpe, k1 * (m1 * m2 + n1) * bpe, smem_cap)
    n2 = optimize_dimension(n // n1, m1 * m2 * k1 * k2 * bpe,
                            n1 * (k1 * k2 + m1 * m2) * bpe, smem_cap)
    m3, n3, k3 = m // (m1 * m2), n // (n1 * n2), k // (k1 * k2)

    nests = (
        LoopNest("PEBUF", 1, 1, 1, "MNK"),
        LoopNest("RF", m1, n1, k1, "MNK"),
        LoopNest("SMEM", m2, n2, k2, _k_inner_order(m2, n2)),
        LoopNest("DRAM", m3, n3, k3, _k_inner_order(m3, n3)),
    )
    return Mapping(nests=nests, reduce_level=2)


def map_gemm(gemm: GemmShape, cfg: SystemConfig) -> Mapping:
    """Build the priority mapping for a GEMM on this system."""
    if isinstance(cfg.engine, CimEngine):
        return _map_cim(gemm, cfg)
    return _map_baseline(gemm, cfg)


def validate_mapping(gemm: GemmShape, cfg: SystemConfig, mapping: Mapping) -> list[str]:
    """Return the list of violated constraints (empty means valid)."""
    problems = []
    cim = isinstance(cfg.engine, CimEngine)
    if cim != mapping.is_cim:
        raise ValueError("mapping and config disagree about the engine kind")
    s_k = s_n = 1
    if cim:
        prim = cfg.engine.primitive
        if mapping.partition.p_k * mapping.partition.p_n > cfg.engine.primitive_count:
            problems.append("partition@count")
        if mapping.spatial.k_rows > prim.r_p * prim.r_h:
            problems.append("spatial@rows")
        if mapping.spatial.n_cols > prim.c_p * prim.c_h:
            problems.append("spatial@cols")
        s_k, s_n = mapping.spatial_k, mapping.spatial_n

    if mapping.factor_product("M") < gemm.m:
        problems.append("coverage@M")
    if s_n * mapping.factor_product("N") < gemm.n:
        problems.append("coverage@N")
    if s_k * mapping.factor_product("K") < gemm.k:
        problems.append("coverage@K")

    bpe = gemm.bytes_per_element
    cum_m = cum_n = cum_k = 1
    for nest in mapping.nests:
        cum_m *= nest.f_m
        cum_n *= nest.f_n
        cum_k *= nest.f_k
        if not cfg.has_level(nest.level):
            continue
        cap = cfg.level(nest.level).capacity_bytes
        if cap is None:
            continue
        held = cum_m * s_k * cum_k + cum_m * s_n * cum_n
        if not cim:
            held += cum_k * cum_n
        if held * bpe > cap:
            problems.append(f"capacity@{nest.level}")
    return problems


def _sample_cim_sig(rng, gemm, cfg, divs_m, divs_n, divs_k):
    """One naive draw from the CiM mapspace, or None if trivially invalid.

    Factors are independent uniform divisor picks per level, so most draws
    miss coverage or blow the staging capacity; that is intentional, the
    search is the naive comparison point, not a tuned optimizer.
    """
    engine = cfg.engine
    prim = engine.primitive
    count = engine.primitive_count
    p_k = rng.randint(1, count)
    p_n = rng.randint(1, count)
    if p_k * p_n > count:
        return None
    k_rows = rng.randint(1, prim.r_p * prim.r_h)
    n_cols = rng.randint(1, prim.c_p * prim.c_h)
    s_k, s_n = p_k * k_rows, p_n * n_cols
    smem = cfg.has_level("SMEM")
    levels = 3 if smem else 2
    f_m = [rng.choice(divs_m) for _ in range(levels)]
    f_n = [rng.choice(divs_n) for _ in range(levels)]
    f_k = [rng.choice(divs_k) for _ in range(levels)]
    if f_m[0] * f_m[1] * (f_m[2] if smem else 1) < gemm.m:
        return None
    if s_n * f_n[0] * f_n[1] * (f_n[2] if smem else 1) < gemm.n:
        return None
    if s_k * f_k[0] * f_k[1] * (f_k[2] if smem else 1) < gemm.k:
        return None
    if smem:
        cap = cfg.level("SMEM").capacity_bytes
        if cap is not None:
            c_m = f_m[0] * f_m[1]
            held = c_m * (s_k * f_k[0] * f_k[1] + s_n * f_n[0] * f_n[1])
            if held * gemm.bytes_per_element > cap:
                return None
    return (p_k, p_n, k_rows, n_cols, tuple(f_m), tuple(f_n), tuple(f_k))


def _build_cim_mapping(rng, sig, smem):
    p_k, p_n, k_rows, n_cols, f_m, f_n, f_k = sig
    nests = [LoopNest("CIMBUF", f_m[0], f_n[0], f_k[0], "NKM")]
    if smem:
        nests.append(LoopNest("SMEM", f_m[1], f_n[1], f_k[1], rng.choice(ORDERS)))
    nests.append(LoopNest("DRAM", f_m[-1], f_n[-1], f_k[-1], rng.choice(ORDERS)))
    return Mapping(nests=tuple(nests), partition=Partition(p_k, p_n),
                   spatial=SpatialMap(k_rows, n_cols), reduce_level=1)


def _sample_baseline_sig(rng, gemm, caps, divs_m, divs_n, divs_k):
    f_m = [rng.choice(divs_m) for _ in range(3)]
    f_n = [rng.choice(divs_n) for _ in range(3)]
    f_k = [rng.choice(divs_k) for _ in range(3)]
    if f_m[0] * f_m[1] * f_m[2] < gemm.m:
        return None
    if f_n[0] * f_n[1] * f_n[2] < gemm.n:
        return None
    if f_k[0] * f_k[1] * f_k[2] < gemm.k:
        return None
    c_m = c_n = c_k = 1
    for i, cap in enumerate(caps):
        c_m *= f_m[i]
        c_n *= f_n[i]
        c_k *= f_k[i]
        if cap is not None:
            held = c_m * c_k + c_m * c_n + c_k * c_n
            if held * gemm.bytes_per_element > cap:
                return None
    return (tuple(f_m), tuple(f_n), tuple(f_k))


def _build_baseline_mapping(rng, sig):
    f_m, f_n, f_k = sig
    nests = (
        LoopNest("PEBUF", 1, 1, 1, "MNK"),
        LoopNest("RF", f_m[0], f_n[0], f_k[0], rng.choice(ORDERS)),
        LoopNest("SMEM", f_m[1], f_n[1], f_k[1], rng.choice(ORDERS)),
        LoopNest("DRAM", f_m[2], f_n[2], f_k[2], rng.choice(ORDERS)),
    )
    return Mapping(nests=nests, reduce_level=2)


def heuristic_search(gemm: GemmShape, cfg: SystemConfig, seed: int = 0,
                     invalid_limit: int = 100000) -> Mapping | None:
    """Random mapping search, lowest total energy wins.

    A miss counter climbs on every invalid, duplicate, or non-improving
    sample and resets whenever the best mapping improves; the search stops
    once the counter reaches invalid_limit.  A limit of zero searches
    nothing and returns None.
    """
    if invalid_limit <= 0:
        return None
    from . import costmodel  # deferred, costmodel imports this module

    rng = random.Random(seed)
    cim = isinstance(cfg.engine, CimEngine)
    divs_m = _divisors(gemm.m)
    divs_n = _divisors(gemm.n)
    divs_k = _divisors(gemm.k)
    if not cim:
        caps = tuple(cfg.level(name).capacity_bytes if cfg.has_level(name) else None
                     for name in ("RF", "SMEM", "DRAM"))
    smem = cfg.has_level("SMEM")
    seen: set = set()
    best = None
    best_cost = None
    misses = 0
    while misses < invalid_limit:
        if cim:
            sig = _sample_cim_sig(rng, gemm, cfg, divs_m, divs_n, divs_k)
        else:
            sig = _sample_baseline_sig(rng, gemm, caps, divs_m, divs_n, divs_k)
        if sig is None or sig in seen:
            misses += 1
            continue
        seen.add(sig)
        if cim:
            mapping = _build_cim_mapping(rng, sig, smem)
        else:
            mapping = _build_baseline_mapping(rng, sig)
        if validate_mapping(gemm, cfg, mapping):
            misses += 1
            continue
        cost = costmodel.total_energy_pj(gemm, cfg, mapping)
        if best_cost is None or cost < best_cost:
            best, best_cost = mapping, cost
            misses = 0
        else:
            misses += 1
    return best
