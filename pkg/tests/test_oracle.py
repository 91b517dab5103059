"""Access counting against the enumeration oracle at dev-loop scale.

The full 500x50 sweep lives in the acceptance suite; this keeps a faster
version in the regular loop plus a few handpicked regression mappings.
"""

import random

import oracle_sim
import pytest

from cimdse import (
    CimEngine,
    GemmShape,
    LoopNest,
    Mapping,
    Partition,
    SpatialMap,
    count_accesses,
    map_gemm,
    validate_mapping,
)


def random_valid_mapping(rng, g, cfg):
    while True:
        if isinstance(cfg.engine, CimEngine):
            cand = oracle_sim.random_cim_mapping(rng, g, cfg)
        else:
            cand = oracle_sim.random_baseline_mapping(rng, g)
        if not validate_mapping(g, cfg, cand):
            return cand


def check(g, cfg, mapping):
    counts = count_accesses(g, cfg, mapping)
    levels, reductions = oracle_sim.simulate_counts(g, mapping)
    oracle_sim.assert_counts_match(counts, levels, reductions)


def test_priority_and_random_mappings_match_oracle(all_cfgs):
    rng = random.Random(2024)
    for case in range(60):
        g = GemmShape(rng.randint(1, 16), rng.randint(1, 16), rng.randint(1, 16))
        cfg = all_cfgs[case % len(all_cfgs)]
        check(g, cfg, map_gemm(g, cfg))
        for _ in range(6):
            check(g, cfg, random_valid_mapping(rng, g, cfg))


def test_oracle_covers_revisit_heavy_orders(baseline_cfg, rf_cfg):
    # K outermost at DRAM forces Z tiles to be written, evicted, re-read
    g = GemmShape(4, 4, 4)
    mapping = Mapping(nests=(
        LoopNest("PEBUF", 1, 1, 1, "MNK"),
        LoopNest("RF", 2, 2, 1, "MNK"),
        LoopNest("SMEM", 2, 1, 2, "KNM"),
        LoopNest("DRAM", 1, 2, 2, "KMN"),
    ), reduce_level=2)
    assert validate_mapping(g, baseline_cfg, mapping) == []
    check(g, baseline_cfg, mapping)
    counts = count_accesses(g, baseline_cfg, mapping)
    # 4 K-steps above the RF revisit each of the 16 outputs 3 times
    assert counts.reductions == 3 * 16
    assert counts.levels["DRAM"]["Z"]["reads"] > 0

    mapping = Mapping(nests=(
        LoopNest("CIMBUF", 2, 1, 2, "KNM"),
        LoopNest("SMEM", 1, 2, 1, "NKM"),
        LoopNest("DRAM", 2, 1, 2, "MKN"),
    ), partition=Partition(1, 2), spatial=SpatialMap(1, 2), reduce_level=1)
    assert validate_mapping(g, rf_cfg, mapping) == []
    check(g, rf_cfg, mapping)


def test_oracle_rejects_wrong_counts(baseline_cfg):
    g = GemmShape(2, 2, 2)
    mapping = map_gemm(g, baseline_cfg)
    counts = count_accesses(g, baseline_cfg, mapping)
    levels, reductions = oracle_sim.simulate_counts(g, mapping)
    levels["DRAM"]["A"]["reads"] += 1
    with pytest.raises(AssertionError):
        oracle_sim.assert_counts_match(counts, levels, reductions)
