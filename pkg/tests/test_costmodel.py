from fractions import Fraction

import pytest

from cimdse import (
    GemmShape,
    LoopNest,
    Mapping,
    compute_cycles,
    count_accesses,
    energy_breakdown,
    evaluate,
    link_cycles,
    map_gemm,
    total_energy_pj,
)


def test_single_element_baseline_counts(baseline_cfg):
    g = GemmShape(1, 1, 1)
    counts = count_accesses(g, baseline_cfg, map_gemm(g, baseline_cfg))
    one_each = {"A": {"reads": 1, "writes": 0},
                "B": {"reads": 1, "writes": 0},
                "Z": {"reads": 0, "writes": 1}}
    assert counts.levels == {"PEBUF": one_each, "RF": one_each,
                             "SMEM": one_each, "DRAM": one_each}
    assert counts.reductions == 0


def test_small_baseline_counts_frozen(baseline_cfg):
    g = GemmShape(4, 6, 8)
    counts = count_accesses(g, baseline_cfg, map_gemm(g, baseline_cfg))
    # whole problem fits the RF tile, so upper levels see one tile each
    assert counts.levels == {
        "PEBUF": {"A": {"reads": 192, "writes": 0},
                  "B": {"reads": 192, "writes": 0},
                  "Z": {"reads": 0, "writes": 24}},
        "RF": {"A": {"reads": 192, "writes": 0},
               "B": {"reads": 192, "writes": 0},
               "Z": {"reads": 0, "writes": 24}},
        "SMEM": {"A": {"reads": 32, "writes": 0},
                 "B": {"reads": 48, "writes": 0},
                 "Z": {"reads": 0, "writes": 24}},
        "DRAM": {"A": {"reads": 32, "writes": 0},
                 "B": {"reads": 48, "writes": 0},
                 "Z": {"reads": 0, "writes": 24}},
    }
    assert counts.reductions == 0
    assert counts.level_elements("DRAM") == 104


def test_small_cim_counts_frozen(rf_cfg):
    g = GemmShape(2, 3, 5)
    counts = count_accesses(g, rf_cfg, map_gemm(g, rf_cfg))
    assert counts.levels == {
        "CIMBUF": {"A": {"reads": 10, "writes": 0},
                   "B": {"reads": 0, "writes": 15},
                   "Z": {"reads": 0, "writes": 6}},
        "SMEM": {"A": {"reads": 10, "writes": 0},
                 "B": {"reads": 0, "writes": 0},
                 "Z": {"reads": 0, "writes": 6}},
        "DRAM": {"A": {"reads": 10, "writes": 0},
                 "B": {"reads": 15, "writes": 0},
                 "Z": {"reads": 0, "writes": 6}},
    }


def test_cim_weight_bypass_books_feed_traffic(smem_b_cfg):
    g = GemmShape(2, 20, 300)
    counts = count_accesses(g, smem_b_cfg, map_gemm(g, smem_b_cfg))
    # weights bypass staging: written into arrays once, read from DRAM once
    assert counts.levels["CIMBUF"]["B"] == {"reads": 0, "writes": 6000}
    assert counts.levels["DRAM"]["B"] == {"reads": 6000, "writes": 0}
    assert counts.levels["CIMBUF"]["A"] == {"reads": 600, "writes": 0}
    assert counts.levels["DRAM"]["Z"] == {"reads": 0, "writes": 40}


def test_reductions_follow_outer_k_loops(baseline_cfg, rf_cfg):
    g = GemmShape(1, 256, 512)
    counts = count_accesses(g, baseline_cfg, map_gemm(g, baseline_cfg))
    # K splits 32 (RF) x 16 (SMEM); partial sums combine above the RF
    assert counts.reductions == (16 - 1) * 1 * 256

    g = GemmShape(8, 64, 512)
    counts = count_accesses(g, rf_cfg, map_gemm(g, rf_cfg))
    assert counts.reductions == (2 - 1) * 8 * 64


def test_energy_breakdown_frozen(baseline_cfg, rf_cfg):
    g = GemmShape(1, 1, 1)
    breakdown = energy_breakdown(g, baseline_cfg, map_gemm(g, baseline_cfg))
    assert breakdown == {
        "PEBUF": Fraction(3, 50),
        "RF": Fraction(3441, 100),
        "SMEM": Fraction(37407, 100),
        "DRAM": Fraction(1536),
        "mac": Fraction(13, 50),
        "reduction": Fraction(0),
    }
    assert total_energy_pj(g, baseline_cfg, map_gemm(g, baseline_cfg)) == Fraction(9724, 5)

    g = GemmShape(2, 3, 5)
    breakdown = energy_breakdown(g, rf_cfg, map_gemm(g, rf_cfg))
    # staging buffer charges feed traffic, arrays charge per MAC
    assert breakdown["CIMBUF"] == Fraction(31, 50)
    assert breakdown["mac"] == Fraction(45)
    assert total_energy_pj(g, rf_cfg, map_gemm(g, rf_cfg)) == Fraction(895633, 50)


def test_total_energy_matches_breakdown_sum(all_cfgs):
    g = GemmShape(64, 96, 128)
    for cfg in all_cfgs:
        mapping = map_gemm(g, cfg)
        assert total_energy_pj(g, cfg, mapping) == sum(
            energy_breakdown(g, cfg, mapping).values(), Fraction(0))


def test_compute_cycles(baseline_cfg, rf_cfg):
    g = GemmShape(512, 32, 256)
    assert compute_cycles(g, rf_cfg, map_gemm(g, rf_cfg)) == 512 * 36
    g = GemmShape(64, 64, 64)
    assert compute_cycles(g, baseline_cfg, map_gemm(g, baseline_cfg)) == 256
    # sub-array residency still pays a full step
    g = GemmShape(1, 1, 1)
    assert compute_cycles(g, rf_cfg, map_gemm(g, rf_cfg)) == 36


def test_link_cycles_and_bound(rf_cfg):
    g = GemmShape(512, 32, 256)
    res = evaluate(g, rf_cfg)
    assert res.link_cycles == {"SMEM": 3511, "DRAM": 4864}
    assert res.compute_cycles == 18432
    assert res.total_cycles == 18432
    assert res.bound == "compute"


def test_throughput_anchor(rf_cfg):
    res = evaluate(GemmShape(512, 32, 256), rf_cfg)
    assert res.gflops == Fraction(4096, 9)
    assert res.utilization == Fraction(2, 3)
    assert res.tops_per_w == Fraction(8388608) / res.total_pj


def test_baseline_utilization_is_mac_occupancy(baseline_cfg):
    res = evaluate(GemmShape(64, 64, 64), baseline_cfg)
    assert res.utilization == 1
    res = evaluate(GemmShape(1, 1, 1), baseline_cfg)
    assert res.utilization == Fraction(1, 1024)


def test_link_model_serializes_transfers(baseline_cfg, rf_cfg):
    g = GemmShape(4096, 4096, 4096)
    overlap = evaluate(g, baseline_cfg, link_model="max")
    serial = evaluate(g, baseline_cfg, link_model="sum")
    assert overlap.total_cycles == 89079028
    assert serial.total_cycles == 108477684
    assert overlap.bound == serial.bound == "memory"
    assert serial.total_cycles == sum(serial.link_cycles.values())

    # compute-bound case: both policies agree
    g = GemmShape(512, 32, 256)
    assert (evaluate(g, rf_cfg, link_model="max").total_cycles
            == evaluate(g, rf_cfg, link_model="sum").total_cycles)

    with pytest.raises(ValueError, match="link_model"):
        evaluate(g, rf_cfg, link_model="overlap")


def test_evaluate_rejects_invalid_mapping(rf_cfg):
    from cimdse import Partition, SpatialMap

    g = GemmShape(4096, 64, 64)
    undersized = Mapping(
        nests=(LoopNest("CIMBUF", 1, 1, 1, "NKM"),
               LoopNest("SMEM", 1, 1, 1, "NKM"),
               LoopNest("DRAM", 1, 4, 1, "NKM")),
        partition=Partition(1, 1), spatial=SpatialMap(64, 16), reduce_level=1)
    with pytest.raises(ValueError, match="coverage@M"):
        evaluate(g, rf_cfg, mapping=undersized)


def test_evaluate_mapper_modes(rf_cfg):
    g = GemmShape(8, 8, 8)
    res = evaluate(g, rf_cfg, mapper="heuristic", seed=1, invalid_limit=1500)
    assert res.total_pj > 0
    with pytest.raises(ValueError, match="no mapping"):
        evaluate(g, rf_cfg, mapper="heuristic", invalid_limit=0)
    with pytest.raises(ValueError, match="mapper"):
        evaluate(g, rf_cfg, mapper="exhaustive")


def test_result_carries_exact_metrics(smem_b_cfg):
    g = GemmShape(1024, 512, 1024)
    res = evaluate(g, smem_b_cfg)
    assert res.config == "cim_smem_configB"
    assert res.tops_per_w == Fraction(g.ops) / res.total_pj
    assert res.gflops == Fraction(g.ops) * smem_b_cfg.clock_ghz / res.total_cycles
    assert 0 < res.utilization <= 1
