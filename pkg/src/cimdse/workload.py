"""GEMM workload shapes, model-layer conversions, and workload suites."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .jsonutil import load_json


@dataclass(frozen=True, slots=True)
class GemmShape:
    """A single GEMM: Z[M,N] accumulates A[M,K] times B[K,N].

    B is the operand a weight-stationary engine pins in place, so model
    conversions below put weights (or the reused operand) in B.
    """

    m: int
    n: int
    k: int
    bit_precision: int = 8

    def __post_init__(self):
        for name in ("m", "n", "k", "bit_precision"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def bytes_per_element(self) -> int:
        if self.bit_precision % 8:
            raise ValueError(
                f"bit_precision {self.bit_precision} is not a whole number of bytes"
            )
        return self.bit_precision // 8

    @property
    def ops(self) -> int:
        """Total scalar operations; multiplies and adds both count."""
        return 2 * self.m * self.n * self.k

    @property
    def algorithmic_reuse(self) -> Fraction:
        """Ops per byte if each tensor crossed the memory boundary once."""
        moved = self.bytes_per_element * (self.m * self.n + self.n * self.k + self.m * self.k)
        return Fraction(self.ops, moved)

    def to_json(self) -> dict:
        return {"m": self.m, "n": self.n, "k": self.k, "bit_precision": self.bit_precision}

    @classmethod
    def from_json(cls, obj: dict) -> "GemmShape":
        if not isinstance(obj, dict):
            raise ValueError(f"expected an object for a GEMM shape, got {obj!r}")
        return cls(
            obj.get("m"), obj.get("n"), obj.get("k"), obj.get("bit_precision", 8)
        )


def conv_to_gemm(
    out_h: int,
    out_w: int,
    out_channels: int,
    filter_h: int,
    filter_w: int,
    in_channels: int,
    bit_precision: int = 8,
) -> GemmShape:
    """Lower a convolution (im2col) to a GEMM.

    Output pixels become rows of A, filters become columns of B, so
    M = out_h*out_w, N = out_channels, K = filter_h*filter_w*in_channels.
    """
    return GemmShape(
        out_h * out_w,
        out_channels,
        filter_h * filter_w * in_channels,
        bit_precision,
    )


def fc_to_gemm(in_features: int, out_features: int, batch: int = 1,
               bit_precision: int = 8) -> GemmShape:
    """Lower a fully connected layer, output-transposed so the batch streams."""
    return GemmShape(out_features, batch, in_features, bit_precision)


def attention_to_gemms(seq_len: int, embed_dim: int,
                       bit_precision: int = 8) -> list[GemmShape]:
    """Lower one attention block to its three GEMM stages.

    All three are output-transposed so the sequence dimension streams as N:
    the input/output projections, the score GEMM, and the value GEMM.
    """
    return [
        GemmShape(embed_dim, seq_len, embed_dim, bit_precision),
        GemmShape(seq_len, seq_len, embed_dim, bit_precision),
        GemmShape(embed_dim, seq_len, seq_len, bit_precision),
    ]


def synthetic_sweep(min_dim: int, max_dim: int, count: int, seed: int) -> list[GemmShape]:
    """Draw `count` GEMMs with power-of-two dims in [min_dim, max_dim]."""
    if min_dim < 1:
        raise ValueError(f"min_dim must be positive, got {min_dim}")
    if min_dim > max_dim:
        raise ValueError(f"min_dim {min_dim} exceeds max_dim {max_dim}")
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    choices = []
    p = 1
    while p <= max_dim:
        if p >= min_dim:
            choices.append(p)
        p <<= 1
    if not choices:
        raise ValueError(f"no power of two in [{min_dim}, {max_dim}]")
    rng = random.Random(seed)
    # draw order is m, n, k for each shape in turn
    return [
        GemmShape(rng.choice(choices), rng.choice(choices), rng.choice(choices))
        for _ in range(count)
    ]


@dataclass(frozen=True)
class Suite:
    """A named bag of GEMMs, each with an occurrence count."""

    name: str
    entries: tuple[tuple[GemmShape, int], ...]

    @property
    def total_count(self) -> int:
        return sum(count for _, count in self.entries)


def suite_from_json(obj, source: str = "suite") -> Suite:
    if not isinstance(obj, dict):
        raise ValueError(f"{source}: expected a JSON object")
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        raise ValueError(f"{source}: 'name' must be a non-empty string")
    raw = obj.get("entries")
    if not isinstance(raw, list) or not raw:
        raise ValueError(f"{source}: 'entries' must be a non-empty array")
    entries = []
    for i, entry in enumerate(raw):
        where = f"{source}: entries[{i}]"
        if not isinstance(entry, dict):
            raise ValueError(f"{where} must be an object")

        def grab(key: str, default=None):
            value = entry.get(key, default)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{where}.{key} must be a positive integer, got {value!r}")
            return value

        shape = GemmShape(grab("m"), grab("n"), grab("k"), grab("bp", 8))
        entries.append((shape, grab("count", 1)))
    return Suite(name, tuple(entries))


def load_suite(path) -> Suite:
    path = Path(path)
    return suite_from_json(load_json(path), source=str(path))
