"""
Wall-clock inference benchmark

One attention layer per variant runs `batches` forward passes over fixed
random inputs. Input-independent variants are frozen first, so their weights
are constants during the timed loop.
"""

import hashlib
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from statistics import median
from typing import List, Sequence

import numpy as np
import pandas as pd
from threadpoolctl import threadpool_limits

from ..attention import AttentionConfig, build_attention_layer, check_variant
from ..core import Tensor
from ..errors import AttentionLabError, BenchmarkError
from ..seeding import make_rng

BENCH_COLUMNS = ["variant", "L", "D", "H", "C", "N", "batches", "seconds", "seed"]

# Distinct inputs cycled through the timed loop
INPUT_POOL = 4


@dataclass(frozen=True)
class BenchRecord:
    variant: str
    L: int
    D: int
    H: int
    C: int
    N: int
    batches: int
    seconds: float
    seed: int
    output_digest: str = ""

    def row(self) -> dict:
        values = asdict(self)
        return {column: values[column] for column in BENCH_COLUMNS}


def run_benchmark(variant: str,
                  cfg: AttentionConfig,
                  batches: int,
                  seed: int = 0,
                  warmup: int = 2) -> BenchRecord:
    """
    Time `batches` inference passes of one variant

    Warm-up passes are not timed; warm-up and the timed loop both run on a
    single BLAS thread. The record carries an md5 digest of the last output so
    two runs with the same seed can be compared.
    """
    if batches < 1:
        raise BenchmarkError(f"batches must be >= 1, got {batches}")
    check_variant(variant)
    cfg = cfg.with_variant(variant)
    try:
        layer = build_attention_layer(cfg, seed, name="bench")
    except AttentionLabError as e:
        raise BenchmarkError(f"cannot build '{variant}': {e}") from e
    layer.freeze()

    rng = make_rng(seed, "bench", "inputs")
    inputs = [Tensor.constant(rng.standard_normal((cfg.L, cfg.D))) for _ in range(INPUT_POOL)]

    output = None
    # BLAS stays on one thread for warm-up and timing
    with threadpool_limits(limits=1):
        for i in range(warmup):
            layer.forward(inputs[i % INPUT_POOL])

        start = time.perf_counter()
        for i in range(batches):
            output, _ = layer.forward(inputs[i % INPUT_POOL])
        seconds = time.perf_counter() - start

    digest = hashlib.md5(np.ascontiguousarray(output.data).tobytes()).hexdigest()
    return BenchRecord(variant, cfg.L, cfg.D, cfg.H, cfg.C, cfg.N, batches,
                       max(seconds, 1e-9), seed, digest)


def run_benchmark_suite(variants: Sequence[str],
                        cfg: AttentionConfig,
                        batches: int,
                        repetitions: int = 5,
                        seed: int = 0,
                        verbose: bool = True) -> List[BenchRecord]:
    """Median-of-repetitions record per variant, in the given variant order"""
    if repetitions < 1:
        raise BenchmarkError(f"repetitions must be >= 1, got {repetitions}")
    if not variants:
        raise BenchmarkError("no variants to benchmark")

    if verbose:
        print(f"🚀 Benchmarking {len(variants)} variants at L={cfg.L}, D={cfg.D}, H={cfg.H} "
              f"({batches} batches x {repetitions} reps)")

    records = []
    for variant in variants:
        runs = [run_benchmark(variant, cfg, batches, seed) for _ in range(repetitions)]
        seconds = median(r.seconds for r in runs)
        record = BenchRecord(**{**asdict(runs[0]), "seconds": seconds})
        records.append(record)
        if verbose:
            print(f"📈 {variant:<15} {seconds:.4f}s")

    if verbose:
        print("✅ Benchmark complete")
    return records


def write_bench_csv(records: Sequence[BenchRecord], path: Path) -> Path:
    if not records:
        raise BenchmarkError("no benchmark records to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([r.row() for r in records], columns=BENCH_COLUMNS)
    frame.to_csv(path, index=False)
    return path
