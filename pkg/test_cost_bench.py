"""
Cost model and benchmark tests

Exact operation counts for every variant plus the wall-clock harness. The
timing-ordering checks are marked slow.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from threadpoolctl import threadpool_info

sys.path.insert(0, str(Path(__file__).parent / "src"))

from attention_lab.attention import LSH_VARIANTS, VARIANTS, AttentionConfig, AttentionLayer
from attention_lab.benchmark import (
    BENCH_COLUMNS,
    BenchRecord,
    cost_table,
    format_cost_table,
    run_benchmark,
    run_benchmark_suite,
    symbolic_cost,
    theoretical_cost,
    write_bench_csv,
)
from attention_lab.errors import BenchmarkError, ConfigurationError, UnknownVariantError

REFERENCE_SIZES = dict(L=500, D=768, H=12, C=32, N=16)


class TestTheoreticalCost:

    def test_baseline_training(self):
        assert theoretical_cost("baseline-qk", "training", **REFERENCE_SIZES).operations == 7_536_000

    def test_random_synthesizer_inference_is_free(self):
        for sizes in (REFERENCE_SIZES, dict(L=7, D=3, H=1, C=1, N=1)):
            assert theoretical_cost("syn-random", "inference", **sizes).operations == 0
            assert theoretical_cost("ours", "inference", **sizes).operations == 0

    def test_ours_training(self):
        assert theoretical_cost("ours", "training", **REFERENCE_SIZES).operations == 3_000_000

    @pytest.mark.parametrize("variant,training,inference", [
        ("baseline-qk", 4 * 500 * 768 + 2 * 12 * 500 ** 2, 2 * 500 * 768 + 12 * 500 ** 2),
        ("baseline-q", 2 * 500 * 768 + 2 * 12 * 500 ** 2, 500 * 768 + 12 * 500 ** 2),
        ("sparse-strided", 2 * 500 * 768 + 3 * 12 * 500 * 23, 500 * 768 + 12 * 500 * 23 + 12 * 500 * 23 // 2),
        ("sparse-fixed", 2 * 500 * 768 + 2 * 12 * 500 * 23, 500 * 768 + 12 * 500 * 23),
        ("xbox", 2 * 500 * 768 + (12 * 500 + 2 * 12 * 500 ** 2) // 2 + 2 * 12 * 500 * 32,
         500 * 768 + (12 * 500 + 2 * 12 * 500 ** 2) // 2 + 12 * 500 * 32),
        ("syn-dense", 2 * 500 * 16 + 2 * 500 ** 2, 500 * 16 + 500 ** 2),
        ("syn-dense-mh", 2 * 12 * 500 * 16 + 2 * 12 * 500 ** 2, 12 * 500 * 16 + 12 * 500 ** 2),
        ("syn-random", 12 * 500 ** 2, 0),
    ])
    def test_rows_at_reference_sizes(self, variant, training, inference):
        assert theoretical_cost(variant, "training", **REFERENCE_SIZES).operations == training
        assert theoretical_cost(variant, "inference", **REFERENCE_SIZES).operations == inference

    def test_lsh_schemes_share_one_formula(self):
        counts = {theoretical_cost(s, "training", **REFERENCE_SIZES).operations for s in LSH_VARIANTS}
        assert len(counts) == 1

    def test_halves_round_up(self):
        # L=5, H=1: ceil(sqrt(5)) = 3 so each HL*r/2 term is 7.5
        assert theoretical_cost("sparse-fixed", "inference", L=5, D=1, H=1).operations == 5 + 15
        assert theoretical_cost("sparse-strided", "inference", L=5, D=1, H=1).operations == 5 + 15 + 8

    def test_unknown_variant(self):
        with pytest.raises(UnknownVariantError):
            theoretical_cost("frobnicate", "training", L=10)

    def test_unknown_phase(self):
        with pytest.raises(ConfigurationError):
            theoretical_cost("ours", "warmup", L=10)

    @pytest.mark.parametrize("field", ["L", "D", "H", "C", "N"])
    def test_sizes_must_be_positive(self, field):
        sizes = dict(REFERENCE_SIZES, **{field: 0})
        with pytest.raises(ConfigurationError):
            theoretical_cost("baseline-qk", "training", **sizes)

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_training_dominates_inference(self, variant):
        for L in (1, 2, 7, 64, 500):
            for D in (1, 16, 768):
                for H in (1, 4, 12):
                    for C in (1, 32):
                        sizes = dict(L=L, D=D, H=H, C=C, N=16)
                        train = theoretical_cost(variant, "training", **sizes).operations
                        infer = theoretical_cost(variant, "inference", **sizes).operations
                        assert train >= infer >= 0

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_monotone_in_length(self, variant):
        for phase in ("training", "inference"):
            counts = [theoretical_cost(variant, phase, L=L, D=64, H=12, C=32, N=16).operations
                      for L in range(1, 130)]
            assert all(b >= a for a, b in zip(counts, counts[1:]))

    def test_symbolic_forms(self):
        assert symbolic_cost("baseline-qk", "training") == "4LD+2HL²"
        assert symbolic_cost("simple-alsh", "inference") == "LD+(HL+2HL²)/2+HLC"
        assert symbolic_cost("ours", "inference") == "−"


def test_cost_table_has_every_variant():
    table = cost_table(**REFERENCE_SIZES)
    assert list(table["variant"]) == list(VARIANTS)
    for row in table.itertuples(index=False):
        assert row.training_ops == theoretical_cost(row.variant, "training", **REFERENCE_SIZES).operations
        assert row.inference_ops == theoretical_cost(row.variant, "inference", **REFERENCE_SIZES).operations


def test_formatted_cost_table():
    sizes = (500, 768, 12, 32, 16)
    text = format_cost_table(cost_table(*sizes, variants=["baseline-qk", "ours"]), sizes)
    lines = text.splitlines()
    assert lines[0] == "Theoretical time at L=500, D=768, H=12, C=32, N=16"
    assert set(lines[1]) == {"="}
    assert "7536000" in text and "3000000" in text
    assert "sparse-fixed" not in text


SMALL = AttentionConfig(L=16, D=12, H=12, C=4, N=4)


class TestRunBenchmark:

    def test_zero_batches(self):
        with pytest.raises(BenchmarkError):
            run_benchmark("baseline-qk", SMALL, batches=0)

    def test_same_seed_same_outputs(self):
        first = run_benchmark("xbox", SMALL, batches=3, seed=4)
        second = run_benchmark("xbox", SMALL, batches=3, seed=4)
        assert first.output_digest == second.output_digest
        assert first.seconds > 0 and first.batches == 3

    def test_seed_changes_outputs(self):
        assert (run_benchmark("baseline-qk", SMALL, 2, seed=1).output_digest
                != run_benchmark("baseline-qk", SMALL, 2, seed=2).output_digest)

    def test_construction_failure_is_reported(self):
        # fixed-init needs twelve heads unless proportional heads are enabled
        with pytest.raises(BenchmarkError):
            run_benchmark("ours", AttentionConfig(L=8, D=8, H=4), batches=1)

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_every_variant_runs(self, variant):
        record = run_benchmark(variant, SMALL, batches=2, seed=0)
        assert record.variant == variant
        assert (record.L, record.D, record.H, record.C, record.N) == (16, 12, 12, 4, 4)

    def test_passes_run_on_one_thread(self, monkeypatch):
        thread_counts = []
        forward = AttentionLayer.forward

        def counting_forward(layer, x):
            thread_counts.extend(pool["num_threads"] for pool in threadpool_info())
            return forward(layer, x)

        monkeypatch.setattr(AttentionLayer, "forward", counting_forward)
        run_benchmark("baseline-qk", SMALL, batches=3, warmup=1)
        assert all(n == 1 for n in thread_counts)

    def test_suite_keeps_variant_order(self):
        records = run_benchmark_suite(["syn-random", "baseline-q"], SMALL, batches=2, repetitions=3,
                                      verbose=False)
        assert [r.variant for r in records] == ["syn-random", "baseline-q"]

    def test_suite_needs_repetitions(self):
        with pytest.raises(BenchmarkError):
            run_benchmark_suite(["ours"], SMALL, batches=1, repetitions=0, verbose=False)


class TestBenchCsv:

    RECORD = BenchRecord("ours", 500, 64, 12, 32, 16, 1000, 1.25, 0, "abc")

    def test_single_record(self, tmp_path):
        path = write_bench_csv([self.RECORD], tmp_path / "bench.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(BENCH_COLUMNS)
        assert lines[1] == "ours,500,64,12,32,16,1000,1.25,0"
        assert len(lines) == 2

    def test_rewrite_is_byte_identical(self, tmp_path):
        records = [self.RECORD, BenchRecord("baseline-qk", 500, 64, 12, 32, 16, 1000, 2.5, 0)]
        first = write_bench_csv(records, tmp_path / "a.csv").read_bytes()
        second = write_bench_csv(records, tmp_path / "b.csv").read_bytes()
        assert first == second

    def test_empty(self, tmp_path):
        with pytest.raises(BenchmarkError):
            write_bench_csv([], tmp_path / "bench.csv")


@pytest.mark.slow
def test_timing_orderings_at_desk_scale():
    cfg = AttentionConfig(L=500, D=64, H=12, C=32, N=16)
    variants = ["baseline-qk", "baseline-q", "syn-random", "ours", *LSH_VARIANTS]
    seconds = {r.variant: r.seconds
               for r in run_benchmark_suite(variants, cfg, batches=10, repetitions=5, verbose=False)}
    baseline = seconds["baseline-qk"]
    assert seconds["syn-random"] < baseline
    assert seconds["ours"] < baseline
    assert (baseline - seconds["ours"]) / baseline >= 0.10
    for scheme in LSH_VARIANTS:
        assert seconds[scheme] > baseline
    # 5% slack for timer noise between two nearly identical workloads
    assert seconds["baseline-q"] <= 1.05 * baseline


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
