"""Cost model and wall-clock benchmark"""

from .cost_model import (
    COST_FORMULAS,
    PHASES,
    CostEstimate,
    CostFormula,
    cost_table,
    format_cost_table,
    symbolic_cost,
    theoretical_cost,
)
from .runner import BENCH_COLUMNS, BenchRecord, run_benchmark, run_benchmark_suite, write_bench_csv

__all__ = [
    "BENCH_COLUMNS", "BenchRecord", "COST_FORMULAS", "CostEstimate", "CostFormula",
    "PHASES", "cost_table", "format_cost_table", "run_benchmark", "run_benchmark_suite",
    "symbolic_cost", "theoretical_cost", "write_bench_csv",
]
