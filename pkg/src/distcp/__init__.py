"""Change-point detection with generalized pairwise distances."""

from .distances import DistanceSpec, eval_distance, make_spec
from .scan import CandidateSet, DistanceMatrix, ScanResult, pairwise_matrix, scan, segment_stats
from .permutation import PermutationConfig, TestOutcome, permutation_test, permuted_scan
from .multi import MultiConfig, best_split, detect_multiple, detect_multiple_from_matrix
from .datagen import EXAMPLES, ScenarioSpec, make_scenario
from .ingest import load_matrix_csv, load_price_csv, prices_to_returns, write_matrix_csv

__version__ = "0.1.0"

__all__ = [
    "CandidateSet", "DistanceMatrix", "DistanceSpec", "EXAMPLES", "MultiConfig",
    "PermutationConfig", "ScanResult", "ScenarioSpec", "TestOutcome", "best_split",
    "detect_multiple", "detect_multiple_from_matrix", "eval_distance", "load_matrix_csv",
    "load_price_csv", "make_scenario", "make_spec", "pairwise_matrix", "permutation_test",
    "permuted_scan", "prices_to_returns", "scan", "segment_stats", "write_matrix_csv",
]
