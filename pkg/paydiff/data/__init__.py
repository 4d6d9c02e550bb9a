"""Problem sampling, normalization and the labeled trajectory corpus."""

from .dataset import Dataset, Sample, generate_dataset, load_dataset, payload_histogram, save_dataset
from .normalization import NormalizationStats
from .problems import problem_suite, sample_problem

__all__ = [
    "Dataset",
    "NormalizationStats",
    "Sample",
    "generate_dataset",
    "load_dataset",
    "payload_histogram",
    "problem_suite",
    "sample_problem",
    "save_dataset",
]
