"""Validity gate, benchmarks, workspace accessibility and reports.

Only the validity gate is imported eagerly; the planners import it, and
the benchmark modules import the planners.
"""

from .validity import CHECK_NAMES, CheckResult, ValidityReport, ValidityTolerances, validate

__all__ = ["CHECK_NAMES", "CheckResult", "ValidityReport", "ValidityTolerances", "validate"]
