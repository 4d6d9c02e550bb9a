"""Acceptance rules checked against benchmark summaries.

A criteria file is a JSON list of rules such as
``{"planner": "ddim", "payload": 0, "metric": "success_rate", "min": 0.6}``.
Each rule selects one summary row by planner and payload and bounds one of
its columns from below (``min``), above (``max``) or both.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..utils.error_handler import CriteriaViolation, ModelValidationError
from ..utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class Criterion:
    planner: str
    payload: float
    metric: str
    min: Optional[float] = None
    max: Optional[float] = None

    def describe(self) -> str:
        bounds = []
        if self.min is not None:
            bounds.append(f">= {self.min:g}")
        if self.max is not None:
            bounds.append(f"<= {self.max:g}")
        return f"{self.planner} @ {self.payload:g} kg: {self.metric} {' and '.join(bounds)}"


@dataclass
class CriterionResult:
    criterion: Criterion
    value: Optional[float]
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        value = self.value if self.value is not None and np.isfinite(self.value) else None
        return {"rule": self.criterion.describe(), "value": value, "passed": self.passed}


def _parse(rule: Dict[str, Any], index: int) -> Criterion:
    path = f"criteria[{index}]"
    unknown = set(rule) - {"planner", "payload", "metric", "min", "max"}
    if unknown:
        raise ModelValidationError(f"{path}.{sorted(unknown)[0]}", "unknown key")
    for key in ("planner", "payload", "metric"):
        if key not in rule:
            raise ModelValidationError(f"{path}.{key}", "missing")
    if rule.get("min") is None and rule.get("max") is None:
        raise ModelValidationError(path, "needs 'min' or 'max'")
    return Criterion(str(rule["planner"]), float(rule["payload"]), str(rule["metric"]),
                     None if rule.get("min") is None else float(rule["min"]),
                     None if rule.get("max") is None else float(rule["max"]))


def load_criteria(path: Union[str, Path]) -> List[Criterion]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Criteria file not found: {path}")
    with open(path, "r") as f:
        data = json.load(f)
    if not isinstance(data, list):
        raise ModelValidationError("criteria", "must be a JSON list of rules")
    return [_parse(rule, i) for i, rule in enumerate(data)]


def evaluate_criteria(summary: pd.DataFrame, criteria: List[Criterion]) -> List[CriterionResult]:
    """Check every rule; a rule whose row or metric is missing fails."""
    results = []
    for c in criteria:
        rows = summary[(summary["planner"] == c.planner) & np.isclose(summary["payload"], c.payload)]
        if rows.empty or c.metric not in summary.columns:
            results.append(CriterionResult(c, None, False))
            continue
        value = float(rows[c.metric].iloc[0])
        passed = bool(np.isfinite(value)
                      and (c.min is None or value >= c.min)
                      and (c.max is None or value <= c.max))
        results.append(CriterionResult(c, value, passed))
    return results


def check_criteria(summary: pd.DataFrame, criteria: List[Criterion]) -> List[CriterionResult]:
    """Like :func:`evaluate_criteria` but raise when any rule fails.

    Raises
    ------
    CriteriaViolation
        Listing the failed rules.
    """
    results = evaluate_criteria(summary, criteria)
    failed = [r for r in results if not r.passed]
    for r in failed:
        logger.warning(f"Criterion failed: {r.criterion.describe()} (value {r.value})")
    if failed:
        raise CriteriaViolation("; ".join(r.criterion.describe() for r in failed))
    return results
