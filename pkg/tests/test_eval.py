"""Tests for the validity gate, benchmarks, workspace accessibility, criteria and reports."""

import json
from unittest.mock import Mock, patch

import numpy as np
import pandas as pd
import pytest

from paydiff.core.trajectory import Problem, Trajectory
from paydiff.eval.benchmark import (
    RUN_COLUMNS,
    SUMMARY_COLUMNS,
    benchmark,
    make_planner,
    results_by_planner,
    summarize,
    timing_spread,
)
from paydiff.eval.criteria import Criterion, check_criteria, evaluate_criteria, load_criteria
from paydiff.eval.report import emit_report, load_report_csv
from paydiff.eval.validity import CHECK_NAMES, ValidityTolerances, validate
from paydiff.eval.workspace import GridSpec, WorkspaceMap, workspace_accessibility, workspace_sweep
from paydiff.planners.result import PlannerConfig, PlannerResult, PlannerStatus
from paydiff.utils.error_handler import CriteriaViolation, ModelValidationError, ReportError
from paydiff.world.collision import proxies_for
from paydiff.world.scene import HalfSpace, Scene, WorkspaceSpec


def resting_planner(problem, payload, seed):
    """Stay at the start for a few waypoints."""
    return PlannerResult(PlannerStatus.SUCCESS, Trajectory.constant(problem.start, horizon=8, dt=0.08),
                         planning_time=1.0)


def failing_planner(problem, payload, seed):
    return PlannerResult(PlannerStatus.INFEASIBLE, planning_time=0.5,
                         diagnostics={"failed_checks": ["torque"]})


class TestValidity:
    """The full validity gate."""

    def setup_method(self):
        self.scene = Scene()

    def test_resting_trajectory_is_valid(self, planar2_model, rest_trajectory):
        report = validate(planar2_model, proxies_for(planar2_model), self.scene, rest_trajectory, 1.0,
                          start=np.zeros(2), goal=np.zeros(2))
        assert report.valid
        assert tuple(report.checks) == CHECK_NAMES
        assert report.failed == []

    def test_wrong_goal(self, planar2_model, rest_trajectory):
        report = validate(planar2_model, proxies_for(planar2_model), self.scene, rest_trajectory, 0.0,
                          goal=np.array([0.1, 0.0]))
        assert report.failed == ["endpoints"]
        assert report.checks["endpoints"].margin < 0

    def test_velocity_limit(self, planar2_model, rest_trajectory):
        fast = rest_trajectory.copy()
        fast.states[3:6, 2] = 3.0
        failed = validate(planar2_model, proxies_for(planar2_model), self.scene, fast, 0.0).failed
        assert "velocity_limits" in failed
        assert "consistency" in failed

    def test_heavy_payload(self, planar2_model, rest_trajectory):
        report = validate(planar2_model, proxies_for(planar2_model), self.scene, rest_trajectory, 18.0)
        assert report.failed == ["torque"]

    def test_collision(self, planar2_model, rest_trajectory):
        floor = Scene(obstacles=(HalfSpace(normal=(0.0, 1.0, 0.0), offset=0.0),))
        report = validate(planar2_model, proxies_for(planar2_model), floor, rest_trajectory, 0.0)
        assert report.failed == ["collision"]

    def test_custom_tolerances(self, planar2_model, rest_trajectory):
        tol = ValidityTolerances(endpoint_atol=0.2)
        report = validate(planar2_model, proxies_for(planar2_model), self.scene, rest_trajectory, 0.0, tol,
                          goal=np.array([0.1, 0.0]))
        assert report.valid

    def test_to_dict(self, planar2_model, rest_trajectory):
        data = validate(planar2_model, proxies_for(planar2_model), self.scene, rest_trajectory, 0.0).to_dict()
        assert data["valid"] is True
        assert set(data["checks"]) == set(CHECK_NAMES)


class TestBenchmark:
    """Success rates and timing comparisons across planners."""

    def setup_method(self):
        self.problems = [Problem(start=np.zeros(2), goal=np.zeros(2), problem_id=i) for i in range(3)]

    def test_always_failing_planner(self, planar2_model):
        report = benchmark({"fail": failing_planner}, self.problems, [0.0], planar2_model)
        assert report.rate("fail", 0.0) == 0.0
        assert list(report.runs.columns) == RUN_COLUMNS
        assert (report.runs.failed_checks == "torque").all()

    def test_results_are_revalidated(self, planar2_model):
        report = benchmark({"rest": resting_planner}, self.problems, [1.0, 18.0], planar2_model, seeds=(0, 1))
        assert report.rate("rest", 1.0) == 1.0
        # the planner claims success but the trajectory cannot carry 18 kg
        assert report.rate("rest", 18.0) == 0.0
        assert len(report.runs) == 12
        assert list(report.summary.columns) == SUMMARY_COLUMNS

    def test_planner_errors_count_as_failures(self, planar2_model):
        broken = Mock(side_effect=RuntimeError("boom"))
        report = benchmark({"broken": broken}, self.problems, [0.0], planar2_model)
        assert report.rate("broken", 0.0) == 0.0
        assert (report.runs.status == "error").all()
        assert broken.call_count == 3

    def test_requires_planners_and_payloads(self, planar2_model):
        with pytest.raises(ValueError):
            benchmark({}, self.problems, [0.0], planar2_model)
        with pytest.raises(ValueError):
            benchmark({"rest": resting_planner}, self.problems, [], planar2_model)

    def test_comparison_with_reference(self, planar2_model):
        planners = {"ddim": resting_planner, "fail": failing_planner}
        report = benchmark(planners, self.problems, [0.0], planar2_model)
        row = report.summary.set_index("planner").loc["fail"]
        assert row.time_factor == pytest.approx(0.5)
        assert row.success_change == pytest.approx(-1.0)
        ref = report.summary.set_index("planner").loc["ddim"]
        assert ref.time_factor == pytest.approx(1.0)

    def test_summary_without_reference(self):
        runs = pd.DataFrame({"planner": ["a", "a"], "payload": [0.0, 0.0], "success": [True, False],
                             "best_of_n": [True, True], "planning_time": [1.0, 3.0]})
        summary = summarize(runs, reference="ddim")
        assert summary.success_rate.iloc[0] == pytest.approx(0.5)
        assert summary.best_of_n_rate.iloc[0] == pytest.approx(1.0)
        assert summary.time_std.iloc[0] == pytest.approx(1.0)
        assert np.isnan(summary.time_factor.iloc[0])
        assert summarize(runs.iloc[0:0]).empty

    def test_timing_and_grouping(self, planar2_model):
        report = benchmark({"ddim": resting_planner, "fail": failing_planner}, self.problems, [0.0], planar2_model)
        spread = timing_spread(report.runs)
        assert set(spread.planner) == {"ddim", "fail"}
        assert set(results_by_planner(report)) == {"ddim", "fail"}

    def test_make_planner(self, planar2_model):
        assert make_planner("sqp", planar2_model).name == "sqp"
        with pytest.raises(ValueError):
            make_planner("astar", planar2_model)
        with pytest.raises(ValueError):
            make_planner("ddim", planar2_model)


class TestWorkspace:
    """Accessibility maps and their zero-payload normalization."""

    def setup_method(self):
        # obstacles far from the arm
        self.spec = WorkspaceSpec(table_height=-5.0, block_min=(5.0, 5.0, -0.5), block_max=(5.1, 5.1, 0.5))
        self.grid = GridSpec(lower=(-0.8, 0.5, 0.0), upper=(0.8, 0.5, 0.0), shape=(2, 1, 1))

    def test_grid_points(self):
        grid = GridSpec(lower=(0.0, 0.0, 0.0), upper=(1.0, 2.0, 0.0), shape=(2, 3, 1))
        points = grid.points()
        assert points.shape == (6, 3)
        np.testing.assert_allclose(points[:3, 0], 0.0)
        np.testing.assert_allclose(points[:3, 1], [0.0, 1.0, 2.0])
        assert GridSpec.from_dict(grid.to_dict()) == grid
        with pytest.raises(ValueError):
            GridSpec(shape=(0, 1, 1))

    def test_fraction_is_self_normalized(self):
        points = np.zeros((4, 3))
        reachable = np.ones(4, dtype=bool)
        m = WorkspaceMap(1.0, points, reachable, np.array([True, False, True, False]),
                         baseline=np.array([True, True, False, True]))
        assert m.fraction == pytest.approx(1 / 3)
        assert WorkspaceMap(0.0, points, reachable, np.array([True, False, False, False])).fraction == 1.0
        assert np.isnan(WorkspaceMap(0.0, points, reachable, np.zeros(4, dtype=bool)).fraction)
        assert np.isnan(WorkspaceMap(2.0, points, reachable, np.zeros(4, dtype=bool),
                                     baseline=np.zeros(4, dtype=bool)).fraction)
        assert list(m.to_frame().columns) == ["x", "y", "z", "reachable", "accessible", "payload"]

    def test_failing_planner(self, planar2_model):
        result = workspace_accessibility(planar2_model, failing_planner, 0.0, self.grid, attempts_per_cell=2,
                                         workspace_spec=self.spec)
        assert result.reachable.all()
        assert not result.accessible.any()
        assert np.isnan(result.fraction)

    def test_sweep_without_baseline_is_undefined(self, planar2_model):
        """An empty zero-payload map leaves every fraction undefined rather than zero."""
        frame, _ = workspace_sweep(planar2_model, failing_planner, [0.0, 4.0], self.grid, attempts_per_cell=1,
                                   workspace_spec=self.spec)
        assert frame.fraction.isna().all()
        assert (frame.baseline == 0).all()
        result = evaluate_criteria(frame.assign(planner="rrt"), [Criterion("rrt", 4.0, "fraction", min=0.0)])[0]
        assert not result.passed
        assert result.to_dict()["value"] is None

    @patch("paydiff.eval.workspace.validate")
    def test_sweep(self, mock_validate, planar2_model):
        mock_validate.return_value = Mock(valid=True)

        def light_only(problem, payload, seed):
            if payload > 2.0:
                return failing_planner(problem, payload, seed)
            return resting_planner(problem, payload, seed)

        frame, maps = workspace_sweep(planar2_model, light_only, [0.0, 1.0, 5.0], self.grid, attempts_per_cell=1,
                                      workspace_spec=self.spec)
        assert list(frame.columns) == ["payload", "accessible", "baseline", "fraction"]
        np.testing.assert_allclose(frame.fraction, [1.0, 1.0, 0.0])
        assert (frame.baseline == 2).all()
        assert maps[0].payload == 0.0

    @pytest.mark.slow
    def test_super_nominal_payloads_keep_cells(self, planar3_model):
        """Plan-and-filter on planar3 still reaches cells at three times the rated payload."""
        nominal = planar3_model.nominal_payload
        planner = make_planner("plan_and_filter", planar3_model, config=PlannerConfig(max_attempts=5))
        grid = GridSpec(lower=(-0.4, 0.2, 0.0), upper=(0.4, 0.6, 0.0), shape=(3, 2, 1))
        frame, maps = workspace_sweep(planar3_model, planner, [0.0, nominal, 2 * nominal, 3 * nominal], grid,
                                      attempts_per_cell=2)
        fractions = frame.fraction.to_numpy()
        assert fractions[0] == 1.0
        assert fractions[-1] > 0.0
        assert np.all(np.diff(fractions) <= 0.0)
        for lighter, heavier in zip(maps[:-1], maps[1:]):
            assert not np.any(heavier.accessible & ~lighter.accessible)

    def test_unreachable_grid(self, planar2_model):
        grid = GridSpec(lower=(5.0, 0.0, 0.0), upper=(5.0, 0.0, 0.0), shape=(1, 1, 1))
        with pytest.raises(ValueError):
            workspace_accessibility(planar2_model, failing_planner, 0.0, grid, workspace_spec=self.spec)


class TestCriteria:
    """Acceptance rules against summary tables."""

    def setup_method(self):
        self.summary = pd.DataFrame({"planner": ["ddim", "sqp"], "payload": [0.0, 0.0],
                                     "success_rate": [0.8, 0.3], "time_mean": [0.2, 5.0]})

    def test_load(self, tmp_path):
        path = tmp_path / "criteria.json"
        path.write_text(json.dumps([{"planner": "ddim", "payload": 0, "metric": "success_rate", "min": 0.6}]))
        assert load_criteria(path) == [Criterion("ddim", 0.0, "success_rate", 0.6, None)]

    def test_load_rejects_bad_rules(self, tmp_path):
        path = tmp_path / "criteria.json"
        path.write_text(json.dumps([{"planner": "ddim", "payload": 0, "metric": "success_rate", "low": 0.6}]))
        with pytest.raises(ModelValidationError):
            load_criteria(path)
        path.write_text(json.dumps([{"planner": "ddim", "payload": 0, "metric": "success_rate"}]))
        with pytest.raises(ModelValidationError):
            load_criteria(path)
        path.write_text(json.dumps({"planner": "ddim"}))
        with pytest.raises(ModelValidationError):
            load_criteria(path)

    def test_evaluate(self):
        rules = [Criterion("ddim", 0.0, "success_rate", min=0.6),
                 Criterion("sqp", 0.0, "success_rate", min=0.6),
                 Criterion("ddim", 0.0, "time_mean", max=1.0),
                 Criterion("ddim", 5.0, "success_rate", min=0.1),
                 Criterion("ddim", 0.0, "accuracy", min=0.1)]
        results = evaluate_criteria(self.summary, rules)
        assert [r.passed for r in results] == [True, False, True, False, False]
        assert results[1].value == pytest.approx(0.3)
        assert results[3].value is None

    def test_check_raises(self):
        check_criteria(self.summary, [Criterion("ddim", 0.0, "success_rate", min=0.6)])
        with pytest.raises(CriteriaViolation):
            check_criteria(self.summary, [Criterion("sqp", 0.0, "success_rate", min=0.6)])


class TestReport:
    """CSV, JSON and SVG report files."""

    def setup_method(self):
        self.table = pd.DataFrame({"planner": ["ddim", "ddim", "sqp"], "payload": [0.0, 5.0, 0.0],
                                   "success_rate": [0.9, 0.5, 0.4], "time_factor": [1.0, 1.0, np.nan]})

    def test_all_formats(self, tmp_path):
        written = emit_report(self.table, tmp_path, stem="bench", metadata={"seed": 0})
        assert set(written) == {"csv", "json", "svg"}
        pd.testing.assert_frame_equal(load_report_csv(written["csv"]), self.table)
        data = json.loads(written["json"].read_text())
        assert data["columns"] == list(self.table.columns)
        assert data["rows"][2]["time_factor"] is None
        assert data["metadata"] == {"seed": 0}
        svg = written["svg"].read_text()
        assert svg.lstrip().startswith("<?xml")
        assert 'id="bar-5-ddim"' in svg

    def test_empty_table(self, tmp_path):
        with pytest.raises(ReportError):
            emit_report(self.table.iloc[0:0], tmp_path)

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ReportError):
            emit_report(self.table, tmp_path, formats=["pdf"])

    def test_missing_chart_columns(self, tmp_path):
        with pytest.raises(ReportError):
            emit_report(self.table, tmp_path, formats=["svg"], value="best_of_n_rate")
