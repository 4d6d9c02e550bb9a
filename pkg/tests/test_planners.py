"""Tests for the classical planners."""

import itertools
from unittest.mock import patch

import numpy as np
import pytest

from paydiff.core.trajectory import Problem, Trajectory
from paydiff.eval.validity import validate
from paydiff.planners.kinodynamic import kinodynamic_rrt
from paydiff.planners.plan_and_filter import plan_and_filter
from paydiff.planners.result import PlannerConfig, PlannerResult, PlannerStatus
from paydiff.planners.rrt_connect import JointSampler, rrt_connect
from paydiff.planners.sqp import sqp_optimize, straight_line_initialization
from paydiff.utils.error_handler import NegativeMassError, PlannerTimeoutError
from paydiff.world.collision import CollisionChecker, proxies_for
from paydiff.world.scene import Scene, Sphere

START = np.array([0.3, 0.2])
GOAL = np.array([0.6, 0.0])


class TestPlannerResult:
    """Result invariants and shared configuration."""

    def test_trajectory_iff_success(self, rest_trajectory):
        assert PlannerResult(PlannerStatus.SUCCESS, rest_trajectory).success
        assert not PlannerResult("timeout").success
        with pytest.raises(ValueError):
            PlannerResult(PlannerStatus.SUCCESS, None)
        with pytest.raises(ValueError):
            PlannerResult(PlannerStatus.INFEASIBLE, rest_trajectory)

    def test_to_dict(self, rest_trajectory):
        data = PlannerResult(PlannerStatus.SUCCESS, rest_trajectory, planning_time=0.5).to_dict(
            include_trajectory=True)
        assert data["status"] == "success"
        assert data["trajectory"]["horizon"] == 16

    def test_config(self):
        config = PlannerConfig(horizon=11, dt=0.1)
        assert config.duration == pytest.approx(1.0)
        assert PlannerConfig.from_dict(config.to_dict()) == config


class TestRRTConnect:
    """Geometric joint-space planning."""

    def setup_method(self):
        # blocks the end-effector on the straight line through q1 = pi/2
        self.scene = Scene(obstacles=(Sphere(center=(0.0, 1.9, 0.0), radius=0.3),))
        self.problem = Problem(start=[0.5, 0.0], goal=[2.6, 0.0], scene=self.scene)

    def test_empty_scene(self, planar2_model):
        path = rrt_connect(planar2_model, Problem(start=START, goal=GOAL))
        np.testing.assert_allclose(path[0], START)
        np.testing.assert_allclose(path[-1], GOAL)

    def test_path_avoids_obstacle(self, planar2_model):
        proxies = proxies_for(planar2_model)
        path = rrt_connect(planar2_model, self.problem, proxies=proxies)
        checker = CollisionChecker(planar2_model, self.scene, proxies)
        assert not checker.edge_valid(self.problem.start, self.problem.goal)
        assert all(checker.edge_valid(a, b) for a, b in zip(path[:-1], path[1:]))

    def test_halton_is_deterministic(self, planar2_model):
        first = rrt_connect(planar2_model, self.problem)
        second = rrt_connect(planar2_model, self.problem)
        assert len(first) == len(second)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_outcome_independent_of_clock(self, planar2_model):
        """A slow machine finds the same path as a fast one."""
        reference = rrt_connect(planar2_model, self.problem, sampler="uniform", rng_seed=7)
        with patch("paydiff.planners.rrt_connect.time.perf_counter", side_effect=itertools.count(0.0, 1000.0)):
            slow = rrt_connect(planar2_model, self.problem, sampler="uniform", rng_seed=7)
        assert len(slow) == len(reference)
        for a, b in zip(slow, reference):
            np.testing.assert_array_equal(a, b)

    def test_explicit_timeout(self, planar2_model):
        with patch("paydiff.planners.rrt_connect.time.perf_counter", side_effect=itertools.count(0.0, 1000.0)):
            with pytest.raises(PlannerTimeoutError):
                rrt_connect(planar2_model, self.problem, timeout=1e-7)

    def test_goal_in_collision(self, planar2_model):
        problem = Problem(start=[0.5, 0.0], goal=[np.pi / 2, 0.0], scene=self.scene)
        with pytest.raises(PlannerTimeoutError):
            rrt_connect(planar2_model, problem, config=PlannerConfig(rrt_max_iterations=30))

    def test_sampler(self):
        sampler = JointSampler(np.array([-1.0, 0.0]), np.array([1.0, 2.0]), "uniform", seed=3)
        points = np.array([sampler.sample() for _ in range(50)])
        assert np.all(points >= [-1.0, 0.0]) and np.all(points <= [1.0, 2.0])
        again = JointSampler(np.array([-1.0, 0.0]), np.array([1.0, 2.0]), "uniform", seed=3)
        np.testing.assert_array_equal(again.sample(), points[0])
        with pytest.raises(ValueError):
            JointSampler(np.zeros(2), np.ones(2), "sobol")


class TestPlanAndFilter:
    """Geometric plan, time parameterization and the payload filter."""

    def setup_method(self):
        self.config = PlannerConfig(horizon=32, dt=0.08)

    def test_unloaded_problem(self, planar2_model):
        result = plan_and_filter(planar2_model, Problem(start=START, goal=GOAL), 0.0, config=self.config)
        assert result.success
        traj = result.trajectory
        assert traj.horizon == 32
        assert validate(planar2_model, proxies_for(planar2_model), Scene(), traj, 0.0, start=START, goal=GOAL).valid

    def test_heavy_payload_is_filtered(self, planar2_model):
        result = plan_and_filter(planar2_model, Problem(start=START, goal=GOAL), 18.0, max_attempts=2,
                                 config=self.config)
        assert result.status == PlannerStatus.INFEASIBLE
        assert result.trajectory is None
        assert all("torque" in reason for reason in result.diagnostics["rejections"])

    def test_status_independent_of_clock(self, planar2_model):
        problem = Problem(start=[0.5, 0.0], goal=[2.6, 0.0],
                          scene=Scene(obstacles=(Sphere(center=(0.0, 1.9, 0.0), radius=0.3),)))
        reference = plan_and_filter(planar2_model, problem, 0.0, rng_seed=7, config=self.config)
        with patch("paydiff.planners.rrt_connect.time.perf_counter", side_effect=itertools.count(0.0, 1000.0)):
            slow = plan_and_filter(planar2_model, problem, 0.0, rng_seed=7, config=self.config)
        assert slow.status == reference.status
        if reference.success:
            np.testing.assert_array_equal(slow.trajectory.states, reference.trajectory.states)

    def test_start_equals_goal(self, planar2_model):
        result = plan_and_filter(planar2_model, Problem(start=START, goal=START), 0.0, config=self.config)
        assert result.success
        np.testing.assert_allclose(result.trajectory.q, np.tile(START, (32, 1)))

    def test_negative_payload(self, planar2_model):
        with pytest.raises(NegativeMassError):
            plan_and_filter(planar2_model, Problem(start=START, goal=GOAL), -1.0)


class TestKinodynamicRRT:
    """Tree of jerk-limited edges checked at the payload."""

    def test_direct_connection(self, planar2_model):
        result = kinodynamic_rrt(planar2_model, Problem(start=START, goal=GOAL), 0.0, rng_seed=1,
                                 config=PlannerConfig(dt=0.02))
        assert result.success
        traj = result.trajectory
        np.testing.assert_allclose(traj.q[0], START, atol=1e-9)
        np.testing.assert_allclose(traj.q[-1], GOAL, atol=1e-6)
        assert traj.is_rest_to_rest(atol=1e-6)

    def test_budget_exhausted(self, planar2_model):
        config = PlannerConfig(kino_max_iterations=5)
        result = kinodynamic_rrt(planar2_model, Problem(start=START, goal=GOAL), 18.0, config=config)
        assert result.status == PlannerStatus.TIMEOUT
        assert result.iterations <= 5

    def test_start_equals_goal(self, planar2_model):
        result = kinodynamic_rrt(planar2_model, Problem(start=START, goal=START), 0.0,
                                 config=PlannerConfig(horizon=8))
        assert result.success
        assert result.trajectory.horizon == 8


class TestSQP:
    """Fixed-duration minimum-jerk optimization."""

    def setup_method(self):
        self.config = PlannerConfig(horizon=16, dt=0.1, sqp_max_iter=40)

    def test_straight_line_initialization(self):
        init = straight_line_initialization(Problem(start=START, goal=GOAL), 11, 1.0)
        assert init.horizon == 11
        assert init.dt == pytest.approx(0.1)
        np.testing.assert_allclose(init.q[-1], GOAL)

    def test_unloaded_problem(self, planar2_model):
        result = sqp_optimize(planar2_model, Problem(start=START, goal=GOAL), 0.0, config=self.config)
        assert result.success, result.message
        assert result.trajectory.horizon == 16
        assert result.diagnostics["reason"] in ("kkt", "step", "max_iter")
        assert np.isfinite(result.diagnostics["objective"])

    def test_heavy_payload_reports_failed_checks(self, planar2_model):
        result = sqp_optimize(planar2_model, Problem(start=START, goal=GOAL), 18.0, config=self.config,
                              max_iter=5)
        assert result.status == PlannerStatus.INFEASIBLE
        assert "torque" in result.diagnostics["failed_checks"]

    def test_init_shape_mismatch(self, planar2_model):
        from paydiff.utils.error_handler import DimensionError

        with pytest.raises(DimensionError):
            sqp_optimize(planar2_model, Problem(start=START, goal=GOAL), 0.0,
                         init=Trajectory.constant(START, horizon=10), horizon=16)
