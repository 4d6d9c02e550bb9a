"""Tests for problem sampling, normalization and labeled datasets."""

from unittest.mock import patch

import h5py
import numpy as np
import pytest

from paydiff.core.trajectory import Trajectory
from paydiff.data.dataset import (
    Dataset,
    Sample,
    generate_dataset,
    label_trajectory,
    load_dataset,
    payload_histogram,
    save_dataset,
)
from paydiff.data.normalization import NormalizationStats
from paydiff.data.problems import problem_suite, sample_problem
from paydiff.planners.result import PlannerConfig
from paydiff.robot.arm_model import ee_positions
from paydiff.utils.error_handler import (
    CorruptFileError,
    DatasetGenerationError,
    FormatVersionError,
    ModelMismatchError,
    RejectionBudgetError,
)
from paydiff.world.collision import in_collision, proxies_for
from paydiff.world.scene import PLANAR_WORKSPACE, WorkspaceSpec


class TestProblems:
    """Tabletop pick-and-place problems."""

    def test_sample_problem(self, planar2_model):
        problem = sample_problem(np.random.default_rng(0), model=planar2_model, problem_id=4)
        assert problem.problem_id == 4
        assert PLANAR_WORKSPACE.contains("pick", ee_positions(planar2_model, problem.start)[0])
        assert PLANAR_WORKSPACE.contains("place", ee_positions(planar2_model, problem.goal)[0])
        proxies = proxies_for(planar2_model)
        assert not in_collision(planar2_model, proxies, problem.scene, problem.start)
        assert not in_collision(planar2_model, proxies, problem.scene, problem.goal)

    def test_same_rng_state_same_problem(self, planar2_model):
        a = sample_problem(np.random.default_rng(11), model=planar2_model)
        b = sample_problem(np.random.default_rng(11), model=planar2_model)
        np.testing.assert_array_equal(a.start, b.start)
        np.testing.assert_array_equal(a.goal, b.goal)

    def test_suite_prefix_is_stable(self, planar2_model):
        long = problem_suite(planar2_model, 3, seed=5)
        short = problem_suite(planar2_model, 2, seed=5)
        assert [p.problem_id for p in long] == [0, 1, 2]
        for a, b in zip(short, long):
            np.testing.assert_array_equal(a.start, b.start)
            np.testing.assert_array_equal(a.goal, b.goal)

    def test_invalid_arguments(self, planar2_model):
        with pytest.raises(ValueError):
            problem_suite(planar2_model, 0)
        with pytest.raises(ValueError):
            sample_problem(np.random.default_rng(0))

    def test_rejection_budget(self, planar2_model):
        unreachable = WorkspaceSpec(pick_min=(5.0, 0.0, 0.0), pick_max=(6.0, 0.3, 0.0))
        with pytest.raises(RejectionBudgetError):
            sample_problem(np.random.default_rng(0), unreachable, planar2_model, max_tries=20)


class TestNormalization:
    """Limit-based state normalization."""

    def test_from_model(self, planar2_model):
        stats = NormalizationStats.from_model(planar2_model)
        assert stats.state_dim == 6
        np.testing.assert_allclose(stats.center, 0.0, atol=1e-12)
        np.testing.assert_allclose(stats.half_range, [np.pi, np.pi, 2, 2, 8, 8])

    def test_limits_map_to_unit_box(self, planar2_model):
        stats = NormalizationStats.from_model(planar2_model)
        upper = planar2_model.state_upper
        np.testing.assert_allclose(stats.normalize(upper), 1.0)
        x = np.random.default_rng(0).uniform(-1, 1, (5, 6))
        np.testing.assert_allclose(stats.normalize(stats.denormalize(x)), x)

    def test_roundtrip_dict(self, planar3_model):
        stats = NormalizationStats.from_model(planar3_model)
        again = NormalizationStats.from_dict(stats.to_dict())
        np.testing.assert_array_equal(again.half_range, stats.half_range)

    def test_invalid(self):
        with pytest.raises(ValueError):
            NormalizationStats(center=np.zeros(2), half_range=np.array([1.0, 0.0]))


class TestDataset:
    """Dataset container and HDF5 files."""

    def test_container(self, tiny_dataset):
        assert len(tiny_dataset) == 6
        assert tiny_dataset.states().shape == (6, 8, 6)
        np.testing.assert_allclose(tiny_dataset.labels(), [0, 2, 4, 6, 8, 10])

    def test_mixed_horizons(self, tiny_dataset):
        samples = tiny_dataset.samples[:1] + [Sample(Trajectory.constant(np.zeros(2), horizon=5), 1.0)]
        with pytest.raises(CorruptFileError):
            Dataset(samples=samples, normalization=tiny_dataset.normalization, model_hash="x")

    def test_save_load(self, tmp_path, tiny_dataset, planar2_model):
        path = save_dataset(tiny_dataset, tmp_path / "data.h5")
        loaded = load_dataset(path, model=planar2_model)
        assert loaded.equals(tiny_dataset)
        assert loaded.seed == 0
        assert [s.planner_tag for s in loaded.samples] == ["quintic"] * 6

    def test_files_are_byte_identical(self, tmp_path, tiny_dataset):
        a = save_dataset(tiny_dataset, tmp_path / "a.h5").read_bytes()
        b = save_dataset(tiny_dataset, tmp_path / "b.h5").read_bytes()
        assert a == b

    def test_model_mismatch(self, tmp_path, tiny_dataset, planar3_model):
        path = save_dataset(tiny_dataset, tmp_path / "data.h5")
        with pytest.raises(ModelMismatchError):
            load_dataset(path, model=planar3_model)

    def test_truncated(self, tmp_path, tiny_dataset):
        path = save_dataset(tiny_dataset, tmp_path / "data.h5")
        blob = path.read_bytes()
        path.write_bytes(blob[:len(blob) // 2])
        with pytest.raises(CorruptFileError):
            load_dataset(path)

    def test_not_a_dataset(self, tmp_path):
        path = tmp_path / "other.h5"
        with h5py.File(path, "w") as f:
            f.create_dataset("x", data=np.zeros(3))
        with pytest.raises(CorruptFileError):
            load_dataset(path)

    def test_future_format(self, tmp_path, tiny_dataset):
        path = save_dataset(tiny_dataset, tmp_path / "data.h5")
        with h5py.File(path, "a") as f:
            f.attrs["format_version"] = "2.0"
        with pytest.raises(FormatVersionError):
            load_dataset(path)

    def test_verify_labels(self, tmp_path, tiny_dataset, planar2_model):
        path = save_dataset(tiny_dataset, tmp_path / "bad.h5")
        with pytest.raises(CorruptFileError):
            load_dataset(path, model=planar2_model, verify_labels=True)

        for s in tiny_dataset.samples:
            s.m_max = label_trajectory(planar2_model, s.trajectory)
        path = save_dataset(tiny_dataset, tmp_path / "good.h5")
        assert len(load_dataset(path, model=planar2_model, verify_labels=True)) == 6

    def test_histogram(self, tiny_dataset):
        counts, edges = payload_histogram(tiny_dataset, bin_width=2.0)
        assert edges[0] == 0.0 and edges[-1] == pytest.approx(18.0)
        assert counts.sum() == 6
        assert counts[0] == 1


def fake_sample(model, workspace_spec, config, seed, index, audit):
    traj = Trajectory.constant(np.full(model.n_dof, 0.01 * index), horizon=config.horizon, dt=config.dt)
    return Sample(traj, 1.0, index, "fake"), (1.0 if audit else None)


class TestGeneration:
    """Dataset generation bookkeeping and the end-to-end pipeline."""

    @patch("paydiff.data.dataset._generate_one", side_effect=fake_sample)
    def test_ordered_by_problem_index(self, mock_generate, planar2_model):
        dataset = generate_dataset(planar2_model, 5, parallelism=1, seed=3)
        assert [s.problem_id for s in dataset.samples] == [0, 1, 2, 3, 4]
        assert dataset.seed == 3
        assert dataset.metadata["failures"] == 0
        assert mock_generate.call_count == 5

    @patch("paydiff.data.dataset._generate_one", side_effect=DatasetGenerationError("no path"))
    def test_aborts_on_failures(self, mock_generate, planar2_model):
        with pytest.raises(DatasetGenerationError):
            generate_dataset(planar2_model, 4, parallelism=1)

    @patch("paydiff.data.dataset._generate_one")
    def test_audit_mismatch(self, mock_generate, planar2_model):
        traj = Trajectory.constant(np.zeros(2))
        mock_generate.return_value = (Sample(traj, 1.0), 2.0)
        with pytest.raises(DatasetGenerationError):
            generate_dataset(planar2_model, 1, parallelism=1)

    @patch("paydiff.data.dataset._generate_one", side_effect=fake_sample)
    def test_workers_plan_without_wall_clock_cutoff(self, mock_generate, planar2_model):
        """A configured RRT timeout never reaches the workers; labels depend on the seed alone."""
        generate_dataset(planar2_model, 2, planner_config=PlannerConfig(rrt_timeout=0.5), parallelism=1)
        for call in mock_generate.call_args_list:
            assert call.args[2].rrt_timeout is None

    def test_invalid_count(self, planar2_model):
        with pytest.raises(ValueError):
            generate_dataset(planar2_model, 0)

    @pytest.mark.slow
    def test_generated_labels_and_worker_independence(self, planar2_model):
        serial = generate_dataset(planar2_model, 3, parallelism=1, seed=1)
        parallel = generate_dataset(planar2_model, 3, parallelism=2, seed=1)
        assert serial.equals(parallel)
        for s in serial.samples:
            assert s.m_max == pytest.approx(label_trajectory(planar2_model, s.trajectory))
            assert s.trajectory.is_rest_to_rest()

    @pytest.mark.slow
    def test_planar3_labels_exceed_rating(self, planar3_model):
        """Zero-payload plans support more than the arm's nominal rating."""
        dataset = generate_dataset(planar3_model, 20, parallelism=1, seed=0)
        labels = dataset.labels()
        assert np.any(labels > planar3_model.nominal_payload)
        assert np.all(labels <= 18.0)
