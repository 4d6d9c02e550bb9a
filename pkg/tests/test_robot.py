"""Tests for robot models, kinematics and payload-aware dynamics."""

import numpy as np
import pytest

from paydiff.core.trajectory import Trajectory
from paydiff.robot.arm_model import (
    FrictionParams,
    Joint,
    JointLimits,
    LinkInertia,
    RobotModel,
    ee_positions,
    forward_kinematics,
    jacobian,
    solve_position_ik,
)
from paydiff.robot.dynamics import (
    PAYLOAD_CAP,
    gravity_torque,
    inverse_dynamics,
    kinetic_energy,
    mass_matrix,
    max_supported_payload,
    max_supported_payload_grid,
    payload_torque,
    payload_wrench,
    validate_torques,
)
from paydiff.robot.model_io import load_model, model_hash, resolve_model, save_model
from paydiff.robot.presets import arm7, builtin_models, get_preset, is_planar, preset_names
from paydiff.utils.error_handler import (
    DimensionError,
    InfeasibleAtZeroPayloadError,
    ModelValidationError,
    NegativeMassError,
    NonFiniteError,
)

from .conftest import make_pendulum


class TestRobotModel:
    """Model construction and validation."""

    def test_preset_dimensions(self):
        assert get_preset("planar2").n_dof == 2
        assert get_preset("planar3").n_dof == 3
        assert arm7().n_dof == 7
        assert set(preset_names()) == {"planar2", "planar3", "arm7"}

    def test_planar_presets_are_planar(self):
        assert is_planar(get_preset("planar2"))
        assert is_planar(get_preset("planar3"))
        assert not is_planar(arm7())

    def test_unknown_preset(self):
        with pytest.raises(ModelValidationError):
            get_preset("scara")

    def test_rejects_non_unit_axis(self):
        with pytest.raises(ModelValidationError) as exc:
            RobotModel(
                name="bad",
                joints=(Joint("j", axis=(0.0, 0.0, 2.0)),),
                links=(LinkInertia(mass=1.0),),
                limits=(JointLimits(-1.0, 1.0, 1.0, 1.0, 1.0, 1.0),),
                friction=(FrictionParams(),),
            )
        assert exc.value.field_path == "joints[0].axis"

    def test_rejects_mismatched_lengths(self, planar2_model):
        with pytest.raises(ModelValidationError) as exc:
            RobotModel(
                name="bad",
                joints=planar2_model.joints,
                links=planar2_model.links[:1],
                limits=planar2_model.limits,
                friction=planar2_model.friction,
            )
        assert exc.value.field_path == "links"

    def test_rejects_inverted_joint_range(self):
        with pytest.raises(ModelValidationError):
            RobotModel(
                name="bad",
                joints=(Joint("j"),),
                links=(LinkInertia(mass=1.0),),
                limits=(JointLimits(1.0, -1.0, 1.0, 1.0, 1.0, 1.0),),
                friction=(FrictionParams(),),
            )

    def test_rejects_negative_nominal_payload(self, planar2_model):
        with pytest.raises(ModelValidationError):
            RobotModel(
                name="bad",
                joints=planar2_model.joints,
                links=planar2_model.links,
                limits=planar2_model.limits,
                friction=planar2_model.friction,
                nominal_payload=-1.0,
            )


class TestKinematics:
    """Forward kinematics and Jacobians on planar2."""

    def test_forward_kinematics(self, planar2_model):
        np.testing.assert_allclose(forward_kinematics(planar2_model, [0.0, 0.0]).ee_position, [2, 0, 0], atol=1e-12)
        np.testing.assert_allclose(forward_kinematics(planar2_model, [np.pi / 2, 0.0]).ee_position, [0, 2, 0],
                                   atol=1e-12)
        np.testing.assert_allclose(forward_kinematics(planar2_model, [0.0, np.pi / 2]).ee_position, [1, 1, 0],
                                   atol=1e-12)

    def test_batch_matches_single(self, planar2_model):
        Q = np.random.default_rng(1).uniform(-1, 1, (5, 2))
        batch = ee_positions(planar2_model, Q)
        for q, p in zip(Q, batch):
            np.testing.assert_allclose(forward_kinematics(planar2_model, q).ee_position, p, atol=1e-12)

    def test_jacobian_at_zero(self, planar2_model):
        J = jacobian(planar2_model, [0.0, 0.0])
        assert J.shape == (6, 2)
        np.testing.assert_allclose(J[:3, 0], [0, 2, 0], atol=1e-12)
        np.testing.assert_allclose(J[:3, 1], [0, 1, 0], atol=1e-12)
        np.testing.assert_allclose(J[3:], [[0, 0], [0, 0], [1, 1]], atol=1e-12)

    def test_jacobian_matches_finite_differences(self, planar3_model):
        q = np.array([0.3, -0.5, 0.8])
        J = jacobian(planar3_model, q)
        eps = 1e-6
        for i in range(3):
            dq = np.zeros(3)
            dq[i] = eps
            fd = (ee_positions(planar3_model, q + dq)[0] - ee_positions(planar3_model, q - dq)[0]) / (2 * eps)
            np.testing.assert_allclose(J[:3, i], fd, atol=1e-6)

    def test_wrong_dimension(self, planar2_model):
        with pytest.raises(DimensionError):
            forward_kinematics(planar2_model, [0.0, 0.0, 0.0])

    def test_non_finite(self, planar2_model):
        with pytest.raises(NonFiniteError):
            jacobian(planar2_model, [np.nan, 0.0])

    def test_position_ik_reaches_target(self, planar2_model):
        target = np.array([1.2, 0.7, 0.0])
        q = solve_position_ik(planar2_model, target, rng=np.random.default_rng(0))
        assert q is not None
        np.testing.assert_allclose(ee_positions(planar2_model, q)[0], target, atol=1e-3)

    def test_position_ik_unreachable(self, planar2_model):
        assert solve_position_ik(planar2_model, np.array([5.0, 0.0, 0.0]), rng=np.random.default_rng(0),
                                 restarts=2) is None


class TestDynamics:
    """Inverse dynamics, payload torques and the maximum supported payload."""

    def test_pendulum_holding_torque(self, pendulum):
        np.testing.assert_allclose(gravity_torque(pendulum, [0.0]), [9.81], atol=1e-9)
        np.testing.assert_allclose(gravity_torque(pendulum, [np.pi / 2]), [0.0], atol=1e-9)

    def test_planar2_gravity_torque(self, planar2_model):
        np.testing.assert_allclose(gravity_torque(planar2_model, [0.0, 0.0]), [3 * 9.81, 9.81], atol=1e-9)

    def test_planar2_mass_matrix(self, planar2_model):
        M = mass_matrix(planar2_model, np.zeros(2))
        np.testing.assert_allclose(M, [[5.0, 2.0], [2.0, 1.0]], atol=1e-9)
        M = mass_matrix(planar2_model, np.array([0.4, 1.1]))
        np.testing.assert_allclose(M, M.T, atol=1e-12)
        assert np.all(np.linalg.eigvalsh(M) > 0)

    def test_kinetic_energy(self, planar2_model):
        assert kinetic_energy(planar2_model, np.zeros(2), np.array([1.0, 0.0])) == pytest.approx(2.5)

    def test_inverse_dynamics_batch(self, planar3_model):
        rng = np.random.default_rng(3)
        q, qd, qdd = (rng.uniform(-1, 1, (4, 3)) for _ in range(3))
        batch = inverse_dynamics(planar3_model, q, qd, qdd)
        assert batch.shape == (4, 3)
        for t in range(4):
            np.testing.assert_allclose(inverse_dynamics(planar3_model, q[t], qd[t], qdd[t]), batch[t], atol=1e-10)

    def test_inverse_dynamics_equation_of_motion(self, planar3_model):
        q, qd = np.array([0.2, -0.4, 0.9]), np.zeros(3)
        qdd = np.array([0.5, -1.0, 2.0])
        tau = inverse_dynamics(planar3_model, q, qd, qdd)
        expected = mass_matrix(planar3_model, q) @ qdd + gravity_torque(planar3_model, q)
        np.testing.assert_allclose(tau, expected, atol=1e-9)

    def test_payload_torque(self, pendulum):
        np.testing.assert_allclose(payload_torque(pendulum, [0.0], 1.0), [9.81], atol=1e-9)
        np.testing.assert_allclose(payload_torque(pendulum, [0.0], 0.0), [0.0], atol=1e-12)

    def test_payload_torque_matches_external_wrench(self, planar3_model):
        q = np.array([0.3, 0.2, -0.7])
        wrench = payload_wrench(2.0, planar3_model.gravity).wrench_world
        with_load = inverse_dynamics(planar3_model, q, np.zeros(3), np.zeros(3), f_ext=wrench)
        np.testing.assert_allclose(with_load - gravity_torque(planar3_model, q),
                                   payload_torque(planar3_model, q, 2.0), atol=1e-9)

    def test_negative_mass(self, pendulum):
        with pytest.raises(NegativeMassError):
            payload_wrench(-1.0)
        with pytest.raises(NegativeMassError):
            payload_torque(pendulum, [0.0], -0.5)

    def test_validate_torques(self, pendulum):
        traj = Trajectory.constant([0.0], horizon=4, dt=0.1)
        assert validate_torques(pendulum, traj, 4.0).feasible
        assert not validate_torques(pendulum, traj, 4.2).feasible

    def test_max_payload_massless_pendulum(self):
        model = make_pendulum(link_mass=0.0)
        traj = Trajectory.constant([0.0], horizon=4, dt=0.1)
        m_max = max_supported_payload(model, traj)
        assert m_max == pytest.approx(50.0 / 9.81, abs=1e-9)
        assert abs(m_max - max_supported_payload_grid(model, traj)) < 1e-3

    def test_max_payload_with_link_mass(self, pendulum):
        traj = Trajectory.constant([0.0], horizon=4, dt=0.1)
        assert max_supported_payload(pendulum, traj) == pytest.approx(50.0 / 9.81 - 1.0, abs=1e-9)

    def test_max_payload_capped(self):
        model = make_pendulum(link_mass=0.0, tau_max=1000.0)
        assert max_supported_payload(model, Trajectory.constant([0.0], horizon=3, dt=0.1)) == PAYLOAD_CAP
        # upright: payload adds no torque
        assert max_supported_payload(model, Trajectory.constant([np.pi / 2], horizon=3, dt=0.1)) == PAYLOAD_CAP

    def test_max_payload_matches_grid_on_moving_trajectory(self, planar2_model):
        t = np.linspace(0.0, 1.0, 20)
        q = np.stack([0.3 * np.sin(2 * t), -0.2 + 0.4 * t ** 2], axis=1)
        qd = np.stack([0.6 * np.cos(2 * t), 0.8 * t], axis=1)
        qdd = np.stack([-1.2 * np.sin(2 * t), np.full_like(t, 0.8)], axis=1)
        traj = Trajectory.from_components(q, qd, qdd, dt=t[1] - t[0])
        closed = max_supported_payload(planar2_model, traj)
        assert 0.0 < closed < PAYLOAD_CAP
        assert abs(closed - max_supported_payload_grid(planar2_model, traj)) < 1e-3
        assert validate_torques(planar2_model, traj, closed).feasible
        assert not validate_torques(planar2_model, traj, closed + 1e-3).feasible

    @pytest.mark.parametrize("seed", range(50))
    def test_feasibility_monotone_in_mass(self, planar3_model, seed):
        """Feasible below the label, infeasible above it, on a 0.5 kg grid."""
        rng = np.random.default_rng(seed)
        t = np.linspace(0.0, 2.0, 25)[:, None]
        center = rng.uniform(-0.8, 0.8, 3) + np.array([np.pi / 2, 0.0, 0.0])
        amp, omega, phase = rng.uniform(0.0, 0.5, 3), rng.uniform(0.5, 2.0, 3), rng.uniform(0.0, 2 * np.pi, 3)
        q = center + amp * np.sin(omega * t + phase)
        qd = amp * omega * np.cos(omega * t + phase)
        qdd = -amp * omega ** 2 * np.sin(omega * t + phase)
        traj = Trajectory.from_components(q, qd, qdd, dt=float(t[1, 0] - t[0, 0]))
        label = max_supported_payload(planar3_model, traj)
        feasible = [validate_torques(planar3_model, traj, m).feasible for m in np.arange(0.0, 18.01, 0.5)]
        assert feasible == sorted(feasible, reverse=True)
        for m, ok in zip(np.arange(0.0, 18.01, 0.5), feasible):
            if m < label - 1e-3:
                assert ok
            elif m > label + 1e-3:
                assert not ok

    def test_infeasible_at_zero_payload(self):
        model = make_pendulum(tau_max=5.0)
        with pytest.raises(InfeasibleAtZeroPayloadError):
            max_supported_payload(model, Trajectory.constant([0.0], horizon=3, dt=0.1))


class TestModelIO:
    """JSON model files and preset resolution."""

    def test_save_load(self, tmp_path, planar3_model):
        path = save_model(planar3_model, tmp_path / "planar3.json")
        loaded = load_model(path)
        assert loaded == planar3_model
        assert model_hash(loaded) == model_hash(planar3_model)

    def test_hash_distinguishes_models(self, planar2_model, planar3_model):
        assert model_hash(planar2_model) != model_hash(planar3_model)

    def test_resolve_preset_and_file(self, tmp_path, planar2_model):
        assert resolve_model("planar2") == planar2_model
        path = save_model(planar2_model, tmp_path / "m.json")
        assert resolve_model(str(path)) == planar2_model

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_model(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ModelValidationError):
            load_model(path)

    def test_builtin_models(self):
        models = builtin_models()
        assert set(models) == set(preset_names())
        assert models["planar2"].n_dof == 2
        assert models["arm7"].n_dof == 7
        with pytest.raises(ModelValidationError):
            get_preset("scara")
