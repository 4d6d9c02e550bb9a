"""Pytest configuration and fixtures for paydiff tests."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the package root to Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

from paydiff.core.trajectory import Trajectory  # noqa: E402
from paydiff.robot.arm_model import FrictionParams, Joint, JointLimits, LinkInertia, RobotModel  # noqa: E402
from paydiff.robot.presets import PLANAR_GRAVITY, planar2, planar3  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance reproduction (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_pendulum(link_mass: float = 1.0, tau_max: float = 50.0) -> RobotModel:
    """One unit-length link moving in the vertical plane, point mass at the tip."""
    return RobotModel(
        name="pendulum",
        joints=(Joint("joint1"),),
        links=(LinkInertia(mass=link_mass, com=(1.0, 0.0, 0.0)),),
        limits=(JointLimits(-np.pi, np.pi, v_max=2.0, a_max=8.0, j_max=50.0, tau_max=tau_max),),
        friction=(FrictionParams(),),
        ee_xyz=(1.0, 0.0, 0.0),
        gravity=PLANAR_GRAVITY,
    )


@pytest.fixture
def pendulum():
    return make_pendulum()


@pytest.fixture
def planar2_model():
    return planar2()


@pytest.fixture
def planar3_model():
    return planar3()


@pytest.fixture
def rest_trajectory():
    """planar2 resting at the origin for 16 waypoints."""
    return Trajectory.constant(np.zeros(2), horizon=16, dt=0.08)


@pytest.fixture
def tiny_dataset(planar2_model):
    """Hand-built dataset of rest-to-rest quintic moves, no planner involved."""
    from paydiff.data.dataset import Dataset, Sample
    from paydiff.data.normalization import NormalizationStats
    from paydiff.robot.model_io import model_hash

    rng = np.random.default_rng(0)
    horizon, dt = 8, 0.16
    duration = (horizon - 1) * dt
    s = np.linspace(0.0, 1.0, horizon)
    blend = 10 * s ** 3 - 15 * s ** 4 + 6 * s ** 5
    dblend = (30 * s ** 2 - 60 * s ** 3 + 30 * s ** 4) / duration
    ddblend = (60 * s - 180 * s ** 2 + 120 * s ** 3) / duration ** 2
    samples = []
    for i in range(6):
        start, goal = rng.uniform(-0.2, 0.2, 2), rng.uniform(-0.2, 0.2, 2)
        delta = goal - start
        traj = Trajectory.from_components(start + blend[:, None] * delta, dblend[:, None] * delta,
                                          ddblend[:, None] * delta, dt)
        samples.append(Sample(traj, float(2 * i), i, "quintic"))
    return Dataset(samples=samples, normalization=NormalizationStats.from_model(planar2_model),
                   model_hash=model_hash(planar2_model), model_name="planar2", seed=0, dt=dt,
                   horizon=horizon, n_dof=2)


@pytest.fixture
def tiny_denoiser_config():
    from paydiff.diffusion.unet import DenoiserConfig

    return DenoiserConfig(horizon=8, in_channels=6, payload_dim=19, widths=(8, 16), kernel_size=3, n_groups=4,
                          time_embed_dim=8, payload_embed_widths=(8, 4))


@pytest.fixture
def tiny_checkpoint(tiny_dataset, tiny_denoiser_config):
    """A briefly trained planar2 checkpoint on the tiny dataset."""
    from paydiff.diffusion.schedule import NoiseSchedule, ScheduleConfig
    from paydiff.diffusion.trainer import TrainConfig, train

    config = TrainConfig(steps=3, batch_size=4, log_every=1, checkpoint_every=100)
    return train(tiny_dataset, config, NoiseSchedule(ScheduleConfig(n_steps=10)), seed=0,
                 denoiser_config=tiny_denoiser_config)
