"""Built-in robot models.

``planar2`` and ``planar3`` move in the vertical x-y plane (gravity along -y)
and have closed-form dynamics. ``arm7`` uses Panda-like kinematics with
hand-set inertial values and limits; it is illustrative, not calibrated.
"""

from typing import Callable, Dict

import numpy as np

from ..utils.error_handler import ModelValidationError
from .arm_model import FrictionParams, Joint, JointLimits, LinkInertia, RobotModel

PLANAR_GRAVITY = (0.0, -9.81, 0.0)


def _rod_inertia(mass: float, length: float) -> tuple:
    """Uniform thin rod along x, inertia about its center."""
    i = mass * length ** 2 / 12.0
    return ((0.0, 0.0, 0.0), (0.0, i, 0.0), (0.0, 0.0, i))


def planar2() -> RobotModel:
    """Two unit-length links with 1 kg point masses at the link tips."""
    lengths = (1.0, 1.0)
    joints = (
        Joint("joint1"),
        Joint("joint2", origin_xyz=(lengths[0], 0.0, 0.0)),
    )
    links = tuple(LinkInertia(mass=1.0, com=(length, 0.0, 0.0)) for length in lengths)
    limits = (
        JointLimits(-np.pi, np.pi, v_max=2.0, a_max=8.0, j_max=50.0, tau_max=60.0),
        JointLimits(-np.pi, np.pi, v_max=2.0, a_max=8.0, j_max=50.0, tau_max=30.0),
    )
    return RobotModel(
        name="planar2",
        joints=joints,
        links=links,
        limits=limits,
        friction=(FrictionParams(), FrictionParams()),
        ee_xyz=(lengths[1], 0.0, 0.0),
        gravity=PLANAR_GRAVITY,
        nominal_payload=1.0,
        description="Planar two-link arm, point masses at the link tips",
    )


def planar3() -> RobotModel:
    """Three uniform rods of 0.5/0.4/0.3 m and 2/1.5/1 kg."""
    lengths = (0.5, 0.4, 0.3)
    masses = (2.0, 1.5, 1.0)
    joints = (
        Joint("joint1"),
        Joint("joint2", origin_xyz=(lengths[0], 0.0, 0.0)),
        Joint("joint3", origin_xyz=(lengths[1], 0.0, 0.0)),
    )
    links = tuple(
        LinkInertia(mass=m, com=(0.5 * length, 0.0, 0.0), inertia=_rod_inertia(m, length))
        for m, length in zip(masses, lengths)
    )
    limits = (
        JointLimits(-0.6, np.pi + 0.6, v_max=2.5, a_max=10.0, j_max=60.0, tau_max=60.0),
        JointLimits(-2.6, 2.6, v_max=2.5, a_max=10.0, j_max=60.0, tau_max=30.0),
        JointLimits(-2.6, 2.6, v_max=2.5, a_max=10.0, j_max=60.0, tau_max=15.0),
    )
    return RobotModel(
        name="planar3",
        joints=joints,
        links=links,
        limits=limits,
        friction=(FrictionParams(), FrictionParams(), FrictionParams()),
        ee_xyz=(lengths[2], 0.0, 0.0),
        gravity=PLANAR_GRAVITY,
        nominal_payload=2.0,
        description="Planar three-link arm, uniform rods",
    )


# (origin xyz, origin rpy, q_min, q_max, v_max, a_max, j_max, tau_max)
_ARM7_JOINTS = (
    ((0.0, 0.0, 0.333), (0.0, 0.0, 0.0), -2.8973, 2.8973, 2.175, 15.0, 7500.0, 87.0),
    ((0.0, 0.0, 0.0), (-np.pi / 2, 0.0, 0.0), -1.7628, 1.7628, 2.175, 7.5, 3750.0, 87.0),
    ((0.0, -0.316, 0.0), (np.pi / 2, 0.0, 0.0), -2.8973, 2.8973, 2.175, 10.0, 5000.0, 87.0),
    ((0.0825, 0.0, 0.0), (np.pi / 2, 0.0, 0.0), -3.0718, -0.0698, 2.175, 12.5, 6250.0, 87.0),
    ((-0.0825, 0.384, 0.0), (-np.pi / 2, 0.0, 0.0), -2.8973, 2.8973, 2.61, 15.0, 7500.0, 12.0),
    ((0.0, 0.0, 0.0), (np.pi / 2, 0.0, 0.0), -0.0175, 3.7525, 2.61, 20.0, 10000.0, 12.0),
    ((0.088, 0.0, 0.0), (np.pi / 2, 0.0, 0.0), -2.8973, 2.8973, 2.61, 20.0, 10000.0, 12.0),
)

# (mass, com, principal moments about the COM)
_ARM7_LINKS = (
    (4.9707, (0.0039, 0.0021, -0.0476), (0.7034, 0.7066, 0.0091)),
    (0.6469, (-0.0031, -0.0287, 0.0035), (0.0079, 0.0281, 0.0260)),
    (3.2286, (0.0275, 0.0393, -0.0665), (0.0372, 0.0361, 0.0108)),
    (3.5879, (-0.0532, 0.1044, 0.0275), (0.0259, 0.0196, 0.0283)),
    (1.2259, (-0.0120, 0.0411, -0.0384), (0.0355, 0.0294, 0.0086)),
    (1.6666, (0.0601, -0.0141, -0.0105), (0.0020, 0.0043, 0.0054)),
    (0.7355, (0.0105, -0.0043, 0.0616), (0.0125, 0.0100, 0.0048)),
)


def arm7() -> RobotModel:
    """Seven-joint arm with Panda-like geometry and illustrative dynamics."""
    joints = tuple(
        Joint(f"joint{i + 1}", origin_xyz=xyz, origin_rpy=rpy)
        for i, (xyz, rpy, *_rest) in enumerate(_ARM7_JOINTS)
    )
    limits = tuple(
        JointLimits(q_min, q_max, v_max=v, a_max=a, j_max=j, tau_max=tau)
        for (_xyz, _rpy, q_min, q_max, v, a, j, tau) in _ARM7_JOINTS
    )
    links = tuple(
        LinkInertia(
            mass=mass,
            com=com,
            inertia=((moments[0], 0.0, 0.0), (0.0, moments[1], 0.0), (0.0, 0.0, moments[2])),
        )
        for mass, com, moments in _ARM7_LINKS
    )
    friction = tuple(FrictionParams(viscous=0.05, coulomb=0.3) for _ in joints)
    return RobotModel(
        name="arm7",
        joints=joints,
        links=links,
        limits=limits,
        friction=friction,
        ee_xyz=(0.0, 0.0, 0.2104),
        gravity=(0.0, 0.0, -9.81),
        nominal_payload=3.0,
        description="Illustrative 7-DoF arm with Panda-like kinematics (not calibrated)",
    )


_PRESETS: Dict[str, Callable[[], RobotModel]] = {
    "planar2": planar2,
    "planar3": planar3,
    "arm7": arm7,
}


def builtin_models() -> Dict[str, RobotModel]:
    """All named preset models."""
    return {name: factory() for name, factory in _PRESETS.items()}


def get_preset(name: str) -> RobotModel:
    """Build one preset by name.

    Raises
    ------
    ModelValidationError
        If ``name`` is not a known preset.
    """
    try:
        return _PRESETS[name]()
    except KeyError:
        raise ModelValidationError("preset", f"unknown preset {name!r}, choose from {sorted(_PRESETS)}")


def is_planar(model: RobotModel) -> bool:
    """Whether every joint axis is the world z axis and motion stays in the x-y plane."""
    return bool(np.allclose(model.axes, [0.0, 0.0, 1.0]) and np.allclose(model.gravity_vector[2], 0.0)
                and all(np.allclose(j.origin_rpy, 0.0) and abs(j.origin_xyz[2]) < 1e-12 for j in model.joints))


def preset_names() -> tuple:
    return tuple(_PRESETS)
