"""Obstacle scenes: spheres, boxes and half-spaces with signed distances.

Scene files are JSON::

    {"margin": 0.01,
     "obstacles": [
        {"type": "halfspace", "normal": [0, 1, 0], "offset": -0.1},
        {"type": "box", "min": [0.55, -0.1, -0.5], "max": [0.65, 0.15, 0.5]},
        {"type": "sphere", "center": [0.3, 0.6, 0.0], "radius": 0.1}]}

A half-space is solid where ``normal . x <= offset``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..utils.error_handler import ModelValidationError
from ..utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_MARGIN = 0.01

Vec3 = Tuple[float, float, float]


@dataclass(frozen=True)
class Sphere:
    center: Vec3
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ModelValidationError("sphere.radius", "must be > 0")

    def signed_distance(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Signed distance and its gradient for points of shape (..., 3)."""
        diff = points - np.asarray(self.center)
        norm = np.linalg.norm(diff, axis=-1)
        safe = np.where(norm > 1e-12, norm, 1.0)
        grad = np.where((norm > 1e-12)[..., None], diff / safe[..., None], np.array([1.0, 0.0, 0.0]))
        return norm - self.radius, grad

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "sphere", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Box:
    """Axis-aligned box."""

    min: Vec3
    max: Vec3

    def __post_init__(self) -> None:
        if not np.all(np.asarray(self.min) < np.asarray(self.max)):
            raise ModelValidationError("box.min", "must be < max componentwise")

    def signed_distance(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = np.asarray(self.min), np.asarray(self.max)
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        rel = points - center
        d = np.abs(rel) - half
        sign = np.where(rel >= 0, 1.0, -1.0)

        outside = np.maximum(d, 0.0)
        out_norm = np.linalg.norm(outside, axis=-1)
        inside = np.minimum(d.max(axis=-1), 0.0)
        dist = out_norm + inside

        safe = np.where(out_norm > 1e-12, out_norm, 1.0)
        grad_out = sign * outside / safe[..., None]
        # Inside: push out through the nearest face
        face = np.argmax(d, axis=-1)
        grad_in = np.zeros_like(points, dtype=float)
        np.put_along_axis(grad_in, face[..., None], np.take_along_axis(sign, face[..., None], axis=-1), axis=-1)
        grad = np.where((out_norm > 1e-12)[..., None], grad_out, grad_in)
        return dist, grad

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "box", "min": list(self.min), "max": list(self.max)}


@dataclass(frozen=True)
class HalfSpace:
    """Solid region ``normal . x <= offset``; ``normal`` is normalized on use."""

    normal: Vec3
    offset: float

    def __post_init__(self) -> None:
        if np.linalg.norm(self.normal) < 1e-12:
            raise ModelValidationError("halfspace.normal", "must be non-zero")

    def signed_distance(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = np.asarray(self.normal, dtype=float)
        scale = np.linalg.norm(n)
        n = n / scale
        dist = points @ n - self.offset / scale
        return dist, np.broadcast_to(n, points.shape)

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "halfspace", "normal": list(self.normal), "offset": self.offset}


Obstacle = Union[Sphere, Box, HalfSpace]


@dataclass(frozen=True)
class Scene:
    """Static obstacle set with a clearance margin (m)."""

    obstacles: Tuple[Obstacle, ...] = ()
    margin: float = DEFAULT_MARGIN

    def __post_init__(self) -> None:
        if self.margin < 0:
            raise ModelValidationError("margin", "must be >= 0")

    def signed_distances(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Distances and gradients of ``points`` (..., 3) to every obstacle.

        Returns
        -------
        dist : ndarray, shape (..., n_obstacles)
        grad : ndarray, shape (..., n_obstacles, 3)
        """
        points = np.asarray(points, dtype=float)
        if not self.obstacles:
            return np.full(points.shape[:-1] + (0,), np.inf), np.zeros(points.shape[:-1] + (0, 3))
        results = [obs.signed_distance(points) for obs in self.obstacles]
        dist = np.stack([r[0] for r in results], axis=-1)
        grad = np.stack([np.broadcast_to(r[1], points.shape) for r in results], axis=-2)
        return dist, grad

    def to_dict(self) -> Dict[str, Any]:
        return {"margin": self.margin, "obstacles": [obs.to_dict() for obs in self.obstacles]}


def obstacle_from_dict(data: Dict[str, Any], path: str = "obstacle") -> Obstacle:
    kind = data.get("type")
    try:
        if kind == "sphere":
            return Sphere(center=tuple(map(float, data["center"])), radius=float(data["radius"]))
        if kind == "box":
            return Box(min=tuple(map(float, data["min"])), max=tuple(map(float, data["max"])))
        if kind == "halfspace":
            return HalfSpace(normal=tuple(map(float, data["normal"])), offset=float(data["offset"]))
    except KeyError as e:
        raise ModelValidationError(f"{path}.{e.args[0]}", "missing field")
    except ModelValidationError as e:
        raise ModelValidationError(f"{path}.{e.field_path.split('.', 1)[-1]}", str(e).split(": ", 1)[-1])
    raise ModelValidationError(f"{path}.type", f"unknown obstacle type {kind!r}")


def scene_from_dict(data: Dict[str, Any]) -> Scene:
    obstacles = tuple(
        obstacle_from_dict(entry, f"obstacles[{i}]") for i, entry in enumerate(data.get("obstacles", []))
    )
    return Scene(obstacles=obstacles, margin=float(data.get("margin", DEFAULT_MARGIN)))


def load_scene(path: Union[str, Path]) -> Scene:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Scene file not found: {path}")
    with open(path, "r") as f:
        scene = scene_from_dict(json.load(f))
    logger.info(f"Loaded scene with {len(scene.obstacles)} obstacles from {path}")
    return scene


def save_scene(scene: Scene, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(scene.to_dict(), f, indent=2)
    return path


@dataclass(frozen=True)
class WorkspaceSpec:
    """Tabletop layout: table plane, a block between the pick and place regions.

    Regions are axis-aligned boxes of end-effector positions. ``up`` is the
    index of the vertical world axis (1 for the planar presets, 2 otherwise).
    """

    table_height: float = -0.1
    up: int = 1
    block_min: Vec3 = (0.55, -0.1, -0.5)
    block_max: Vec3 = (0.65, 0.15, 0.5)
    pick_min: Vec3 = (0.7, -0.05, 0.0)
    pick_max: Vec3 = (1.0, 0.3, 0.0)
    place_min: Vec3 = (-1.0, -0.05, 0.0)
    place_max: Vec3 = (-0.4, 0.3, 0.0)
    margin: float = DEFAULT_MARGIN
    extra_obstacles: Tuple[Obstacle, ...] = field(default=())

    def contains(self, region: str, point: np.ndarray, tol: float = 1e-9) -> bool:
        lo = np.asarray(getattr(self, f"{region}_min"))
        hi = np.asarray(getattr(self, f"{region}_max"))
        point = np.asarray(point)
        return bool(np.all(point >= lo - tol) and np.all(point <= hi + tol))


PLANAR_WORKSPACE = WorkspaceSpec()

SPATIAL_WORKSPACE = WorkspaceSpec(
    table_height=0.0,
    up=2,
    block_min=(0.3, -0.05, 0.0),
    block_max=(0.7, 0.05, 0.2),
    pick_min=(0.35, 0.2, 0.1),
    pick_max=(0.6, 0.45, 0.3),
    place_min=(0.35, -0.45, 0.1),
    place_max=(0.6, -0.2, 0.3),
)


def tabletop_scene(spec: Optional[WorkspaceSpec] = None) -> Scene:
    """Scene for a workspace spec: table half-space, block, extra obstacles."""
    spec = spec or PLANAR_WORKSPACE
    normal = [0.0, 0.0, 0.0]
    normal[spec.up] = 1.0
    obstacles: List[Obstacle] = [
        HalfSpace(normal=tuple(normal), offset=spec.table_height),
        Box(min=spec.block_min, max=spec.block_max),
    ]
    obstacles.extend(spec.extra_obstacles)
    return Scene(obstacles=tuple(obstacles), margin=spec.margin)


def default_workspace(planar: bool) -> WorkspaceSpec:
    return PLANAR_WORKSPACE if planar else SPATIAL_WORKSPACE
