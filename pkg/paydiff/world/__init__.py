"""Obstacle scenes, tabletop layouts and sphere-proxy collision checking."""

from .collision import CollisionChecker, CollisionProxySet, collision_cost, in_collision, proxies_for
from .scene import Box, HalfSpace, Scene, Sphere, WorkspaceSpec, load_scene, save_scene, tabletop_scene

__all__ = [
    "Box",
    "CollisionChecker",
    "CollisionProxySet",
    "HalfSpace",
    "Scene",
    "Sphere",
    "WorkspaceSpec",
    "collision_cost",
    "in_collision",
    "load_scene",
    "proxies_for",
    "save_scene",
    "tabletop_scene",
]
