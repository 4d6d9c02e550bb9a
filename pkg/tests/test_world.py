"""Tests for obstacle geometry, scenes and sphere-proxy collision checks."""

import numpy as np
import pytest

from paydiff.world.collision import (
    CollisionChecker,
    CollisionProxySet,
    clearance,
    collision_cost,
    collision_cost_gradient,
    in_collision,
    proxies_for,
)
from paydiff.world.scene import (
    PLANAR_WORKSPACE,
    Box,
    HalfSpace,
    Scene,
    Sphere,
    load_scene,
    save_scene,
    scene_from_dict,
    tabletop_scene,
)
from paydiff.utils.error_handler import ModelValidationError


def ee_proxy(radius=0.1):
    """One sphere at the planar2 end-effector."""
    return CollisionProxySet(link_index=np.array([1]), local_offset=np.array([[1.0, 0.0, 0.0]]),
                             radius=np.array([radius]))


class TestObstacles:
    """Signed distances of the primitive shapes."""

    def test_sphere(self):
        dist, grad = Sphere(center=(0.0, 0.0, 0.0), radius=1.0).signed_distance(np.array([[2.0, 0.0, 0.0]]))
        assert dist[0] == pytest.approx(1.0)
        np.testing.assert_allclose(grad[0], [1, 0, 0])

    def test_box(self):
        box = Box(min=(-1.0, -1.0, -1.0), max=(1.0, 1.0, 1.0))
        dist, _ = box.signed_distance(np.array([[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [2.0, 2.0, 0.0]]))
        np.testing.assert_allclose(dist, [1.0, -1.0, np.sqrt(2.0)])

    def test_halfspace_solid_below(self):
        floor = HalfSpace(normal=(0.0, 2.0, 0.0), offset=0.0)
        dist, grad = floor.signed_distance(np.array([[0.0, 0.5, 0.0], [0.0, -0.25, 0.0]]))
        np.testing.assert_allclose(dist, [0.5, -0.25])
        np.testing.assert_allclose(grad[0], [0, 1, 0])

    def test_invalid_shapes(self):
        with pytest.raises(ModelValidationError):
            Sphere(center=(0.0, 0.0, 0.0), radius=0.0)
        with pytest.raises(ModelValidationError):
            Box(min=(0.0, 0.0, 0.0), max=(1.0, -1.0, 1.0))
        with pytest.raises(ModelValidationError):
            HalfSpace(normal=(0.0, 0.0, 0.0), offset=1.0)
        with pytest.raises(ModelValidationError):
            Scene(margin=-0.1)


class TestScene:
    """Scene files and the tabletop layout."""

    def test_save_load(self, tmp_path):
        scene = Scene(obstacles=(Sphere((0.5, 0.5, 0.0), 0.2), HalfSpace((0.0, 1.0, 0.0), -0.1)), margin=0.02)
        loaded = load_scene(save_scene(scene, tmp_path / "scene.json"))
        assert loaded == scene

    def test_unknown_obstacle_type(self):
        with pytest.raises(ModelValidationError) as exc:
            scene_from_dict({"obstacles": [{"type": "cone"}]})
        assert exc.value.field_path == "obstacles[0].type"

    def test_missing_field(self):
        with pytest.raises(ModelValidationError) as exc:
            scene_from_dict({"obstacles": [{"type": "sphere", "center": [0, 0, 0]}]})
        assert exc.value.field_path == "obstacles[0].radius"

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_scene(tmp_path / "none.json")

    def test_tabletop(self):
        scene = tabletop_scene()
        assert len(scene.obstacles) == 2
        assert isinstance(scene.obstacles[0], HalfSpace)
        assert PLANAR_WORKSPACE.contains("pick", [0.8, 0.1, 0.0])
        assert not PLANAR_WORKSPACE.contains("place", [0.8, 0.1, 0.0])


class TestCollision:
    """Proxy placement, collision flags and the penetration cost."""

    def setup_method(self):
        self.floor = Scene(obstacles=(HalfSpace(normal=(0.0, 1.0, 0.0), offset=0.0),), margin=0.01)

    def test_proxies_along_links(self, planar2_model):
        proxies = proxies_for(planar2_model, radius=0.05, per_link=2)
        assert len(proxies) == 4
        np.testing.assert_array_equal(proxies.link_index, [0, 0, 1, 1])
        np.testing.assert_allclose(proxies.local_offset[:2, 0], [0.5, 1.0])

    def test_halfspace_collision(self, planar2_model):
        assert in_collision(planar2_model, ee_proxy(), self.floor, np.array([0.0, 0.0]))
        assert not in_collision(planar2_model, ee_proxy(), self.floor, np.array([np.pi / 2, 0.0]))

    def test_clearance(self, planar2_model):
        np.testing.assert_allclose(clearance(planar2_model, ee_proxy(), self.floor, np.array([[np.pi / 2, 0.0]])),
                                   [1.9])

    def test_cost_is_squared_penetration(self, planar2_model):
        # proxy center on the plane: penetration radius + margin
        cost = collision_cost(planar2_model, ee_proxy(), self.floor, np.zeros((1, 2)))
        assert cost == pytest.approx(0.11 ** 2)
        q_up = np.array([[np.arcsin(0.5 * 0.05), 0.0]])
        cost = collision_cost(planar2_model, ee_proxy(), self.floor, q_up)
        assert cost == pytest.approx((0.11 - 0.05) ** 2)

    def test_cost_zero_when_clear(self, planar2_model, rest_trajectory):
        lifted = rest_trajectory.copy()
        lifted.states[:, 0] = np.pi / 2
        assert collision_cost(planar2_model, proxies_for(planar2_model), self.floor, lifted) == 0.0

    def test_empty_scene(self, planar2_model, rest_trajectory):
        empty = Scene()
        assert collision_cost(planar2_model, proxies_for(planar2_model), empty, rest_trajectory) == 0.0
        assert not in_collision(planar2_model, proxies_for(planar2_model), empty, np.zeros(2))

    def test_gradient_matches_finite_differences(self, planar2_model):
        proxies = proxies_for(planar2_model)
        Q = np.array([[0.02, -0.05], [0.1, -0.3]])
        grad = collision_cost_gradient(planar2_model, proxies, self.floor, Q)
        eps = 1e-6
        for t in range(Q.shape[0]):
            for j in range(2):
                dq = np.zeros_like(Q)
                dq[t, j] = eps
                fd = (collision_cost(planar2_model, proxies, self.floor, Q + dq)
                      - collision_cost(planar2_model, proxies, self.floor, Q - dq)) / (2 * eps)
                assert grad[t, j] == pytest.approx(fd, abs=1e-6)

    def test_checker(self, planar2_model):
        checker = CollisionChecker(planar2_model, self.floor, ee_proxy())
        assert checker.state_valid(np.array([np.pi / 2, 0.0]))
        assert not checker.state_valid(np.array([0.0, 0.0]))
        assert not checker.state_valid(np.array([4.0, 0.0]))
        assert not checker.edge_valid(np.array([np.pi / 2, 0.0]), np.array([0.0, 0.0]))
        np.testing.assert_array_equal(checker.states_valid(np.array([[np.pi / 2, 0.0], [0.0, 0.0]])),
                                      [True, False])
        assert checker.n_checks == 6
