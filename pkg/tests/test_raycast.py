import unittest

import numpy as np

from meshloc.errors import InvalidArgument
from meshloc.mesh import TriangleMesh, generate_box_room, generate_sphere, merge_meshes
from meshloc.raycast import (
    BruteForceScene, Ray, batch_closest_hit, build_bvh, closest_hit,
    closest_hit_brute, make_scene
)

UNIT_TRIANGLE = TriangleMesh([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], [[0, 1, 2]])


def random_rays(count, seed, spread=0.5):
    rng = np.random.default_rng(seed)
    origins = rng.uniform(-spread, spread, size=(count, 3))
    directions = rng.normal(size=(count, 3))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    return origins, directions


class TestRay(unittest.TestCase):
    def test_direction_must_be_unit(self):
        with self.assertRaises(InvalidArgument):
            Ray((0, 0, 0), (0, 0, 2))

    def test_towards_normalizes(self):
        ray = Ray.towards((0, 0, 0), (0, 3, 4))
        np.testing.assert_allclose(ray.direction, [0, 0.6, 0.8])
        with self.assertRaises(InvalidArgument):
            Ray.towards((0, 0, 0), (0, 0, 0))


class TestClosestHit(unittest.TestCase):
    def setUp(self):
        self.scene = build_bvh(UNIT_TRIANGLE)

    def test_hit_from_above(self):
        hit = closest_hit(self.scene, Ray((0.25, 0.25, 2.0), (0, 0, -1)), 10.0)
        self.assertAlmostEqual(hit.distance, 2.0)
        self.assertEqual(hit.face_id, 0)
        np.testing.assert_allclose(hit.point, [0.25, 0.25, 0.0], atol=1e-12)
        np.testing.assert_allclose(hit.normal, [0, 0, 1])

    def test_normal_faces_the_ray(self):
        hit = closest_hit(self.scene, Ray((0.25, 0.25, -1.0), (0, 0, 1)), 10.0)
        self.assertAlmostEqual(hit.distance, 1.0)
        np.testing.assert_allclose(hit.normal, [0, 0, -1])

    def test_miss(self):
        self.assertIsNone(closest_hit(self.scene, Ray((2.0, 2.0, 1.0), (0, 0, -1)), 10.0))
        self.assertIsNone(closest_hit(self.scene, Ray((0.25, 0.25, 1.0), (0, 0, 1)), 10.0))

    def test_max_range_is_inclusive(self):
        ray = Ray((0.25, 0.25, 2.0), (0, 0, -1))
        self.assertIsNotNone(closest_hit(self.scene, ray, 2.0))
        self.assertIsNone(closest_hit(self.scene, ray, 1.5))

    def test_parallel_ray_misses(self):
        ray = Ray((-1.0, 0.25, 0.0), (1, 0, 0))
        self.assertIsNone(closest_hit(self.scene, ray, 10.0))

    def test_origin_on_surface_skips_it(self):
        ray = Ray((0.25, 0.25, 0.0), (0, 0, -1))
        self.assertIsNone(closest_hit(self.scene, ray, 10.0))

    def test_invalid_range(self):
        with self.assertRaises(InvalidArgument):
            closest_hit(self.scene, Ray((0, 0, 1), (0, 0, -1)), 0.0)

    def test_nearest_of_stacked_faces(self):
        upper = TriangleMesh(UNIT_TRIANGLE.vertices + (0, 0, 1.0), UNIT_TRIANGLE.faces)
        mesh = merge_meshes([UNIT_TRIANGLE, upper])
        ray = Ray((0.2, 0.2, 5.0), (0, 0, -1))
        for scene in (build_bvh(mesh), BruteForceScene(mesh)):
            hit = closest_hit(scene, ray, 10.0)
            self.assertEqual(hit.face_id, 1)
            self.assertAlmostEqual(hit.distance, 4.0)

    def test_equal_distance_prefers_lowest_face(self):
        mesh = merge_meshes([UNIT_TRIANGLE, UNIT_TRIANGLE])
        ray = Ray((0.2, 0.2, 1.0), (0, 0, -1))
        self.assertEqual(closest_hit(build_bvh(mesh), ray, 10.0).face_id, 0)
        self.assertEqual(closest_hit_brute(mesh, ray, 10.0).face_id, 0)


class TestBvh(unittest.TestCase):
    def setUp(self):
        self.mesh = generate_sphere(1.0, 5000)
        self.bvh = build_bvh(self.mesh)

    def test_structure_is_valid(self):
        self.assertTrue(self.bvh.validate())
        self.assertGreater(self.bvh.leaf_count, 1)
        self.assertGreaterEqual(self.bvh.stack_size, 2 * self.bvh.depth + 2)

    def test_build_is_deterministic(self):
        other = build_bvh(self.mesh)
        np.testing.assert_array_equal(other.face_index, self.bvh.face_index)
        np.testing.assert_array_equal(other.box_min, self.bvh.box_min)

    def test_agrees_with_brute_force(self):
        origins, directions = random_rays(3000, seed=3)
        fast = self.bvh.cast(origins, directions, 10.0)
        slow = BruteForceScene(self.mesh).cast(origins, directions, 10.0)
        np.testing.assert_array_equal(fast.face_ids, slow.face_ids)
        np.testing.assert_allclose(fast.distances, slow.distances, rtol=0, atol=1e-9)
        self.assertEqual(fast.hit_count, 3000)

    def test_agrees_with_brute_force_from_outside(self):
        origins, directions = random_rays(2000, seed=4, spread=3.0)
        fast = self.bvh.cast(origins, directions, 2.0)
        slow = BruteForceScene(self.mesh).cast(origins, directions, 2.0)
        np.testing.assert_array_equal(fast.face_ids, slow.face_ids)
        self.assertTrue(np.all(np.isinf(fast.distances[~fast.hit])))
        self.assertTrue(np.all(np.isnan(fast.points[~fast.hit])))

    def test_single_origin_is_broadcast(self):
        _, directions = random_rays(100, seed=5)
        batch = self.bvh.cast(np.zeros(3), directions, 10.0)
        np.testing.assert_allclose(batch.distances, 1.0, atol=5e-3)

    def test_empty_batch(self):
        batch = self.bvh.cast(np.empty((0, 3)), np.empty((0, 3)), 10.0)
        self.assertEqual(len(batch), 0)
        self.assertEqual(batch_closest_hit(self.bvh, [], 10.0), [])

    def test_batch_keeps_ray_order(self):
        rays = [Ray.towards((0, 0, 0), (1, 0.03, 0.02)), Ray((5, 0, 0), (1, 0, 0)),
                Ray.towards((0, 0, 0), (0.02, 0.01, 1))]
        hits = batch_closest_hit(self.bvh, rays, 10.0)
        self.assertIsNotNone(hits[0])
        self.assertIsNone(hits[1])
        self.assertAlmostEqual(float(np.linalg.norm(hits[2].point)), 1.0, delta=5e-3)
        self.assertGreater(hits[2].point[2], 0.99)


class TestRoomScene(unittest.TestCase):
    def test_walls_from_inside(self):
        scene = make_scene(generate_box_room((10.0, 10.0, 3.0)))
        directions = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, -1]],
                              dtype=np.float64)
        batch = scene.cast((0.3, 0.2, 0.1), directions, 100.0)
        np.testing.assert_allclose(batch.distances, [4.7, 5.3, 4.8, 1.4, 1.6])
        np.testing.assert_allclose(batch.normals[3], [0, 0, -1])

    def test_make_scene_backends(self):
        mesh = generate_box_room()
        self.assertEqual(make_scene(mesh).name, 'bvh')
        self.assertEqual(make_scene(mesh, brute_force=True).name, 'brute_force')
