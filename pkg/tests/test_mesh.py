import unittest

import numpy as np

from meshloc.errors import InvalidArgument
from meshloc.mesh import (
    SPHERE_FACE_TOLERANCE, TriangleMesh, generate_box, generate_box_room, generate_sphere,
    generate_two_rooms, merge_meshes, mesh_stats, sphere_grid
)

TRIANGLE_VERTICES = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]


class TestTriangleMesh(unittest.TestCase):
    def test_normal_follows_winding(self):
        mesh = TriangleMesh(TRIANGLE_VERTICES, [[0, 1, 2]])
        np.testing.assert_allclose(mesh.face_normals[0], [0.0, 0.0, 1.0])
        self.assertAlmostEqual(mesh.face_areas[0], 0.5)
        flipped = TriangleMesh(TRIANGLE_VERTICES, [[0, 2, 1]])
        np.testing.assert_allclose(flipped.face_normals[0], [0.0, 0.0, -1.0])

    def test_rejects_out_of_range_index(self):
        with self.assertRaises(InvalidArgument):
            TriangleMesh(TRIANGLE_VERTICES, [[0, 1, 3]])

    def test_rejects_empty_mesh(self):
        with self.assertRaises(InvalidArgument):
            TriangleMesh(np.empty((0, 3)), np.empty((0, 3)))

    def test_degenerate_faces(self):
        vertices = TRIANGLE_VERTICES + [[2.0, 0.0, 0.0]]
        faces = [[0, 1, 2], [0, 1, 3]]
        with self.assertRaises(InvalidArgument):
            TriangleMesh(vertices, faces)
        mesh = TriangleMesh(vertices, faces, drop_degenerate=True)
        self.assertEqual(mesh.face_count, 1)

    def test_is_read_only(self):
        mesh = TriangleMesh(TRIANGLE_VERTICES, [[0, 1, 2]])
        with self.assertRaises(ValueError):
            mesh.vertices[0, 0] = 1.0

    def test_stats(self):
        stats = mesh_stats(generate_box((0, 0, 0), (2.0, 4.0, 6.0)))
        self.assertEqual(stats.face_count, 12)
        self.assertEqual(stats.vertex_count, 8)
        self.assertAlmostEqual(stats.surface_area, 2 * (8 + 12 + 24))
        self.assertEqual(stats.bounds_min, (-1.0, -2.0, -3.0))
        self.assertEqual(stats.to_dict()['bounds_max'], [1.0, 2.0, 3.0])


class TestGenerators(unittest.TestCase):
    def test_sphere_face_count_and_radius(self):
        for target in (8, 1000, 10000):
            mesh = generate_sphere(2.0, target)
            self.assertLess(abs(mesh.face_count - target) / float(target), 0.1)
            np.testing.assert_allclose(np.linalg.norm(mesh.vertices, axis=1), 2.0)

    def test_small_sphere_targets(self):
        for target in range(10, 200):
            count = generate_sphere(1.0, target).face_count
            self.assertLessEqual(abs(count - target) / float(target), SPHERE_FACE_TOLERANCE)
        self.assertEqual(generate_sphere(1.0, 9).face_count, 8)
        self.assertEqual(sphere_grid(8), (2, 4))

    def test_sphere_normals_point_outward(self):
        mesh = generate_sphere(1.0, 500)
        facing = np.einsum('ij,ij->i', mesh.face_normals, mesh.face_centroids)
        self.assertTrue(np.all(facing > 0))

    def test_sphere_arguments(self):
        with self.assertRaises(InvalidArgument):
            generate_sphere(0.0, 100)
        with self.assertRaises(InvalidArgument):
            generate_sphere(1.0, 4)

    def test_room_normals_point_inward(self):
        mesh = generate_box_room((10.0, 10.0, 3.0))
        self.assertEqual(mesh.face_count, 12)
        facing = np.einsum('ij,ij->i', mesh.face_normals, mesh.face_centroids)
        self.assertTrue(np.all(facing < 0))

    def test_box_normals_point_outward(self):
        mesh = generate_box((1.0, 1.0, 1.0), (1.0, 1.0, 1.0))
        facing = np.einsum('ij,ij->i', mesh.face_normals, mesh.face_centroids - 1.0)
        self.assertTrue(np.all(facing > 0))

    def test_two_rooms(self):
        mesh = generate_two_rooms((5.0, 5.0, 3.0), 0.2)
        self.assertEqual(mesh.face_count, 24)
        low, high = mesh.bounds
        np.testing.assert_allclose(low, [-5.1, -2.5, -1.5])
        np.testing.assert_allclose(high, [5.1, 2.5, 1.5])

    def test_merge_offsets_indices(self):
        first = generate_box((0, 0, 0), (1, 1, 1))
        second = generate_box((5, 0, 0), (1, 1, 1))
        merged = merge_meshes([first, second])
        self.assertEqual(merged.vertex_count, 16)
        self.assertEqual(merged.faces.min(), 0)
        self.assertEqual(merged.faces.max(), 15)
        with self.assertRaises(InvalidArgument):
            merge_meshes([])
