import csv
import io
import json
import unittest

import numpy as np

from meshloc.harness import (
    FLOOR_HEIGHT, WHEEL_RADIUS, box_world_rigs, floor_pose, planar_rigs,
    run_combined_correction, run_sphere_benchmark, run_stationary_experiment,
    run_trajectory_experiment, simulate_rig_scans
)
from meshloc.mesh import generate_box, generate_box_room, merge_meshes
from meshloc.raycast import make_scene
from meshloc.registration import MicpParams
from meshloc.sensors.spherical import vlp16
from meshloc.trajectory import square_loop
from meshloc.transform import Transform


class TestSphereBenchmark(unittest.TestCase):
    def setUp(self):
        self.model = vlp16(n_horizontal=30)

    def test_center_guess_converges_at_once(self):
        report = run_sphere_benchmark([200], 1, model=self.model)
        self.assertEqual(len(report.rows), 1)
        row = report.rows[0]
        self.assertEqual(row.iterations, 1)
        self.assertEqual(row.convergence_rate, 1.0)
        self.assertLess(row.mean_translation_error, 1e-9)
        self.assertLessEqual(sum(row.phase_fractions.values()), 1.0 + 1e-6)

    def test_one_row_per_face_count(self):
        report = run_sphere_benchmark([100, 400], 3, model=self.model,
                                      params=MicpParams(max_iterations=5))
        self.assertEqual([row.n_poses for row in report.rows], [3, 3])
        self.assertLess(report.rows[0].face_count, report.rows[1].face_count)
        self.assertTrue(all(row.iterations <= 15 for row in report.rows))

    def test_csv_columns(self):
        report = run_sphere_benchmark([100], 1, model=self.model)
        rows = list(csv.DictReader(io.StringIO(report.to_csv(phases=True))))
        self.assertEqual(len(rows), 1)
        self.assertIn('simulation_fraction', rows[0])
        self.assertIn('svd_fraction', rows[0])
        self.assertNotIn('svd_fraction', report.to_csv().splitlines()[0])

    def test_normalized_json(self):
        report = run_sphere_benchmark([100], 1, model=self.model, brute_force=True)
        data = json.loads(report.to_json(normalize_timing=True))
        self.assertEqual(data['backend'], 'brute_force')
        self.assertEqual(data['rows'][0]['mean_iteration_time'], 0.0)
        self.assertEqual(data['rows'][0]['build_time'], 0.0)

    def test_same_guesses_with_same_seed(self):
        params = MicpParams(max_iterations=3)
        first = run_sphere_benchmark([100], 2, model=self.model, seed=5, params=params)
        second = run_sphere_benchmark([100], 2, model=self.model, seed=5, params=params)
        self.assertEqual(first.to_json(normalize_timing=True),
                         second.to_json(normalize_timing=True))

    def test_needs_face_counts(self):
        with self.assertRaises(ValueError):
            run_sphere_benchmark([], 1)


class BoxWorldTester(unittest.TestCase):
    def setUp(self):
        self.scene = make_scene(generate_box_room((10.0, 10.0, 3.0)))


class TestBoxWorld(BoxWorldTester):
    def test_rigs(self):
        lidar, wheels = box_world_rigs(vlp16(n_horizontal=10))
        self.assertEqual(lidar.name, 'lidar')
        self.assertEqual(wheels.model.ray_count, 4)
        np.testing.assert_allclose(lidar.tsb.translation, [0, 0, 0.5])
        self.assertIsNone(wheels.weight_override)
        lidar, wheels = planar_rigs(n_horizontal=36)
        self.assertEqual((lidar.weight_override, wheels.weight_override), (0.5, 0.5))

    def test_floor_pose(self):
        pose = floor_pose(1.0, 2.0, 0.5)
        np.testing.assert_allclose(pose.translation, [1.0, 2.0, FLOOR_HEIGHT])
        self.assertAlmostEqual(pose.yaw, 0.5)

    def test_stationary_noise(self):
        lidar, _ = box_world_rigs(vlp16(n_horizontal=90))
        report = run_stationary_experiment(
            self.scene, lidar, floor_pose(0.4, -0.3, 0.1),
            Transform(translation=(0.12, -0.1, 0.1)), 0.008, range(3)
        )
        self.assertEqual(len(report.errors), 3)
        self.assertLess(report.max_error, 5e-3)
        self.assertTrue(all(result.converged for result in report.results))

    def test_wheels_fix_the_height_of_a_planar_lidar(self):
        lidar, wheels = planar_rigs(n_horizontal=360)
        truth = floor_pose(0.5, 0.3, 0.0)
        initial = truth @ Transform(translation=(-0.5, 0.0, 0.2))
        params = MicpParams(max_iterations=200)
        correction = run_combined_correction(self.scene, lidar, wheels, truth, initial, params)
        self.assertGreater(abs(correction.errors('lidar')[2]), 0.15)
        combined = correction.errors('combined')
        self.assertLess(abs(combined[2]), 0.01)
        self.assertLess(abs(combined[0]), 0.01)
        self.assertLess(abs(correction.errors('wheels')[2]), 0.01)


class TestTrajectoryExperiment(BoxWorldTester):
    def setUp(self):
        super(TestTrajectoryExperiment, self).setUp()
        self.truth = square_loop(side=4.0, step=0.25, center=(0.0, 0.0, FLOOR_HEIGHT))
        self.rigs = box_world_rigs(vlp16(n_horizontal=90))

    def test_exact_odometry_stays_exact(self):
        experiment = run_trajectory_experiment(
            self.scene, self.truth, self.rigs,
            odometry_params={'noise_per_meter': 0.0, 'noise_per_rad': 0.0}
        )
        self.assertLess(experiment.micp_error, 1e-6)
        self.assertEqual(experiment.rejected_steps, 0)
        self.assertEqual(len(experiment.corrected), len(self.truth))

    def test_correction_removes_drift(self):
        experiment = run_trajectory_experiment(
            self.scene, self.truth, self.rigs, seed=1, noise_sigma=0.008,
            odometry_params={'noise_per_meter': 0.05, 'noise_per_rad': 0.05}
        )
        self.assertLess(experiment.micp_error, 0.05)
        self.assertLess(experiment.micp_error, experiment.odometry_error)
        end_error = np.linalg.norm(experiment.corrected.poses[-1].translation
                                   - self.truth.poses[-1].translation)
        self.assertLess(end_error, 0.05)


class TestRigScans(unittest.TestCase):
    def setUp(self):
        # Two floor slabs with their tops at z = 0 and a gap for 0 < x < 0.5
        self.scene = make_scene(merge_meshes([
            generate_box((-1.0, 0.0, -0.05), (2.0, 4.0, 0.1)),
            generate_box((1.5, 0.0, -0.05), (2.0, 4.0, 0.1)),
        ]))
        self.rigs = box_world_rigs(vlp16(n_horizontal=30))

    def test_grounded_wheels_read_their_radius(self):
        _, wheel_scan = simulate_rig_scans(self.scene, self.rigs,
                                           Transform(translation=(-1.0, 0.0, 0.0)))
        self.assertEqual(wheel_scan.valid_count, 4)
        np.testing.assert_allclose(wheel_scan.ranges, WHEEL_RADIUS, atol=1e-12)

    def test_wheels_over_a_gap_are_invalid(self):
        # Front wheels end up at x = 0.2, above the gap
        _, wheel_scan = simulate_rig_scans(self.scene, self.rigs,
                                           Transform(translation=(-0.05, 0.0, 0.0)))
        np.testing.assert_array_equal(wheel_scan.valid, [False, False, True, True])
        np.testing.assert_allclose(wheel_scan.ranges[2:], WHEEL_RADIUS, atol=1e-12)

    def test_seeds_differ_per_rig(self):
        pose = Transform(translation=(-1.0, 0.0, 0.0))
        first = simulate_rig_scans(self.scene, self.rigs, pose, 0.01, seed=(3, 4))
        again = simulate_rig_scans(self.scene, self.rigs, pose, 0.01, seed=(3, 4))
        other = simulate_rig_scans(self.scene, self.rigs, pose, 0.01, seed=(3, 5))
        np.testing.assert_array_equal(first[1].ranges, again[1].ranges)
        self.assertFalse(np.array_equal(first[1].ranges, other[1].ranges))
