import json
import os
import shutil
import tempfile
import unittest

import numpy as np

from meshloc.errors import ScanMismatchError, MeshLocError
from meshloc.sensors.spherical import planar_lidar
from meshloc.util.scanio import read_scan, read_scan_json, write_scan


class TestScanFiles(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.mkdtemp(prefix='meshloc-test-')
        self.model = planar_lidar(n_horizontal=4, range_min=0.5, range_max=10.0)
        self.scan = self.model.make_scan([1.25, np.inf, 0.1, 9.0])

    def tearDown(self):
        shutil.rmtree(self.directory)

    def path(self, name):
        return os.path.join(self.directory, name)

    def test_csv(self):
        path = self.path('scan.csv')
        write_scan(self.scan, path)
        with open(path) as scan_file:
            lines = scan_file.read().splitlines()
        self.assertEqual(lines[0], 'index,range,valid')
        self.assertEqual(lines[1], '0,1.25,1')
        self.assertEqual(lines[2], '1,nan,0')
        loaded = read_scan(path, self.model)
        np.testing.assert_array_equal(loaded.valid, self.scan.valid)
        np.testing.assert_array_equal(loaded.ranges, self.scan.ranges)

    def test_json_stores_the_model(self):
        path = self.path('scan.json')
        write_scan(self.scan, path, self.model)
        with open(path) as scan_file:
            data = json.load(scan_file)
        self.assertEqual(data['model']['model'], 'spherical')
        self.assertEqual(data['ranges'], [1.25, None, None, 9.0])
        model, loaded = read_scan_json(path)
        self.assertEqual(model.ray_count, 4)
        np.testing.assert_array_equal(loaded.valid, [True, False, False, True])

    def test_ray_count_must_match_the_model(self):
        path = self.path('scan.csv')
        write_scan(self.scan, path)
        with self.assertRaises(ScanMismatchError):
            read_scan(path, planar_lidar(n_horizontal=8))

    def test_bad_header(self):
        path = self.path('scan.csv')
        with open(path, 'w') as scan_file:
            scan_file.write("range\n1.0\n")
        with self.assertRaises(ScanMismatchError):
            read_scan(path)

    def test_indices_must_count_up(self):
        path = self.path('scan.csv')
        with open(path, 'w') as scan_file:
            scan_file.write("index,range,valid\n0,1.0,1\n2,1.0,1\n")
        with self.assertRaises(ScanMismatchError):
            read_scan(path)

    def test_missing_file(self):
        with self.assertRaises(MeshLocError):
            read_scan(self.path('missing.csv'))

    def test_csv_ranges_outside_the_model_bounds_are_invalid(self):
        path = self.path('scan.csv')
        with open(path, 'w') as scan_file:
            scan_file.write("index,range,valid\n0,1.25,1\n1,0.2,1\n2,12.0,1\n3,9.0,1\n")
        loaded = read_scan(path, self.model)
        np.testing.assert_array_equal(loaded.valid, [True, False, False, True])
        self.assertTrue(np.isnan(loaded.ranges[1]))
        # Without a model the stored flags are all there is
        self.assertEqual(read_scan(path).valid_count, 4)

    def test_json_root_must_be_an_object(self):
        path = self.path('scan.json')
        with open(path, 'w') as scan_file:
            json.dump([1.0, 2.0], scan_file)
        with self.assertRaises(ScanMismatchError):
            read_scan(path)

    def test_json_ranges_must_be_numbers(self):
        path = self.path('scan.json')
        with open(path, 'w') as scan_file:
            json.dump({'ranges': ['far', 1.0]}, scan_file)
        with self.assertRaises(ScanMismatchError):
            read_scan(path)
        with open(path, 'w') as scan_file:
            json.dump({'ranges': 3.0}, scan_file)
        with self.assertRaises(ScanMismatchError):
            read_scan(path)

    def test_json_without_model_uses_the_given_bounds(self):
        path = self.path('scan.json')
        with open(path, 'w') as scan_file:
            json.dump({'ranges': [1.25, 0.1, None, 11.0]}, scan_file)
        loaded = read_scan(path, self.model)
        np.testing.assert_array_equal(loaded.valid, [True, False, False, False])
