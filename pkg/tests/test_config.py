import os
import shutil
import tempfile
import unittest
from unittest.mock import patch

import numpy as np

from meshloc.config import RunConfig, parse_override, read_yaml_from_file, write_yaml_to_file
from meshloc.errors import ConfigError

MISSING_CONFIG = '/nonexistent/meshloc.yml'


class ConfigTester(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.mkdtemp(prefix='meshloc-test-')
        self.patcher = patch('meshloc.settings.CONFIG_FILE', MISSING_CONFIG)
        self.patcher.start()

    def tearDown(self):
        self.patcher.stop()
        shutil.rmtree(self.directory)

    def write_config(self, content, name='meshloc.yml'):
        path = os.path.join(self.directory, name)
        with open(path, 'w') as config_file:
            config_file.write(content)
        return path


class TestYamlFiles(ConfigTester):
    def test_missing_file_is_empty(self):
        self.assertEqual(read_yaml_from_file(None), {})
        self.assertEqual(read_yaml_from_file(MISSING_CONFIG), {})

    def test_invalid_yaml(self):
        path = self.write_config("micp: [unclosed\n")
        with self.assertRaises(ConfigError):
            read_yaml_from_file(path)

    def test_top_level_must_be_a_mapping(self):
        path = self.write_config("- a\n- b\n")
        with self.assertRaises(ConfigError):
            read_yaml_from_file(path)

    def test_write_and_read(self):
        path = os.path.join(self.directory, 'out.yml')
        write_yaml_to_file(path, {'micp': {'max_iterations': 7}})
        self.assertEqual(read_yaml_from_file(path), {'micp': {'max_iterations': 7}})
        with self.assertRaises(ValueError):
            write_yaml_to_file(None, {})


class TestOverrides(unittest.TestCase):
    def test_values_keep_their_type(self):
        self.assertEqual(parse_override('micp.max_iterations=20'), ('micp', 'max_iterations', 20))
        self.assertEqual(parse_override('map.extents=[4, 4, 2]'), ('map', 'extents', [4, 4, 2]))
        self.assertEqual(parse_override('map.generator=box_room'),
                         ('map', 'generator', 'box_room'))

    def test_malformed(self):
        for override in ('max_iterations=3', 'micp.max_iterations'):
            with self.assertRaises(ConfigError):
                parse_override(override)


class TestRunConfig(ConfigTester):
    def test_defaults(self):
        config = RunConfig()
        self.assertEqual(config['micp']['max_iterations'], 50)
        self.assertEqual(config['map']['generator'], 'sphere')
        self.assertEqual(config['benchmark']['face_counts'], [10000, 100000, 1000000])
        self.assertTrue(config.validate())
        rigs = config.build_rigs()
        self.assertEqual(rigs[0].name, 'lidar')
        self.assertEqual(rigs[0].model.ray_count, 16 * 900)

    def test_command_line_overrides_file(self):
        path = self.write_config("micp:\n  max_iterations: 20\n  min_correspondences: 5\n")
        config = RunConfig(path, ['micp.max_iterations=30'])
        self.assertEqual(config['micp']['max_iterations'], 30)
        self.assertEqual(config['micp']['min_correspondences'], 5)
        self.assertEqual(config.micp_params().max_iterations, 30)

    def test_file_overrides_defaults(self):
        def fake_yaml_reader(path):
            if not path:
                return {}
            return {'map': {'generator': 'two_rooms', 'extents': '4 4 2'}}

        path = self.write_config("")
        with patch('meshloc.config.read_yaml_from_file') as yaml_reader:
            yaml_reader.side_effect = fake_yaml_reader
            config = RunConfig(path)
        self.assertEqual(config['map']['generator'], 'two_rooms')
        np.testing.assert_array_equal(config['map']['extents'], [4.0, 4.0, 2.0])
        self.assertEqual(config.load_map().face_count, 24)

    def test_set_option(self):
        config = RunConfig()
        config.set_option('simulation', 'noise_sigma', '0.01')
        self.assertEqual(config['simulation']['noise_sigma'], 0.01)
        with self.assertRaises(ConfigError):
            config.set_option('rigs', 'model', 'pinhole')
        with self.assertRaises(ConfigError):
            config.set_option('sensor', 'model', 'pinhole')

    def test_rigs_from_file(self):
        path = self.write_config("""
rigs:
  - name: lidar
    model: spherical
    preset: vlp16
    params: {n_horizontal: 90}
    tsb: {translation: [0, 0, 0.5], rotation: [0, 0, 0, 1]}
  - name: wheels
    model: ondn
    preset: wheel_sensor
    params: {centers: [[0.25, 0.2, 0.15], [-0.25, 0.2, 0.15]], radius: 0.15}
    weight: 0.5
""")
        rigs = RunConfig(path).build_rigs()
        self.assertEqual([rig.name for rig in rigs], ['lidar', 'wheels'])
        self.assertEqual(rigs[0].model.ray_count, 1440)
        np.testing.assert_allclose(rigs[0].tsb.translation, [0, 0, 0.5])
        self.assertEqual(rigs[1].weight_override, 0.5)
        self.assertIsNone(rigs[0].weight_override)

    def test_duplicate_rig_names(self):
        path = self.write_config("rigs:\n  - {name: a, model: spherical}\n"
                                 "  - {name: a, model: spherical}\n")
        with self.assertRaises(ConfigError):
            RunConfig(path).build_rigs()

    def test_invalid_rig_model(self):
        path = self.write_config("rigs:\n  - {model: sonar}\n")
        with self.assertRaises(ConfigError):
            RunConfig(path).build_rigs()

    def test_unknown_keys(self):
        for content in ("sensors: {}\n", "micp:\n  iterations: 3\n",
                        "rigs:\n  - {model: spherical, mount: 1}\n"):
            path = self.write_config(content)
            with self.assertRaises(ConfigError):
                RunConfig(path)

    def test_invalid_values(self):
        for override in ('micp.min_correspondences=2', 'map.faces=4',
                         'benchmark.max_rotation=4', 'simulation.noise_sigma=-1'):
            with self.assertRaises(ConfigError):
                RunConfig(None, [override]).validate()
        with self.assertRaises(ConfigError):
            RunConfig(None, ['micp.max_iterations=many'])

    def test_missing_config_file(self):
        with self.assertRaises(ConfigError):
            RunConfig(os.path.join(self.directory, 'missing.yml'))

    def test_missing_mesh(self):
        config = RunConfig(None, ['map.path=%s' % os.path.join(self.directory, 'map.ply')])
        with self.assertRaises(ConfigError):
            config.validate()

    def test_save(self):
        config = RunConfig(None, ['micp.max_iterations=12', 'map.generator=box_room'])
        path = os.path.join(self.directory, 'saved.yml')
        config.save(path)
        restored = RunConfig(path)
        self.assertEqual(restored['micp']['max_iterations'], 12)
        self.assertEqual(restored['map']['generator'], 'box_room')
        self.assertEqual(restored.to_dict(), config.to_dict())
