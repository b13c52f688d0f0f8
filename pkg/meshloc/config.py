"""Handle the run configuration."""
import copy
import math
import os

import numpy as np
import yaml

from meshloc import settings, sensors
from meshloc.errors import ConfigError, MeshLocError
from meshloc.mesh import generate_sphere, generate_box_room, generate_two_rooms
from meshloc.options import SECTIONS, DEFAULT_RIGS, cast_value, get_defaults, options_as_dict
from meshloc.registration import MicpParams
from meshloc.sensors.model import SensorRig
from meshloc.transform import Transform
from meshloc.util.log import logger
from meshloc.util.meshio import load_mesh

RIG_KEYS = ('name', 'model', 'params', 'preset', 'tsb', 'weight')


def read_yaml_from_file(filename):
    """Read filename and return parsed yaml"""
    if not filename or not os.path.exists(filename):
        return {}
    try:
        with open(filename, 'r') as yaml_file:
            yaml_content = yaml.safe_load(yaml_file) or {}
    except yaml.YAMLError as ex:
        logger.error("error parsing file %s", filename)
        raise ConfigError("Invalid YAML in %s" % filename, str(ex))
    if not isinstance(yaml_content, dict):
        raise ConfigError("Configuration %s must be a mapping" % filename)
    return yaml_content


def write_yaml_to_file(filepath, config):
    if not filepath:
        raise ValueError('Missing filepath')
    yaml_config = yaml.safe_dump(config, default_flow_style=False)
    with open(filepath, "w") as filehandler:
        filehandler.write(yaml_config)


def parse_override(override):
    """Split a `section.key=value` command line override.

    The value is parsed as YAML so numbers and lists keep their type.
    """
    if '=' not in override or '.' not in override.split('=', 1)[0]:
        raise ConfigError("Overrides look like section.key=value", override)
    name, value = override.split('=', 1)
    section, key = name.strip().split('.', 1)
    try:
        value = yaml.safe_load(value)
    except yaml.YAMLError:
        raise ConfigError("Can't parse value of %s" % name, value)
    return section, key, value


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


class RunConfig(object):
    """Configuration of a meshloc run.

    The configuration cascades through three levels, each overriding the
    ones below it (highest to lowest): `command line`, `file` and
    `defaults`. Defaults come from the option lists in `meshloc.options`;
    the file level is a YAML file with one mapping per section plus a
    `rigs` list.

    Read the cascaded values through `config[section]` (or `config.rigs`);
    change the command line level with `set_option`.
    """
    def __init__(self, config_path=None, overrides=None):
        if config_path is None and os.path.exists(settings.CONFIG_FILE):
            config_path = settings.CONFIG_FILE
        if config_path and not os.path.exists(config_path):
            raise ConfigError("Configuration file %s not found" % config_path)
        self.config_path = config_path

        self.defaults_level = dict((section, get_defaults(options))
                                   for section, options in SECTIONS.items())
        self.defaults_level['rigs'] = copy.deepcopy(DEFAULT_RIGS)
        self.file_level = read_yaml_from_file(config_path)
        self.command_line_level = {}

        unknown = set(self.file_level) - set(SECTIONS) - {'rigs'}
        if unknown:
            raise ConfigError("Unknown configuration sections", sorted(unknown))

        self.sections = {}
        self.rigs = []
        for override in overrides or []:
            self.set_option(*parse_override(override), update=False)
        self.update_cascaded_config()

    def __repr__(self):
        return "RunConfig(file=%s)" % self.config_path

    def __getitem__(self, section):
        return self.sections[section]

    def set_option(self, section, key, value, update=True):
        if section == 'rigs':
            raise ConfigError("Rigs can only be set in the configuration file")
        if section not in SECTIONS:
            raise ConfigError("Unknown configuration section '%s'" % section)
        self.command_line_level.setdefault(section, {})[key] = value
        if update:
            self.update_cascaded_config()

    def update_cascaded_config(self):
        for section, options in SECTIONS.items():
            known = options_as_dict(options)
            config = dict(self.defaults_level[section])
            for level in (self.file_level, self.command_line_level):
                values = level.get(section) or {}
                if not isinstance(values, dict):
                    raise ConfigError("Section %s must be a mapping" % section, values)
                config.update(values)
            unknown = set(config) - set(known)
            if unknown:
                raise ConfigError("Unknown options in section %s" % section, sorted(unknown))
            for key, value in config.items():
                try:
                    config[key] = cast_value(known[key], value)
                except (TypeError, ValueError) as ex:
                    raise ConfigError("Invalid value for %s.%s: %s" % (section, key, ex), value)
            self.sections[section] = config

        rigs = self.file_level.get('rigs') or self.defaults_level['rigs']
        if not isinstance(rigs, list):
            raise ConfigError("rigs must be a list", rigs)
        for rig in rigs:
            if not isinstance(rig, dict) or 'model' not in rig:
                raise ConfigError("Every rig needs a model", rig)
            unknown = set(rig) - set(RIG_KEYS)
            if unknown:
                raise ConfigError("Unknown rig keys", sorted(unknown))
        self.rigs = rigs

    def validate(self):
        """Check every value against the preconditions of the code using it."""
        map_config = self['map']
        if map_config['path']:
            if not os.path.isfile(map_config['path']):
                raise ConfigError("Mesh file %s not found" % map_config['path'])
        elif map_config['generator'] is None:
            raise ConfigError("Set map.path or map.generator")
        if not map_config['radius'] > 0:
            raise ConfigError("map.radius must be positive", map_config['radius'])
        if map_config['faces'] < 8:
            raise ConfigError("map.faces must be at least 8", map_config['faces'])
        if not np.all(map_config['extents'] > 0):
            raise ConfigError("map.extents must be positive", map_config['extents'].tolist())
        if not map_config['wall_thickness'] >= 0:
            raise ConfigError("map.wall_thickness must be >= 0")

        simulation = self['simulation']
        if not simulation['noise_sigma'] >= 0:
            raise ConfigError("simulation.noise_sigma must be >= 0", simulation['noise_sigma'])

        benchmark = self['benchmark']
        if not benchmark['face_counts'] or min(benchmark['face_counts']) < 8:
            raise ConfigError("benchmark.face_counts needs counts >= 8",
                              benchmark['face_counts'])
        if benchmark['n_poses'] < 1:
            raise ConfigError("benchmark.n_poses must be >= 1")
        if not benchmark['max_translation'] >= 0:
            raise ConfigError("benchmark.max_translation must be >= 0")
        if not 0 <= benchmark['max_rotation'] <= math.pi:
            raise ConfigError("benchmark.max_rotation must be in [0, pi]")
        if not benchmark['radius'] > 0:
            raise ConfigError("benchmark.radius must be positive")

        self.micp_params()
        self.build_rigs()
        return True

    def micp_params(self):
        try:
            return MicpParams.from_dict(self['micp'])
        except MeshLocError as ex:
            raise ConfigError("Invalid micp section: %s" % ex.message, ex.faulty_data)

    def build_rigs(self):
        """SensorRig list from the rig definitions."""
        rigs = []
        for index, rig in enumerate(self.rigs):
            name = rig.get('name') or 'rig%d' % index
            try:
                model = sensors.model_from_config(rig)
                tsb = Transform.from_dict(rig.get('tsb'))
                rigs.append(SensorRig(model, tsb, rig.get('weight'), name))
            except MeshLocError as ex:
                raise ConfigError("Invalid rig %s: %s" % (name, ex.message), ex.faulty_data)
        names = [rig.name for rig in rigs]
        if len(set(names)) != len(names):
            raise ConfigError("Rig names must be unique", names)
        return rigs

    def load_map(self):
        """Mesh from map.path, or generated from map.generator."""
        map_config = self['map']
        if map_config['path']:
            return load_mesh(map_config['path'])
        generator = map_config['generator']
        logger.debug("Generating %s map", generator)
        if generator == 'sphere':
            return generate_sphere(map_config['radius'], map_config['faces'])
        if generator == 'box_room':
            return generate_box_room(map_config['extents'])
        return generate_two_rooms(map_config['extents'], map_config['wall_thickness'])

    def to_dict(self):
        config = dict((section, dict((key, _plain(value)) for key, value in values.items()))
                      for section, values in self.sections.items())
        config['rigs'] = copy.deepcopy(self.rigs)
        return config

    def save(self, path):
        """Write the cascaded configuration as a standalone YAML file."""
        write_yaml_to_file(path, self.to_dict())
