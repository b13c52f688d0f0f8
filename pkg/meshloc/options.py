"""Option lists for the run configuration.

Each option is a dict with the keys used all over meshloc: `option` (key in
the section), `type`, `label`, `default` and an optional `help` and
`choices`. Values coming from YAML files or the command line are converted
with `cast_value`.
"""
import numpy as np


def _as_bool(value):
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ('1', 'true', 'yes', 'on'):
            return True
        if lowered in ('0', 'false', 'no', 'off', ''):
            return False
        raise ValueError("Not a boolean: %s" % value)
    return bool(value)


def _as_int(value):
    if isinstance(value, bool):
        raise ValueError("Not an integer: %s" % value)
    number = float(value)
    if not number.is_integer():
        raise ValueError("Not an integer: %s" % value)
    return int(number)


def _split(value):
    if isinstance(value, str):
        return [token for token in value.replace(',', ' ').split() if token]
    return value


def _as_vector(value):
    vector = np.array(_split(value), dtype=np.float64)
    if vector.shape != (3,):
        raise ValueError("Expected 3 values, got %s" % (value, ))
    return vector


def _as_vectors(value):
    vectors = np.array(value, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[1] != 3:
        raise ValueError("Expected a list of 3-vectors")
    return vectors


def _as_int_list(value):
    return [_as_int(item) for item in _split(value)]


def _as_optional_string(value):
    return None if value is None else str(value)


CASTERS = {
    'bool': _as_bool,
    'int': _as_int,
    'float': float,
    'string': _as_optional_string,
    'path': _as_optional_string,
    'choice': _as_optional_string,
    'vector': _as_vector,
    'vectors': _as_vectors,
    'int_list': _as_int_list,
}


def cast_value(option, value):
    """Convert `value` to the type of `option`.

    Raises ValueError or TypeError when the value can't be converted or is
    not one of the option's choices.
    """
    if value is None:
        return None
    value = CASTERS[option['type']](value)
    if option['type'] == 'choice' and value not in option['choices']:
        raise ValueError("%s is not one of %s" % (value, ', '.join(option['choices'])))
    return value


def options_as_dict(options):
    return dict((option['option'], option) for option in options)


def get_defaults(options):
    return dict((option['option'], option.get('default')) for option in options)


map_options = [
    {
        'option': 'path',
        'type': 'path',
        'label': 'Mesh file',
        'default': None,
        'help': "PLY, OBJ or STL file holding the triangle map (meters)."
    },
    {
        'option': 'generator',
        'type': 'choice',
        'label': 'Generated map',
        'choices': ('sphere', 'box_room', 'two_rooms'),
        'default': 'sphere',
        'help': "Synthetic map used when no mesh file is given."
    },
    {
        'option': 'radius',
        'type': 'float',
        'label': 'Sphere radius',
        'default': 1.0
    },
    {
        'option': 'faces',
        'type': 'int',
        'label': 'Sphere face count',
        'default': 100000
    },
    {
        'option': 'extents',
        'type': 'vector',
        'label': 'Room size',
        'default': [10.0, 10.0, 3.0],
        'help': "Room size along x, y and z. For two rooms, the size of each room."
    },
    {
        'option': 'wall_thickness',
        'type': 'float',
        'label': 'Wall between two rooms',
        'default': 0.2
    },
]

micp_options = [
    {
        'option': 'max_iterations',
        'type': 'int',
        'label': 'Maximum iterations',
        'default': 50
    },
    {
        'option': 'translation_epsilon',
        'type': 'float',
        'label': 'Translation convergence (m)',
        'default': 1e-4,
        'help': "Converged once a step translates the pose less than this."
    },
    {
        'option': 'rotation_epsilon',
        'type': 'float',
        'label': 'Rotation convergence (rad)',
        'default': 1e-4,
        'help': "Converged once a step rotates the pose less than this."
    },
    {
        'option': 'min_correspondences',
        'type': 'int',
        'label': 'Minimum correspondences',
        'default': 10,
        'help': "Corrections computed from fewer correspondences are rejected."
    },
    {
        'option': 'max_projective_distance',
        'type': 'float',
        'label': 'Maximum projective distance (m)',
        'default': 1.0,
        'help': ("Correspondences whose measured point lies further than this "
                 "from the simulated surface are discarded. Keeps people "
                 "and other unmapped obstacles out of the correction.")
    },
    {
        'option': 'max_range',
        'type': 'float',
        'label': 'Simulation range (m)',
        'default': 100.0
    },
]

simulation_options = [
    {
        'option': 'noise_sigma',
        'type': 'float',
        'label': 'Range noise (m)',
        'default': 0.0,
        'help': "Standard deviation of the Gaussian noise added to every range."
    },
    {
        'option': 'seed',
        'type': 'int',
        'label': 'Random seed',
        'default': 0
    },
]

benchmark_options = [
    {
        'option': 'face_counts',
        'type': 'int_list',
        'label': 'Sphere face counts',
        'default': [10000, 100000, 1000000]
    },
    {
        'option': 'n_poses',
        'type': 'int',
        'label': 'Pose guesses per map',
        'default': 1000
    },
    {
        'option': 'seed',
        'type': 'int',
        'label': 'Random seed',
        'default': 0
    },
    {
        'option': 'max_translation',
        'type': 'float',
        'label': 'Guess translation radius (m)',
        'default': 0.5
    },
    {
        'option': 'max_rotation',
        'type': 'float',
        'label': 'Guess rotation bound (rad)',
        'default': 0.3
    },
    {
        'option': 'radius',
        'type': 'float',
        'label': 'Sphere radius',
        'default': 1.0
    },
    {
        'option': 'brute_force',
        'type': 'bool',
        'label': 'Brute force raycasting',
        'default': False,
        'help': "Test every triangle for every ray, for scaling comparisons."
    },
    {
        'option': 'phases',
        'type': 'bool',
        'label': 'Phase breakdown columns',
        'default': False
    },
]

output_options = [
    {
        'option': 'path',
        'type': 'path',
        'label': 'Output file',
        'default': None,
        'help': "Results go to stdout when unset."
    },
]

DEFAULT_RIGS = [
    {'name': 'lidar', 'model': 'spherical', 'preset': 'vlp16'},
]

SECTIONS = {
    'map': map_options,
    'micp': micp_options,
    'simulation': simulation_options,
    'benchmark': benchmark_options,
    'output': output_options,
}
