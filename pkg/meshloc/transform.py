"""Rigid body transforms.

A `Transform` maps points from a child frame into its parent frame:
``p_parent = R @ p_child + t``. Composition follows the usual convention,
``compose(a, b)`` applies ``b`` first and ``a`` second.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from meshloc.errors import InvalidArgument

ORTHONORMAL_TOLERANCE = 1e-9


def _frozen(array, shape):
    array = np.array(array, dtype=np.float64).reshape(shape)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class Transform:
    """SE(3) rigid pose, rotation as an orthonormal matrix, meters."""
    rotation: np.ndarray = None
    translation: np.ndarray = None

    def __post_init__(self):
        rotation = np.eye(3) if self.rotation is None else self.rotation
        translation = np.zeros(3) if self.translation is None else self.translation
        rotation = _frozen(rotation, (3, 3))
        translation = _frozen(translation, (3,))
        if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(translation))):
            raise InvalidArgument("Transform has non-finite entries")
        if (np.abs(rotation @ rotation.T - np.eye(3)).max() > ORTHONORMAL_TOLERANCE
                or np.linalg.det(rotation) <= 0):
            raise InvalidArgument("Rotation is not a proper rotation matrix",
                                  rotation.tolist())
        object.__setattr__(self, 'rotation', rotation)
        object.__setattr__(self, 'translation', translation)

    def __repr__(self):
        return "Transform(t=%s, q=%s)" % (
            np.array2string(self.translation, precision=6),
            np.array2string(self.quaternion, precision=6)
        )

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_quaternion(cls, translation, quaternion):
        """Build from a translation and a quaternion in x-y-z-w order."""
        quaternion = np.asarray(quaternion, dtype=np.float64)
        if quaternion.shape != (4,) or np.linalg.norm(quaternion) < 1e-12:
            raise InvalidArgument("Invalid quaternion", quaternion.tolist())
        return cls(Rotation.from_quat(quaternion).as_matrix(), translation)

    @classmethod
    def from_rotvec(cls, rotvec, translation=None):
        return cls(Rotation.from_rotvec(rotvec).as_matrix(), translation)

    @classmethod
    def from_euler(cls, seq, angles, translation=None):
        return cls(Rotation.from_euler(seq, angles).as_matrix(), translation)

    @classmethod
    def from_matrix(cls, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (4, 4):
            raise InvalidArgument("Expected a 4x4 matrix", matrix.shape)
        return cls(matrix[:3, :3], matrix[:3, 3])

    @property
    def matrix(self):
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    @property
    def quaternion(self):
        """Unit quaternion x-y-z-w with a non-negative w."""
        quaternion = Rotation.from_matrix(self.rotation).as_quat()
        if quaternion[3] < 0:
            quaternion = -quaternion
        return quaternion

    @property
    def yaw(self):
        """Heading around +z of the rotated x axis."""
        return float(np.arctan2(self.rotation[1, 0], self.rotation[0, 0]))

    @property
    def rotation_angle(self):
        return rotation_angle(self.rotation)

    def inverse(self):
        return invert(self)

    def apply(self, points):
        return apply(self, points)

    def __matmul__(self, other):
        return compose(self, other)

    def to_dict(self):
        return {
            'translation': [float(v) for v in self.translation],
            'rotation': [float(v) for v in self.quaternion],
        }

    @classmethod
    def from_dict(cls, data):
        if not data:
            return cls()
        return cls.from_quaternion(data.get('translation', (0, 0, 0)),
                                   data.get('rotation', (0, 0, 0, 1)))


@dataclass(frozen=True)
class PoseError:
    translation_error: float
    rotation_error: float


def compose(a, b):
    """Return the transform applying `b` then `a`."""
    return Transform(a.rotation @ b.rotation,
                     a.rotation @ b.translation + a.translation)


def invert(transform):
    rotation_t = transform.rotation.T
    return Transform(rotation_t, -(rotation_t @ transform.translation))


def apply(transform, points):
    """Transform a single 3-vector or an (N, 3) array of points."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        return transform.rotation @ points + transform.translation
    return points @ transform.rotation.T + transform.translation


def rotation_angle(rotation):
    """Geodesic angle (radians) of a rotation matrix."""
    return float(Rotation.from_matrix(rotation).magnitude())


def pose_error(estimate, truth):
    translation_error = float(np.linalg.norm(estimate.translation - truth.translation))
    rotation_error = rotation_angle(truth.rotation.T @ estimate.rotation)
    return PoseError(translation_error, rotation_error)


def _unit_vector(rng):
    vector = rng.normal(size=3)
    norm = np.linalg.norm(vector)
    while norm < 1e-12:
        vector = rng.normal(size=3)
        norm = np.linalg.norm(vector)
    return vector / norm


def random_pose_in_ball(center, max_translation, max_rotation, seed):
    """Draw a pose around `center`, deterministic for a given seed.

    The translation offset is uniform inside the ball of radius
    `max_translation`; the rotation offset has a uniformly distributed axis
    and an angle uniform in [0, max_rotation].
    """
    if not max_translation >= 0:
        raise InvalidArgument("max_translation must be >= 0", max_translation)
    if not 0 <= max_rotation <= np.pi:
        raise InvalidArgument("max_rotation must be in [0, pi]", max_rotation)
    rng = np.random.default_rng(seed)

    translation = center.translation
    if max_translation > 0:
        radius = max_translation * rng.random() ** (1.0 / 3.0)
        translation = center.translation + radius * _unit_vector(rng)

    rotation = center.rotation
    if max_rotation > 0:
        angle = max_rotation * rng.random()
        rotation = center.rotation @ Rotation.from_rotvec(angle * _unit_vector(rng)).as_matrix()
    return Transform(rotation, translation)
