"""Generic range sensor model, scans and sensor rigs."""
from dataclasses import dataclass

import numpy as np

from meshloc.errors import InvalidModel, ScanMismatchError, InvalidArgument
from meshloc.options import cast_value, options_as_dict
from meshloc.raycast import Ray
from meshloc.transform import Transform
from meshloc.util.log import logger

range_options = [
    {
        'option': 'range_min',
        'type': 'float',
        'label': 'Minimum range (m)',
        'default': 0.0
    },
    {
        'option': 'range_max',
        'type': 'float',
        'label': 'Maximum range (m)',
        'default': 100.0
    },
]


def _readonly(array):
    array = np.ascontiguousarray(array, dtype=np.float64)
    array.flags.writeable = False
    return array


def normalize_directions(directions):
    directions = np.array(directions, dtype=np.float64).reshape(-1, 3)
    norms = np.linalg.norm(directions, axis=1)
    if not np.all(norms > 0) or not np.all(np.isfinite(directions)):
        raise InvalidModel("Ray directions must be finite and non-zero")
    return directions / norms[:, None]


class SensorModel(object):
    """Generic range sensor (base class for the ray layouts).

    Parameters are declared in `model_options`; the constructor casts the
    given keyword arguments with them and fills in the defaults. Subclasses
    compute their rays in `_compute_rays`, returning (N, 3) origins and unit
    directions in the sensor frame.
    """
    model_options = []

    def __init__(self, **params):
        known = options_as_dict(self.model_options)
        unknown = set(params) - set(known)
        if unknown:
            raise InvalidModel("Unknown %s parameters" % self.name, sorted(unknown))
        for key, option in known.items():
            value = params.get(key, option.get('default'))
            if value is None:
                raise InvalidModel("Missing %s parameter %s" % (self.name, key))
            try:
                value = cast_value(option, value)
            except (TypeError, ValueError) as ex:
                raise InvalidModel("Invalid %s parameter %s: %s" % (self.name, key, ex), value)
            setattr(self, key, value)

        if not (self.range_min >= 0 and self.range_max > self.range_min):
            raise InvalidModel("Range bounds must satisfy 0 <= min < max",
                               (self.range_min, self.range_max))
        self.validate()
        origins, directions = self._compute_rays()
        self.origins = _readonly(np.broadcast_to(origins, np.shape(directions)))
        self.directions = _readonly(directions)
        if not self.ray_count:
            raise InvalidModel("%s model has no rays" % self.name)

    def __repr__(self):
        return "%s(rays=%d)" % (self.name, self.ray_count)

    @property
    def name(self):
        return self.__class__.__name__

    @property
    def description(self):
        return self.__doc__

    @property
    def ray_count(self):
        return len(self.directions)

    def validate(self):
        """Check the model specific parameters, raise InvalidModel."""

    def _compute_rays(self):
        raise NotImplementedError

    def params(self):
        params = {}
        for option in self.model_options:
            value = getattr(self, option['option'])
            if isinstance(value, np.ndarray):
                value = value.tolist()
            params[option['option']] = value
        return params

    def to_dict(self):
        return {'model': self.name, 'params': self.params()}

    @classmethod
    def from_dict(cls, data):
        """Rebuild a model saved with `to_dict`."""
        from meshloc.sensors import model_from_config
        model = model_from_config(data)
        if not isinstance(model, cls):
            raise InvalidModel("%s is not a %s model" % (model.name, cls.__name__), data)
        return model

    def rays(self):
        return [Ray(origin, direction)
                for origin, direction in zip(self.origins, self.directions)]

    def make_scan(self, ranges):
        """Scan with validity derived from this model's range bounds."""
        ranges = np.array(ranges, dtype=np.float64).reshape(-1)
        with np.errstate(invalid='ignore'):
            valid = (np.isfinite(ranges)
                     & (ranges >= self.range_min) & (ranges <= self.range_max))
        scan = Scan(ranges, valid)
        self.check_scan(scan)
        return scan

    def check_scan(self, scan):
        if scan.ray_count != self.ray_count:
            raise ScanMismatchError(
                "Scan has %d ranges, %s model has %d rays" % (scan.ray_count, self.name,
                                                              self.ray_count)
            )


class Scan(object):
    """Measured ranges, invalid measurements hold NaN."""
    def __init__(self, ranges, valid=None):
        ranges = np.array(ranges, dtype=np.float64).reshape(-1)
        if valid is None:
            valid = np.isfinite(ranges)
        valid = np.asarray(valid, dtype=bool).reshape(-1)
        if len(valid) != len(ranges):
            raise ScanMismatchError("Range and validity counts differ",
                                    (len(ranges), len(valid)))
        valid = valid & np.isfinite(ranges)
        self.ranges = np.where(valid, ranges, np.nan)
        self.valid = valid
        self.ranges.flags.writeable = False
        self.valid.flags.writeable = False

    def __repr__(self):
        return "Scan(rays=%d, valid=%d)" % (self.ray_count, self.valid_count)

    @property
    def ray_count(self):
        return len(self.ranges)

    @property
    def valid_count(self):
        return int(self.valid.sum())


@dataclass(frozen=True)
class SensorRig:
    """A sensor model mounted on the robot base."""
    model: SensorModel
    tsb: Transform = None
    weight_override: float = None
    name: str = None

    def __post_init__(self):
        if self.tsb is None:
            object.__setattr__(self, 'tsb', Transform())
        if self.weight_override is not None and not self.weight_override >= 0:
            raise InvalidArgument("Sensor weight must be >= 0", self.weight_override)
        if self.name is None:
            object.__setattr__(self, 'name', self.model.name)


def model_rays(model):
    """Rays in the sensor frame, in the model's ray order."""
    return model.rays()


def scan_to_points(model, scan):
    """Sensor frame points of a scan, NaN rows for invalid measurements."""
    model.check_scan(scan)
    return model.origins + scan.ranges[:, None] * model.directions


def simulate_scan(scene, model, sensor_pose, noise_sigma=0.0, seed=0):
    """Cast the model's rays from `sensor_pose` and record noisy ranges.

    Noise is drawn for every ray index whether it hits or not, so a given
    seed always perturbs ray `i` the same way.
    """
    if not noise_sigma >= 0:
        raise InvalidArgument("noise_sigma must be >= 0", noise_sigma)
    origins = sensor_pose.apply(model.origins)
    directions = model.directions @ sensor_pose.rotation.T
    hits = scene.cast(origins, directions, model.range_max)
    ranges = hits.distances.copy()
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        ranges += rng.normal(0.0, noise_sigma, size=len(ranges))
    scan = model.make_scan(ranges)
    logger.debug("Simulated %s: %d of %d rays valid", model.name, scan.valid_count,
                 scan.ray_count)
    return scan
