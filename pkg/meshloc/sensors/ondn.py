import numpy as np

from meshloc.errors import InvalidModel
from meshloc.sensors.model import SensorModel, range_options, normalize_directions

DOWN = (0.0, 0.0, -1.0)


class ondn(SensorModel):
    """Every ray has its own origin and direction (paired by index)."""
    model_options = [
        {'option': 'origins', 'type': 'vectors', 'label': 'Ray origins', 'default': None},
        {'option': 'directions', 'type': 'vectors', 'label': 'Ray directions', 'default': None},
    ] + range_options

    def validate(self):
        if len(self.origins) != len(self.directions):
            raise InvalidModel("OnDn origins and directions must pair up",
                               (len(self.origins), len(self.directions)))
        if not np.all(np.isfinite(self.origins)):
            raise InvalidModel("OnDn origins must be finite")
        self.directions = normalize_directions(self.directions)

    def _compute_rays(self):
        return self.origins, self.directions


def wheel_sensor(centers, radius=0.15, range_max=None):
    """Virtual sensor casting straight down from the wheel centers.

    Paired with `virtual_scan` it tells the corrector that the ground is
    one wheel radius below every wheel center.
    """
    centers = np.array(centers, dtype=np.float64).reshape(-1, 3)
    if not radius > 0:
        raise InvalidModel("Wheel radius must be positive", radius)
    if range_max is None:
        range_max = 10.0 * radius
    return ondn(origins=centers, directions=np.tile(DOWN, (len(centers), 1)),
                range_min=0.0, range_max=range_max)


def virtual_scan(model, radius=0.15):
    """Scan reading `radius` on every ray of `model`."""
    return model.make_scan(np.full(model.ray_count, float(radius)))


presets = {
    'wheel_sensor': wheel_sensor,
}
