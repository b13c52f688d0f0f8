import numpy as np

from meshloc.errors import InvalidModel
from meshloc.sensors.model import SensorModel, range_options


class pinhole(SensorModel):
    """Depth camera looking along +z.

    Pixel (u, v) casts along normalize(((u - cx) / fx, (v - cy) / fy, 1)),
    rows first. Ranges are measured along the ray, not as depth.
    """
    model_options = [
        {'option': 'width', 'type': 'int', 'label': 'Width (px)', 'default': 640},
        {'option': 'height', 'type': 'int', 'label': 'Height (px)', 'default': 480},
        {'option': 'fx', 'type': 'float', 'label': 'Focal length x (px)', 'default': 525.0},
        {'option': 'fy', 'type': 'float', 'label': 'Focal length y (px)', 'default': 525.0},
        {'option': 'cx', 'type': 'float', 'label': 'Principal point x (px)', 'default': 319.5},
        {'option': 'cy', 'type': 'float', 'label': 'Principal point y (px)', 'default': 239.5},
    ] + range_options

    def validate(self):
        if self.width < 1 or self.height < 1:
            raise InvalidModel("Image size must be positive", (self.width, self.height))
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidModel("Focal lengths must be positive", (self.fx, self.fy))

    def _compute_rays(self):
        v, u = np.meshgrid(np.arange(self.height, dtype=np.float64),
                           np.arange(self.width, dtype=np.float64), indexing='ij')
        directions = np.stack([(u - self.cx) / self.fx,
                               (v - self.cy) / self.fy,
                               np.ones_like(u)], axis=-1).reshape(-1, 3)
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        return np.zeros(3), directions


presets = {}
