import math

import numpy as np

from meshloc.errors import InvalidModel
from meshloc.sensors.model import SensorModel, range_options

FULL_SWEEP_TOLERANCE = 1e-6


def sample_angles(low, high, count, wrap=False):
    """Evenly spaced angles including both bounds.

    A full turn (`wrap` and high - low == 2 pi) leaves out the upper bound,
    which would cast the first column twice.
    """
    if count == 1:
        return np.array([low])
    if wrap and abs((high - low) - 2.0 * math.pi) < FULL_SWEEP_TOLERANCE:
        return low + 2.0 * math.pi * np.arange(count) / count
    return np.linspace(low, high, count)


class spherical(SensorModel):
    """Rotating LiDAR, a grid of azimuth / elevation rays from one origin.

    theta is the azimuth around +z starting at +x, phi the elevation above
    the xy-plane. Rays are ordered row by row: index = v * n_horizontal + h.
    """
    model_options = [
        {
            'option': 'theta_min',
            'type': 'float',
            'label': 'Minimum azimuth (rad)',
            'default': -math.pi
        },
        {
            'option': 'theta_max',
            'type': 'float',
            'label': 'Maximum azimuth (rad)',
            'default': math.pi
        },
        {
            'option': 'n_horizontal',
            'type': 'int',
            'label': 'Horizontal samples',
            'default': 900
        },
        {
            'option': 'phi_min',
            'type': 'float',
            'label': 'Minimum elevation (rad)',
            'default': math.radians(-15.0)
        },
        {
            'option': 'phi_max',
            'type': 'float',
            'label': 'Maximum elevation (rad)',
            'default': math.radians(15.0)
        },
        {
            'option': 'n_vertical',
            'type': 'int',
            'label': 'Vertical samples (rings)',
            'default': 16
        },
    ] + range_options

    def validate(self):
        if self.n_horizontal < 1 or self.n_vertical < 1:
            raise InvalidModel("Spherical model needs at least one sample per axis",
                               (self.n_vertical, self.n_horizontal))
        if self.theta_min > self.theta_max or self.phi_min > self.phi_max:
            raise InvalidModel("Spherical angle bounds are not ordered",
                               (self.theta_min, self.theta_max, self.phi_min, self.phi_max))
        if self.theta_max - self.theta_min > 2.0 * math.pi + FULL_SWEEP_TOLERANCE:
            raise InvalidModel("Azimuth range exceeds a full turn")
        if self.phi_min < -math.pi / 2 or self.phi_max > math.pi / 2:
            raise InvalidModel("Elevation must stay within [-pi/2, pi/2]")

    def _compute_rays(self):
        theta = sample_angles(self.theta_min, self.theta_max, self.n_horizontal, wrap=True)
        phi = sample_angles(self.phi_min, self.phi_max, self.n_vertical)
        phi, theta = np.meshgrid(phi, theta, indexing='ij')
        cos_phi = np.cos(phi)
        directions = np.stack([cos_phi * np.cos(theta),
                               cos_phi * np.sin(theta),
                               np.sin(phi)], axis=-1).reshape(-1, 3)
        return np.zeros(3), directions


def vlp16(range_min=0.1, range_max=100.0, n_horizontal=900):
    """16 rings over +-15 degrees and a full horizontal turn."""
    return spherical(theta_min=-math.pi, theta_max=math.pi, n_horizontal=n_horizontal,
                     phi_min=math.radians(-15.0), phi_max=math.radians(15.0),
                     n_vertical=16, range_min=range_min, range_max=range_max)


def planar_lidar(n_horizontal=360, range_min=0.1, range_max=30.0):
    """Single ring 2D LiDAR scanning the horizontal plane."""
    return spherical(theta_min=-math.pi, theta_max=math.pi, n_horizontal=n_horizontal,
                     phi_min=0.0, phi_max=0.0, n_vertical=1,
                     range_min=range_min, range_max=range_max)


presets = {
    'vlp16': vlp16,
    'planar_lidar': planar_lidar,
}
