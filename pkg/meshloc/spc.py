"""Simulative projective correspondences.

For every valid measurement a ray is simulated from the current pose
estimate. The measured point is projected onto the plane of the simulated
hit; the projection is its map counterpart. Pairs are returned in the base
frame of the estimate, so the base origin is the zero vector.
"""
import csv
from dataclasses import dataclass

import numpy as np

from meshloc.errors import InvalidArgument


@dataclass(frozen=True)
class SpcParams:
    max_projective_distance: float = 1.0
    max_range: float = 100.0

    def __post_init__(self):
        if not self.max_projective_distance > 0:
            raise InvalidArgument("max_projective_distance must be positive",
                                  self.max_projective_distance)
        if not self.max_range > 0:
            raise InvalidArgument("max_range must be positive", self.max_range)


class CorrespondenceSet(object):
    """Paired scan points and map points, in the estimate's base frame.

    `distances` are the signed projective distances and `ray_indices` the
    sensor ray each pair comes from.
    """
    def __init__(self, scan_points, map_points, distances=None, ray_indices=None):
        self.scan_points = np.asarray(scan_points, dtype=np.float64).reshape(-1, 3)
        self.map_points = np.asarray(map_points, dtype=np.float64).reshape(-1, 3)
        if len(self.scan_points) != len(self.map_points):
            raise InvalidArgument("Scan and map point counts differ",
                                  (len(self.scan_points), len(self.map_points)))
        count = len(self.scan_points)
        if distances is None:
            distances = np.linalg.norm(self.map_points - self.scan_points, axis=1)
        if ray_indices is None:
            ray_indices = np.arange(count)
        self.distances = np.asarray(distances, dtype=np.float64).reshape(-1)
        self.ray_indices = np.asarray(ray_indices, dtype=np.int64).reshape(-1)

    def __repr__(self):
        return "CorrespondenceSet(count=%d)" % self.count

    def __len__(self):
        return self.count

    @property
    def count(self):
        return len(self.scan_points)

    @property
    def mean_abs_distance(self):
        if not self.count:
            return 0.0
        return float(np.mean(np.abs(self.distances)))

    @classmethod
    def empty(cls):
        return cls(np.empty((0, 3)), np.empty((0, 3)))

    @classmethod
    def concatenate(cls, sets):
        sets = list(sets)
        if not sets:
            return cls.empty()
        return cls(np.vstack([corr.scan_points for corr in sets]),
                   np.vstack([corr.map_points for corr in sets]),
                   np.concatenate([corr.distances for corr in sets]),
                   np.concatenate([corr.ray_indices for corr in sets]))


def find_correspondences(scene, rig, scan, base_pose, params=None):
    params = params or SpcParams()
    model = rig.model
    model.check_scan(scan)

    sensor_pose = base_pose @ rig.tsb
    indices = np.flatnonzero(scan.valid)
    origins = sensor_pose.apply(model.origins[indices])
    directions = model.directions[indices] @ sensor_pose.rotation.T
    hits = scene.cast(origins, directions, params.max_range)

    scan_map = origins + scan.ranges[indices, None] * directions
    with np.errstate(invalid='ignore'):
        distances = np.einsum('ij,ij->i', hits.normals, scan_map - hits.points)
        keep = hits.hit & (np.abs(distances) <= params.max_projective_distance)
    distances = distances[keep]
    scan_map = scan_map[keep]
    map_map = scan_map - distances[:, None] * hits.normals[keep]

    to_base = base_pose.inverse()
    return CorrespondenceSet(to_base.apply(scan_map), to_base.apply(map_map),
                             distances, indices[keep])


def write_correspondences_csv(corr, path):
    with open(path, 'w', newline='') as csv_file:
        writer = csv.writer(csv_file)
        writer.writerow(['index', 'sx', 'sy', 'sz', 'mx', 'my', 'mz', 'distance'])
        for index, scan_point, map_point, distance in zip(
                corr.ray_indices, corr.scan_points, corr.map_points, corr.distances):
            writer.writerow([int(index)]
                            + [repr(float(value)) for value in scan_point]
                            + [repr(float(value)) for value in map_point]
                            + [repr(float(distance))])
