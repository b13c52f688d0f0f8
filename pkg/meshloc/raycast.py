"""Closest-hit ray casting against triangle meshes.

Two scenes share the same interface: `Bvh` (bounding volume hierarchy,
used everywhere by default) and `BruteForceScene` (tests every triangle,
the correctness oracle and the baseline of the scaling benchmark).
Both return the same distance and face for every ray; equal-distance hits
resolve to the lowest face id.
"""
import time
from dataclasses import dataclass

import numpy as np

from meshloc import kernels, settings
from meshloc.errors import InvalidArgument
from meshloc.util.log import logger

UNIT_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        origin = np.array(self.origin, dtype=np.float64).reshape(3)
        direction = np.array(self.direction, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(direction) - 1.0) > UNIT_TOLERANCE:
            raise InvalidArgument("Ray direction must be a unit vector", direction.tolist())
        object.__setattr__(self, 'origin', origin)
        object.__setattr__(self, 'direction', direction)

    @classmethod
    def towards(cls, origin, direction):
        """Ray with `direction` normalized."""
        direction = np.asarray(direction, dtype=np.float64)
        norm = np.linalg.norm(direction)
        if not norm > 0:
            raise InvalidArgument("Ray direction can't be zero")
        return cls(origin, direction / norm)


@dataclass(frozen=True, eq=False)
class Hit:
    distance: float
    face_id: int
    point: np.ndarray
    normal: np.ndarray


class HitBatch(object):
    """Results of a batch cast, one row per ray.

    Missed rays have an infinite distance, face id -1 and NaN point/normal.
    Normals are flipped to face the ray origin.
    """
    def __init__(self, origins, directions, distances, face_ids, face_normals):
        self.distances = distances
        self.face_ids = face_ids
        self.hit = face_ids >= 0
        count = len(distances)
        self.points = np.full((count, 3), np.nan)
        self.normals = np.full((count, 3), np.nan)
        if np.any(self.hit):
            hit = self.hit
            self.points[hit] = origins[hit] + distances[hit, None] * directions[hit]
            normals = face_normals[face_ids[hit]]
            facing = np.einsum('ij,ij->i', normals, directions[hit])
            normals = np.where((facing > 0)[:, None], -normals, normals)
            self.normals[hit] = normals

    def __len__(self):
        return len(self.distances)

    def __getitem__(self, index):
        if not self.hit[index]:
            return None
        return Hit(float(self.distances[index]), int(self.face_ids[index]),
                   self.points[index].copy(), self.normals[index].copy())

    @property
    def hit_count(self):
        return int(self.hit.sum())

    def to_list(self):
        return [self[index] for index in range(len(self))]


def _ray_arrays(origins, directions):
    origins = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
    directions = np.ascontiguousarray(directions, dtype=np.float64).reshape(-1, 3)
    if origins.shape != directions.shape:
        if len(origins) == 1:
            origins = np.ascontiguousarray(np.broadcast_to(origins, directions.shape))
        else:
            raise InvalidArgument("Origin and direction counts differ",
                                  (len(origins), len(directions)))
    return origins, directions


def _check_range(max_range):
    if not max_range > 0:
        raise InvalidArgument("max_range must be positive", max_range)
    return float(max_range)


class Scene(object):
    """Common interface of the raycasting backends."""
    name = None

    def __init__(self, mesh):
        self.mesh = mesh

    @property
    def face_count(self):
        return self.mesh.face_count

    def _cast(self, origins, directions, max_range):
        raise NotImplementedError

    def cast(self, origins, directions, max_range):
        """Cast rays given as (N, 3) origin and unit direction arrays."""
        max_range = _check_range(max_range)
        origins, directions = _ray_arrays(origins, directions)
        if not len(directions):
            empty = np.empty((0, 3))
            return HitBatch(empty, empty, np.empty(0), np.empty(0, dtype=np.int64),
                            self.mesh.face_normals)
        distances, face_ids = self._cast(origins, directions, max_range)
        return HitBatch(origins, directions, distances, face_ids, self.mesh.face_normals)

    def cast_rays(self, rays, max_range):
        rays = list(rays)
        if not rays:
            return self.cast(np.empty((0, 3)), np.empty((0, 3)), max_range)
        return self.cast(np.array([ray.origin for ray in rays]),
                         np.array([ray.direction for ray in rays]), max_range)


class BruteForceScene(Scene):
    name = 'brute_force'

    def _cast(self, origins, directions, max_range):
        return kernels.cast_brute(origins, directions, max_range, settings.RAY_EPSILON,
                                  self.mesh.tri_v0, self.mesh.tri_e1, self.mesh.tri_e2)


class Bvh(Scene):
    """Immutable bounding volume hierarchy over a mesh.

    Nodes are stored in flat arrays; `child[i]` is the left child of inner
    node `i` (its right child is `child[i] + 1`), leaves have `count > 0`
    and own triangles `start .. start + count` of the permuted triangle
    arrays. `face_index` maps permuted slots back to mesh face ids.
    """
    name = 'bvh'

    def __init__(self, mesh, box_min, box_max, child, start, count, face_index, depth):
        super(Bvh, self).__init__(mesh)
        self.box_min = box_min
        self.box_max = box_max
        self.child = child
        self.start = start
        self.count = count
        self.face_index = face_index
        self.depth = depth
        self.stack_size = max(settings.BVH_STACK_SIZE, 2 * depth + 2)
        self.tri_v0 = np.ascontiguousarray(mesh.tri_v0[face_index])
        self.tri_e1 = np.ascontiguousarray(mesh.tri_e1[face_index])
        self.tri_e2 = np.ascontiguousarray(mesh.tri_e2[face_index])
        for array in (self.box_min, self.box_max, self.child, self.start,
                      self.count, self.face_index, self.tri_v0, self.tri_e1,
                      self.tri_e2):
            array.flags.writeable = False

    def __repr__(self):
        return "Bvh(faces=%d, nodes=%d, depth=%d)" % (self.face_count,
                                                     self.node_count, self.depth)

    @property
    def node_count(self):
        return len(self.child)

    @property
    def leaf_count(self):
        return int(np.count_nonzero(self.count))

    def _cast(self, origins, directions, max_range):
        return kernels.cast_bvh(origins, directions, max_range, settings.RAY_EPSILON,
                                self.box_min, self.box_max, self.child, self.start,
                                self.count, self.tri_v0, self.tri_e1, self.tri_e2,
                                self.face_index, self.stack_size)

    def validate(self):
        """Check the structural invariants, raise InvalidArgument on failure."""
        faces = self.mesh.face_count
        if not np.array_equal(np.sort(self.face_index), np.arange(faces)):
            raise InvalidArgument("BVH triangles are not a permutation of the mesh faces")

        leaves = np.flatnonzero(self.count)
        inner = np.flatnonzero(self.count == 0)
        if np.any(self.child[leaves] >= 0) or np.any(self.child[inner] < 0):
            raise InvalidArgument("BVH leaf and inner node flags disagree")
        leaves = leaves[np.argsort(self.start[leaves])]
        ends = self.start[leaves] + self.count[leaves]
        if (self.start[leaves[0]] != 0 or ends[-1] != faces
                or np.any(self.start[leaves[1:]] != ends[:-1])):
            raise InvalidArgument("BVH leaves don't cover the triangles exactly once")

        owner = np.repeat(leaves, self.count[leaves])
        corners = np.stack([self.tri_v0, self.tri_v0 + self.tri_e1,
                            self.tri_v0 + self.tri_e2], axis=1)
        if (np.any(corners.min(axis=1) < self.box_min[owner])
                or np.any(corners.max(axis=1) > self.box_max[owner])):
            raise InvalidArgument("BVH leaf box doesn't contain its triangles")
        if len(inner):
            children = np.concatenate([self.child[inner], self.child[inner] + 1])
            parents = np.concatenate([inner, inner])
            if (np.any(self.box_min[children] < self.box_min[parents])
                    or np.any(self.box_max[children] > self.box_max[parents])):
                raise InvalidArgument("BVH child box exceeds its parent")
        return True


def build_bvh(mesh):
    """Build the hierarchy, deterministic for a given mesh."""
    if mesh is None or not mesh.face_count:
        raise InvalidArgument("Can't build a BVH over an empty mesh")
    start_time = time.perf_counter()
    v0 = mesh.tri_v0
    v1 = v0 + mesh.tri_e1
    v2 = v0 + mesh.tri_e2
    tri_min = np.minimum(np.minimum(v0, v1), v2)
    tri_max = np.maximum(np.maximum(v0, v1), v2)
    centroids = (v0 + v1 + v2) / 3.0

    box_min, box_max, child, start, count, order, depth = kernels.build_nodes(
        tri_min, tri_max, centroids, settings.BVH_LEAF_SIZE, settings.BVH_SAH_BINS
    )
    # Pad boxes so rounding in the slab test never skips a triangle
    low, high = mesh.bounds
    padding = 1e-9 * (np.linalg.norm(high - low) + 1.0)
    box_min -= padding
    box_max += padding

    bvh = Bvh(mesh, box_min, box_max, child, start, count, order, int(depth))
    logger.debug("Built %s in %0.3fs", bvh, time.perf_counter() - start_time)
    return bvh


def make_scene(mesh, brute_force=False):
    if brute_force:
        return BruteForceScene(mesh)
    return build_bvh(mesh)


def closest_hit(scene, ray, max_range):
    """Nearest intersection of `ray` within (RAY_EPSILON, max_range], or None."""
    return scene.cast(ray.origin[None, :], ray.direction[None, :], max_range)[0]


def closest_hit_brute(mesh, ray, max_range):
    return closest_hit(BruteForceScene(mesh), ray, max_range)


def batch_closest_hit(scene, rays, max_range):
    """Cast all rays in parallel, one optional Hit per ray in input order."""
    return scene.cast_rays(rays, max_range).to_list()
