"""Triangle mesh maps and synthetic map generators."""
import math
from dataclasses import dataclass

import numpy as np

from meshloc import settings
from meshloc.errors import InvalidArgument
from meshloc.util.log import logger


def _readonly(array):
    array.flags.writeable = False
    return array


class TriangleMesh(object):
    """Indexed triangle mesh with precomputed unit face normals.

    Faces wind counter-clockwise when seen from the side their normal points
    to. The mesh is immutable once built: all arrays are read-only.
    """
    def __init__(self, vertices, faces, drop_degenerate=False):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.ascontiguousarray(faces, dtype=np.int64).reshape(-1, 3)
        if not len(faces) or not len(vertices):
            raise InvalidArgument("Mesh has no faces")
        if not np.all(np.isfinite(vertices)):
            raise InvalidArgument("Mesh has non-finite vertex coordinates")
        if faces.min() < 0 or faces.max() >= len(vertices):
            raise InvalidArgument("Face index out of range",
                                  (int(faces.min()), int(faces.max()), len(vertices)))

        cross = np.cross(vertices[faces[:, 1]] - vertices[faces[:, 0]],
                         vertices[faces[:, 2]] - vertices[faces[:, 0]])
        double_area = np.linalg.norm(cross, axis=1)
        degenerate = 0.5 * double_area <= settings.MIN_FACE_AREA
        if np.any(degenerate):
            if not drop_degenerate:
                raise InvalidArgument("Mesh has degenerate faces",
                                      np.flatnonzero(degenerate)[:10].tolist())
            logger.warning("Dropping %d degenerate faces", int(degenerate.sum()))
            keep = ~degenerate
            faces = faces[keep]
            cross = cross[keep]
            double_area = double_area[keep]
            if not len(faces):
                raise InvalidArgument("Mesh has only degenerate faces")

        self.vertices = _readonly(vertices)
        self.faces = _readonly(faces)
        self.face_normals = _readonly(cross / double_area[:, None])
        self.face_areas = _readonly(0.5 * double_area)

        # Per triangle layout used by the intersection kernels
        self.tri_v0 = _readonly(np.ascontiguousarray(vertices[faces[:, 0]]))
        self.tri_e1 = _readonly(np.ascontiguousarray(vertices[faces[:, 1]] - self.tri_v0))
        self.tri_e2 = _readonly(np.ascontiguousarray(vertices[faces[:, 2]] - self.tri_v0))

    def __repr__(self):
        return "TriangleMesh(vertices=%d, faces=%d)" % (self.vertex_count,
                                                      self.face_count)

    @property
    def vertex_count(self):
        return len(self.vertices)

    @property
    def face_count(self):
        return len(self.faces)

    @property
    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def face_centroids(self):
        return self.vertices[self.faces].mean(axis=1)


@dataclass(frozen=True)
class MeshStats:
    vertex_count: int
    face_count: int
    bounds_min: tuple
    bounds_max: tuple
    surface_area: float

    def to_dict(self):
        return {
            'vertex_count': self.vertex_count,
            'face_count': self.face_count,
            'bounds_min': list(self.bounds_min),
            'bounds_max': list(self.bounds_max),
            'surface_area': self.surface_area,
        }


def mesh_stats(mesh):
    bounds_min, bounds_max = mesh.bounds
    return MeshStats(
        vertex_count=mesh.vertex_count,
        face_count=mesh.face_count,
        bounds_min=tuple(float(v) for v in bounds_min),
        bounds_max=tuple(float(v) for v in bounds_max),
        surface_area=float(mesh.face_areas.sum()),
    )


def _orient_faces(vertices, faces, center, outward):
    """Flip faces so their normal points away from (or towards) `center`."""
    corners = vertices[faces]
    normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    side = np.einsum('ij,ij->i', normals, corners.mean(axis=1) - center)
    flip = side < 0 if outward else side > 0
    faces = faces.copy()
    faces[flip] = faces[flip][:, ::-1]
    return faces


SPHERE_FACE_TOLERANCE = 0.1


def sphere_grid(target_faces):
    """Stacks and slices for a UV-sphere of about `target_faces` faces.

    Among the grids within tolerance of the target, the one with the most
    square cells wins (slices close to twice the stacks).
    """
    best = None
    for stacks in range(2, int(math.sqrt(target_faces)) + 3):
        slices = max(3, int(round(target_faces / (2.0 * (stacks - 1)))))
        error = abs(2 * slices * (stacks - 1) - target_faces) / float(target_faces)
        if error <= SPHERE_FACE_TOLERANCE:
            key = (0, abs(math.log(slices / (2.0 * stacks))))
        else:
            key = (1, error)
        if best is None or key < best[0]:
            best = (key, stacks, slices)
    return best[1], best[2]


def generate_sphere(radius=1.0, target_faces=100000):
    """UV-sphere with outward normals and about `target_faces` triangles.

    With `stacks` latitude bands and `slices` longitude segments the sphere
    has 2 * slices * (stacks - 1) faces; eight faces give an octahedron.
    The face count is always even, so it lands within 10% of the target for
    8 and for every target from 10 up. A target of 9 gives the octahedron.
    """
    if not radius > 0:
        raise InvalidArgument("Sphere radius must be positive", radius)
    if target_faces < 8:
        raise InvalidArgument("A sphere needs at least 8 faces", target_faces)

    stacks, slices = sphere_grid(target_faces)

    polar = np.pi * np.arange(1, stacks) / stacks
    azimuth = 2.0 * np.pi * np.arange(slices) / slices
    sin_polar = np.sin(polar)[:, None]
    rings = np.stack([
        sin_polar * np.cos(azimuth)[None, :],
        sin_polar * np.sin(azimuth)[None, :],
        np.repeat(np.cos(polar)[:, None], slices, axis=1),
    ], axis=-1).reshape(-1, 3)
    vertices = radius * np.vstack([[0.0, 0.0, 1.0], rings, [0.0, 0.0, -1.0]])
    south = len(vertices) - 1

    j = np.arange(slices)
    j_next = (j + 1) % slices

    def ring(i, column):
        return 1 + i * slices + column

    faces = [np.stack([np.zeros(slices, dtype=np.int64), ring(0, j), ring(0, j_next)], axis=1)]
    for i in range(stacks - 2):
        a, a_next = ring(i, j), ring(i, j_next)
        b, b_next = ring(i + 1, j), ring(i + 1, j_next)
        faces.append(np.stack([a, b, b_next], axis=1))
        faces.append(np.stack([a, b_next, a_next], axis=1))
    last = stacks - 2
    faces.append(np.stack([np.full(slices, south), ring(last, j_next), ring(last, j)], axis=1))
    faces = np.vstack(faces)

    faces = _orient_faces(vertices, faces, np.zeros(3), outward=True)
    return TriangleMesh(vertices, faces)


# Corner quads of a box, corner index = ix + 2 * iy + 4 * iz
BOX_QUADS = (
    (0, 2, 6, 4), (1, 3, 7, 5),
    (0, 1, 5, 4), (2, 3, 7, 6),
    (0, 1, 3, 2), (4, 5, 7, 6),
)


def _box_arrays(center, extents, inward):
    center = np.asarray(center, dtype=np.float64)
    extents = np.asarray(extents, dtype=np.float64)
    if extents.shape != (3,) or not np.all(extents > 0):
        raise InvalidArgument("Box extents must be three positive lengths",
                              extents.tolist())
    bits = np.array([[i & 1, (i >> 1) & 1, (i >> 2) & 1] for i in range(8)],
                    dtype=np.float64)
    vertices = center + (bits - 0.5) * extents
    faces = []
    for a, b, c, d in BOX_QUADS:
        faces.append((a, b, c))
        faces.append((a, c, d))
    faces = _orient_faces(vertices, np.array(faces, dtype=np.int64), center,
                          outward=not inward)
    return vertices, faces


def generate_box(center, extents, inward=False):
    """Closed 12 triangle box; `inward` points the normals inside."""
    return TriangleMesh(*_box_arrays(center, extents, inward))


def generate_box_room(extents=(10.0, 10.0, 3.0)):
    """Room centered at the origin, observed from inside."""
    return generate_box((0.0, 0.0, 0.0), extents, inward=True)


def merge_meshes(meshes):
    vertices = []
    faces = []
    offset = 0
    for mesh in meshes:
        vertices.append(mesh.vertices)
        faces.append(mesh.faces + offset)
        offset += mesh.vertex_count
    if not vertices:
        raise InvalidArgument("Nothing to merge")
    return TriangleMesh(np.vstack(vertices), np.vstack(faces))


def generate_two_rooms(extents=(5.0, 5.0, 3.0), wall_thickness=0.2):
    """Two closed rooms side by side along x, room A at negative x."""
    extents = np.asarray(extents, dtype=np.float64)
    if not wall_thickness >= 0:
        raise InvalidArgument("Wall thickness must be >= 0", wall_thickness)
    offset = 0.5 * (extents[0] + wall_thickness)
    return merge_meshes([
        generate_box((-offset, 0.0, 0.0), extents, inward=True),
        generate_box((offset, 0.0, 0.0), extents, inward=True),
    ])
