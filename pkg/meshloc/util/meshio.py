"""Read and write triangle meshes as PLY, OBJ and STL files.

Parsing and export go through trimesh. Meshes are loaded without
processing: vertices are kept as authored, no welding happens, so STL files
(which repeat vertices per facet) load with three vertices per face.
Polygons are triangulated by the loader.
"""
import os

import numpy as np
import trimesh

from meshloc.errors import MeshLocError, MeshLoadError, InvalidArgument
from meshloc.mesh import TriangleMesh
from meshloc.util.log import logger

EXTENSIONS = {'.ply': 'ply', '.obj': 'obj', '.stl': 'stl'}
HEAD_SIZE = 4096


def is_binary_stl(head, size):
    """Binary STL files are an 84 byte header plus 50 bytes per facet."""
    if len(head) < 84:
        return False
    count = int(np.frombuffer(head, dtype='<u4', count=1, offset=80)[0])
    return size == 84 + 50 * count


def detect_format(path):
    """Mesh format from the extension, then from the first bytes."""
    extension = os.path.splitext(path)[1].lower()
    if extension in EXTENSIONS:
        return EXTENSIONS[extension]
    with open(path, 'rb') as mesh_file:
        head = mesh_file.read(HEAD_SIZE)
    if head.startswith(b'ply'):
        return 'ply'
    if head.lstrip().startswith(b'solid') or is_binary_stl(head, os.path.getsize(path)):
        return 'stl'
    if head.startswith(b'v ') or b'\nv ' in head:
        return 'obj'
    raise MeshLoadError("Unsupported mesh format", path)


def load_mesh(path):
    """Load a PLY, OBJ or STL file into a TriangleMesh."""
    if not os.path.isfile(path):
        raise MeshLoadError("Mesh file %s not found" % path, path)
    try:
        file_format = detect_format(path)
    except OSError as ex:
        raise MeshLoadError("Can't read mesh file %s: %s" % (path, ex.strerror), path)
    logger.debug("Loading %s as %s", path, file_format)
    try:
        loaded = trimesh.load(path, file_type=file_format, force='mesh', process=False)
    except Exception as ex:
        raise MeshLoadError("Can't parse %s as %s: %s" % (path, file_format.upper(), ex),
                            path)
    if not isinstance(loaded, trimesh.Trimesh):
        raise MeshLoadError("%s holds no triangle mesh" % path, type(loaded).__name__)
    try:
        return TriangleMesh(np.asarray(loaded.vertices), np.asarray(loaded.faces),
                            drop_degenerate=True)
    except MeshLocError as ex:
        raise MeshLoadError("Invalid mesh in %s: %s" % (path, ex.message), ex.faulty_data)


def to_trimesh(mesh):
    return trimesh.Trimesh(vertices=np.array(mesh.vertices), faces=np.array(mesh.faces),
                           process=False)


def save_mesh(mesh, path, binary=False):
    """Write a mesh, the format follows the file extension.

    `binary` selects binary PLY and STL; OBJ is always text.
    """
    extension = os.path.splitext(path)[1].lower()
    if extension not in EXTENSIONS:
        raise InvalidArgument("Unsupported mesh extension", extension)
    file_format = EXTENSIONS[extension]
    options = {}
    if file_format == 'ply':
        options['encoding'] = 'binary' if binary else 'ascii'
    elif file_format == 'stl':
        file_format = 'stl' if binary else 'stl_ascii'
    else:
        options['include_normals'] = False
    to_trimesh(mesh).export(file_obj=path, file_type=file_format, **options)
    logger.debug("Saved %s to %s", mesh, path)
