"""Compiled raycasting and reduction kernels.

Everything here works on plain arrays so it can be compiled with numba in
nopython mode. Triangles are stored as ``v0``, ``e1 = v1 - v0`` and
``e2 = v2 - v0`` (one row per triangle); BVH nodes as flat arrays where the
right child of an inner node always follows its left child.
"""
import numba
import numpy as np
from numba import njit, prange

from meshloc.util.log import logger

# Möller-Trumbore determinant below which a ray is parallel to the triangle
DET_EPSILON = 1e-15
# Replacement for 1 / 0 in the slab test, keeps the products finite
INV_DIRECTION_MAX = 1e300


@njit(cache=True)
def triangle_distance(ox, oy, oz, dx, dy, dz, v0, e1, e2, k):
    """Distance along the ray to triangle `k`, inf when missed.

    Both faces of the triangle are hit (no backface culling).
    """
    px = dy * e2[k, 2] - dz * e2[k, 1]
    py = dz * e2[k, 0] - dx * e2[k, 2]
    pz = dx * e2[k, 1] - dy * e2[k, 0]
    det = e1[k, 0] * px + e1[k, 1] * py + e1[k, 2] * pz
    if abs(det) < DET_EPSILON:
        return np.inf
    inv_det = 1.0 / det

    tx = ox - v0[k, 0]
    ty = oy - v0[k, 1]
    tz = oz - v0[k, 2]
    u = (tx * px + ty * py + tz * pz) * inv_det
    if u < 0.0 or u > 1.0:
        return np.inf

    qx = ty * e1[k, 2] - tz * e1[k, 1]
    qy = tz * e1[k, 0] - tx * e1[k, 2]
    qz = tx * e1[k, 1] - ty * e1[k, 0]
    v = (dx * qx + dy * qy + dz * qz) * inv_det
    if v < 0.0 or u + v > 1.0:
        return np.inf
    return (e2[k, 0] * qx + e2[k, 1] * qy + e2[k, 2] * qz) * inv_det


@njit(cache=True)
def _inverse(d):
    if abs(d) < 1.0 / INV_DIRECTION_MAX:
        return INV_DIRECTION_MAX if d >= 0.0 else -INV_DIRECTION_MAX
    return 1.0 / d


@njit(cache=True)
def box_entry(box_min, box_max, node, ox, oy, oz, ix, iy, iz, t_max):
    """Entry distance of the ray into a node box, inf when missed."""
    t0 = (box_min[node, 0] - ox) * ix
    t1 = (box_max[node, 0] - ox) * ix
    t_near = min(t0, t1)
    t_far = max(t0, t1)
    t0 = (box_min[node, 1] - oy) * iy
    t1 = (box_max[node, 1] - oy) * iy
    t_near = max(t_near, min(t0, t1))
    t_far = min(t_far, max(t0, t1))
    t0 = (box_min[node, 2] - oz) * iz
    t1 = (box_max[node, 2] - oz) * iz
    t_near = max(t_near, min(t0, t1))
    t_far = min(t_far, max(t0, t1))
    if t_near < 0.0:
        t_near = 0.0
    if t_near <= t_far and t_near <= t_max:
        return t_near
    return np.inf


@njit(cache=True)
def _is_closer(t, face, best_t, best_face):
    if best_face < 0:
        return True
    return t < best_t or (t == best_t and face < best_face)


@njit(cache=True)
def trace_bvh(ox, oy, oz, dx, dy, dz, t_max, t_min,
              box_min, box_max, child, start, count,
              v0, e1, e2, face_index, stack_node, stack_t):
    """Closest hit of one ray, returns (distance, face id) or (inf, -1)."""
    ix = _inverse(dx)
    iy = _inverse(dy)
    iz = _inverse(dz)
    best_t = t_max
    best_face = -1

    t_root = box_entry(box_min, box_max, 0, ox, oy, oz, ix, iy, iz, best_t)
    if t_root == np.inf:
        return np.inf, -1
    stack_node[0] = 0
    stack_t[0] = t_root
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        if stack_t[sp] > best_t:
            continue
        if count[node] > 0:
            for j in range(start[node], start[node] + count[node]):
                t = triangle_distance(ox, oy, oz, dx, dy, dz, v0, e1, e2, j)
                if t > t_min and t <= best_t:
                    face = face_index[j]
                    if _is_closer(t, face, best_t, best_face):
                        best_t = t
                        best_face = face
            continue

        left = child[node]
        right = left + 1
        t_left = box_entry(box_min, box_max, left, ox, oy, oz, ix, iy, iz, best_t)
        t_right = box_entry(box_min, box_max, right, ox, oy, oz, ix, iy, iz, best_t)
        # Far child goes first on the stack so the near one pops first
        if t_left <= t_right:
            if t_right != np.inf:
                stack_node[sp] = right
                stack_t[sp] = t_right
                sp += 1
            if t_left != np.inf:
                stack_node[sp] = left
                stack_t[sp] = t_left
                sp += 1
        else:
            if t_left != np.inf:
                stack_node[sp] = left
                stack_t[sp] = t_left
                sp += 1
            stack_node[sp] = right
            stack_t[sp] = t_right
            sp += 1

    if best_face < 0:
        return np.inf, -1
    return best_t, best_face


@njit(parallel=True, cache=True)
def cast_bvh(origins, directions, t_max, t_min,
             box_min, box_max, child, start, count,
             v0, e1, e2, face_index, stack_size):
    n = origins.shape[0]
    distances = np.full(n, np.inf)
    faces = np.full(n, -1, dtype=np.int64)
    for i in prange(n):
        stack_node = np.empty(stack_size, dtype=np.int64)
        stack_t = np.empty(stack_size)
        t, face = trace_bvh(origins[i, 0], origins[i, 1], origins[i, 2],
                            directions[i, 0], directions[i, 1], directions[i, 2],
                            t_max, t_min, box_min, box_max, child, start, count,
                            v0, e1, e2, face_index, stack_node, stack_t)
        distances[i] = t
        faces[i] = face
    return distances, faces


@njit(parallel=True, cache=True)
def cast_brute(origins, directions, t_max, t_min, v0, e1, e2):
    """Exhaustive scan of every triangle, faces visited in index order."""
    n = origins.shape[0]
    distances = np.full(n, np.inf)
    faces = np.full(n, -1, dtype=np.int64)
    for i in prange(n):
        best_t = t_max
        best_face = -1
        for k in range(v0.shape[0]):
            t = triangle_distance(origins[i, 0], origins[i, 1], origins[i, 2],
                                  directions[i, 0], directions[i, 1], directions[i, 2],
                                  v0, e1, e2, k)
            if t > t_min and t <= best_t and (best_face < 0 or t < best_t):
                best_t = t
                best_face = k
        if best_face >= 0:
            distances[i] = best_t
            faces[i] = best_face
    return distances, faces


@njit(cache=True)
def _area(box_min, box_max):
    dx = box_max[0] - box_min[0]
    dy = box_max[1] - box_min[1]
    dz = box_max[2] - box_min[2]
    return 2.0 * (dx * dy + dy * dz + dz * dx)


@njit(cache=True)
def _bin_of(value, low, scale, n_bins):
    b = int((value - low) * scale)
    if b >= n_bins:
        b = n_bins - 1
    return b


@njit(cache=True)
def build_nodes(tri_min, tri_max, centroids, leaf_size, n_bins):
    """Binned SAH build with a median split fallback.

    Returns the node arrays, the triangle permutation and the tree depth.
    The build is serial, the result only depends on the input arrays.
    """
    n = centroids.shape[0]
    order = np.arange(n)
    max_nodes = 2 * n
    box_min = np.empty((max_nodes, 3))
    box_max = np.empty((max_nodes, 3))
    child = -np.ones(max_nodes, dtype=np.int64)
    start = np.zeros(max_nodes, dtype=np.int64)
    count = np.zeros(max_nodes, dtype=np.int64)
    depth = np.zeros(max_nodes, dtype=np.int64)

    stack_node = np.empty(max_nodes, dtype=np.int64)
    stack_start = np.empty(max_nodes, dtype=np.int64)
    stack_end = np.empty(max_nodes, dtype=np.int64)
    scratch = np.empty(n, dtype=np.int64)

    bin_count = np.zeros(n_bins, dtype=np.int64)
    bin_min = np.empty((n_bins, 3))
    bin_max = np.empty((n_bins, 3))
    right_count = np.zeros(n_bins, dtype=np.int64)
    right_area = np.zeros(n_bins)
    acc_min = np.empty(3)
    acc_max = np.empty(3)
    c_min = np.empty(3)
    c_max = np.empty(3)

    used = 1
    max_depth = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        s = stack_start[sp]
        e = stack_end[sp]
        if depth[node] > max_depth:
            max_depth = depth[node]

        for a in range(3):
            box_min[node, a] = np.inf
            box_max[node, a] = -np.inf
            c_min[a] = np.inf
            c_max[a] = -np.inf
        for i in range(s, e):
            k = order[i]
            for a in range(3):
                box_min[node, a] = min(box_min[node, a], tri_min[k, a])
                box_max[node, a] = max(box_max[node, a], tri_max[k, a])
                c_min[a] = min(c_min[a], centroids[k, a])
                c_max[a] = max(c_max[a], centroids[k, a])

        size = e - s
        if size <= leaf_size:
            start[node] = s
            count[node] = size
            continue

        best_axis = -1
        best_split = 0
        best_cost = np.inf
        for a in range(3):
            extent = c_max[a] - c_min[a]
            if extent <= 0.0:
                continue
            scale = n_bins / extent
            for b in range(n_bins):
                bin_count[b] = 0
                for c in range(3):
                    bin_min[b, c] = np.inf
                    bin_max[b, c] = -np.inf
            for i in range(s, e):
                k = order[i]
                b = _bin_of(centroids[k, a], c_min[a], scale, n_bins)
                bin_count[b] += 1
                for c in range(3):
                    bin_min[b, c] = min(bin_min[b, c], tri_min[k, c])
                    bin_max[b, c] = max(bin_max[b, c], tri_max[k, c])

            running = 0
            for c in range(3):
                acc_min[c] = np.inf
                acc_max[c] = -np.inf
            for b in range(n_bins - 1, 0, -1):
                if bin_count[b] > 0:
                    running += bin_count[b]
                    for c in range(3):
                        acc_min[c] = min(acc_min[c], bin_min[b, c])
                        acc_max[c] = max(acc_max[c], bin_max[b, c])
                right_count[b] = running
                right_area[b] = _area(acc_min, acc_max) if running > 0 else 0.0

            running = 0
            for c in range(3):
                acc_min[c] = np.inf
                acc_max[c] = -np.inf
            for b in range(n_bins - 1):
                if bin_count[b] > 0:
                    running += bin_count[b]
                    for c in range(3):
                        acc_min[c] = min(acc_min[c], bin_min[b, c])
                        acc_max[c] = max(acc_max[c], bin_max[b, c])
                if running == 0 or right_count[b + 1] == 0:
                    continue
                cost = running * _area(acc_min, acc_max) + right_count[b + 1] * right_area[b + 1]
                if cost < best_cost:
                    best_cost = cost
                    best_axis = a
                    best_split = b + 1

        mid = s
        if best_axis >= 0:
            scale = n_bins / (c_max[best_axis] - c_min[best_axis])
            n_right = 0
            for i in range(s, e):
                k = order[i]
                if _bin_of(centroids[k, best_axis], c_min[best_axis], scale, n_bins) < best_split:
                    order[mid] = k
                    mid += 1
                else:
                    scratch[n_right] = k
                    n_right += 1
            for i in range(n_right):
                order[mid + i] = scratch[i]

        if best_axis < 0 or mid == s or mid == e:
            axis = 0
            for a in range(1, 3):
                if c_max[a] - c_min[a] > c_max[axis] - c_min[axis]:
                    axis = a
            keys = np.empty(size)
            for i in range(size):
                keys[i] = centroids[order[s + i], axis]
            permutation = np.argsort(keys, kind='mergesort')
            segment = order[s:e].copy()
            for i in range(size):
                order[s + i] = segment[permutation[i]]
            mid = s + size // 2

        left = used
        used += 2
        child[node] = left
        depth[left] = depth[node] + 1
        depth[left + 1] = depth[node] + 1
        stack_node[sp] = left + 1
        stack_start[sp] = mid
        stack_end[sp] = e
        sp += 1
        stack_node[sp] = left
        stack_start[sp] = s
        stack_end[sp] = mid
        sp += 1

    return (box_min[:used].copy(), box_max[:used].copy(), child[:used].copy(),
            start[:used].copy(), count[:used].copy(), order, max_depth)


@njit(cache=True)
def accumulate_cross(scan_points, map_points):
    """Sum of m_i s_i^T and the point sums, in a fixed serial order."""
    covariance = np.zeros((3, 3))
    scan_sum = np.zeros(3)
    map_sum = np.zeros(3)
    for i in range(scan_points.shape[0]):
        for a in range(3):
            scan_sum[a] += scan_points[i, a]
            map_sum[a] += map_points[i, a]
            for b in range(3):
                covariance[a, b] += map_points[i, a] * scan_points[i, b]
    return covariance, scan_sum, map_sum


def set_workers(workers):
    """Limit the number of raycasting threads, returns the value applied."""
    available = numba.config.NUMBA_NUM_THREADS
    if workers is None or workers < 1:
        workers = available
    if workers > available:
        logger.warning("Only %d worker threads available, %d requested",
                       available, workers)
        workers = available
    numba.set_num_threads(workers)
    logger.debug("Using %d worker threads", workers)
    return workers
