# -*- coding:Utf-8 -*-
"""Internal settings."""
import os

PROJECT = "meshloc"
VERSION = "0.4.0"
COPYRIGHT = "(c) 2023-2026 meshloc contributors"

# Paths
CONFIG_DIR = os.path.join(
    os.environ.get('XDG_CONFIG_HOME') or os.path.expanduser('~/.config'),
    'meshloc'
)
CONFIG_FILE = os.path.join(CONFIG_DIR, "meshloc.yml")
CACHE_DIR = os.path.join(
    os.environ.get('XDG_CACHE_HOME') or os.path.expanduser('~/.cache'),
    'meshloc'
)

# Number of raycasting threads, overrides the core count
WORKERS_ENV = "MESHLOC_WORKERS"

# Minimum hit distance, keeps rays starting on a surface from hitting it
RAY_EPSILON = 1e-6
# Triangles below this area (m²) are degenerate
MIN_FACE_AREA = 1e-12

BVH_LEAF_SIZE = 4
BVH_SAH_BINS = 16
BVH_STACK_SIZE = 64
