"""Timestamped pose sequences, trajectory files and odometry simulation.

Trajectory files hold one sample per line::

    timestamp tx ty tz qx qy qz qw

Blank lines and lines starting with ``#`` are ignored.
"""
import math

import numpy as np
from scipy.spatial.transform import Rotation

from meshloc.errors import InvalidArgument, TrajectoryError
from meshloc.transform import Transform

SPAN_TOLERANCE = 1e-9


class Trajectory(object):
    """Poses with strictly increasing timestamps (seconds)."""
    def __init__(self, timestamps, poses):
        timestamps = np.array(timestamps, dtype=np.float64).reshape(-1)
        poses = list(poses)
        if len(timestamps) != len(poses):
            raise TrajectoryError("Timestamp and pose counts differ",
                                  (len(timestamps), len(poses)))
        if not np.all(np.isfinite(timestamps)):
            raise TrajectoryError("Timestamps must be finite")
        decreasing = np.flatnonzero(np.diff(timestamps) <= 0)
        if len(decreasing):
            raise TrajectoryError("Timestamps must be strictly increasing",
                                  timestamps[decreasing[0]:decreasing[0] + 2].tolist())
        timestamps.flags.writeable = False
        self.timestamps = timestamps
        self.poses = poses

    def __repr__(self):
        if not len(self):
            return "Trajectory(empty)"
        return "Trajectory(samples=%d, %0.3fs-%0.3fs)" % (len(self), self.start, self.end)

    def __len__(self):
        return len(self.poses)

    def __iter__(self):
        return iter(zip(self.timestamps, self.poses))

    def __getitem__(self, index):
        return self.timestamps[index], self.poses[index]

    @property
    def start(self):
        return float(self.timestamps[0])

    @property
    def end(self):
        return float(self.timestamps[-1])

    @property
    def translations(self):
        if not self.poses:
            return np.empty((0, 3))
        return np.array([pose.translation for pose in self.poses])

    @property
    def length(self):
        """Distance travelled in meters."""
        return float(np.linalg.norm(np.diff(self.translations, axis=0), axis=1).sum())

    def transformed(self, transform):
        """Same trajectory expressed in another frame, `transform @ pose`."""
        return Trajectory(self.timestamps, [transform @ pose for pose in self.poses])


def load_trajectory(path):
    timestamps = []
    poses = []
    try:
        with open(path) as trajectory_file:
            lines = trajectory_file.readlines()
    except OSError as ex:
        raise TrajectoryError("Can't read %s: %s" % (path, ex.strerror), path)
    for line_number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        fields = line.split()
        if len(fields) != 8:
            raise TrajectoryError("Expected 8 values, got %d" % len(fields), line,
                                  line_number=line_number)
        try:
            values = [float(field) for field in fields]
            pose = Transform.from_quaternion(values[1:4], values[4:8])
        except ValueError as ex:
            raise TrajectoryError("Invalid sample: %s" % ex, line, line_number=line_number)
        timestamps.append(values[0])
        poses.append(pose)
    if not poses:
        raise TrajectoryError("No samples in %s" % path)
    return Trajectory(timestamps, poses)


def save_trajectory(trajectory, path):
    with open(path, 'w') as trajectory_file:
        trajectory_file.write("# timestamp tx ty tz qx qy qz qw\n")
        for timestamp, pose in trajectory:
            values = [timestamp] + list(pose.translation) + list(pose.quaternion)
            trajectory_file.write(" ".join("%.17g" % value for value in values) + "\n")


def interpolate_translations(truth, timestamps):
    """Linearly interpolated truth positions at `timestamps`."""
    translations = truth.translations
    return np.column_stack([np.interp(timestamps, truth.timestamps, translations[:, axis])
                            for axis in range(3)])


def trajectory_mean_error(estimate, truth):
    """Mean translation error of `estimate` against interpolated `truth`."""
    if not len(estimate) or not len(truth):
        raise TrajectoryError("Can't compare empty trajectories")
    timestamps = estimate.timestamps
    if (timestamps[0] < truth.start - SPAN_TOLERANCE
            or timestamps[-1] > truth.end + SPAN_TOLERANCE):
        raise TrajectoryError(
            "Estimate spans %0.6fs-%0.6fs, outside of the truth span %0.6fs-%0.6fs"
            % (timestamps[0], timestamps[-1], truth.start, truth.end)
        )
    errors = estimate.translations - interpolate_translations(truth, timestamps)
    return float(np.mean(np.linalg.norm(errors, axis=1)))


def odometry_increments(trajectory):
    """Relative motions between consecutive samples, in the earlier frame."""
    poses = trajectory.poses
    return [previous.inverse() @ current for previous, current in zip(poses, poses[1:])]


def noisy_odometry(truth, noise_per_meter=0.05, noise_per_rad=0.05, seed=0):
    """Dead reckoning of `truth` with drifting increments.

    Each increment's distance is scaled by 1 + N(0, noise_per_meter²) and
    its heading turned by N(0, (noise_per_rad·|Δheading|)² +
    (noise_per_meter·distance)²), so straight drives drift as well.
    """
    if not (noise_per_meter >= 0 and noise_per_rad >= 0):
        raise InvalidArgument("Odometry noise must be >= 0", (noise_per_meter, noise_per_rad))
    rng = np.random.default_rng(seed)
    if not len(truth):
        return truth
    poses = [truth.poses[0]]
    for increment in odometry_increments(truth):
        distance = np.linalg.norm(increment.translation)
        scale = 1.0 + rng.normal(0.0, noise_per_meter)
        heading_sigma = math.hypot(noise_per_rad * abs(increment.yaw),
                                   noise_per_meter * distance)
        heading_noise = rng.normal(0.0, heading_sigma)
        turn = Rotation.from_euler('z', heading_noise).as_matrix()
        noisy = Transform(turn @ increment.rotation, scale * increment.translation)
        poses.append(poses[-1] @ noisy)
    return Trajectory(truth.timestamps, poses)


def square_loop(side=6.0, step=0.2, center=(0.0, 0.0, 0.0), heading=0.0, laps=1, dt=0.1):
    """Counter-clockwise square drive starting and ending at the same corner.

    With `heading` 0 the robot starts at the (-x, -y) corner heading +x;
    other headings turn the whole loop about its center. Every sample
    points along the edge it is about to drive.
    """
    if not (side > 0 and step > 0 and dt > 0 and laps >= 1):
        raise InvalidArgument("Invalid square loop parameters", (side, step, laps, dt))
    center = np.asarray(center, dtype=np.float64)
    per_edge = max(1, int(round(side / step)))
    corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=np.float64) * side / 2
    cos, sin = math.cos(heading), math.sin(heading)
    corners = corners @ np.array([[cos, sin], [-sin, cos]])
    positions = []
    headings = []
    for _ in range(laps):
        for edge in range(4):
            begin = corners[edge]
            end = corners[(edge + 1) % 4]
            edge_heading = math.atan2(end[1] - begin[1], end[0] - begin[0])
            for index in range(per_edge):
                positions.append(begin + (end - begin) * index / per_edge)
                headings.append(edge_heading)
    positions.append(corners[0])
    headings.append(headings[-1])

    poses = [Transform.from_euler('z', yaw, center + (x, y, 0.0))
             for (x, y), yaw in zip(positions, headings)]
    return Trajectory(dt * np.arange(len(poses)), poses)
