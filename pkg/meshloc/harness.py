"""Experiments: the sphere benchmark, stationary accuracy, combined
correction with virtual wheels and trajectory correction in a box world.
"""
import csv
import io
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from meshloc.mesh import generate_sphere
from meshloc.raycast import make_scene
from meshloc.registration import MicpParams, micp_converge, PHASES
from meshloc.sensors.model import SensorRig, simulate_scan
from meshloc.sensors.ondn import wheel_sensor, virtual_scan
from meshloc.sensors.spherical import planar_lidar, vlp16
from meshloc.trajectory import (
    Trajectory, noisy_odometry, odometry_increments, trajectory_mean_error
)
from meshloc.transform import Transform, pose_error, random_pose_in_ball
from meshloc.util.log import logger

# Box world: floor of the default 10 x 10 x 3 m room, robot base on the floor
FLOOR_HEIGHT = -1.5
LIDAR_HEIGHT = 0.5
WHEEL_RADIUS = 0.15
WHEEL_BASE = (0.25, 0.2)


@dataclass
class BenchmarkRow:
    face_count: int
    n_poses: int
    iterations: int
    mean_iteration_time: float
    median_iteration_time: float
    p95_iteration_time: float
    phase_fractions: dict
    convergence_rate: float
    mean_translation_error: float
    build_time: float = 0.0

    def to_dict(self, normalize_timing=False):
        def timing(value):
            return 0.0 if normalize_timing else float(value)
        return {
            'face_count': self.face_count,
            'n_poses': self.n_poses,
            'iterations': self.iterations,
            'mean_iteration_time': timing(self.mean_iteration_time),
            'median_iteration_time': timing(self.median_iteration_time),
            'p95_iteration_time': timing(self.p95_iteration_time),
            'phase_fractions': dict((phase, timing(value))
                                    for phase, value in self.phase_fractions.items()),
            'convergence_rate': self.convergence_rate,
            'mean_translation_error': self.mean_translation_error,
            'build_time': timing(self.build_time),
        }


@dataclass
class BenchmarkReport:
    rows: list = field(default_factory=list)
    backend: str = 'bvh'

    def to_dict(self, normalize_timing=False):
        return {
            'backend': self.backend,
            'rows': [row.to_dict(normalize_timing) for row in self.rows],
        }

    def to_json(self, normalize_timing=False):
        return json.dumps(self.to_dict(normalize_timing), indent=2, sort_keys=True)

    def to_csv(self, phases=False, normalize_timing=False):
        columns = ['face_count', 'n_poses', 'iterations', 'mean_iteration_time',
                   'median_iteration_time', 'p95_iteration_time', 'convergence_rate',
                   'mean_translation_error']
        if phases:
            columns += ['%s_fraction' % phase for phase in PHASES]
        output = io.StringIO()
        writer = csv.writer(output, lineterminator='\n')
        writer.writerow(columns)
        for row in self.rows:
            data = row.to_dict(normalize_timing)
            for phase in PHASES:
                data['%s_fraction' % phase] = data['phase_fractions'][phase]
            writer.writerow([data[column] for column in columns])
        return output.getvalue()


def run_sphere_benchmark(face_counts, n_poses, model=None, seed=0, radius=1.0,
                         max_translation=0.5, max_rotation=0.3, params=None,
                         brute_force=False, tolerance=1e-3):
    """Register pose guesses inside spheres of increasing face count.

    The scan is simulated at the sphere center; a guess counts as converged
    when the loop converged and ended within `tolerance` meters of the center.
    Guess `i` uses the seed sequence (seed, i), so every map size sees the
    same guesses. A single guess is the center itself.
    """
    face_counts = list(face_counts)
    if not face_counts:
        raise ValueError("No face counts to benchmark")
    model = model or vlp16()
    params = params or MicpParams()
    rig = SensorRig(model)
    center = Transform()
    report = BenchmarkReport(backend='brute_force' if brute_force else 'bvh')

    for face_count in face_counts:
        mesh = generate_sphere(radius, face_count)
        build_start = time.perf_counter()
        scene = make_scene(mesh, brute_force=brute_force)
        build_time = time.perf_counter() - build_start
        scan = simulate_scan(scene, model, center)

        step_times = []
        phase_totals = dict((phase, 0.0) for phase in PHASES)
        errors = []
        successes = 0
        iterations = 0
        for index in range(n_poses):
            if n_poses == 1:
                guess = center
            else:
                guess = random_pose_in_ball(center, max_translation, max_rotation,
                                            seed=(seed, index))
            result = micp_converge(scene, [rig], [scan], guess, params)
            error = pose_error(result.pose, center).translation_error
            errors.append(error)
            if result.converged and error <= tolerance:
                successes += 1
            iterations += result.iterations_run
            step_times.extend(result.step_times)
            for phase in PHASES:
                phase_totals[phase] += result.phase_timings[phase]

        total_time = sum(step_times)
        step_times = np.array(step_times) if step_times else np.zeros(1)
        row = BenchmarkRow(
            face_count=mesh.face_count,
            n_poses=n_poses,
            iterations=iterations,
            mean_iteration_time=float(np.mean(step_times)),
            median_iteration_time=float(np.median(step_times)),
            p95_iteration_time=float(np.percentile(step_times, 95)),
            phase_fractions=dict((phase, phase_totals[phase] / total_time if total_time else 0.0)
                                 for phase in PHASES),
            convergence_rate=successes / float(n_poses) if n_poses else 0.0,
            mean_translation_error=float(np.mean(errors)) if errors else 0.0,
            build_time=build_time,
        )
        logger.info("%d faces: %0.2f%% converged, %0.6fs per iteration",
                    row.face_count, 100 * row.convergence_rate, row.mean_iteration_time)
        report.rows.append(row)
    return report


def box_world_rigs(lidar=None, wheel_weight=None, lidar_weight=None):
    """LiDAR above the base and four virtual wheel sensors.

    The base frame sits on the floor; wheel centers are one wheel radius
    above it.
    """
    lidar = lidar or vlp16()
    lidar_rig = SensorRig(lidar, Transform(translation=(0.0, 0.0, LIDAR_HEIGHT)),
                          weight_override=lidar_weight, name='lidar')
    a, b = WHEEL_BASE
    centers = [(a, b, WHEEL_RADIUS), (a, -b, WHEEL_RADIUS),
               (-a, b, WHEEL_RADIUS), (-a, -b, WHEEL_RADIUS)]
    wheel_rig = SensorRig(wheel_sensor(centers, WHEEL_RADIUS),
                          weight_override=wheel_weight, name='wheels')
    return lidar_rig, wheel_rig


def floor_pose(x=0.0, y=0.0, yaw=0.0):
    """Base pose standing on the box world floor."""
    return Transform.from_euler('z', yaw, (x, y, FLOOR_HEIGHT))


@dataclass
class StationaryReport:
    errors: np.ndarray
    results: list

    @property
    def mean_error(self):
        return float(np.mean(self.errors))

    @property
    def max_error(self):
        return float(np.max(self.errors))


def run_stationary_experiment(scene, rig, true_pose, offset, noise_sigma, seeds,
                              params=None):
    """Register noisy scans of a standing robot from an offset guess.

    `offset` is applied on the right of the true pose. One scan per seed;
    returns the translation error of every converged pose.
    """
    params = params or MicpParams()
    initial = true_pose @ offset
    errors = []
    results = []
    for seed in seeds:
        scan = simulate_scan(scene, rig.model, true_pose @ rig.tsb, noise_sigma, seed)
        result = micp_converge(scene, [rig], [scan], initial, params)
        errors.append(pose_error(result.pose, true_pose).translation_error)
        results.append(result)
    report = StationaryReport(np.array(errors), results)
    logger.info("Stationary: mean error %0.6f m over %d seeds", report.mean_error, len(errors))
    return report


@dataclass
class CombinedCorrection:
    lidar: object
    wheels: object
    combined: object
    true_pose: Transform

    def errors(self, name):
        """Translation error vector (estimate - truth) of one run."""
        return getattr(self, name).pose.translation - self.true_pose.translation


def run_combined_correction(scene, lidar_rig, wheel_rig, true_pose, initial_pose,
                            params=None, noise_sigma=0.0, seed=0,
                            wheel_radius=WHEEL_RADIUS):
    """Correct one guess with the LiDAR, the virtual wheels and both."""
    params = params or MicpParams()
    lidar_scan = simulate_scan(scene, lidar_rig.model, true_pose @ lidar_rig.tsb,
                               noise_sigma, seed)
    wheel_scan = virtual_scan(wheel_rig.model, wheel_radius)
    wheel_params = replace(params, min_correspondences=min(params.min_correspondences,
                                                           wheel_rig.model.ray_count))
    lidar = micp_converge(scene, [lidar_rig], [lidar_scan], initial_pose, params)
    wheels = micp_converge(scene, [wheel_rig], [wheel_scan], initial_pose, wheel_params)
    combined = micp_converge(scene, [lidar_rig, wheel_rig], [lidar_scan, wheel_scan],
                             initial_pose, params)
    return CombinedCorrection(lidar, wheels, combined, true_pose)


@dataclass
class TrajectoryExperiment:
    odometry_error: float
    micp_error: float
    corrected: Trajectory
    odometry: Trajectory
    rejected_steps: int = 0
    results: list = field(default_factory=list)


def simulate_rig_scans(scene, rigs, true_pose, noise_sigma=0.0, seed=0):
    """One scan per rig, simulated at the true base pose.

    Rig `i` extends the seed sequence with `i`, so `seed=(s, k)` gives
    rig `i` the sequence (s, k, i). Wheels without floor contact come back
    as invalid beams.
    """
    prefix = tuple(seed) if isinstance(seed, tuple) else (seed,)
    return [simulate_scan(scene, rig.model, true_pose @ rig.tsb, noise_sigma,
                          seed=prefix + (rig_index,))
            for rig_index, rig in enumerate(rigs)]


def run_trajectory_experiment(scene, truth, rigs, micp_params=None, odometry_params=None,
                              seed=0, noise_sigma=0.0):
    """Drive `truth` with drifting odometry corrected at every sample.

    The estimate advances by each noisy odometry increment, then gets
    registered against scans simulated at the true pose.
    """
    micp_params = micp_params or MicpParams()
    odometry_params = odometry_params or {}
    rigs = list(rigs)
    odometry = noisy_odometry(truth, seed=seed, **odometry_params)
    increments = odometry_increments(odometry)

    estimate = odometry.poses[0]
    corrected = []
    results = []
    rejected = 0
    for index, true_pose in enumerate(truth.poses):
        if index:
            estimate = estimate @ increments[index - 1]
        scans = simulate_rig_scans(scene, rigs, true_pose, noise_sigma, seed=(seed, index))
        result = micp_converge(scene, rigs, scans, estimate, micp_params)
        if result.rejected:
            rejected += 1
        estimate = result.pose
        corrected.append(estimate)
        results.append(result)

    corrected = Trajectory(truth.timestamps, corrected)
    experiment = TrajectoryExperiment(
        odometry_error=trajectory_mean_error(odometry, truth),
        micp_error=trajectory_mean_error(corrected, truth),
        corrected=corrected,
        odometry=odometry,
        rejected_steps=rejected,
        results=results,
    )
    logger.info("Trajectory: odometry ME %0.4f m, corrected ME %0.4f m",
                experiment.odometry_error, experiment.micp_error)
    return experiment


def planar_rigs(n_horizontal=360, wheel_weight=0.5, lidar_weight=0.5):
    """2D LiDAR plus virtual wheels with equal weights.

    With count proportional weights four wheel rays barely move the pose
    against hundreds of LiDAR rays, so both sensors get half the weight.
    """
    return box_world_rigs(planar_lidar(n_horizontal), wheel_weight=wheel_weight,
                          lidar_weight=lidar_weight)
