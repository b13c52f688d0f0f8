"""Pose correction from correspondences.

Each sensor's correspondences reduce to cross statistics (covariance about
the base origin plus the two means). Statistics of several sensors merge
by weighted average, and one SVD turns the merged statistics into the
correction ΔT that is applied on the right of the current pose.
"""
import time
from dataclasses import dataclass, field, replace

import numpy as np

from meshloc import kernels
from meshloc.errors import InvalidArgument, NoCorrectionError, NumericError
from meshloc.raycast import build_bvh, Scene
from meshloc.spc import SpcParams, CorrespondenceSet, find_correspondences
from meshloc.transform import Transform
from meshloc.util.log import logger

PHASES = ('simulation', 'reduction', 'svd')


@dataclass(frozen=True, eq=False)
class CrossStatistics:
    covariance: np.ndarray
    mean_scan: np.ndarray
    mean_map: np.ndarray
    count: int = 0

    @classmethod
    def zero(cls):
        return cls(np.zeros((3, 3)), np.zeros(3), np.zeros(3), 0)

    @property
    def is_finite(self):
        return bool(np.all(np.isfinite(self.covariance))
                    and np.all(np.isfinite(self.mean_scan))
                    and np.all(np.isfinite(self.mean_map)))


@dataclass(frozen=True)
class MicpParams:
    max_iterations: int = 50
    translation_epsilon: float = 1e-4
    rotation_epsilon: float = 1e-4
    min_correspondences: int = 10
    spc: SpcParams = field(default_factory=SpcParams)

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidArgument("max_iterations must be >= 1", self.max_iterations)
        if not (self.translation_epsilon > 0 and self.rotation_epsilon > 0):
            raise InvalidArgument("Convergence thresholds must be positive",
                                  (self.translation_epsilon, self.rotation_epsilon))
        if self.min_correspondences < 3:
            raise InvalidArgument("min_correspondences must be >= 3",
                                  self.min_correspondences)

    @classmethod
    def from_dict(cls, data):
        """Build from the flat `micp` configuration section."""
        spc = SpcParams(max_projective_distance=data['max_projective_distance'],
                        max_range=data['max_range'])
        return cls(max_iterations=data['max_iterations'],
                   translation_epsilon=data['translation_epsilon'],
                   rotation_epsilon=data['rotation_epsilon'],
                   min_correspondences=data['min_correspondences'],
                   spc=spc)


@dataclass
class StepDiagnostics:
    delta: Transform
    correspondence_counts: list
    residual: float
    rejected: bool = False
    timings: dict = field(default_factory=dict)

    @property
    def correspondence_count(self):
        return sum(self.correspondence_counts)


@dataclass
class MicpResult:
    pose: Transform
    iterations_run: int
    final_residual: float
    converged: bool
    correspondence_count: int
    phase_timings: dict
    step_times: list = field(default_factory=list)
    rejected: bool = False

    def to_dict(self, normalize_timing=False):
        """JSON ready dict; `normalize_timing` zeroes every timing field."""
        phase_timings = dict((phase, 0.0 if normalize_timing else float(seconds))
                             for phase, seconds in self.phase_timings.items())
        step_times = [0.0 if normalize_timing else float(seconds)
                      for seconds in self.step_times]
        return {
            'pose': self.pose.to_dict(),
            'iterations_run': self.iterations_run,
            'final_residual': float(self.final_residual),
            'converged': self.converged,
            'rejected': self.rejected,
            'correspondence_count': self.correspondence_count,
            'phase_timings': phase_timings,
            'step_times': step_times,
        }


def cross_statistics(corr):
    """Covariance sum(m_i s_i^T) / n about the base origin, plus the means."""
    count = corr.count
    if not count:
        return CrossStatistics.zero()
    covariance, scan_sum, map_sum = kernels.accumulate_cross(
        np.ascontiguousarray(corr.scan_points), np.ascontiguousarray(corr.map_points)
    )
    return CrossStatistics(covariance / count, scan_sum / count, map_sum / count, count)


def merge_statistics(stats, weights=None):
    """Weighted average of cross statistics.

    Without weights each sensor counts proportionally to its number of
    correspondences. Sensors without correspondences never contribute; the
    remaining weights are renormalized to sum to one. A merge without any
    correspondence returns zero statistics.
    """
    stats = list(stats)
    if not stats:
        raise InvalidArgument("Nothing to merge")
    counts = np.array([stat.count for stat in stats], dtype=np.float64)
    if weights is None:
        weights = counts.copy()
    else:
        weights = np.array(weights, dtype=np.float64).reshape(-1)
        if len(weights) != len(stats):
            raise InvalidArgument("One weight per statistics needed",
                                  (len(weights), len(stats)))
        if np.any(weights < 0) or not weights.sum() > 0:
            raise InvalidArgument("Weights must be >= 0 with a positive sum",
                                  weights.tolist())
    weights = np.where(counts > 0, weights, 0.0)
    total = weights.sum()
    if not total > 0:
        logger.debug("Merging statistics without correspondences")
        return CrossStatistics.zero()
    weights = weights / total

    covariance = np.zeros((3, 3))
    mean_scan = np.zeros(3)
    mean_map = np.zeros(3)
    for weight, stat in zip(weights, stats):
        if weight == 0:
            continue
        covariance += weight * stat.covariance
        mean_scan += weight * stat.mean_scan
        mean_map += weight * stat.mean_map
    return CrossStatistics(covariance, mean_scan, mean_map, int(counts.sum()))


def solve_umeyama(stats):
    """Rigid correction from cross statistics.

    The rotation comes from the SVD of the covariance, with the last singular
    direction flipped when the SVD alone would give a reflection.
    """
    if stats.count < 3:
        raise NoCorrectionError("At least 3 correspondences are needed", stats.count)
    if not stats.is_finite:
        raise NumericError("Cross statistics are not finite", stats.covariance.tolist())
    u, _, vt = np.linalg.svd(stats.covariance)
    reflection = np.eye(3)
    if np.linalg.det(u @ vt) < 0:
        reflection[2, 2] = -1.0
    rotation = u @ reflection @ vt
    translation = stats.mean_map - rotation @ stats.mean_scan
    return Transform(rotation, translation)


def objective(corr, delta):
    """Mean squared distance between map points and corrected scan points."""
    if not corr.count:
        return 0.0
    residuals = corr.map_points - delta.apply(corr.scan_points)
    return float(np.mean(np.einsum('ij,ij->i', residuals, residuals)))


def rig_weights(rigs, counts):
    """Per rig weights, overrides where set and count shares elsewhere."""
    if all(rig.weight_override is None for rig in rigs):
        return None
    total = float(sum(counts))
    return [rig.weight_override if rig.weight_override is not None
            else (count / total if total else 0.0)
            for rig, count in zip(rigs, counts)]


def micp_step(scene, rigs, scans, pose, params=None):
    """One correction of `pose`, returns (corrected pose, StepDiagnostics)."""
    params = params or MicpParams()
    rigs = list(rigs)
    scans = list(scans)
    if len(rigs) != len(scans):
        raise InvalidArgument("One scan per rig needed", (len(rigs), len(scans)))

    start = time.perf_counter()
    correspondences = [find_correspondences(scene, rig, scan, pose, params.spc)
                       for rig, scan in zip(rigs, scans)]
    simulated = time.perf_counter()
    stats = [cross_statistics(corr) for corr in correspondences]
    counts = [stat.count for stat in stats]
    weights = rig_weights(rigs, counts)
    if weights is not None and not sum(weights) > 0:
        merged = CrossStatistics.zero()
    else:
        merged = merge_statistics(stats, weights)
    reduced = time.perf_counter()

    residual = CorrespondenceSet.concatenate(correspondences).mean_abs_distance
    rejected = sum(counts) < params.min_correspondences or merged.count < 3
    if rejected:
        logger.warning("Rejected correction with %d correspondences (need %d)",
                       sum(counts), params.min_correspondences)
        delta = Transform()
    else:
        delta = solve_umeyama(merged)
    solved = time.perf_counter()

    diagnostics = StepDiagnostics(
        delta=delta,
        correspondence_counts=counts,
        residual=residual,
        rejected=rejected,
        timings={
            'simulation': simulated - start,
            'reduction': reduced - simulated,
            'svd': solved - reduced,
        },
    )
    if rejected:
        return pose, diagnostics
    return pose @ delta, diagnostics


def evaluate_residual(scene, rigs, scans, pose, params):
    """Mean absolute projective distance and correspondence count at `pose`."""
    correspondences = CorrespondenceSet.concatenate(
        find_correspondences(scene, rig, scan, pose, params.spc)
        for rig, scan in zip(rigs, scans)
    )
    return correspondences.mean_abs_distance, correspondences.count


def micp_converge(scene, rigs, scans, initial_pose, params=None):
    """Iterate corrections until the step is below both thresholds."""
    params = params or MicpParams()
    rigs = list(rigs)
    scans = list(scans)
    pose = initial_pose
    phase_timings = dict((phase, 0.0) for phase in PHASES)
    step_times = []
    converged = False
    rejected = False
    iterations = 0

    for iterations in range(1, params.max_iterations + 1):
        pose, diagnostics = micp_step(scene, rigs, scans, pose, params)
        for phase in PHASES:
            phase_timings[phase] += diagnostics.timings[phase]
        step_times.append(sum(diagnostics.timings.values()))
        if diagnostics.rejected:
            rejected = True
            break
        delta = diagnostics.delta
        logger.debug("Iteration %d: %d correspondences, residual %0.6f, step %0.3e m",
                     iterations, diagnostics.correspondence_count, diagnostics.residual,
                     np.linalg.norm(delta.translation))
        if (np.linalg.norm(delta.translation) < params.translation_epsilon
                and delta.rotation_angle < params.rotation_epsilon):
            converged = True
            break

    residual, count = evaluate_residual(scene, rigs, scans, pose, params)
    if not converged:
        logger.info("No convergence after %d iterations%s", iterations,
                    " (step rejected)" if rejected else "")
    return MicpResult(
        pose=pose,
        iterations_run=iterations,
        final_residual=residual,
        converged=converged,
        correspondence_count=count,
        phase_timings=phase_timings,
        step_times=step_times,
        rejected=rejected,
    )


class Corrector(object):
    """Correction of many pose hypotheses with one sensor.

    The model, map and sensor-to-base transform can be swapped at runtime.
    `compute_covs` gives the statistics of every pose so several correctors
    can be merged with `combine_covs`; `correct` goes straight to one ΔT
    per pose.
    """
    def __init__(self, rig, scene=None, params=None):
        self.rig = rig
        self.scene = None
        self.params = params or SpcParams()
        if scene is not None:
            self.set_map(scene)

    def __repr__(self):
        return "Corrector(%s)" % self.rig.name

    def set_model(self, model):
        self.rig = replace(self.rig, model=model)

    def set_tsb(self, tsb):
        self.rig = replace(self.rig, tsb=tsb)

    def set_map(self, scene):
        """Accept a prepared scene or a mesh (a BVH gets built)."""
        self.scene = scene if isinstance(scene, Scene) else build_bvh(scene)

    def compute_covs(self, poses, scan):
        if self.scene is None:
            raise InvalidArgument("Corrector has no map")
        return [cross_statistics(find_correspondences(self.scene, self.rig, scan,
                                                      pose, self.params))
                for pose in poses]

    def correct(self, poses, scan):
        return [correction_from_stats(stats) for stats in self.compute_covs(poses, scan)]


def correction_from_stats(stats):
    """ΔT for one pose, identity when too few correspondences."""
    try:
        return solve_umeyama(stats)
    except NoCorrectionError:
        logger.warning("Too few correspondences (%d), pose left unchanged", stats.count)
        return Transform()


def combine_covs(per_sensor, weights=None):
    """Merge per pose statistics of several correctors.

    `per_sensor` holds one list of statistics per sensor, all of the same
    length; the result has one merged statistics per pose.
    """
    per_sensor = [list(stats) for stats in per_sensor]
    if not per_sensor:
        raise InvalidArgument("Nothing to combine")
    pose_count = len(per_sensor[0])
    if any(len(stats) != pose_count for stats in per_sensor):
        raise InvalidArgument("Every sensor needs statistics for every pose")
    return [merge_statistics([stats[index] for stats in per_sensor], weights)
            for index in range(pose_count)]
