"""Command line interface.

Exit codes: 0 on success (or converged registration), 1 on errors, 2 when
a registration ran but did not converge.
"""
import argparse
import json
import os
import sys

from meshloc import kernels, settings
from meshloc.config import RunConfig
from meshloc.errors import MeshLocError, ConfigError
from meshloc.harness import run_sphere_benchmark
from meshloc.mesh import mesh_stats
from meshloc.raycast import make_scene
from meshloc.registration import micp_converge
from meshloc.sensors.model import simulate_scan
from meshloc.sensors.ondn import virtual_scan
from meshloc.spc import CorrespondenceSet, find_correspondences, write_correspondences_csv
from meshloc.trajectory import load_trajectory, trajectory_mean_error
from meshloc.transform import Transform
from meshloc.util.log import logger, set_verbosity
from meshloc.util.meshio import load_mesh
from meshloc.util.scanio import read_scan, write_scan

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2
VIRTUAL_SCAN_PREFIX = 'virtual:'


def parse_pose(text):
    """Pose from "tx ty tz" or "tx ty tz qx qy qz qw"."""
    try:
        values = [float(value) for value in text.replace(',', ' ').split()]
    except ValueError:
        raise ConfigError("Invalid pose", text)
    if len(values) == 3:
        return Transform(translation=values)
    if len(values) == 7:
        return Transform.from_quaternion(values[:3], values[3:])
    raise ConfigError("A pose has 3 or 7 values", text)


def write_output(content, path=None):
    if path:
        with open(path, 'w') as output_file:
            output_file.write(content)
    else:
        sys.stdout.write(content)


def dump_json(data):
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def get_workers(args):
    if args.workers is not None:
        return args.workers
    value = os.environ.get(settings.WORKERS_ENV)
    if not value:
        return None
    try:
        return int(value)
    except ValueError:
        raise ConfigError("%s must be an integer" % settings.WORKERS_ENV, value)


def scan_paths(args, rigs):
    """Map rig names to the scan given for them on the command line."""
    paths = {}
    for entry in args.scan:
        if '=' in entry:
            name, path = entry.split('=', 1)
        elif len(rigs) == 1:
            name, path = rigs[0].name, entry
        else:
            raise ConfigError("Use --scan rig=path with several rigs", entry)
        paths[name] = path
    unknown = set(paths) - set(rig.name for rig in rigs)
    if unknown:
        raise ConfigError("Scans given for unknown rigs", sorted(unknown))
    missing = [rig.name for rig in rigs if rig.name not in paths]
    if missing:
        raise ConfigError("Missing scans for rigs", missing)
    return paths


def load_rig_scan(rig, path):
    if path.startswith(VIRTUAL_SCAN_PREFIX):
        return virtual_scan(rig.model, float(path[len(VIRTUAL_SCAN_PREFIX):]))
    return read_scan(path, rig.model)


def cmd_register(args, config):
    if args.output:
        config.set_option('output', 'path', args.output)
    config.validate()
    rigs = config.build_rigs()
    paths = scan_paths(args, rigs)
    scans = [load_rig_scan(rig, paths[rig.name]) for rig in rigs]
    initial_pose = parse_pose(args.initial_pose) if args.initial_pose else Transform()
    params = config.micp_params()

    scene = make_scene(config.load_map())
    result = micp_converge(scene, rigs, scans, initial_pose, params)
    if args.correspondences:
        correspondences = CorrespondenceSet.concatenate(
            find_correspondences(scene, rig, scan, result.pose, params.spc)
            for rig, scan in zip(rigs, scans)
        )
        write_correspondences_csv(correspondences, args.correspondences)
    write_output(dump_json(result.to_dict(normalize_timing=args.no_timing)),
                 config['output']['path'])
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_benchmark(args, config):
    for key in ('brute_force', 'phases'):
        if getattr(args, key):
            config.set_option('benchmark', key, True)
    if args.face_counts:
        config.set_option('benchmark', 'face_counts', args.face_counts)
    if args.n_poses is not None:
        config.set_option('benchmark', 'n_poses', args.n_poses)
    if args.output:
        config.set_option('output', 'path', args.output)
    config.validate()
    benchmark = config['benchmark']
    model = config.build_rigs()[0].model
    simulation = config['simulation']

    report = run_sphere_benchmark(
        benchmark['face_counts'], benchmark['n_poses'], model=model,
        seed=benchmark['seed'], radius=benchmark['radius'],
        max_translation=benchmark['max_translation'],
        max_rotation=benchmark['max_rotation'], params=config.micp_params(),
        brute_force=benchmark['brute_force']
    )
    if simulation['noise_sigma']:
        logger.warning("The sphere benchmark ignores simulation.noise_sigma")
    csv_report = report.to_csv(phases=benchmark['phases'], normalize_timing=args.no_timing)
    output = config['output']['path']
    if output:
        prefix = os.path.splitext(output)[0]
        write_output(csv_report, prefix + '.csv')
        write_output(report.to_json(normalize_timing=args.no_timing) + "\n", prefix + '.json')
    else:
        write_output(csv_report)
    return EXIT_OK


def cmd_simulate(args, config):
    if args.noise is not None:
        config.set_option('simulation', 'noise_sigma', args.noise)
    if args.seed is not None:
        config.set_option('simulation', 'seed', args.seed)
    config.validate()
    rigs = config.build_rigs()
    if args.rig:
        rigs = [rig for rig in rigs if rig.name == args.rig]
        if not rigs:
            raise ConfigError("No rig named %s" % args.rig)
    rig = rigs[0]
    pose = parse_pose(args.pose) if args.pose else Transform()
    simulation = config['simulation']

    scene = make_scene(config.load_map())
    scan = simulate_scan(scene, rig.model, pose @ rig.tsb,
                         simulation['noise_sigma'], simulation['seed'])
    if not scan.valid_count:
        logger.warning("No ray hit the map from this pose")
    write_scan(scan, args.output, rig.model)
    logger.info("Wrote %s with %d valid ranges", args.output, scan.valid_count)
    return EXIT_OK


def cmd_eval_traj(args, config):
    truth = load_trajectory(args.truth)
    estimate = load_trajectory(args.estimate)
    report = {
        'mean_error': trajectory_mean_error(estimate, truth),
        'samples': len(estimate),
    }
    write_output(dump_json(report), args.output or config['output']['path'])
    return EXIT_OK


def cmd_mesh_info(args, config):
    mesh = load_mesh(args.mesh) if args.mesh else config.load_map()
    write_output(dump_json(mesh_stats(mesh).to_dict()), args.output)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog='meshloc',
        description="Localize range sensor scans in triangle mesh maps."
    )
    parser.add_argument('-d', '--debug', action='store_true', help="Show debug messages.")
    parser.add_argument('-c', '--config', help="YAML configuration file.")
    parser.add_argument('--set', action='append', default=[], metavar='SECTION.KEY=VALUE',
                        help="Override a configuration value, can be repeated.")
    parser.add_argument('--workers', type=int,
                        help="Raycasting threads (default: $%s or all cores)."
                        % settings.WORKERS_ENV)
    parser.add_argument('--no-timing', action='store_true',
                        help="Zero every timing field so outputs can be compared.")
    parser.add_argument('--version', action='version',
                        version='%s %s' % (settings.PROJECT, settings.VERSION))
    subparsers = parser.add_subparsers(dest='command')
    subparsers.required = True

    register = subparsers.add_parser('register', help="Register scans against the map.")
    register.add_argument('--scan', action='append', default=[], metavar='RIG=PATH',
                          help="Scan file (CSV or JSON) of a rig, or virtual:<range>.")
    register.add_argument('--initial-pose', help='"tx ty tz qx qy qz qw" of the base.')
    register.add_argument('--correspondences', help="Dump final correspondences as CSV.")
    register.add_argument('-o', '--output', help="Result JSON file.")
    register.set_defaults(func=cmd_register)

    benchmark = subparsers.add_parser('benchmark', help="Sphere runtime benchmark.")
    benchmark.add_argument('--brute-force', action='store_true',
                           help="Test every triangle instead of using the BVH.")
    benchmark.add_argument('--phases', action='store_true',
                           help="Add simulation/reduction/SVD fraction columns.")
    benchmark.add_argument('--face-counts', type=int, nargs='+')
    benchmark.add_argument('--n-poses', type=int)
    benchmark.add_argument('-o', '--output', help="Report prefix, writes .csv and .json.")
    benchmark.set_defaults(func=cmd_benchmark)

    simulate = subparsers.add_parser('simulate', help="Simulate a scan in the map.")
    simulate.add_argument('--pose', help='"tx ty tz qx qy qz qw" of the base.')
    simulate.add_argument('--rig', help="Rig name (default: the first rig).")
    simulate.add_argument('--noise', type=float, help="Range noise sigma (m).")
    simulate.add_argument('--seed', type=int)
    simulate.add_argument('-o', '--output', required=True, help="Scan file, .csv or .json.")
    simulate.set_defaults(func=cmd_simulate)

    eval_traj = subparsers.add_parser('eval-traj', help="Mean error of a trajectory.")
    eval_traj.add_argument('truth')
    eval_traj.add_argument('estimate')
    eval_traj.add_argument('-o', '--output')
    eval_traj.set_defaults(func=cmd_eval_traj)

    mesh_info = subparsers.add_parser('mesh-info', help="Mesh statistics as JSON.")
    mesh_info.add_argument('mesh', nargs='?', help="Mesh file (default: the configured map).")
    mesh_info.add_argument('-o', '--output')
    mesh_info.set_defaults(func=cmd_mesh_info)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    set_verbosity(args.debug)
    try:
        kernels.set_workers(get_workers(args))
        config = RunConfig(args.config, args.set)
        return args.func(args, config)
    except (MeshLocError, OSError) as ex:
        logger.error(str(ex))
        return EXIT_ERROR
    except ValueError as ex:
        logger.error("Invalid value: %s", ex)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
