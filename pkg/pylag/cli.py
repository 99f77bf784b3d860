# This file is part of pylag.
#
# Copyright (C) 2021 pylag developers
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional

from pylag import ConfigError, __version__
from pylag.experiments import RUNNERS, ExperimentConfig, apply_overrides, config_schema, output_dir, \
    run_asymptotics, run_simulate, tabulate_kernels, write_outputs
from pylag.logging import setup_logging
from pylag.reloadable_config import ReloadableConfig

logger = logging.getLogger()

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILURES = 2

# Top-level keys that `--set` can override besides feeding jsonnet external variables.
_CONFIG_ROOTS = ('name', 'kind', 'out', 'workers', 'mode', 'series', 'kernel', 'selection', 'params', 'sweep',
                 'tipping', 'solver')

_CONFIG_COMMANDS = {
    'asymptotics': run_asymptotics,
    'simulate': run_simulate,
    **RUNNERS
}


def _parse_assignments(items: Optional[List[str]]) -> Dict[str, str]:
    result = {}
    for item in items or []:
        key, separator, value = item.partition('=')
        if not separator or not key.strip():
            raise ConfigError(f"Invalid assignment '{item}', expected KEY=VALUE")
        result[key.strip()] = value
    return result


def load_experiment(config: Optional[str], preset: Optional[str], assignments: Dict[str, str]) -> ExperimentConfig:
    """Evaluates a manifest file or a shipped preset and applies the `--set` overrides.

    Every assignment is visible to jsonnet through `std.extVar`. Assignments whose key starts with a
    configuration section, such as `params.sigma=0.2`, also override the evaluated manifest.
    """
    if (config is None) == (preset is None):
        raise ConfigError("Exactly one of --config and --preset is required")

    reader = ReloadableConfig.from_preset(preset, assignments) if preset is not None \
        else ReloadableConfig(config, assignments)
    data = reader.get_config()

    overrides = {key: value for key, value in assignments.items() if key.split('.', 1)[0] in _CONFIG_ROOTS}
    return ExperimentConfig.from_dict(apply_overrides(data, overrides))


def _report(result, directory: str) -> int:
    if result.failures > 0:
        logger.warning(f"{result.failures} point(s) failed, see the status column in '{directory}'")
        return EXIT_FAILURES
    return EXIT_OK


def _run_config_command(args) -> int:
    cfg = load_experiment(args.config, args.preset, _parse_assignments(args.set))
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be positive")
        cfg.workers = args.workers

    directory = output_dir(cfg, args.out)
    result = _CONFIG_COMMANDS[args.command](cfg)
    write_outputs(result, directory, cfg)
    return _report(result, directory)


def _run_kernels(args) -> int:
    directory = args.out or os.path.join('out', 'kernels')
    speeds = [float(value) for value in args.speeds.split(',')] if args.speeds else None
    result = tabulate_kernels(args.shape, speeds)
    write_outputs(result, directory)
    return EXIT_OK


def _run_schema(args) -> int:
    path = args.out or 'schema.json'
    if os.path.isdir(path):
        path = os.path.join(path, 'schema.json')

    with open(path, 'w') as file:
        json.dump(config_schema(), file, indent=4)
    logger.info(f"Wrote '{path}'")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='pylag',
                                     description="Travelling equilibria of phenotype distributions "
                                                 "under a moving optimum")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('--debug', action='store_true', help="Enable debug output")
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True

    descriptions = {
        'asymptotics': "Closed-form predictions and critical speeds at every sweep point",
        'simulate': "Single simulated equilibrium per series, with its density",
        'compare': "Simulated against predicted equilibria along a sweep",
        'tipping': "Convergence or divergence from a grid of initial lags",
        'distribution': "Simulated densities against the reconstructed ones"
    }
    for command, description in descriptions.items():
        sub = subparsers.add_parser(command, help=description, description=description)
        sub.add_argument('--config', type=str, help="Experiment manifest (jsonnet or JSON)")
        sub.add_argument('--preset', type=str, help="Name of a shipped preset, one of: "
                                                    + ', '.join(ReloadableConfig.presets()))
        sub.add_argument('--out', type=str, help="Output directory, out/<name> by default")
        sub.add_argument('--set', action='append', metavar='KEY=VALUE',
                         help="jsonnet external variable, also a dotted override such as params.sigma=0.2")
        sub.add_argument('--workers', type=int, help="Number of sweep points solved concurrently")
        sub.set_defaults(handler=_run_config_command)

    kernels = subparsers.add_parser('kernels', help="Tabulate the Hamiltonian and Lagrangian of every kernel")
    kernels.add_argument('--shape', type=float, default=0.5, help="Shape of the gamma kernel")
    kernels.add_argument('--speeds', type=str, help="Comma separated scaled speeds, 0 to 0.5 by default")
    kernels.add_argument('--out', type=str, help="Output directory, out/kernels by default")
    kernels.set_defaults(handler=_run_kernels)

    schema = subparsers.add_parser('schema', help="Write every configuration key with its default and unit")
    schema.add_argument('--out', type=str, help="Output file or directory, schema.json by default")
    schema.set_defaults(handler=_run_schema)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Command line entry point.

    Returns:
        0 on success, 1 on an invalid configuration and 2 when some sweep points failed.
    """
    args = _parser().parse_args(argv)
    setup_logging(args.debug)

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
