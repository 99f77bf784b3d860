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

import datetime
import json
import logging
import math
import os
import zlib
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
import pytz

from pylag import ConfigError, DivergenceError, PylagError, TippingError, __version__
from pylag.asymptotics import C_SEAM, Order, asexual_U0, asexual_U1, asexual_leading, critical_speeds, \
    infinitesimal_U1, infinitesimal_equilibria, predict, variance_trend
from pylag.kernels import KernelSpec, LagrangianOrder, excess_kurtosis, hamiltonian, hamiltonian_derivs, lagrangian
from pylag.scaling import Mode, ModelParams, from_scaled, to_scaled
from pylag.selection import SelectionFamily, SelectionSpec, classify_shape
from pylag.simulator import Distribution, EquilibriumReport, Grid, SimulatorSettings, Status, solve_equilibrium, \
    tipping_sweep
from pylag.sweep import SweepPoint, SweepRunner

logger = logging.getLogger()

KINDS = ('compare', 'tipping', 'distribution')
AXES = ('c', 'alpha', 'z_init', 'kernel')

# Bulk log-density gap above which a reconstructed density is flagged as a poor fit.
POOR_FIT = 0.3


class SchemaEntry(NamedTuple):
    default: Any
    unit: str
    description: str


SCHEMA = {
    'name': SchemaEntry(None, '', "Experiment name, also the default output directory under out/"),
    'kind': SchemaEntry('compare', '', "compare | tipping | distribution"),
    'out': SchemaEntry(None, '', "Output directory, out/<name> when unset"),
    'workers': SchemaEntry(1, '', "Number of sweep points solved concurrently"),
    'mode': SchemaEntry('asexual', '', "Reproduction mode: asexual | infinitesimal"),
    'kernel.family': SchemaEntry('gaussian', '', "Kernel: diffusion | uniform | gaussian | exponential | gamma"),
    'kernel.shape': SchemaEntry(0.5, '', "Shape parameter of the gamma kernel"),
    'selection.family': SchemaEntry('quadratic', '', "Selection: quadratic | super_quadratic | bounded"),
    'selection.a6': SchemaEntry(1 / 64, '1/(trait^6 time)', "Sextic coefficient of super-quadratic selection"),
    'selection.m_inf': SchemaEntry(None, '1/time', "Supremum of bounded selection"),
    'params.beta': SchemaEntry(1.0, '1/time', "Birth rate"),
    'params.mu0': SchemaEntry(0.0, '1/time', "Basal mortality rate"),
    'params.alpha': SchemaEntry(1.0, '1/(trait^2 time)', "Strength of selection, m''(0)"),
    'params.sigma': SchemaEntry(0.1, 'trait', "Mutational standard deviation, or segregation scale"),
    'params.c': SchemaEntry(0.0, 'trait/time', "Speed of the optimum when it is not swept"),
    'sweep.axis': SchemaEntry('c', '', "Swept quantity: c | alpha | z_init | kernel"),
    'sweep.values': SchemaEntry(None, 'axis units', "Explicit sweep values; z_init is in scaled trait units"),
    'sweep.start': SchemaEntry(None, 'axis units', "First value of a uniform sweep"),
    'sweep.stop': SchemaEntry(None, 'axis units', "Last value of a uniform sweep"),
    'sweep.num': SchemaEntry(None, '', "Number of values of a uniform sweep"),
    'sweep.relative_to': SchemaEntry(None, '', "c_tip | c_star: speeds are fractions of this critical speed"),
    'series': SchemaEntry([], '', "Overrides {label, mode, kernel, selection}, one curve each"),
    'tipping.z_init': SchemaEntry([-1.0, 0.0], 'scaled trait', "Initial lags of the tipping runs"),
    'solver.dz': SchemaEntry(None, 'scaled trait', "Grid spacing, eps/10 when unset"),
    'solver.bounds': SchemaEntry(None, 'scaled trait', "Domain [z_min, z_max], around the predicted lag when unset"),
    'solver.span': SchemaEntry(12.0, 'standard deviations', "Half-width of the automatic domain"),
    'solver.dt': SchemaEntry(None, 'scaled time', "Time step, the largest stable one when unset"),
    'solver.stop_tol': SchemaEntry(1e-9, '1/scaled time', "Stopping threshold on sup |dp/dt|"),
    'solver.max_iters': SchemaEntry(500000, '', "Maximal number of time steps"),
    'solver.method': SchemaEntry('fft', '', "Convolutions: fft | direct"),
    'solver.expand': SchemaEntry(True, '', "Grow the domain when the density reaches its boundary"),
    'solver.window': SchemaEntry(10000, 'steps', "Window of the divergence detector"),
    'solver.negative_tol': SchemaEntry(1e-6, '', "Largest mass removed by clipping in one step"),
    'solver.max_nodes': SchemaEntry(20000, '', "Largest grid reachable by expansion"),
}

_SECTIONS = ('kernel', 'selection', 'params', 'sweep', 'tipping', 'solver')


def config_schema() -> dict:
    """Every configuration key with its default, unit and description."""
    return {key: entry._asdict() for key, entry in SCHEMA.items()}


def _section_keys(section: str) -> List[str]:
    return [key.split('.', 1)[1] for key in SCHEMA if key.startswith(section + '.')]


def _check_keys(data: dict, allowed: List[str], where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"'{where}' must be an object")

    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown key(s) {', '.join(unknown)} in '{where}'")


def _section(data: dict, section: str) -> dict:
    given = data.get(section, {}) or {}
    _check_keys(given, _section_keys(section), section)
    return {key: given.get(key, SCHEMA[f"{section}.{key}"].default) for key in _section_keys(section)}


def apply_overrides(data: dict, overrides: Dict[str, str]) -> dict:
    """Applies dotted-path overrides such as `params.sigma=0.2`. Values are parsed as JSON when possible."""
    result = json.loads(json.dumps(data))
    for path, raw in overrides.items():
        try:
            value = json.loads(raw)
        except ValueError:
            value = raw

        node = result
        parts = path.split('.')
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"Cannot override '{path}': '{part}' is not an object")
        node[parts[-1]] = value

    return result


class SelectionConstants:
    """Dimensional selection constants, scaled again for every parameter set."""

    def __init__(self, family: str, a6: Optional[float] = None, m_inf: Optional[float] = None):
        try:
            self.family = SelectionFamily[family.upper()]
        except (KeyError, AttributeError):
            raise ConfigError(f"Unknown selection family '{family}'")

        self.a6 = float(a6) if a6 is not None and self.family == SelectionFamily.SUPER_QUADRATIC else None
        self.m_inf = float(m_inf) if m_inf is not None and self.family == SelectionFamily.BOUNDED else None

        if self.family == SelectionFamily.BOUNDED and (self.m_inf is None or self.m_inf <= 0):
            raise ConfigError("Bounded selection requires a positive 'm_inf'")
        if self.a6 is not None and self.a6 < 0:
            raise ConfigError("'a6' must be non-negative")

    @staticmethod
    def from_dict(data: dict) -> 'SelectionConstants':
        return SelectionConstants(data['family'], data.get('a6'), data.get('m_inf'))

    def scaled(self, params: ModelParams) -> SelectionSpec:
        return SelectionSpec.from_dimensional(self.family, params.alpha, params.beta, a6=self.a6, m_inf=self.m_inf)

    def to_dict(self) -> dict:
        return {'family': self.family.name.lower(), 'a6': self.a6, 'm_inf': self.m_inf}


class Series:
    """One curve of an experiment.

    Attributes:
        label: Name of the curve in the output tables.
        mode: Reproduction mode.
        kernel: Mutation kernel, used by asexual reproduction only.
        selection: Dimensional selection constants.
    """

    def __init__(self, label: str, mode: Mode, kernel: KernelSpec, selection: SelectionConstants):
        self.label = label
        self.mode = mode
        self.kernel = kernel
        self.selection = selection

    def to_dict(self) -> dict:
        return {'label': self.label, 'mode': self.mode.name.lower(), 'kernel': self.kernel.to_dict(),
                'selection': self.selection.to_dict()}


class Sweep:
    """The single sweep axis of an experiment, given by explicit `values` or by `start`, `stop` and `num`."""

    def __init__(self, axis: str, values: Optional[list] = None, start: Optional[float] = None,
                 stop: Optional[float] = None, num: Optional[int] = None, relative_to: Optional[str] = None):
        if axis not in AXES:
            raise ConfigError(f"Unknown sweep axis '{axis}', expected one of {', '.join(AXES)}")
        if (values is None) == (start is None or stop is None or num is None):
            raise ConfigError("A sweep needs either 'values' or all of 'start', 'stop' and 'num'")
        if relative_to not in (None, 'c_tip', 'c_star'):
            raise ConfigError(f"Unknown critical speed '{relative_to}'")
        if relative_to is not None and axis != 'c':
            raise ConfigError("'relative_to' only applies to speed sweeps")

        self.axis = axis
        self.values = list(values) if values is not None else None
        self.start = start
        self.stop = stop
        self.num = num
        self.relative_to = relative_to

        if axis == 'kernel':
            for name in self.resolve():
                _kernel_from_name(name, 0.5)
        elif any(not isinstance(value, (int, float)) for value in self.resolve()):
            raise ConfigError(f"Sweep values of '{axis}' must be numbers")

    def resolve(self) -> list:
        if self.values is not None:
            return list(self.values)
        return [float(value) for value in np.linspace(self.start, self.stop, int(self.num))]

    def to_dict(self) -> dict:
        return {'axis': self.axis, 'values': self.values, 'start': self.start, 'stop': self.stop, 'num': self.num,
                'relative_to': self.relative_to}


def _kernel_from_name(name: str, shape: float) -> KernelSpec:
    try:
        return KernelSpec.from_name(name, shape)
    except (ValueError, AttributeError, AssertionError):
        raise ConfigError(f"Unknown kernel '{name}'")


def _mode_from_name(name: str) -> Mode:
    try:
        return Mode.from_name(name)
    except (ValueError, AttributeError):
        raise ConfigError(f"Unknown reproduction mode '{name}'")


class ExperimentConfig:
    """Typed experiment manifest.

    Built from the evaluated jsonnet with `from_dict`. `to_dict` emits the complete manifest,
    defaults included, and `from_dict(cfg.to_dict())` equals `cfg`.
    """

    def __init__(self, name: str, kind: str, mode: Mode, kernel: KernelSpec, selection: SelectionConstants,
                 params: ModelParams, sweep: Sweep, series: List[Series], z_init: List[float], solver: dict,
                 out: Optional[str] = None, workers: int = 1, kernel_shape: float = 0.5):
        self.name = name
        self.kind = kind
        self.mode = mode
        self.kernel = kernel
        self.selection = selection
        self.params = params
        self.sweep = sweep
        self.series = series
        self.z_init = z_init
        self.solver = solver
        self.out = out
        self.workers = workers
        self.kernel_shape = float(kernel_shape)

    @staticmethod
    def from_dict(data: dict) -> 'ExperimentConfig':
        _check_keys(data, ['name', 'kind', 'out', 'workers', 'mode', 'series'] + list(_SECTIONS), 'config')

        name = data.get('name')
        if not isinstance(name, str) or not name:
            raise ConfigError("'name' must be a non-empty string")

        kind = data.get('kind', SCHEMA['kind'].default)
        if kind not in KINDS:
            raise ConfigError(f"Unknown experiment kind '{kind}'")

        workers = data.get('workers', SCHEMA['workers'].default)
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError("'workers' must be a positive integer")

        mode = _mode_from_name(data.get('mode', SCHEMA['mode'].default))
        kernel_data = _section(data, 'kernel')
        kernel = _kernel_from_name(kernel_data['family'], kernel_data['shape'])
        selection = SelectionConstants.from_dict(_section(data, 'selection'))

        params_data = _section(data, 'params')
        try:
            params = ModelParams(params_data['beta'], params_data['mu0'], params_data['alpha'], params_data['sigma'],
                                 params_data['c'])
        except (AssertionError, TypeError):
            raise ConfigError(f"Invalid model parameters {params_data}: need beta > mu0 >= 0, alpha > 0, "
                              f"sigma > 0 and c >= 0")

        sweep_data = _section(data, 'sweep')
        if all(sweep_data[key] is None for key in ('values', 'start', 'stop', 'num')):
            sweep_data['values'] = [params.c_dim] if sweep_data['axis'] == 'c' else None
        sweep = Sweep(**sweep_data)
        z_init = [float(value) for value in _section(data, 'tipping')['z_init']]

        solver = _section(data, 'solver')
        try:
            ExperimentConfig._settings(solver)
        except (AssertionError, TypeError) as e:
            raise ConfigError(f"Invalid solver settings {solver} ({e})")

        series = []
        for index, entry in enumerate(data.get('series') or [{}]):
            _check_keys(entry, ['label', 'mode', 'kernel', 'selection'], f"series[{index}]")
            series_mode = _mode_from_name(entry['mode']) if 'mode' in entry else mode
            series_kernel = kernel
            if 'kernel' in entry:
                _check_keys(entry['kernel'], ['family', 'shape'], f"series[{index}].kernel")
                series_kernel = _kernel_from_name(entry['kernel']['family'],
                                                  entry['kernel'].get('shape', kernel_data['shape']))
            series_selection = selection
            if 'selection' in entry:
                _check_keys(entry['selection'], ['family', 'a6', 'm_inf'], f"series[{index}].selection")
                series_selection = SelectionConstants.from_dict({**selection.to_dict(), **entry['selection']})
            label = entry.get('label') or _default_label(series_mode, series_kernel, series_selection)
            series.append(Series(label, series_mode, series_kernel, series_selection))

        return ExperimentConfig(name=name, kind=kind, mode=mode, kernel=kernel, selection=selection, params=params,
                                sweep=sweep, series=series, z_init=z_init, solver=solver, out=data.get('out'),
                                workers=workers, kernel_shape=kernel_data['shape'])

    @staticmethod
    def _settings(solver: dict) -> SimulatorSettings:
        return SimulatorSettings(**{key: value for key, value in solver.items() if key != 'span'})

    @property
    def settings(self) -> SimulatorSettings:
        return self._settings(self.solver)

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'kind': self.kind,
            'out': self.out,
            'workers': self.workers,
            'mode': self.mode.name.lower(),
            'kernel': {'family': self.kernel.name, 'shape': self.kernel_shape},
            'selection': self.selection.to_dict(),
            'params': {'beta': self.params.beta, 'mu0': self.params.mu0, 'alpha': self.params.alpha,
                       'sigma': self.params.sigma, 'c': self.params.c_dim},
            'sweep': self.sweep.to_dict(),
            'series': [series.to_dict() for series in self.series],
            'tipping': {'z_init': list(self.z_init)},
            'solver': dict(self.solver)
        }

    @property
    def checksum(self) -> int:
        return zlib.crc32(json.dumps(self.to_dict(), sort_keys=True).encode('utf-8'))

    def __eq__(self, other):
        assert(isinstance(other, ExperimentConfig))
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"ExperimentConfig({self.to_dict()})"


def _default_label(mode: Mode, kernel: KernelSpec, selection: SelectionConstants) -> str:
    parts = [mode.name.lower()]
    if mode == Mode.ASEXUAL:
        parts.append(kernel.label)
    parts.append(selection.family.name.lower())
    return '/'.join(parts)


class ExperimentResult(NamedTuple):
    tables: Dict[str, pd.DataFrame]
    summary: dict
    failures: int


class _Point(NamedTuple):
    series: Series
    value: Any
    params: ModelParams
    kernel: KernelSpec
    z_init: Optional[float]


def _now() -> str:
    return datetime.datetime.now(tz=pytz.UTC).isoformat()


def _points(cfg: ExperimentConfig) -> List[SweepPoint]:
    """Expands series and sweep values into the points handed to the workers."""
    points = []
    values = cfg.sweep.resolve()

    for series_index, series in enumerate(cfg.series):
        reference = None
        if cfg.sweep.relative_to is not None:
            speeds = critical_speeds(series.mode, series.kernel, series.selection.scaled(cfg.params), cfg.params)
            reference = getattr(speeds, cfg.sweep.relative_to)
            if not math.isfinite(reference):
                raise ConfigError(f"Series '{series.label}' has no finite {cfg.sweep.relative_to}")

        for index, value in enumerate(values):
            params, kernel, z_init = cfg.params, series.kernel, None
            if cfg.sweep.axis == 'c':
                params = params.with_speed(value * reference if reference is not None else value)
            elif cfg.sweep.axis == 'alpha':
                params = params.with_alpha(value)
            elif cfg.sweep.axis == 'z_init':
                z_init = float(value)
            else:
                kernel = _kernel_from_name(value, cfg.kernel_shape)

            points.append(SweepPoint(key=(series_index, index), value=value,
                                     payload=_Point(series, value, params, kernel, z_init)))

    return points


def _describe(point: _Point) -> dict:
    mode = point.series.mode
    scaled = to_scaled(point.params, mode)
    return {
        'series': point.series.label,
        'value': point.value,
        'mode': mode.name.lower(),
        'kernel': point.kernel.label if mode == Mode.ASEXUAL else '',
        'selection': point.series.selection.family.name.lower(),
        'c_dim': point.params.c_dim,
        'alpha': point.params.alpha,
        'eps': scaled.eps,
        'c': scaled.c
    }


def _failure(stage: str, error: Exception) -> str:
    return f"{stage}:{type(error).__name__}"


class _Simulation(NamedTuple):
    predictions: Dict[Order, Any]
    report: Optional[EquilibriumReport]
    distribution: Optional[Distribution]
    failures: List[str]


def _simulate(cfg: ExperimentConfig, point: _Point) -> _Simulation:
    """Asymptotic predictions of both orders and the simulated equilibrium at one point."""
    mode = point.series.mode
    kernel = point.kernel if mode == Mode.ASEXUAL else None
    sel = point.series.selection.scaled(point.params)
    scaled = to_scaled(point.params, mode)
    failures = []

    predictions = {}
    for order in Order:
        try:
            predictions[order] = predict(mode, kernel, sel, scaled.eps, scaled.c, order)
        except PylagError as e:
            failures.append(_failure(order.name.lower(), e))

    if point.z_init is not None:
        centre = point.z_init
    elif Order.LEADING in predictions:
        centre = predictions[Order.LEADING].zstar
    else:
        centre = 0.0
    var = predictions[Order.LEADING].var if Order.LEADING in predictions else scaled.eps ** mode.gamma

    settings = cfg.settings
    width = cfg.solver['span'] * math.sqrt(var)
    bounds = settings.bounds if settings.bounds is not None else (centre - width, centre + width)

    report, distribution = None, None
    try:
        grid = Grid.around(bounds[0], bounds[1], settings.spacing(scaled.eps))
        init = Distribution.gaussian(grid, centre, var)
        report, distribution = solve_equilibrium(init, sel, mode, scaled.eps, scaled.c, kernel, settings=settings)
    except PylagError as e:
        logger.warning(f"Simulation of '{point.series.label}' at {point.value} failed ({e})")
        failures.append(_failure('simulation', e))

    return _Simulation(predictions, report, distribution, failures)


_OBSERVABLES = (('lambda', 'lam'), ('zstar', 'zstar'), ('var', 'var'))
_ORDERS = ((Order.LEADING, 'leading'), (Order.FIRST_CORRECTION, 'first'))


def _compare_task(cfg: ExperimentConfig, sweep_point: SweepPoint) -> List[dict]:
    point = sweep_point.payload
    simulation = _simulate(cfg, point)
    row = _describe(point)

    report = simulation.report
    for column, attribute in _OBSERVABLES:
        row[f"sim_{column}"] = getattr(report, attribute) if report is not None else math.nan
    row['sim_skew'] = report.skew if report is not None else math.nan
    row['sim_kurt'] = report.kurt if report is not None else math.nan
    row['sim_iterations'] = report.iterations if report is not None else 0
    row['sim_clipped'] = report.clipped if report is not None else 0

    if report is not None:
        dimensional = from_scaled(report, point.params, point.series.mode)
        row.update({'dim_lambda': dimensional.lam, 'dim_zstar': dimensional.zstar, 'dim_var': dimensional.var,
                    'rho': dimensional.rho})
    else:
        row.update({'dim_lambda': math.nan, 'dim_zstar': math.nan, 'dim_var': math.nan, 'rho': math.nan})

    for order, prefix in _ORDERS:
        prediction = simulation.predictions.get(order)
        for column, attribute in _OBSERVABLES:
            predicted = getattr(prediction, attribute) if prediction is not None else math.nan
            gap = row[f"sim_{column}"] - predicted
            row[f"{prefix}_{column}"] = predicted
            row[f"gap_{column}_{prefix}"] = gap
            row[f"relgap_{column}_{prefix}"] = gap / abs(predicted) if predicted != 0 else math.nan

    row['status'] = 'ok' if not simulation.failures else ';'.join(simulation.failures)
    return [row]


def _status_counts(rows: List[dict]) -> dict:
    counts = {}
    for row in rows:
        status = row.get('status', 'ok')
        counts[status] = counts.get(status, 0) + 1
    return counts


def _max_gaps(frame: pd.DataFrame) -> dict:
    result = {}
    for column in frame.columns:
        if column.startswith('gap_') or column.startswith('relgap_'):
            values = pd.to_numeric(frame[column], errors='coerce').abs()
            result[column] = float(values.max()) if values.notna().any() else None
    return result


def _summary(cfg: ExperimentConfig, started: str, rows: List[dict], extra: Optional[dict] = None) -> dict:
    summary = {
        'name': cfg.name,
        'kind': cfg.kind,
        'version': __version__,
        'config_crc32': cfg.checksum,
        'started': started,
        'finished': _now(),
        'points': len(rows),
        'status': _status_counts(rows)
    }
    summary.update(extra or {})
    return summary


def _count_failures(rows: List[dict], ok: Tuple[str, ...] = ('ok',)) -> int:
    return sum(1 for row in rows if row.get('status', 'ok') not in ok)


def run_compare(cfg: ExperimentConfig) -> ExperimentResult:
    """Simulated and predicted equilibria, with their gaps, at every sweep point of every series.

    Per-point failures are recorded in the `status` column and the run continues.
    """
    assert(isinstance(cfg, ExperimentConfig))

    started = _now()
    logger.info(f"Starting comparison '{cfg.name}'")
    rows = SweepRunner(cfg.workers).run(_points(cfg), lambda point: _compare_task(cfg, point))
    frame = pd.DataFrame(rows)

    summary = _summary(cfg, started, rows, {'max_gaps': _max_gaps(frame)})
    logger.info(f"Finished comparison '{cfg.name}' ({len(rows)} points)")
    return ExperimentResult({'compare': frame}, summary, _count_failures(rows))


def _tipping_task(cfg: ExperimentConfig, sweep_point: SweepPoint) -> List[dict]:
    point = sweep_point.payload
    mode = point.series.mode
    kernel = point.kernel if mode == Mode.ASEXUAL else None
    sel = point.series.selection.scaled(point.params)
    scaled = to_scaled(point.params, mode)
    speeds = critical_speeds(mode, kernel, sel, point.params)

    stable, unstable = math.nan, math.nan
    try:
        if mode == Mode.INFINITESIMAL:
            stable, unstable = infinitesimal_equilibria(sel, scaled.c)
            unstable = math.nan if unstable is None else unstable
        else:
            stable = asexual_leading(kernel, sel, scaled.eps, scaled.c).zstar0
    except TippingError:
        pass

    z_inits = [point.z_init] if point.z_init is not None else list(cfg.z_init)
    base = _describe(point)
    base.update({'c_tip_dim': speeds.c_tip, 'c_tip': speeds.c_tip / point.params.speed_scale(mode),
                 'z_stable': stable, 'z_unstable': unstable})

    basin = tipping_sweep(sel, mode, scaled.eps, [scaled.c], z_inits, kernel, cfg.settings)
    boundary = basin.boundaries.get(scaled.c)

    rows = []
    for outcome in basin.points:
        row = dict(base)
        row.update({'z_init': outcome.z_init, 'status': outcome.status.name.lower(),
                    'zstar_final': outcome.zstar if outcome.zstar is not None else math.nan,
                    'iterations': outcome.iterations,
                    'basin_boundary': boundary if boundary is not None else math.nan})
        rows.append(row)

    return rows


def run_tipping(cfg: ExperimentConfig) -> ExperimentResult:
    """Fate of the time marching, converged or diverged, for every speed and initial lag, next to the
    analytic equilibria and tipping speed."""
    assert(isinstance(cfg, ExperimentConfig))

    started = _now()
    logger.info(f"Starting tipping sweep '{cfg.name}'")
    rows = SweepRunner(cfg.workers).run(_points(cfg), lambda point: _tipping_task(cfg, point))
    frame = pd.DataFrame(rows)

    summary = _summary(cfg, started, rows)
    logger.info(f"Finished tipping sweep '{cfg.name}' ({len(rows)} runs)")
    statuses = tuple(status.name.lower() for status in Status)
    return ExperimentResult({'tipping': frame}, summary, _count_failures(rows, statuses))


def bulk_log_gap(z: np.ndarray, simulated: np.ndarray, predicted: np.ndarray, centre: float, var: float) -> float:
    """Sup-norm of the gap between log-densities over the bulk |z - centre| <= 3 sqrt(var)."""
    bulk = (np.abs(z - centre) <= 3 * math.sqrt(var)) & (simulated > 0) & (predicted > 0)
    if not np.any(bulk):
        return math.nan
    return float(np.max(np.abs(np.log(simulated[bulk]) - np.log(predicted[bulk]))))


def _profile_densities(point: _Point, z: np.ndarray, eps: float, c: float,
                       failures: List[str]) -> Tuple[np.ndarray, np.ndarray]:
    mode = point.series.mode
    sel = point.series.selection.scaled(point.params)
    f0 = np.full_like(z, np.nan)
    f1 = np.full_like(z, np.nan)

    if mode == Mode.ASEXUAL:
        try:
            profile = asexual_U0(point.kernel, sel, c, z)
        except PylagError as e:
            failures.append(_failure('U0', e))
            return f0, f1
        f0 = profile.densities(eps)[0]
        try:
            f1 = asexual_U1(point.kernel, sel, c, profile).densities(eps)[1]
        except PylagError as e:
            failures.append(_failure('U1', e))
        return f0, f1

    window = np.ones_like(z, dtype=bool)
    try:
        try:
            profile = infinitesimal_U1(sel, c, z)
        except DivergenceError:
            zstar0, _ = infinitesimal_equilibria(sel, c)
            window = np.abs(z - zstar0) <= 8 * eps
            profile = infinitesimal_U1(sel, c, z[window])
    except PylagError as e:
        failures.append(_failure('U1', e))
        return f0, f1

    f0[window], f1[window] = profile.densities(eps)
    return f0, f1


def _distribution_task(cfg: ExperimentConfig, sweep_point: SweepPoint) -> List[dict]:
    point = sweep_point.payload
    simulation = _simulate(cfg, point)
    description = _describe(point)
    failures = list(simulation.failures)

    if simulation.distribution is None:
        return [{**description, 'table': 'fit', 'status': ';'.join(failures)}]

    z = simulation.distribution.grid.z
    simulated = simulation.distribution.values
    f0, f1 = _profile_densities(point, z, description['eps'], description['c'], failures)

    report = simulation.report
    gap0 = bulk_log_gap(z, simulated, f0, report.zstar, report.var)
    gap1 = bulk_log_gap(z, simulated, f1, report.zstar, report.var)

    rows = [{'series': description['series'], 'value': description['value'], 'table': 'profile',
             'z': z_value, 'z_dim': z_value * point.params.z_scale, 'F_simulated': s, 'F0': a, 'F1': b}
            for z_value, s, a, b in zip(z, simulated, f0, f1)]
    rows.append({**description, 'table': 'fit', 'sim_zstar': report.zstar, 'sim_var': report.var,
                 'sim_skew': report.skew, 'sim_kurt': report.kurt, 'log_gap_F0': gap0, 'log_gap_F1': gap1,
                 'poor_fit_F0': bool(not gap0 <= POOR_FIT), 'poor_fit_F1': bool(not gap1 <= POOR_FIT),
                 'status': 'ok' if not failures else ';'.join(failures)})
    return rows


def run_distribution(cfg: ExperimentConfig) -> ExperimentResult:
    """Simulated equilibrium densities next to exp(-U0/eps^gamma) and exp(-U0/eps^gamma - U1).

    Columns that cannot be computed, such as U1 near tipping, are left empty and reported in the fit table.
    """
    assert(isinstance(cfg, ExperimentConfig))

    started = _now()
    logger.info(f"Starting distribution comparison '{cfg.name}'")
    rows = SweepRunner(cfg.workers).run(_points(cfg), lambda point: _distribution_task(cfg, point))

    profile = pd.DataFrame([{k: v for k, v in row.items() if k != 'table'} for row in rows
                            if row.get('table') == 'profile'])
    fit_rows = [{k: v for k, v in row.items() if k != 'table'} for row in rows if row.get('table') != 'profile']
    fit = pd.DataFrame(fit_rows)

    gaps = {column: (float(fit[column].max()) if column in fit and fit[column].notna().any() else None)
            for column in ('log_gap_F0', 'log_gap_F1')}
    summary = _summary(cfg, started, fit_rows, {'max_log_gaps': gaps})
    logger.info(f"Finished distribution comparison '{cfg.name}'")
    return ExperimentResult({'distribution': profile, 'distribution_fit': fit}, summary, _count_failures(fit_rows))


def run_simulate(cfg: ExperimentConfig) -> ExperimentResult:
    """Single equilibrium per series at the configured speed, with its final distribution."""
    assert(isinstance(cfg, ExperimentConfig))

    started = _now()
    rows, profiles = [], []
    for series in cfg.series:
        point = _Point(series, cfg.params.c_dim, cfg.params, series.kernel, None)
        simulation = _simulate(cfg, point)
        row = _describe(point)
        if simulation.report is not None:
            row.update({f"sim_{key}": value for key, value in simulation.report.to_dict().items()
                        if key not in ('mode', 'source', 'dimensional')})
            dimensional = from_scaled(simulation.report, cfg.params, series.mode)
            row.update({'dim_lambda': dimensional.lam, 'dim_zstar': dimensional.zstar, 'dim_var': dimensional.var,
                        'rho': dimensional.rho})
            frame = simulation.distribution.to_frame()
            frame.insert(0, 'series', series.label)
            profiles.append(frame)
        row['status'] = 'ok' if not simulation.failures else ';'.join(simulation.failures)
        rows.append(row)

    tables = {'equilibrium': pd.DataFrame(rows)}
    if profiles:
        tables['density'] = pd.concat(profiles, ignore_index=True)
    return ExperimentResult(tables, _summary(cfg, started, rows), _count_failures(rows))


def run_asymptotics(cfg: ExperimentConfig) -> ExperimentResult:
    """Closed-form predictions, critical speeds, selection shape and variance trend at every sweep point."""
    assert(isinstance(cfg, ExperimentConfig))

    started = _now()
    rows = []
    for sweep_point in _points(cfg):
        point = sweep_point.payload
        mode = point.series.mode
        kernel = point.kernel if mode == Mode.ASEXUAL else None
        sel = point.series.selection.scaled(point.params)
        scaled = to_scaled(point.params, mode)
        row = _describe(point)
        failures = []

        speeds = critical_speeds(mode, kernel, sel, point.params)
        row.update({'c_star': speeds.c_star, 'c_star_leading': speeds.c_star_leading, 'c_tip': speeds.c_tip})

        for order, prefix in _ORDERS:
            try:
                prediction = predict(mode, kernel, sel, scaled.eps, scaled.c, order)
                dimensional = from_scaled(prediction.to_report(), point.params, mode)
                row.update({f"{prefix}_lambda": prediction.lam, f"{prefix}_zstar": prediction.zstar,
                            f"{prefix}_var": prediction.var, f"{prefix}_dim_lambda": dimensional.lam,
                            f"{prefix}_dim_zstar": dimensional.zstar, f"{prefix}_dim_var": dimensional.var,
                            f"{prefix}_rho": dimensional.rho})
                if order == Order.LEADING and prediction.zstar0 != 0:
                    shape = classify_shape(sel, prediction.zstar0)
                    row['shape'] = (shape.asexual if mode == Mode.ASEXUAL else shape.infinitesimal).name.lower()
            except PylagError as e:
                failures.append(_failure(prefix, e))

        if mode == Mode.ASEXUAL and scaled.c > C_SEAM:
            try:
                row['variance_trend'] = variance_trend(kernel, sel, scaled.c).name.lower()
            except PylagError as e:
                failures.append(_failure('variance_trend', e))

        row['status'] = 'ok' if not failures else ';'.join(failures)
        rows.append(row)

    return ExperimentResult({'asymptotics': pd.DataFrame(rows)}, _summary(cfg, started, rows), 0)


def tabulate_kernels(shape: float = 0.5, speeds: Optional[List[float]] = None, points: int = 41) -> ExperimentResult:
    """Hamiltonians and Lagrangians of the five kernels, with the kurtosis of each."""
    started = _now()
    speeds = [0.05 * k for k in range(11)] if speeds is None else speeds

    hamiltonians, lagrangians = [], []
    for kernel in KernelSpec.all(shape):
        reach = min(2.0, 0.95 * kernel.p_max)
        for p in np.linspace(-reach, reach, points):
            d1, d2 = hamiltonian_derivs(kernel, p)
            hamiltonians.append({'kernel': kernel.label, 'p': p, 'H': hamiltonian(kernel, p), 'dH': d1, 'd2H': d2})
        for c in speeds:
            law = lagrangian(kernel, c, LagrangianOrder.WITH_DERIVS)
            lagrangians.append({'kernel': kernel.label, 'kurtosis': excess_kurtosis(kernel), 'c': c,
                                'L': law.value, 'dL': law.slope, 'd2L': law.curvature})

    summary = {'kind': 'kernels', 'version': __version__, 'started': started, 'finished': _now()}
    return ExperimentResult({'hamiltonian': pd.DataFrame(hamiltonians), 'lagrangian': pd.DataFrame(lagrangians)},
                            summary, 0)


RUNNERS = {
    'compare': run_compare,
    'tipping': run_tipping,
    'distribution': run_distribution
}


def output_dir(cfg: ExperimentConfig, out: Optional[str] = None) -> str:
    return out or cfg.out or os.path.join('out', cfg.name)


def write_outputs(result: ExperimentResult, directory: str, cfg: Optional[ExperimentConfig] = None) -> List[str]:
    """Writes the manifest, schema, CSV tables and summary of one experiment into `directory`.

    CSV files are comma separated with a header row and 17 significant digits.

    Returns:
        Paths of the files written.
    """
    assert(isinstance(result, ExperimentResult))

    os.makedirs(directory, exist_ok=True)
    written = []

    def dump(name: str, payload: Any):
        path = os.path.join(directory, name)
        with open(path, 'w') as file:
            json.dump(payload, file, indent=4, default=str)
        written.append(path)

    if cfg is not None:
        dump('manifest.json', cfg.to_dict())
    dump('schema.json', config_schema())

    for name, frame in result.tables.items():
        path = os.path.join(directory, f"{name}.csv")
        frame.to_csv(path, index=False, float_format='%.17g')
        written.append(path)

    dump('summary.json', result.summary)

    for path in written:
        logger.info(f"Wrote '{path}'")
    return written
