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

import logging
import math
from enum import Enum, auto
from pprint import pformat
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import signal, stats
from scipy.integrate import trapezoid

from pylag import CFLError, NegativeDensityError, NoConvergenceError, ResolutionError
from pylag.kernels import KernelFamily, KernelSpec, kernel_distribution
from pylag.scaling import Mode
from pylag.selection import SelectionSpec, m_derivs

# Finest resolution of the reproduction kernel, in grid steps per eps.
MIN_RESOLUTION = 4

# Relative density at the boundary above which the domain grows.
EXPANSION_THRESHOLD = 1e-10

# Tail mass left out when discretising reproduction kernels.
KERNEL_TAIL = 1e-16

# Share of the domain width next to either end where a stationary mode counts as pinned to the boundary.
PINNED_FRACTION = 0.05

TRANSPORT_CFL = 0.9
MORTALITY_CFL = 0.5


class Grid:
    """Uniform grid of scaled traits whose nodes are the integer multiples `k dz` of its spacing,
    so that the moving optimum z = 0 is always a node.

    Attributes:
        first: Index k of the leftmost node.
        n: Number of nodes.
        dz: Spacing.
    """

    def __init__(self, first: int, n: int, dz: float):
        assert(isinstance(first, int))
        assert(isinstance(n, int))
        assert(n > 2)
        assert(dz > 0)

        self.first = first
        self.n = n
        self.dz = float(dz)

    @staticmethod
    def around(lo: float, hi: float, dz: float) -> 'Grid':
        """Smallest grid with spacing `dz` covering [lo, hi]."""
        assert(lo < hi)

        first = int(math.floor(lo / dz + 1e-9))
        last = int(math.ceil(hi / dz - 1e-9))
        return Grid(first, last - first + 1, dz)

    @property
    def z(self) -> np.ndarray:
        return (self.first + np.arange(self.n)) * self.dz

    @property
    def z_min(self) -> float:
        return self.first * self.dz

    @property
    def z_max(self) -> float:
        return (self.first + self.n - 1) * self.dz

    @property
    def center(self) -> float:
        return (self.z_min + self.z_max) / 2

    @property
    def half_width(self) -> float:
        return (self.z_max - self.z_min) / 2

    def expand(self, side: int, factor: float = 0.5) -> Tuple['Grid', int, int]:
        """Grows the grid by `factor` of its width on the left (`side` < 0), right (`side` > 0) or both (0).

        Returns:
            The new grid and the number of nodes added on the left and on the right.
        """
        extra = max(int(math.ceil(factor * self.n)), 1)
        left = extra if side <= 0 else 0
        right = extra if side >= 0 else 0
        return Grid(self.first - left, self.n + left + right, self.dz), left, right

    def __eq__(self, other):
        assert(isinstance(other, Grid))
        return self.first == other.first and self.n == other.n and self.dz == other.dz

    def __repr__(self):
        return f"Grid(z_min={self.z_min}, z_max={self.z_max}, n={self.n}, dz={self.dz})"


class Moments(NamedTuple):
    mass: float
    mean: float
    var: float
    skew: float
    kurt: float


class Distribution:
    """Nonnegative phenotype density sampled on a grid.

    Attributes:
        grid: The grid.
        values: Density at every node.
    """

    def __init__(self, grid: Grid, values: np.ndarray):
        assert(isinstance(grid, Grid))
        assert(isinstance(values, np.ndarray))
        assert(values.shape == (grid.n,))

        self.grid = grid
        self.values = values
        self._moments = None

    @staticmethod
    def gaussian(grid: Grid, mean: float, var: float) -> 'Distribution':
        values = stats.norm(loc=mean, scale=math.sqrt(var)).pdf(grid.z)
        return Distribution(grid, values).normalized()

    @staticmethod
    def delta(grid: Grid, z0: float) -> 'Distribution':
        values = np.zeros(grid.n)
        values[int(round(z0 / grid.dz)) - grid.first] = 1 / grid.dz
        return Distribution(grid, values)

    @property
    def mass(self) -> float:
        return float(trapezoid(self.values, dx=self.grid.dz))

    def normalized(self) -> 'Distribution':
        return Distribution(self.grid, self.values / self.mass)

    def moments(self) -> Moments:
        if self._moments is None:
            self._moments = moments(self)
        return self._moments

    def padded(self, grid: Grid, left: int, right: int) -> 'Distribution':
        return Distribution(grid, np.pad(self.values, (left, right)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'z': self.grid.z, 'density': self.values})

    def __repr__(self):
        return f"Distribution(grid={self.grid}, mass={self.mass})"


class EquilibriumReport:
    """Travelling equilibrium from a simulation or from an asymptotic prediction.

    Attributes:
        mode: Reproduction mode.
        lam: Mean fitness.
        zstar: Lag, the mean of the equilibrium distribution.
        var: Standing variance.
        skew: Skewness, if known.
        kurt: Excess kurtosis, if known.
        rho: Population size, only known in dimensional reports.
        converged: Whether the stopping rule was met.
        iterations: Number of time steps.
        residual: Last sup-norm of the time derivative.
        clipped: Number of clipped negative densities.
        source: `simulation`, `leading` or `first_correction`.
        dimensional: Whether the values are in the original variables.
    """

    def __init__(self, mode: Mode, lam: float, zstar: float, var: float, skew: Optional[float] = None,
                 kurt: Optional[float] = None, rho: Optional[float] = None, converged: bool = True,
                 iterations: int = 0, residual: float = 0.0, clipped: int = 0, source: str = 'simulation',
                 dimensional: bool = False):
        assert(isinstance(mode, Mode))

        self.mode = mode
        self.lam = lam
        self.zstar = zstar
        self.var = var
        self.skew = skew
        self.kurt = kurt
        self.rho = rho
        self.converged = converged
        self.iterations = iterations
        self.residual = residual
        self.clipped = clipped
        self.source = source
        self.dimensional = dimensional

    def to_dict(self) -> dict:
        return {
            'mode': self.mode.name.lower(),
            'source': self.source,
            'dimensional': self.dimensional,
            'lambda': self.lam,
            'zstar': self.zstar,
            'var': self.var,
            'skew': self.skew,
            'kurt': self.kurt,
            'rho': self.rho,
            'converged': self.converged,
            'iterations': self.iterations,
            'residual': self.residual,
            'clipped': self.clipped
        }

    def __repr__(self):
        return f"EquilibriumReport({pformat(vars(self))})"


class SimulatorSettings:
    """Numerical settings of the time marching.

    Attributes:
        dz: Grid spacing, eps/10 when `None`.
        bounds: Initial domain (z_min, z_max), chosen by the caller when `None`.
        dt: Time step, `stable_dt` when `None`.
        stop_tol: Threshold on the sup-norm of the time derivative.
        max_iters: Maximal number of time steps.
        method: `fft` or `direct` convolutions.
        expand: Whether the domain grows when the density reaches its boundary.
        window: Steps per window of the divergence detector.
        negative_tol: Largest mass that may be removed by clipping in one step.
        max_nodes: Largest grid size reachable by expansion.
        log_every: Steps between two debug log lines.
    """

    def __init__(self, dz: Optional[float] = None, bounds: Optional[Tuple[float, float]] = None,
                 dt: Optional[float] = None, stop_tol: float = 1e-9, max_iters: int = 500000, method: str = 'fft',
                 expand: bool = True, window: int = 10000, negative_tol: float = 1e-6, max_nodes: int = 20000,
                 log_every: int = 10000):
        assert(method in ('fft', 'direct'))
        assert(stop_tol > 0)
        assert(max_iters > 0)

        self.dz = dz
        self.bounds = None if bounds is None else (float(bounds[0]), float(bounds[1]))
        self.dt = dt
        self.stop_tol = stop_tol
        self.max_iters = max_iters
        self.method = method
        self.expand = expand
        self.window = window
        self.negative_tol = negative_tol
        self.max_nodes = max_nodes
        self.log_every = log_every

    def spacing(self, eps: float) -> float:
        return eps / 10 if self.dz is None else self.dz

    def to_dict(self) -> dict:
        result = dict(vars(self))
        result['bounds'] = None if self.bounds is None else list(self.bounds)
        return result

    def __repr__(self):
        return f"SimulatorSettings({pformat(vars(self))})"


def _check_resolution(grid: Grid, eps: float):
    if eps / grid.dz < MIN_RESOLUTION:
        raise ResolutionError(f"Grid step {grid.dz} does not resolve the kernel width {eps} "
                              f"(need eps/dz >= {MIN_RESOLUTION})")


def _cell_weights(distribution, scale: float, dz: float, limit: int) -> np.ndarray:
    # cell averages of the scaled density over [(k - 1/2) dz, (k + 1/2) dz], symmetrised and summing to 1
    reach = distribution.isf(KERNEL_TAIL) * scale
    half = min(int(math.ceil(reach / dz)) + 1, limit)
    edges = (np.arange(-half, half + 2) - 0.5) * dz / scale
    weights = np.diff(distribution.cdf(edges))
    weights = 0.5 * (weights + weights[::-1])
    return weights / weights.sum()


def _convolve(values: np.ndarray, weights: np.ndarray, method: str) -> np.ndarray:
    return signal.convolve(values, weights, mode='same', method=method)


def _laplacian(values: np.ndarray) -> np.ndarray:
    padded = np.pad(values, 1)
    return padded[2:] - 2 * values + padded[:-2]


class _Reproduction:
    """Reproduction operator B discretised on one grid."""

    def __init__(self, grid: Grid, mode: Mode, eps: float, kernel: Optional[KernelSpec], method: str):
        _check_resolution(grid, eps)

        self.mode = mode
        self.dz = grid.dz
        self.method = method
        self.diffusion = None
        self.weights = None

        if mode == Mode.ASEXUAL:
            assert(isinstance(kernel, KernelSpec))
            if kernel.family == KernelFamily.DIFFUSION:
                self.diffusion = eps ** 2 / (2 * grid.dz ** 2)
            else:
                self.weights = _cell_weights(kernel_distribution(kernel), eps, grid.dz, grid.n - 1)
        else:
            self.weights = _cell_weights(stats.norm(), eps / math.sqrt(2), grid.dz, grid.n - 1)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        if self.mode == Mode.ASEXUAL:
            if self.diffusion is not None:
                return values + self.diffusion * _laplacian(values)
            return _convolve(values, self.weights, self.method)

        mass = values.sum() * self.dz
        # F * F at 2 z_min + k dz; even k falls on the node z_min + (k/2) dz
        pairs = signal.convolve(values, values, mode='full', method=self.method)[::2]
        pairs = np.clip(pairs, 0.0, None)
        midparents = pairs / (pairs.sum() * self.dz)
        return mass * _convolve(midparents, self.weights, self.method)


def reproduce_asexual(distribution: Distribution, kernel: KernelSpec, eps: float, method: str = 'fft') -> Distribution:
    """Asexual reproduction operator (1/eps) int K((z - z')/eps) F(z') dz'.

    Density kernels are cell-averaged on the grid and normalised to unit discrete mass.
    The diffusion limit applies F + (eps^2/2) F'' with a three-point Laplacian. Both truncate
    at the domain boundary with zero padding.

    Raises:
        ResolutionError: If eps/dz < 4.
    """
    assert(isinstance(distribution, Distribution))
    assert(isinstance(kernel, KernelSpec))

    operator = _Reproduction(distribution.grid, Mode.ASEXUAL, eps, kernel, method)
    return Distribution(distribution.grid, operator(distribution.values))


def reproduce_infinitesimal(distribution: Distribution, eps: float, method: str = 'fft') -> Distribution:
    """Infinitesimal reproduction operator.

    The mid-parent density s(u) = 2 (F * F)(2u)/mass^2 is convolved with the segregation Gaussian of
    variance eps^2/2, and the result carries the mass of F.

    Raises:
        ResolutionError: If eps/dz < 4.
    """
    assert(isinstance(distribution, Distribution))
    assert(distribution.mass > 0)

    operator = _Reproduction(distribution.grid, Mode.INFINITESIMAL, eps, None, method)
    return Distribution(distribution.grid, operator(distribution.values))


def stable_dt(grid: Grid, sel: SelectionSpec, mode: Mode, eps: float, c: float,
              kernel: Optional[KernelSpec] = None) -> float:
    """Default time step, keeping every diagonal coefficient of the explicit update non-negative and
    both stability guards satisfied."""
    assert(isinstance(grid, Grid))
    assert(isinstance(mode, Mode))

    transport = eps ** mode.gamma * c / grid.dz
    mortality = float(np.max(m_derivs(sel, grid.z, 0)[0]))
    spread = 0.0
    if mode == Mode.ASEXUAL and kernel is not None and kernel.family == KernelFamily.DIFFUSION:
        spread = eps ** 2 / grid.dz ** 2

    dt = 0.9 / (1 + transport + mortality + spread)
    if transport > 0:
        dt = min(dt, TRANSPORT_CFL / transport)
    if mortality > 0:
        dt = min(dt, MORTALITY_CFL / mortality)
    return dt


class _Stepper:
    """Explicit Euler step of the scaled frequency equation on one grid.

        dp/dt = -(1 - mbar) p + eps^gamma c dp/dz - m p + B(p)

    The transport term uses the forward difference, upwind for a positive coefficient, with zero
    inflow past the last node.
    """

    logger = logging.getLogger()

    def __init__(self, grid: Grid, sel: SelectionSpec, mode: Mode, eps: float, c: float, dt: float,
                 kernel: Optional[KernelSpec], method: str, negative_tol: float):
        self.grid = grid
        self.dt = dt
        self.transport = eps ** mode.gamma * c
        self.mortality = m_derivs(sel, grid.z, 0)[0]
        self.negative_tol = negative_tol
        self.reproduction = _Reproduction(grid, mode, eps, kernel, method)

        if dt * self.transport / grid.dz > TRANSPORT_CFL:
            raise CFLError(f"Transport CFL number {dt * self.transport / grid.dz} exceeds {TRANSPORT_CFL}")
        if dt * np.max(self.mortality) > MORTALITY_CFL:
            raise CFLError(f"dt max m = {dt * np.max(self.mortality)} exceeds {MORTALITY_CFL}")

    def mean_mortality(self, values: np.ndarray) -> float:
        return float(trapezoid(self.mortality * values, dx=self.grid.dz))

    def advance(self, values: np.ndarray) -> Tuple[np.ndarray, float, int]:
        """Returns the new values, the mean mortality used and the number of clipped nodes."""
        mbar = self.mean_mortality(values)
        upwind = (np.append(values[1:], 0.0) - values) / self.grid.dz
        rate = -(1 - mbar) * values + self.transport * upwind - self.mortality * values + self.reproduction(values)
        result = values + self.dt * rate

        clipped = 0
        negative = result < 0
        if np.any(negative):
            removed = -result[negative].sum() * self.grid.dz
            if removed > self.negative_tol:
                raise NegativeDensityError(f"Clipping would remove a mass of {removed}")
            clipped = int(np.count_nonzero(result < -1e-14 * result.max()))
            if clipped > 0:
                self.logger.debug(f"Clipped {clipped} negative densities (mass {removed})")
            result[negative] = 0.0

        return result / trapezoid(result, dx=self.grid.dz), mbar, clipped


def step(distribution: Distribution, sel: SelectionSpec, mode: Mode, eps: float, c: float, dt: float,
         kernel: Optional[KernelSpec] = None, method: str = 'fft', negative_tol: float = 1e-6) -> Distribution:
    """One explicit Euler step of the frequency equation, renormalised to unit mass.

    Raises:
        CFLError: If dt eps^gamma c/dz > 0.9 or dt max m > 0.5.
        NegativeDensityError: If clipping negative values would remove more than `negative_tol`.
    """
    assert(isinstance(distribution, Distribution))
    assert(isinstance(sel, SelectionSpec))
    assert(isinstance(mode, Mode))

    stepper = _Stepper(distribution.grid, sel, mode, eps, c, dt, kernel, method, negative_tol)
    values, _, _ = stepper.advance(distribution.values)
    return Distribution(distribution.grid, values)


def moments(distribution: Distribution) -> Moments:
    """Mass and central moments by the trapezoid rule; skewness and excess kurtosis are `nan` for a zero variance."""
    assert(isinstance(distribution, Distribution))

    z, values, dz = distribution.grid.z, distribution.values, distribution.grid.dz
    mass = float(trapezoid(values, dx=dz))
    mean = float(trapezoid(z * values, dx=dz)) / mass
    centered = z - mean
    mu2 = float(trapezoid(centered ** 2 * values, dx=dz)) / mass
    mu3 = float(trapezoid(centered ** 3 * values, dx=dz)) / mass
    mu4 = float(trapezoid(centered ** 4 * values, dx=dz)) / mass

    if mu2 <= 0:
        return Moments(mass, mean, 0.0, math.nan, math.nan)

    return Moments(mass, mean, mu2, mu3 / mu2 ** 1.5, mu4 / mu2 ** 2 - 3)


class Status(Enum):
    CONVERGED = auto()
    DIVERGED = auto()
    UNDECIDED = auto()


class DivergenceMonitor:
    """Declares divergence when the mean leaves 90% of the domain half-width, or when it moves away
    from the optimum without decelerating over three consecutive windows."""

    def __init__(self, window: int):
        self.window = window
        self.lags = []

    def diverged(self, grid: Grid, mean: float, iteration: int) -> bool:
        if abs(mean - grid.center) > 0.9 * grid.half_width:
            return True

        if iteration % self.window == 0:
            self.lags.append(abs(mean))
            if len(self.lags) >= 4:
                drifts = np.diff(self.lags[-4:])
                return bool(np.all(drifts > 0) and np.all(np.diff(drifts) >= 0))

        return False


class _Outcome(NamedTuple):
    status: Status
    report: EquilibriumReport
    distribution: Distribution


def _march(init: Distribution, sel: SelectionSpec, mode: Mode, eps: float, c: float, kernel: Optional[KernelSpec],
           settings: SimulatorSettings, monitor: Optional[DivergenceMonitor]) -> _Outcome:
    logger = logging.getLogger()

    grid = init.grid
    dt = settings.dt if settings.dt is not None else stable_dt(grid, sel, mode, eps, c, kernel)
    stepper = _Stepper(grid, sel, mode, eps, c, dt, kernel, settings.method, settings.negative_tol)
    values = init.values / trapezoid(init.values, dx=grid.dz)

    clipped = 0
    residual = math.inf
    mbar = stepper.mean_mortality(values)
    status = Status.UNDECIDED
    expand = settings.expand
    iteration = 0

    while iteration < settings.max_iters:
        iteration += 1
        new_values, mbar, count = stepper.advance(values)
        clipped += count
        residual = float(np.max(np.abs(new_values - values))) / dt
        values = new_values

        if residual < settings.stop_tol:
            status = Status.CONVERGED
            break

        if monitor is not None:
            mean = float(trapezoid(grid.z * values, dx=grid.dz))
            if monitor.diverged(grid, mean, iteration):
                logger.debug(f"Mean {mean} diverged after {iteration} steps at c={c}")
                status = Status.DIVERGED
                break

        if expand:
            edge = EXPANSION_THRESHOLD * values.max()
            side = None
            if values[0] > edge and values[-1] > edge:
                side = 0
            elif values[0] > edge:
                side = -1
            elif values[-1] > edge:
                side = 1

            if side is not None:
                if grid.n >= settings.max_nodes:
                    logger.warning(f"Grid reached {grid.n} nodes, density is truncated at the boundary")
                    expand = False
                else:
                    grid, left, right = grid.expand(side)
                    values = np.pad(values, (left, right))
                    if settings.dt is None:
                        dt = stable_dt(grid, sel, mode, eps, c, kernel)
                    stepper = _Stepper(grid, sel, mode, eps, c, dt, kernel, settings.method, settings.negative_tol)
                    logger.debug(f"Expanded the domain to [{grid.z_min}, {grid.z_max}]")

        if iteration % settings.log_every == 0:
            logger.debug(f"Step {iteration}: residual {residual:.3e}, mean mortality {mbar:.12f}")

    distribution = Distribution(grid, values)
    summary = distribution.moments()
    report = EquilibriumReport(mode=mode, lam=1 - stepper.mean_mortality(values), zstar=summary.mean, var=summary.var,
                               skew=summary.skew, kurt=summary.kurt, converged=status == Status.CONVERGED,
                               iterations=iteration, residual=residual, clipped=clipped)

    return _Outcome(status, report, distribution)


def solve_equilibrium(init: Distribution, sel: SelectionSpec, mode: Mode, eps: float, c: float,
                      kernel: Optional[KernelSpec] = None, stop_tol: Optional[float] = None,
                      max_iters: Optional[int] = None,
                      settings: Optional[SimulatorSettings] = None) -> Tuple[EquilibriumReport, Distribution]:
    """Marches the frequency equation from `init` to its travelling equilibrium.

    Iterates `step` until the sup-norm of (p_{k+1} - p_k)/dt drops below `stop_tol`. The domain grows
    whenever the density at one of its ends exceeds 1e-10 of its maximum, unless disabled in `settings`.

    Returns:
        The report in scaled units, with lambda = 1 - mean mortality, and the final distribution.

    Raises:
        NoConvergenceError: If `max_iters` steps are not enough.
    """
    assert(isinstance(init, Distribution))
    assert(isinstance(sel, SelectionSpec))
    assert(isinstance(mode, Mode))
    assert(c >= 0)

    settings = SimulatorSettings() if settings is None else settings
    settings = SimulatorSettings(**{**vars(settings),
                                    'stop_tol': stop_tol if stop_tol is not None else settings.stop_tol,
                                    'max_iters': max_iters if max_iters is not None else settings.max_iters})

    outcome = _march(init, sel, mode, eps, c, kernel, settings, None)
    if outcome.status != Status.CONVERGED:
        raise NoConvergenceError(f"No equilibrium after {outcome.report.iterations} steps at c={c} "
                                 f"(residual {outcome.report.residual:.3e})",
                                 residual=outcome.report.residual, iterations=outcome.report.iterations)

    logging.getLogger().debug(f"Converged after {outcome.report.iterations} steps at c={c}")
    return outcome.report, outcome.distribution


class TippingPoint(NamedTuple):
    c: float
    z_init: float
    status: Status
    zstar: Optional[float]
    iterations: int


class BasinMap(NamedTuple):
    """Outcomes of `tipping_sweep`, and per speed the boundary between the initial lags that converge and
    those that diverge, or `None` when all of them share one fate."""
    points: List[TippingPoint]
    boundaries: dict


def tipping_sweep(sel: SelectionSpec, mode: Mode, eps: float, c_list: List[float], zinit_list: List[float],
                  kernel: Optional[KernelSpec] = None, settings: Optional[SimulatorSettings] = None) -> BasinMap:
    """Runs the time marching from Gaussian(z_init, eps^gamma) for every speed and initial lag, on a fixed
    domain, and classifies each run as converged or diverged. A stationary density whose mode sits against
    the edge of the domain counts as diverged.

    The domain is `settings.bounds` or, when unset, [2 min(z_init) - 1, 1].
    """
    assert(isinstance(sel, SelectionSpec))
    assert(isinstance(mode, Mode))

    settings = SimulatorSettings() if settings is None else settings
    settings = SimulatorSettings(**{**vars(settings), 'expand': False})
    lo, hi = settings.bounds if settings.bounds is not None else (2 * min(min(zinit_list), 0.0) - 1, 1.0)
    grid = Grid.around(lo, hi, settings.spacing(eps))

    points = []
    for c in c_list:
        for z_init in zinit_list:
            init = Distribution.gaussian(grid, z_init, eps ** mode.gamma)
            outcome = _march(init, sel, mode, eps, c, kernel, settings, DivergenceMonitor(settings.window))
            status = outcome.status
            if status == Status.CONVERGED and _pinned(outcome.distribution):
                logging.getLogger().debug(f"Stationary density at c={c} from z_init={z_init} is pinned to the boundary")
                status = Status.DIVERGED
            zstar = outcome.report.zstar if status == Status.CONVERGED else None
            points.append(TippingPoint(c, z_init, status, zstar, outcome.report.iterations))

    return BasinMap(points, _basin_boundaries(points))


def _pinned(distribution: Distribution) -> bool:
    # a diverging lag on a fixed domain piles its mass against the absorbing end
    margin = max(int(PINNED_FRACTION * distribution.grid.n), 1)
    mode_index = int(np.argmax(distribution.values))
    return mode_index < margin or mode_index >= distribution.grid.n - margin


def _basin_boundaries(points: List[TippingPoint]) -> dict:
    boundaries = {}
    for c in sorted(set(point.c for point in points)):
        converged = [point.z_init for point in points if point.c == c and point.status == Status.CONVERGED]
        diverged = [point.z_init for point in points if point.c == c and point.status == Status.DIVERGED]
        inside = [z for z in diverged if converged and z < min(converged)]
        if converged and inside:
            boundaries[c] = (min(converged) + max(inside)) / 2
        else:
            boundaries[c] = None
    return boundaries
