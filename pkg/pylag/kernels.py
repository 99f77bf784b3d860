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

import math
from enum import Enum, auto
from pprint import pformat
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import stats
from scipy.special import poch

from pylag import BracketError, DomainError
from pylag.numeric import solve_increasing

SQRT3 = math.sqrt(3.0)

# Below this |sqrt(3) p| the uniform Hamiltonian and its derivatives come from the Taylor series.
_UNIFORM_SERIES = 1.0


class KernelFamily(Enum):
    DIFFUSION = auto()
    UNIFORM = auto()
    GAUSSIAN = auto()
    EXPONENTIAL = auto()
    GAMMA = auto()


class KernelSpec:
    """Mutation kernel of unit variance, in adimensional units.

    Four families are probability densities: uniform on (-sqrt(3), sqrt(3)), standard Gaussian,
    exponential (1/sqrt(2)) exp(-sqrt(2)|y|) and the symmetric Gamma density proportional to
    |y|^(shape - 1) exp(-|y|/theta) with theta = 1/sqrt(shape (shape + 1)). `DIFFUSION` is the
    diffusion limit of all of them: an operator, not a density.

    Attributes:
        family: Kernel family.
        shape: Shape parameter of the Gamma family, ignored by the other families.
    """

    def __init__(self, family: KernelFamily, shape: float = 0.5):
        assert(isinstance(family, KernelFamily))
        assert(isinstance(shape, float) or isinstance(shape, int))
        assert(shape > 0)

        self.family = family
        self.shape = float(shape) if family == KernelFamily.GAMMA else None

    @staticmethod
    def diffusion() -> 'KernelSpec':
        return KernelSpec(KernelFamily.DIFFUSION)

    @staticmethod
    def uniform() -> 'KernelSpec':
        return KernelSpec(KernelFamily.UNIFORM)

    @staticmethod
    def gaussian() -> 'KernelSpec':
        return KernelSpec(KernelFamily.GAUSSIAN)

    @staticmethod
    def exponential() -> 'KernelSpec':
        return KernelSpec(KernelFamily.EXPONENTIAL)

    @staticmethod
    def gamma(shape: float = 0.5) -> 'KernelSpec':
        return KernelSpec(KernelFamily.GAMMA, shape)

    @staticmethod
    def from_name(name: str, shape: Optional[float] = None) -> 'KernelSpec':
        assert(isinstance(name, str))

        try:
            family = KernelFamily[name.upper()]
        except KeyError:
            raise ValueError(f"Unknown kernel family '{name}'")

        return KernelSpec(family, 0.5 if shape is None else shape)

    @staticmethod
    def all(shape: float = 0.5) -> list:
        """The five kernels, in order of increasing kurtosis."""
        return [KernelSpec.diffusion(), KernelSpec.uniform(), KernelSpec.gaussian(),
                KernelSpec.exponential(), KernelSpec.gamma(shape)]

    @property
    def name(self) -> str:
        return self.family.name.lower()

    @property
    def label(self) -> str:
        return f"gamma({self.shape:g})" if self.family == KernelFamily.GAMMA else self.name

    @property
    def is_density(self) -> bool:
        return self.family != KernelFamily.DIFFUSION

    @property
    def theta(self) -> Optional[float]:
        """Scale of the exponential tails, the reciprocal of `p_max`."""
        if self.family == KernelFamily.EXPONENTIAL:
            return 1 / math.sqrt(2.0)
        elif self.family == KernelFamily.GAMMA:
            return 1 / math.sqrt(self.shape * (self.shape + 1))
        else:
            return None

    @property
    def p_max(self) -> float:
        """Half-width of the open interval on which the Hamiltonian is finite."""
        theta = self.theta
        return math.inf if theta is None else 1 / theta

    def to_dict(self) -> dict:
        return {'family': self.name, 'shape': self.shape} if self.shape is not None else {'family': self.name}

    def __eq__(self, other):
        assert(isinstance(other, KernelSpec))
        return self.family == other.family and self.shape == other.shape

    def __hash__(self):
        return hash((self.family, self.shape))

    def __repr__(self):
        return f"KernelSpec({pformat(vars(self))})"


class Lagrangian(NamedTuple):
    value: float
    slope: float
    curvature: Optional[float]


class LagrangianOrder(Enum):
    VALUE = auto()
    WITH_DERIVS = auto()


class TabulatedHamiltonian(NamedTuple):
    p: np.ndarray
    h: np.ndarray


def _check_domain(kernel: KernelSpec, p):
    if np.any(np.abs(p) >= kernel.p_max):
        raise DomainError(f"Hamiltonian of the {kernel.label} kernel is only finite for |p| < {kernel.p_max}")


def _gamma_derivative(kernel: KernelSpec, p, order: int):
    a = kernel.shape if kernel.family == KernelFamily.GAMMA else 1.0
    theta = kernel.theta
    coefficient = poch(a, order) * theta ** order
    return 0.5 * coefficient * ((1 - theta * p) ** (-a - order) + (-1) ** order * (1 + theta * p) ** (-a - order))


def _sinhc_series(x, order: int, terms: int = 15):
    # k-th derivative of sinh(x)/x - 1 = sum_{n>0} x^(2n)/(2n+1)!, term by term
    total = np.zeros_like(x)
    for n in range(1, terms):
        power = 2 * n - order
        if power < 0:
            continue
        total = total + math.factorial(2 * n) / math.factorial(power) / math.factorial(2 * n + 1) * x ** power
    return total


def _uniform_derivatives(p) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    # f(x) = sinh(x)/x and its first three derivatives, with H^(k)(p) = sqrt(3)^k f^(k)(sqrt(3) p)
    x = SQRT3 * np.asarray(p, dtype=float)
    small = np.abs(x) < _UNIFORM_SERIES
    xs = np.where(small, 1.0, x)
    sh, ch = np.sinh(xs), np.cosh(xs)

    f0 = np.where(small, _sinhc_series(x, 0), sh / xs - 1)
    f1 = np.where(small, _sinhc_series(x, 1), (xs * ch - sh) / xs ** 2)
    f2 = np.where(small, _sinhc_series(x, 2), ((xs ** 2 + 2) * sh - 2 * xs * ch) / xs ** 3)
    f3 = np.where(small, _sinhc_series(x, 3), ((xs ** 3 + 6 * xs) * ch - (3 * xs ** 2 + 6) * sh) / xs ** 4)

    return f0, SQRT3 * f1, 3 * f2, 3 * SQRT3 * f3


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def hamiltonian(kernel: KernelSpec, p: Union[float, np.ndarray]):
    """Two-sided Laplace transform of the kernel minus one, H(p) = int K(y) exp(py) dy - 1.

    Args:
        kernel: Mutation kernel.
        p: Scalar or array, with |p| < `kernel.p_max`.

    Returns:
        H(p), with the shape of `p`.
    """
    assert(isinstance(kernel, KernelSpec))
    p = np.asarray(p, dtype=float)
    _check_domain(kernel, p)

    if kernel.family == KernelFamily.DIFFUSION:
        h = p ** 2 / 2
    elif kernel.family == KernelFamily.UNIFORM:
        h = _uniform_derivatives(p)[0]
    elif kernel.family == KernelFamily.GAUSSIAN:
        h = np.expm1(p ** 2 / 2)
    elif kernel.family == KernelFamily.EXPONENTIAL:
        h = (p ** 2 / 2) / (1 - p ** 2 / 2)
    else:
        h = _gamma_derivative(kernel, p, 0) - 1

    return _scalar(h)


def hamiltonian_derivs(kernel: KernelSpec, p: Union[float, np.ndarray]) -> tuple:
    """Returns (H'(p), H''(p))."""
    assert(isinstance(kernel, KernelSpec))
    p = np.asarray(p, dtype=float)
    _check_domain(kernel, p)

    if kernel.family == KernelFamily.DIFFUSION:
        d1, d2 = p, np.ones_like(p)
    elif kernel.family == KernelFamily.UNIFORM:
        _, d1, d2, _ = _uniform_derivatives(p)
    elif kernel.family == KernelFamily.GAUSSIAN:
        e = np.exp(p ** 2 / 2)
        d1, d2 = p * e, (1 + p ** 2) * e
    elif kernel.family == KernelFamily.EXPONENTIAL:
        u = 1 - p ** 2 / 2
        d1, d2 = p / u ** 2, 1 / u ** 2 + 2 * p ** 2 / u ** 3
    else:
        d1, d2 = _gamma_derivative(kernel, p, 1), _gamma_derivative(kernel, p, 2)

    return _scalar(d1), _scalar(d2)


def hamiltonian_third(kernel: KernelSpec, p: Union[float, np.ndarray]):
    """Returns H'''(p)."""
    assert(isinstance(kernel, KernelSpec))
    p = np.asarray(p, dtype=float)
    _check_domain(kernel, p)

    if kernel.family == KernelFamily.DIFFUSION:
        d3 = np.zeros_like(p)
    elif kernel.family == KernelFamily.UNIFORM:
        d3 = _uniform_derivatives(p)[3]
    elif kernel.family == KernelFamily.GAUSSIAN:
        d3 = (3 * p + p ** 3) * np.exp(p ** 2 / 2)
    elif kernel.family == KernelFamily.EXPONENTIAL:
        u = 1 - p ** 2 / 2
        d3 = 6 * p / u ** 3 + 6 * p ** 3 / u ** 4
    else:
        d3 = _gamma_derivative(kernel, p, 3)

    return _scalar(d3)


def conjugacy_speed(kernel: KernelSpec, p0: float) -> float:
    """Speed c = int y K(y) exp(p0 y) dy = H'(p0) whose Lagrangian slope is `p0`."""
    return hamiltonian_derivs(kernel, p0)[0]


def lagrangian(kernel: KernelSpec, c: float, order: LagrangianOrder = LagrangianOrder.WITH_DERIVS) -> Lagrangian:
    """Legendre transform of the Hamiltonian, L(c) = max_p (pc - H(p)).

    The maximiser p0 solves H'(p0) = c. As H' is odd and strictly increasing from the open
    domain onto the real line, the root is bracketed on [0, p_max) for c > 0 and refined to 1e-12.

    Args:
        kernel: Mutation kernel.
        c: Adimensional speed, any real.
        order: `VALUE` skips the curvature.

    Returns:
        `Lagrangian(value, slope, curvature)` = (L(c), L'(c) = p0, L''(c) = 1/H''(p0)).
    """
    assert(isinstance(kernel, KernelSpec))
    assert(isinstance(order, LagrangianOrder))
    c = float(c)

    if c == 0:
        return Lagrangian(0.0, 0.0, 1.0 if order == LagrangianOrder.WITH_DERIVS else None)

    speed = abs(c)
    if kernel.family == KernelFamily.DIFFUSION:
        p0 = speed
    else:
        step = min(speed, 0.5 * min(kernel.p_max, 1.0))
        p0 = solve_increasing(lambda p: hamiltonian_derivs(kernel, p)[0] - speed, 0.0, step,
                              limit=kernel.p_max, df=lambda p: hamiltonian_derivs(kernel, p)[1])

    value = p0 * speed - hamiltonian(kernel, p0)
    curvature = 1 / hamiltonian_derivs(kernel, p0)[1] if order == LagrangianOrder.WITH_DERIVS else None

    return Lagrangian(value, math.copysign(p0, c), curvature)


def lagrangian_inverse(kernel: KernelSpec, value: float) -> float:
    """The speed c >= 0 with L(c) = `value`."""
    assert(isinstance(kernel, KernelSpec))
    assert(value >= 0)

    if value == 0:
        return 0.0

    return solve_increasing(lambda c: lagrangian(kernel, c, LagrangianOrder.VALUE).value - value,
                            0.0, math.sqrt(2 * value), df=lambda c: lagrangian(kernel, c, LagrangianOrder.VALUE).slope)


def legendre_numeric_oracle(samples: TabulatedHamiltonian, c: float) -> float:
    """Brute-force Legendre transform: the grid maximum of pc - H(p) over tabulated samples.

    Raises:
        BracketError: If the maximiser is the first or the last sample.
    """
    assert(isinstance(samples, TabulatedHamiltonian))

    objective = samples.p * c - samples.h
    index = int(np.argmax(objective))
    if index == 0 or index == len(objective) - 1:
        raise BracketError(f"Maximiser of pc - H(p) for c={c} lies on the sample boundary")

    return float(objective[index])


def kernel_distribution(kernel: KernelSpec):
    """Unit-variance `scipy.stats` distribution of a density family."""
    assert(isinstance(kernel, KernelSpec))

    if kernel.family == KernelFamily.UNIFORM:
        return stats.uniform(loc=-SQRT3, scale=2 * SQRT3)
    elif kernel.family == KernelFamily.GAUSSIAN:
        return stats.norm()
    elif kernel.family == KernelFamily.EXPONENTIAL:
        return stats.laplace(scale=kernel.theta)
    elif kernel.family == KernelFamily.GAMMA:
        return stats.dgamma(kernel.shape, scale=kernel.theta)
    else:
        raise DomainError("The diffusion kernel is an operator, it has no density")


def excess_kurtosis(kernel: KernelSpec) -> float:
    """Excess kurtosis of the kernel density; 0 for the diffusion limit."""
    assert(isinstance(kernel, KernelSpec))

    if kernel.family == KernelFamily.UNIFORM:
        return -1.2
    elif kernel.family == KernelFamily.EXPONENTIAL:
        return 3.0
    elif kernel.family == KernelFamily.GAMMA:
        a = kernel.shape
        return (a + 2) * (a + 3) / (a * (a + 1)) - 3
    else:
        return 0.0


def tabulate_hamiltonian(kernel: KernelSpec, p_grid: np.ndarray) -> TabulatedHamiltonian:
    """Tabulates H by quadrature of exp(py) against the kernel density.

    This is the path taken by kernels only known through their density. The diffusion
    limit has no density and is tabulated from its closed form.
    """
    assert(isinstance(kernel, KernelSpec))
    p_grid = np.asarray(p_grid, dtype=float)
    _check_domain(kernel, p_grid)

    if not kernel.is_density:
        return TabulatedHamiltonian(p_grid, p_grid ** 2 / 2)

    distribution = kernel_distribution(kernel)
    lower, upper = distribution.support()
    values = np.empty_like(p_grid)
    for i, p in enumerate(p_grid):
        # split at the origin, where the Gamma density may be singular
        left = distribution.expect(lambda y: np.exp(p * y), lb=lower, ub=0.0, epsabs=1e-13, epsrel=1e-12, limit=200)
        right = distribution.expect(lambda y: np.exp(p * y), lb=0.0, ub=upper, epsabs=1e-13, epsrel=1e-12, limit=200)
        values[i] = left + right - 1

    return TabulatedHamiltonian(p_grid, values)
