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

import copy
import math
from enum import Enum, auto
from pprint import pformat
from typing import TYPE_CHECKING, NamedTuple

if TYPE_CHECKING:
    from pylag.simulator import EquilibriumReport


class Mode(Enum):
    ASEXUAL = auto()
    INFINITESIMAL = auto()

    @property
    def gamma(self) -> int:
        """Exponent of eps in the log-transform, U = -eps^gamma log F."""
        return 1 if self == Mode.ASEXUAL else 2

    @staticmethod
    def from_name(name: str) -> 'Mode':
        try:
            return Mode[name.upper()]
        except KeyError:
            raise ValueError(f"Unknown reproduction mode '{name}'")


class ModelParams:
    """Dimensional parameters of the model.

    Attributes:
        beta: Birth rate (1/time).
        mu0: Basal mortality rate (1/time).
        alpha: Strength of selection, the curvature of the mortality at the optimum (1/(trait^2 time)).
        sigma: Standard deviation of mutation effects, or the segregation scale of the
            infinitesimal model (trait).
        c_dim: Speed of the optimum (trait/time).
    """

    def __init__(self, beta: float, mu0: float, alpha: float, sigma: float, c_dim: float = 0.0):
        assert(beta > mu0 >= 0)
        assert(alpha > 0)
        assert(sigma > 0)
        assert(c_dim >= 0)

        self.beta = float(beta)
        self.mu0 = float(mu0)
        self.alpha = float(alpha)
        self.sigma = float(sigma)
        self.c_dim = float(c_dim)

    def with_speed(self, c_dim: float) -> 'ModelParams':
        return ModelParams(self.beta, self.mu0, self.alpha, self.sigma, c_dim)

    def with_alpha(self, alpha: float) -> 'ModelParams':
        return ModelParams(self.beta, self.mu0, alpha, self.sigma, self.c_dim)

    @property
    def eps(self) -> float:
        return self.sigma * math.sqrt(self.alpha / self.beta)

    @property
    def z_scale(self) -> float:
        """Trait unit of the adimensional system, sqrt(beta/alpha)."""
        return math.sqrt(self.beta / self.alpha)

    def speed_scale(self, mode: Mode) -> float:
        """Speed unit of the adimensional system: sigma beta (asexual) or sigma^2 sqrt(alpha beta) (infinitesimal)."""
        assert(isinstance(mode, Mode))

        if mode == Mode.ASEXUAL:
            return self.sigma * self.beta
        return self.sigma ** 2 * math.sqrt(self.alpha * self.beta)

    def to_dict(self) -> dict:
        return dict(vars(self))

    @staticmethod
    def from_dict(data: dict) -> 'ModelParams':
        return ModelParams(beta=data['beta'], mu0=data['mu0'], alpha=data['alpha'], sigma=data['sigma'],
                           c_dim=data.get('c_dim', 0.0))

    def __eq__(self, other):
        assert(isinstance(other, ModelParams))
        return vars(self) == vars(other)

    def __repr__(self):
        return f"ModelParams({pformat(vars(self))})"


class ScaledParams(NamedTuple):
    eps: float
    c: float
    mode: Mode
    z_scale: float

    @property
    def gamma(self) -> int:
        return self.mode.gamma


class DimensionalForms(NamedTuple):
    zstar: float
    lam: float
    var: float


def to_scaled(params: ModelParams, mode: Mode) -> ScaledParams:
    """Adimensional parameters: eps^2 = sigma^2 alpha/beta and the speed in units of `speed_scale`."""
    assert(isinstance(params, ModelParams))
    assert(isinstance(mode, Mode))

    return ScaledParams(eps=params.eps, c=params.c_dim / params.speed_scale(mode), mode=mode, z_scale=params.z_scale)


def speed_to_dimensional(c: float, params: ModelParams, mode: Mode) -> float:
    assert(isinstance(params, ModelParams))
    return c * params.speed_scale(mode)


def lambda_to_scaled(lambda_dim: float, params: ModelParams) -> float:
    return (lambda_dim + params.mu0) / params.beta


def lambda_to_dimensional(lam: float, params: ModelParams) -> float:
    return params.beta * lam - params.mu0


def population_size(lambda_dim: float, params: ModelParams) -> float:
    """Equilibrium population size rho = lambda/(beta - mu0), zero once the population goes extinct."""
    assert(isinstance(params, ModelParams))
    return max(lambda_dim / (params.beta - params.mu0), 0.0)


def from_scaled(report: 'EquilibriumReport', params: ModelParams, mode: Mode) -> 'EquilibriumReport':
    """Maps a scaled report back to the original variables.

    Traits scale by sqrt(beta/alpha), variances by beta/alpha and fitness by
    lambda_dim = beta lambda - mu0. Skewness and kurtosis are scale free.
    """
    assert(isinstance(params, ModelParams))
    assert(report.mode == mode)
    assert(not report.dimensional)

    result = copy.copy(report)
    result.lam = lambda_to_dimensional(report.lam, params)
    result.zstar = report.zstar * params.z_scale
    result.var = report.var * params.z_scale ** 2
    result.rho = population_size(result.lam, params)
    result.dimensional = True
    return result


def to_scaled_report(report: 'EquilibriumReport', params: ModelParams, mode: Mode) -> 'EquilibriumReport':
    """Inverse of `from_scaled`."""
    assert(isinstance(params, ModelParams))
    assert(report.mode == mode)
    assert(report.dimensional)

    result = copy.copy(report)
    result.lam = lambda_to_scaled(report.lam, params)
    result.zstar = report.zstar / params.z_scale
    result.var = report.var / params.z_scale ** 2
    result.dimensional = False
    return result


def dimensional_closed_forms(params: ModelParams, mode: Mode) -> DimensionalForms:
    """First-order lag, mean fitness and variance for quadratic selection, in the original variables.

    The asexual forms are those of the diffusion kernel.
    """
    assert(isinstance(params, ModelParams))
    assert(isinstance(mode, Mode))

    beta, mu0, alpha, sigma, c = params.beta, params.mu0, params.alpha, params.sigma, params.c_dim

    if mode == Mode.ASEXUAL:
        return DimensionalForms(zstar=-c / (sigma * math.sqrt(alpha * beta)),
                                lam=beta - mu0 - c ** 2 / (2 * sigma ** 2 * beta) - sigma * math.sqrt(alpha * beta) / 2,
                                var=sigma * math.sqrt(beta / alpha))

    return DimensionalForms(zstar=-c / (sigma ** 2 * alpha) - 2 * c / beta,
                            lam=beta - mu0 - c ** 2 / (2 * sigma ** 4 * alpha)
                            - (2 * c ** 2 / (sigma ** 2 * beta) + sigma ** 2 * alpha / 2),
                            var=sigma ** 2 / (1 + 2 * sigma ** 2 * alpha / beta))
