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

__version__ = '0.1.0'

logger = logging.getLogger()


class PylagError(Exception):
    """Base class of every error raised by `pylag`."""
    pass


class DomainError(PylagError, ArithmeticError):
    """Argument lies outside the open domain of the function, e.g. |p| >= p_max for a Hamiltonian."""
    pass


class ConvergenceError(PylagError):
    """A root finder or an ODE integration did not reach the requested tolerance."""
    pass


class BracketError(PylagError):
    """The maximiser of a tabulated function sits on the boundary of the samples."""
    pass


class BeyondRangeError(PylagError):
    """The requested value is not below the supremum of the selection function.

    For asexual reproduction this means the lag diverges: the speed is beyond tipping.
    """
    pass


class BeyondGradientError(PylagError):
    """The requested gradient exceeds the maximum of m' on z >= 0.

    For infinitesimal reproduction this means the lag diverges: the speed is beyond tipping.
    """
    pass


class TippingError(PylagError):
    """No equilibrium with a finite lag exists at this speed."""
    pass


class DegenerateError(PylagError):
    """A correction formula is singular at the given arguments (c ~ 0, m'' = 0)."""
    pass


class SingularityError(PylagError):
    """A profile integration would have to cross a singular point."""
    pass


class DivergenceError(PylagError):
    """The series defining the infinitesimal corrector is undefined (1 + G <= 0)."""
    pass


class ResolutionError(PylagError):
    """The grid does not resolve the reproduction kernel (eps/dz < 4)."""
    pass


class CFLError(PylagError):
    """The time step violates one of the stability guards of the explicit scheme."""
    pass


class NegativeDensityError(PylagError):
    """Clipping negative densities removed more mass than tolerated."""
    pass


class NoConvergenceError(PylagError):
    """Time marching reached `max_iters` before the residual went below the stopping tolerance.

    Attributes:
        residual: Last value of the sup-norm residual.
        iterations: Number of iterations performed.
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConfigError(PylagError):
    """The experiment configuration is invalid."""
    pass
