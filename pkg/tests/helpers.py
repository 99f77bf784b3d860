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
from typing import Tuple

import numpy as np

from pylag.experiments import bulk_log_gap
from pylag.simulator import Distribution, Grid


def gaussian_on(grid: Grid, mean: float, var: float) -> Distribution:
    """Discretised Gaussian density, normalised on the grid."""
    values = np.exp(-(grid.z - mean) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)
    return Distribution(grid, values).normalized()


def log_gap(distribution: Distribution, predicted: np.ndarray, centre: float, var: float) -> float:
    return bulk_log_gap(distribution.grid.z, distribution.values, predicted, centre, var)


def relative_gap(value: float, expected: float) -> float:
    return abs(value - expected) / abs(expected)


def mean_and_var(distribution: Distribution) -> Tuple[float, float]:
    moments = distribution.moments()
    return moments.mean, moments.var
