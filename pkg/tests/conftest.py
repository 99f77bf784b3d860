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

import numpy as np
import pytest

from pylag.kernels import KernelSpec
from pylag.scaling import ModelParams
from pylag.selection import SelectionSpec
from pylag.simulator import Grid, SimulatorSettings


@pytest.fixture(autouse=True)
def quiet_loggers():
    # reduce logspew
    logging.getLogger("sweep").setLevel(logging.INFO)


@pytest.fixture()
def params() -> ModelParams:
    return ModelParams(beta=1.0, mu0=0.0, alpha=1.0, sigma=0.1)


@pytest.fixture()
def quadratic() -> SelectionSpec:
    return SelectionSpec.quadratic()


@pytest.fixture()
def super_quadratic() -> SelectionSpec:
    return SelectionSpec.super_quadratic(1 / 64)


@pytest.fixture()
def bounded() -> SelectionSpec:
    return SelectionSpec.bounded(0.5)


@pytest.fixture()
def gaussian() -> KernelSpec:
    return KernelSpec.gaussian()


@pytest.fixture()
def diffusion() -> KernelSpec:
    return KernelSpec.diffusion()


@pytest.fixture()
def profile_grid() -> np.ndarray:
    return np.linspace(-3.0, 3.0, 6001)


@pytest.fixture()
def grid() -> Grid:
    return Grid.around(-2.0, 2.0, 0.01)


@pytest.fixture()
def settings() -> SimulatorSettings:
    return SimulatorSettings(max_iters=200000)
