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

import numpy as np
import pytest

from pylag.asymptotics import Order, predict
from pylag.kernels import KernelSpec
from pylag.scaling import Mode, ModelParams, dimensional_closed_forms, from_scaled, lambda_to_dimensional, \
    lambda_to_scaled, population_size, speed_to_dimensional, to_scaled, to_scaled_report
from pylag.selection import SelectionSpec
from pylag.simulator import EquilibriumReport


class TestModelParams:
    def test_should_validate(self):
        with pytest.raises(AssertionError):
            ModelParams(beta=1.0, mu0=1.0, alpha=1.0, sigma=0.1)

        with pytest.raises(AssertionError):
            ModelParams(beta=1.0, mu0=0.0, alpha=0.0, sigma=0.1)

    def test_should_round_trip_through_dict(self, params):
        assert ModelParams.from_dict(params.with_speed(0.05).to_dict()) == params.with_speed(0.05)

    def test_should_replace_speed_and_strength(self, params):
        # when
        other = params.with_speed(0.2).with_alpha(4.0)

        # then
        assert other.c_dim == 0.2
        assert other.alpha == 4.0
        assert params.c_dim == 0.0


class TestToScaled:
    def test_asexual(self, params):
        # when
        scaled = to_scaled(params.with_speed(0.05), Mode.ASEXUAL)

        # then
        assert scaled.eps == pytest.approx(0.1)
        assert scaled.c == pytest.approx(0.5)
        assert scaled.gamma == 1

    def test_infinitesimal(self, params):
        # when
        scaled = to_scaled(params.with_speed(0.05), Mode.INFINITESIMAL)

        # then
        assert scaled.eps == pytest.approx(0.1)
        assert scaled.c == pytest.approx(5.0)
        assert scaled.gamma == 2

    @pytest.mark.parametrize('mode', list(Mode))
    def test_should_keep_zero_speed(self, params, mode):
        assert to_scaled(params, mode).c == 0.0

    def test_speed_should_round_trip(self):
        # given
        params = ModelParams(beta=2.0, mu0=0.5, alpha=3.0, sigma=0.2, c_dim=0.07)

        # expect
        for mode in Mode:
            assert speed_to_dimensional(to_scaled(params, mode).c, params, mode) == pytest.approx(0.07, abs=1e-15)

    def test_mean_fitness_should_round_trip(self):
        # given
        params = ModelParams(beta=2.0, mu0=0.5, alpha=3.0, sigma=0.2)

        # expect
        assert lambda_to_scaled(lambda_to_dimensional(0.8, params), params) == pytest.approx(0.8, abs=1e-15)
        assert lambda_to_dimensional(1.0, params) == 1.5


class TestFromScaled:
    def test_should_keep_unit_scales(self, params):
        # given
        report = EquilibriumReport(Mode.ASEXUAL, lam=0.9, zstar=-0.5, var=0.1)

        # when
        dimensional = from_scaled(report, params, Mode.ASEXUAL)

        # then
        assert dimensional.zstar == -0.5
        assert dimensional.lam == pytest.approx(0.9)
        assert dimensional.rho == pytest.approx(0.9)
        assert dimensional.dimensional
        assert not report.dimensional

    def test_should_scale_variance(self):
        # given
        params = ModelParams(beta=2.0, mu0=0.0, alpha=1.0, sigma=0.1)
        report = EquilibriumReport(Mode.INFINITESIMAL, lam=1.0, zstar=0.0, var=params.eps ** 2)

        # when
        dimensional = from_scaled(report, params, Mode.INFINITESIMAL)

        # then
        assert dimensional.var == pytest.approx(0.01)

    def test_should_round_trip(self):
        # given
        params = ModelParams(beta=2.0, mu0=0.3, alpha=0.5, sigma=0.2)
        report = EquilibriumReport(Mode.ASEXUAL, lam=0.7, zstar=-0.4, var=0.05, skew=0.1, kurt=0.2)

        # when
        back = to_scaled_report(from_scaled(report, params, Mode.ASEXUAL), params, Mode.ASEXUAL)

        # then
        assert back.lam == pytest.approx(0.7, abs=1e-12)
        assert back.zstar == pytest.approx(-0.4, abs=1e-12)
        assert back.var == pytest.approx(0.05, abs=1e-12)
        assert back.skew == 0.1
        assert back.kurt == 0.2

    @pytest.mark.parametrize('seed', range(20))
    def test_should_round_trip_random_parameters(self, seed):
        # given
        rng = np.random.default_rng(seed)
        beta = rng.uniform(0.5, 3.0)
        params = ModelParams(beta=beta, mu0=rng.uniform(0.0, 0.9) * beta, alpha=rng.uniform(0.1, 5.0),
                             sigma=rng.uniform(0.01, 0.5), c_dim=rng.uniform(0.0, 0.1))
        mode = list(Mode)[seed % 2]
        report = EquilibriumReport(mode, lam=rng.uniform(-1.0, 1.0), zstar=rng.uniform(-2.0, 0.0),
                                   var=rng.uniform(0.001, 0.5))

        # when
        back = to_scaled_report(from_scaled(report, params, mode), params, mode)

        # then
        assert back.lam == pytest.approx(report.lam, abs=1e-12)
        assert back.zstar == pytest.approx(report.zstar, abs=1e-12)
        assert back.var == pytest.approx(report.var, rel=1e-12)
        assert speed_to_dimensional(to_scaled(params, mode).c, params, mode) == pytest.approx(params.c_dim, rel=1e-12)

    def test_should_refuse_mismatched_mode(self, params):
        with pytest.raises(AssertionError):
            from_scaled(EquilibriumReport(Mode.ASEXUAL, 1.0, 0.0, 0.1), params, Mode.INFINITESIMAL)

    def test_population_should_vanish_on_extinction(self, params):
        assert population_size(-0.2, params) == 0.0
        assert population_size(0.5, ModelParams(beta=2.0, mu0=1.0, alpha=1.0, sigma=0.1)) == 0.5


class TestDimensionalClosedForms:
    PARAMS = [ModelParams(beta=1.0, mu0=0.0, alpha=1.0, sigma=0.1, c_dim=0.03),
              ModelParams(beta=2.0, mu0=0.2, alpha=0.5, sigma=0.05, c_dim=0.01),
              ModelParams(beta=1.5, mu0=0.1, alpha=3.0, sigma=0.2, c_dim=0.002)]

    @pytest.mark.parametrize('params', PARAMS)
    def test_asexual_should_match_scaled_correction(self, params):
        # given
        scaled = to_scaled(params, Mode.ASEXUAL)
        prediction = predict(Mode.ASEXUAL, KernelSpec.diffusion(), SelectionSpec.quadratic(), scaled.eps, scaled.c,
                             Order.FIRST_CORRECTION)

        # when
        dimensional = from_scaled(prediction.to_report(), params, Mode.ASEXUAL)
        forms = dimensional_closed_forms(params, Mode.ASEXUAL)

        # then
        assert dimensional.zstar == pytest.approx(forms.zstar, rel=1e-10)
        assert dimensional.lam == pytest.approx(forms.lam, rel=1e-10)
        assert dimensional.var == pytest.approx(forms.var, rel=1e-10)

    @pytest.mark.parametrize('params', PARAMS)
    def test_infinitesimal_should_match_scaled_correction(self, params):
        # given
        scaled = to_scaled(params, Mode.INFINITESIMAL)
        prediction = predict(Mode.INFINITESIMAL, None, SelectionSpec.quadratic(), scaled.eps, scaled.c,
                             Order.FIRST_CORRECTION)

        # when
        dimensional = from_scaled(prediction.to_report(), params, Mode.INFINITESIMAL)
        forms = dimensional_closed_forms(params, Mode.INFINITESIMAL)

        # then
        assert dimensional.zstar == pytest.approx(forms.zstar, rel=1e-10)
        assert dimensional.lam == pytest.approx(forms.lam, rel=1e-10)
        assert dimensional.var == pytest.approx(forms.var, rel=1e-10)

    def test_should_give_unit_scale_values(self, params):
        # when
        forms = dimensional_closed_forms(params.with_speed(0.04), Mode.ASEXUAL)

        # then
        assert forms.zstar == pytest.approx(-0.4)
        assert forms.var == pytest.approx(0.1)
        assert forms.lam == pytest.approx(1 - 0.08 - 0.05)
        assert math.isfinite(forms.lam)
