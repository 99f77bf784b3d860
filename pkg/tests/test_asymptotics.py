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
from unittest.mock import MagicMock

import numpy as np
import pytest
from scipy.integrate import trapezoid

from pylag import DegenerateError, DivergenceError, TippingError
from pylag import asymptotics
from pylag.asymptotics import C_SEAM, Order, Trend, asexual_U0, asexual_U1, asexual_correction, \
    asexual_lambda1_identity, asexual_leading, asexual_local_shape, critical_speeds, infinitesimal_U1, \
    infinitesimal_correction, infinitesimal_equilibria, infinitesimal_lambda1_identity, infinitesimal_leading, \
    predict, variance_trend
from pylag.kernels import KernelSpec, lagrangian, lagrangian_inverse
from pylag.scaling import Mode, ModelParams
from pylag.selection import SelectionSpec, m_derivs


class TestAsexualLeading:
    def test_diffusion_quadratic(self, diffusion, quadratic):
        # when
        prediction = asexual_leading(diffusion, quadratic, 0.1, 0.4)

        # then
        assert prediction.lambda0 == pytest.approx(0.92)
        assert prediction.zstar0 == pytest.approx(-0.4)
        assert prediction.var == pytest.approx(0.1)
        assert prediction.lag_load == pytest.approx(0.08)

    @pytest.mark.parametrize('kernel', KernelSpec.all())
    def test_should_reduce_to_optimum_without_speed(self, kernel, bounded):
        # when
        prediction = asexual_leading(kernel, bounded, 0.1, 0.0)

        # then
        assert prediction.lam == 1.0
        assert prediction.zstar == 0.0
        assert prediction.var == 0.1

    def test_should_tip_beyond_supremum(self, gaussian, bounded):
        # given
        c = lagrangian_inverse(gaussian, 0.6)

        # expect
        with pytest.raises(TippingError):
            asexual_leading(gaussian, bounded, 0.1, c)


class TestAsexualCorrection:
    def test_diffusion_quadratic(self, diffusion, quadratic):
        # when
        prediction = asexual_correction(diffusion, quadratic, 0.1, 0.4)

        # then
        assert prediction.lambda1 == pytest.approx(-0.5)
        assert prediction.lam == pytest.approx(0.87)
        assert prediction.zstar == pytest.approx(-0.4, abs=1e-12)
        assert prediction.var == pytest.approx(0.1, abs=1e-12)
        assert prediction.standing_load == pytest.approx(0.05)

    def test_variance_should_be_eps_over_local_shape(self, gaussian, super_quadratic):
        # when
        prediction = asexual_correction(gaussian, super_quadratic, 0.1, 0.3)

        # then
        assert prediction.var == pytest.approx(0.1 / asexual_local_shape(gaussian, super_quadratic, 0.1, 0.3))

    def test_should_refuse_vanishing_speed(self, gaussian, quadratic):
        with pytest.raises(DegenerateError):
            asexual_correction(gaussian, quadratic, 0.1, C_SEAM / 2)

    @pytest.mark.parametrize('kernel', KernelSpec.all())
    def test_prediction_should_use_zero_speed_limit(self, kernel, quadratic):
        # when
        prediction = predict(Mode.ASEXUAL, kernel, quadratic, 0.1, 0.0)

        # then
        assert prediction.order == Order.FIRST_CORRECTION
        assert prediction.lambda1 == -0.5
        assert prediction.lam == pytest.approx(0.95)
        assert prediction.var == 0.1

    def test_report_should_carry_order(self, gaussian, quadratic):
        # when
        report = predict(Mode.ASEXUAL, gaussian, quadratic, 0.1, 0.2, Order.LEADING).to_report()

        # then
        assert report.source == 'leading'
        assert report.mode == Mode.ASEXUAL
        assert not report.dimensional


class TestAsexualProfiles:
    @pytest.mark.parametrize('c', [0.0, 0.3])
    def test_diffusion_quadratic_profile_should_be_exact(self, diffusion, quadratic, profile_grid, c):
        # when
        profile = asexual_U0(diffusion, quadratic, c, profile_grid)

        # then
        assert np.max(np.abs(profile.u0 - (c * profile_grid + profile_grid ** 2 / 2))) <= 1e-6
        assert profile.zstar0 == pytest.approx(-c)

    def test_gaussian_profile_should_be_minimal_at_lag(self, gaussian, quadratic, profile_grid):
        # given
        prediction = asexual_leading(gaussian, quadratic, 0.1, 0.3)

        # when
        profile = asexual_U0(gaussian, quadratic, 0.3, profile_grid)

        # then
        step = profile_grid[1] - profile_grid[0]
        assert abs(profile_grid[np.argmin(profile.u0)] - prediction.zstar0) <= step

    def test_diffusion_quadratic_corrector_should_vanish(self, diffusion, quadratic, profile_grid):
        # given
        profile = asexual_U0(diffusion, quadratic, 0.3, profile_grid)

        # when
        corrected = asexual_U1(diffusion, quadratic, 0.3, profile)

        # then
        assert np.max(np.abs(corrected.u1)) <= 1e-6

    @pytest.mark.parametrize('sel', [SelectionSpec.quadratic(), SelectionSpec.super_quadratic()])
    def test_corrector_should_satisfy_its_equation(self, gaussian, sel):
        # given
        z = np.linspace(-1.5, 1.0, 25001)
        profile = asexual_U1(gaussian, sel, 0.3, asexual_U0(gaussian, sel, 0.3, z))

        # when
        estimate = asexual_lambda1_identity(gaussian, profile)

        # then
        assert estimate == pytest.approx(-0.5 * math.sqrt(1 / lagrangian(gaussian, 0.3).curvature), abs=1e-4)

    def test_corrector_should_vanish_at_lag(self, gaussian, quadratic, profile_grid):
        # when
        profile = asexual_U1(gaussian, quadratic, 0.3, asexual_U0(gaussian, quadratic, 0.3, profile_grid))

        # then
        assert np.interp(profile.zstar0, profile.z, profile.u1) == pytest.approx(0.0, abs=1e-12)

    def test_densities_should_be_normalized(self, gaussian, quadratic, profile_grid):
        # given
        profile = asexual_U1(gaussian, quadratic, 0.3, asexual_U0(gaussian, quadratic, 0.3, profile_grid))

        # when
        f0, f1 = profile.densities(0.1)

        # then
        assert trapezoid(f0, profile.z) == pytest.approx(1.0)
        assert trapezoid(f1, profile.z) == pytest.approx(1.0)

    def test_should_tip_beyond_supremum(self, diffusion, bounded, profile_grid):
        with pytest.raises(TippingError):
            asexual_U0(diffusion, bounded, 1.1, profile_grid)


class TestInfinitesimal:
    def test_leading(self, quadratic):
        # when
        prediction = infinitesimal_leading(quadratic, 0.1, 0.3)

        # then
        assert prediction.zstar == pytest.approx(-0.3)
        assert prediction.lam == pytest.approx(0.955)
        assert prediction.var == pytest.approx(0.01)

    def test_correction(self, quadratic):
        # when
        prediction = infinitesimal_correction(quadratic, 0.1, 0.3)

        # then
        assert prediction.zstar == pytest.approx(-0.306)
        assert prediction.lam == pytest.approx(0.9482)
        assert prediction.var == pytest.approx(0.01 / 1.02)

    def test_should_keep_standing_load_without_speed(self, quadratic):
        assert infinitesimal_correction(quadratic, 0.1, 0.0).lam == pytest.approx(1 - 0.005)

    def test_third_derivative_should_flip_lag_correction(self):
        # when
        sextic = infinitesimal_correction(SelectionSpec.super_quadratic(), 0.1, 0.3)
        bounded = infinitesimal_correction(SelectionSpec.bounded(1.0), 0.1, 0.3)

        # then
        assert sextic.zstar1 + 0.6 > 0
        assert bounded.zstar1 + 0.6 < 0

    def test_should_tip_beyond_maximal_gradient(self):
        with pytest.raises(TippingError):
            infinitesimal_leading(SelectionSpec.bounded(1.0), 0.1, 0.7)

    def test_equilibria(self):
        # given
        sel = SelectionSpec.bounded(1.0)

        # when
        stable, unstable = infinitesimal_equilibria(sel, 0.4)

        # then
        assert -1.0 < stable < 0 and unstable < -1.0
        assert m_derivs(sel, stable, 1)[1] == pytest.approx(-0.4)
        assert m_derivs(sel, unstable, 1)[1] == pytest.approx(-0.4)
        assert infinitesimal_equilibria(SelectionSpec.quadratic(), 0.4) == (-0.4, None)

    @pytest.mark.parametrize('sel', [SelectionSpec.quadratic(), SelectionSpec.super_quadratic(),
                                     SelectionSpec.bounded(1.0)])
    def test_corrector_should_match_closed_forms(self, sel):
        # given
        c = 0.3
        zstar0, _ = infinitesimal_equilibria(sel, c)
        _, _, m2, m3 = m_derivs(sel, zstar0, 3)
        z = zstar0 + np.linspace(-0.5, 0.5, 10001)

        # when
        profile = infinitesimal_U1(sel, c, z)

        # then
        slope = np.interp(zstar0, z, np.gradient(profile.u1, z))
        assert slope == pytest.approx(m3 / (2 * m2) + 2 * c, abs=1e-6)
        assert infinitesimal_lambda1_identity(profile, c) == \
               pytest.approx(infinitesimal_correction(sel, 0.1, c).lambda1, abs=1e-4)

    def test_corrector_should_satisfy_functional_equation(self, super_quadratic):
        # given
        c = 0.3
        zstar0, _ = infinitesimal_equilibria(super_quadratic, c)
        m0, m1 = m_derivs(super_quadratic, zstar0, 1)
        h = np.linspace(-0.4, 0.4, 81)

        # when
        full = infinitesimal_U1(super_quadratic, c, zstar0 + h).u1
        half = infinitesimal_U1(super_quadratic, c, zstar0 + h / 2).u1

        # then
        gap = m_derivs(super_quadratic, zstar0 + h, 0)[0] - m0 - m1 * h
        assert np.max(np.abs(full - 2 * half - np.log(1 + gap))) <= 1e-8

    def test_quadratic_corrector(self, quadratic):
        # given
        h = np.linspace(-0.5, 0.5, 11)

        # when
        profile = infinitesimal_U1(quadratic, 0.2, -0.2 + h)

        # then
        assert profile.u0 == pytest.approx(h ** 2 / 2)
        assert np.interp(-0.2, profile.z, profile.u1) == pytest.approx(0.0, abs=1e-15)

    def test_corrector_should_diverge_far_from_lag(self):
        # given
        sel = SelectionSpec.bounded(1.0)

        # expect
        with pytest.raises(DivergenceError):
            infinitesimal_U1(sel, 0.8 * math.exp(-0.5), np.linspace(-10.0, 1.0, 1101))


class TestCriticalSpeeds:
    def test_asexual_diffusion_quadratic(self, diffusion, quadratic, params):
        # when
        speeds = critical_speeds(Mode.ASEXUAL, diffusion, quadratic, params)

        # then
        assert speeds.c_star == pytest.approx(math.sqrt(2) * 0.1 * math.sqrt(0.95), abs=1e-10)
        assert speeds.c_star_leading == pytest.approx(math.sqrt(2) * 0.1, abs=1e-10)
        assert math.isinf(speeds.c_tip)

    def test_asexual_bounded_tipping(self, diffusion, params):
        # when
        speeds = critical_speeds(Mode.ASEXUAL, diffusion, SelectionSpec.bounded(0.5), params)

        # then
        assert speeds.c_tip == pytest.approx(0.1, abs=1e-12)

    @pytest.mark.parametrize('kernel', KernelSpec.all())
    def test_asexual_critical_speed_should_not_depend_on_selection(self, kernel, params):
        # when
        speeds = [critical_speeds(Mode.ASEXUAL, kernel, sel, params).c_star
                  for sel in [SelectionSpec.quadratic(), SelectionSpec.super_quadratic(), SelectionSpec.bounded(0.5)]]

        # then
        assert max(speeds) - min(speeds) <= 1e-12

    def test_infinitesimal_bounded_tipping(self, params):
        # when
        speeds = critical_speeds(Mode.INFINITESIMAL, None, SelectionSpec.bounded(1.0), params)

        # then
        assert speeds.c_tip == pytest.approx(0.01 * math.exp(-0.5), abs=1e-9)
        assert speeds.c_star <= speeds.c_tip

    def test_infinitesimal_quadratic(self, params):
        # when
        speeds = critical_speeds(Mode.INFINITESIMAL, None, SelectionSpec.quadratic(), params)

        # then
        assert speeds.c_star_leading == pytest.approx(0.01 * math.sqrt(2))
        assert speeds.c_star < speeds.c_star_leading
        assert predict(Mode.INFINITESIMAL, None, SelectionSpec.quadratic(), params.eps,
                       speeds.c_star / 0.01).lam == pytest.approx(0.0, abs=1e-10)


class TestVarianceTrend:
    def test_quadratic_should_be_flat(self, diffusion, quadratic):
        assert variance_trend(diffusion, quadratic, 0.3) == Trend.FLAT

    def test_super_quadratic_should_decrease(self, diffusion, super_quadratic):
        assert variance_trend(diffusion, super_quadratic, 0.3) == Trend.DECREASING

    def test_bounded_should_increase_near_tipping(self, diffusion, bounded):
        assert variance_trend(diffusion, bounded, 0.95) == Trend.INCREASING

    def test_should_not_warn_when_consistent(self, diffusion, bounded):
        # given
        logger = asymptotics.logger
        asymptotics.logger = MagicMock()

        try:
            # when
            variance_trend(diffusion, bounded, 0.9)

            # then
            assert asymptotics.logger.warning.call_count == 0
        finally:
            asymptotics.logger = logger
