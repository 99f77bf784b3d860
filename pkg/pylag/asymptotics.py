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
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.optimize import brentq

from pylag import BeyondGradientError, BeyondRangeError, ConvergenceError, DegenerateError, DivergenceError, \
    DomainError, SingularityError, TippingError
from pylag.kernels import KernelFamily, KernelSpec, LagrangianOrder, hamiltonian, hamiltonian_derivs, \
    hamiltonian_third, lagrangian, lagrangian_inverse
from pylag.numeric import central_difference, solve_increasing
from pylag.scaling import Mode, ModelParams
from pylag.selection import SelectionSpec, gradient_inverse_concave, gradient_inverse_convex, m_derivs, \
    m_inverse_pos, max_gradient, sup
from pylag.simulator import EquilibriumReport

logger = logging.getLogger()

# Below this speed the first-order formulas are replaced by their c = 0 limits.
C_SEAM = 1e-6

# Offset from the characteristic equilibrium z = 0 at which the profile ODEs are launched.
LAUNCH_OFFSET = 1e-4

U0_RESIDUAL_TOL = 1e-6
SERIES_TOL = 1e-12
SERIES_MAX_TERMS = 60


class Order(Enum):
    LEADING = auto()
    FIRST_CORRECTION = auto()


class Trend(Enum):
    INCREASING = auto()
    FLAT = auto()
    DECREASING = auto()


class AsymptoticPrediction:
    """Small-variance prediction of the travelling equilibrium, in scaled units.

    Corrections are carried as coefficients of eps^gamma: the mean fitness is
    `lambda0 + eps^gamma lambda1` and the lag `zstar0 + eps^gamma zstar1`, where gamma is 1 for
    asexual and 2 for infinitesimal reproduction. `var_correction` is the corrected variance itself.

    Attributes:
        mode: Reproduction mode.
        order: `LEADING` or `FIRST_CORRECTION`.
        eps: Scaled standard deviation of the reproduction kernel.
        c: Scaled speed.
        lambda0: Leading mean fitness.
        lambda1: Coefficient of the mean fitness correction.
        zstar0: Leading lag.
        zstar1: Coefficient of the lag correction.
        var_leading: Leading standing variance.
        var_correction: Standing variance including the first correction.
        lag_load: Reduction of mean fitness due to the lag, L(c) or m(zstar0).
    """

    def __init__(self, mode: Mode, order: 'Order', eps: float, c: float, lambda0: float, zstar0: float,
                 var_leading: float, lambda1: Optional[float] = None, zstar1: Optional[float] = None,
                 var_correction: Optional[float] = None):
        assert(isinstance(mode, Mode))
        assert(isinstance(order, Order))

        self.mode = mode
        self.order = order
        self.eps = eps
        self.c = c
        self.lambda0 = lambda0
        self.lambda1 = lambda1
        self.zstar0 = zstar0
        self.zstar1 = zstar1
        self.var_leading = var_leading
        self.var_correction = var_correction
        self.lag_load = 1 - lambda0

    @property
    def scale(self) -> float:
        return self.eps ** self.mode.gamma

    @property
    def standing_load(self) -> Optional[float]:
        return None if self.lambda1 is None else -self.scale * self.lambda1

    @property
    def lam(self) -> float:
        if self.order == Order.LEADING:
            return self.lambda0
        return self.lambda0 + self.scale * self.lambda1

    @property
    def zstar(self) -> float:
        if self.order == Order.LEADING:
            return self.zstar0
        return self.zstar0 + self.scale * self.zstar1

    @property
    def var(self) -> float:
        if self.order == Order.LEADING:
            return self.var_leading
        return self.var_correction

    def to_report(self) -> EquilibriumReport:
        return EquilibriumReport(mode=self.mode, lam=self.lam, zstar=self.zstar, var=self.var,
                                 source=self.order.name.lower())

    def __repr__(self):
        return f"AsymptoticPrediction({pformat(vars(self))})"


class Profile:
    """Log-density profiles U0 and U1 sampled on a grid of scaled traits.

    The equilibrium density is approximated by exp(-U0/eps^gamma) at leading order and by
    exp(-U0/eps^gamma - U1) at first order. U1 is `None` until a corrector has been computed.

    Attributes:
        z: Increasing scaled traits.
        u0: Leading profile U0.
        du0: Slope of U0.
        u1: First corrector U1, with U1(zstar0) = 0.
        mode: Reproduction mode.
        c: Scaled speed.
        zstar0: Leading lag, the minimum of U0.
    """

    def __init__(self, z: np.ndarray, u0: np.ndarray, du0: np.ndarray, mode: Mode, c: float, zstar0: float,
                 u1: Optional[np.ndarray] = None):
        assert(isinstance(z, np.ndarray))
        assert(isinstance(mode, Mode))

        self.z = z
        self.u0 = u0
        self.du0 = du0
        self.u1 = u1
        self.mode = mode
        self.c = c
        self.zstar0 = zstar0

    def with_u1(self, u1: np.ndarray) -> 'Profile':
        return Profile(self.z, self.u0, self.du0, self.mode, self.c, self.zstar0, u1)

    def densities(self, eps: float) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Leading and first-order densities, each normalized to unit mass on the grid."""
        scale = eps ** self.mode.gamma

        def normalized(exponent: np.ndarray) -> np.ndarray:
            values = np.exp(-(exponent - exponent.min()))
            return values / trapezoid(values, self.z)

        f0 = normalized(self.u0 / scale)
        f1 = None if self.u1 is None else normalized(self.u0 / scale + self.u1)
        return f0, f1

    def __repr__(self):
        return f"Profile(mode={self.mode}, c={self.c}, zstar0={self.zstar0}, n={len(self.z)})"


class CriticalSpeeds(NamedTuple):
    """Dimensional critical speeds.

    Attributes:
        c_star: Speed at which the first-order mean fitness reaches zero.
        c_star_leading: The same speed from the leading-order mean fitness.
        c_tip: Tipping speed beyond which the lag diverges, `math.inf` for unbounded selection.
    """
    c_star: float
    c_star_leading: float
    c_tip: float


def _lag_from_load(sel: SelectionSpec, load: float) -> float:
    try:
        return -m_inverse_pos(sel, load)
    except BeyondRangeError as e:
        raise TippingError(f"Lag load {load} is beyond the supremum of {sel.label} selection") from e


def asexual_leading(kernel: KernelSpec, sel: SelectionSpec, eps: float, c: float) -> AsymptoticPrediction:
    """Leading-order asexual prediction: lambda0 = 1 - L(c), m(zstar0) = L(c) and Var = -eps c/m'(zstar0).

    Raises:
        TippingError: If L(c) is not below sup m.
    """
    assert(isinstance(kernel, KernelSpec))
    assert(isinstance(sel, SelectionSpec))
    assert(eps > 0)
    assert(c >= 0)

    load = lagrangian(kernel, c, LagrangianOrder.VALUE).value
    zstar0 = _lag_from_load(sel, load)

    if c == 0:
        var = eps
    else:
        var = -eps * c / m_derivs(sel, zstar0, 1)[1]

    return AsymptoticPrediction(Mode.ASEXUAL, Order.LEADING, eps, c, lambda0=1 - load, zstar0=zstar0, var_leading=var)


def asexual_local_shape(kernel: KernelSpec, sel: SelectionSpec, eps: float, c: float) -> float:
    """Second derivative of U0 + eps U1 at the corrected lag, to first order in eps."""
    assert(c > 0)

    law = lagrangian(kernel, c)
    zstar0 = _lag_from_load(sel, law.value)
    _, m1, m2 = m_derivs(sel, zstar0, 2)
    root = math.sqrt(1 / law.curvature)

    return -m1 / c - (eps / 2) * ((1 / c) * (m2 / m1) * root + (m1 / c ** 2) ** 2)


def asexual_correction(kernel: KernelSpec, sel: SelectionSpec, eps: float, c: float) -> AsymptoticPrediction:
    """First-order asexual prediction.

    lambda1 = -(1/L''(c))^(1/2)/2, zstar1 = (1/L''(c))^(1/2)/(2 m'(zstar0)) + 1/(2c) and the variance
    is eps over the local shape of U0 + eps U1 at the lag.

    Raises:
        DegenerateError: If `c` is below the seam where the 1/c terms are replaced by their limits.
    """
    assert(isinstance(kernel, KernelSpec))
    assert(isinstance(sel, SelectionSpec))

    if c < C_SEAM:
        raise DegenerateError(f"Asexual correction is singular at c={c}, use the c = 0 limit")

    leading = asexual_leading(kernel, sel, eps, c)
    law = lagrangian(kernel, c)
    root = math.sqrt(1 / law.curvature)
    m1 = m_derivs(sel, leading.zstar0, 1)[1]

    shape = asexual_local_shape(kernel, sel, eps, c)
    if shape <= 0:
        raise DegenerateError(f"Local shape {shape} of the corrected profile is not positive at c={c}")

    return AsymptoticPrediction(Mode.ASEXUAL, Order.FIRST_CORRECTION, eps, c,
                                lambda0=leading.lambda0, zstar0=leading.zstar0, var_leading=leading.var_leading,
                                lambda1=-0.5 * root,
                                zstar1=root / (2 * m1) + 1 / (2 * c),
                                var_correction=eps / shape)


def _asexual_seam(kernel: KernelSpec, sel: SelectionSpec, eps: float, c: float) -> AsymptoticPrediction:
    leading = asexual_leading(kernel, sel, eps, c)
    return AsymptoticPrediction(Mode.ASEXUAL, Order.FIRST_CORRECTION, eps, c,
                                lambda0=leading.lambda0, zstar0=leading.zstar0, var_leading=leading.var_leading,
                                lambda1=-0.5, zstar1=0.0, var_correction=eps)


def _launch_slope(kernel: KernelSpec, sel: SelectionSpec, c: float, p0: float, load: float, side: int) -> float:
    # root of H(q) - cq + L(c) = m(h) on the branch where q - p0 has the sign of `side`
    level = m_derivs(sel, side * LAUNCH_OFFSET, 0)[0]

    def excess(offset: float) -> float:
        q = p0 + side * offset
        return hamiltonian(kernel, q) - c * q + load - level

    room = kernel.p_max - side * p0
    step = min(math.sqrt(2 * level), 0.5 * room) if math.isfinite(room) else math.sqrt(2 * level)
    offset = solve_increasing(excess, 0.0, step, limit=room,
                              df=lambda s: side * (hamiltonian_derivs(kernel, p0 + side * s)[0] - c))
    return p0 + side * offset


class _Branches(NamedTuple):
    q: np.ndarray
    u0: np.ndarray
    s: np.ndarray
    launch_gap: np.ndarray


def _march(kernel: KernelSpec, sel: SelectionSpec, c: float, z: np.ndarray) -> _Branches:
    """Integrates U0' and the characteristic time s outwards from both sides of z = 0.

    On each side the state (U0', U0, s) follows dU0'/dz = m'(z)/g, dU0/dz = U0', ds/dz = 1/g with
    g = H'(U0') - c, from z = +-h where U0' solves the algebraic relation H(U0') - c U0' + L(c) = m(z).
    """
    law = lagrangian(kernel, c)
    p0, load = law.slope, law.value
    if load >= sup(sel):
        raise TippingError(f"Speed c={c} is beyond tipping for {sel.label} selection")

    h = LAUNCH_OFFSET
    u2 = 1 / math.sqrt(hamiltonian_derivs(kernel, p0)[1])

    q = p0 + u2 * z
    u0 = p0 * z + 0.5 * u2 * z ** 2
    s = np.full_like(z, np.nan)
    launch_gap = np.full_like(z, np.nan)

    def rhs(t, y):
        g = hamiltonian_derivs(kernel, y[0])[0] - c
        return [m_derivs(sel, t, 1)[1] / g, y[0], 1 / g]

    def singular(t, y):
        return hamiltonian_derivs(kernel, y[0])[0] - c

    singular.terminal = True

    for side in (-1, 1):
        mask = side * z >= h
        if not np.any(mask):
            continue

        points = z[mask]
        if side < 0:
            points = points[::-1]

        q_h = _launch_slope(kernel, sel, c, p0, load, side)
        y0 = [q_h, side * h * (p0 + q_h) / 2, 0.0]

        try:
            solution = solve_ivp(rhs, (side * h, points[-1]), y0, method='RK45', t_eval=points, events=singular,
                                 rtol=1e-11, atol=1e-13)
        except DomainError as e:
            raise ConvergenceError(f"Profile integration left the domain of the Hamiltonian ({e})") from e

        if solution.status == 1:
            raise SingularityError(f"H'(U0') - c vanishes at z={solution.t_events[0][0]}, away from z = 0")
        if not solution.success:
            raise ConvergenceError(f"Profile integration failed ({solution.message})")

        values = solution.y if side > 0 else solution.y[:, ::-1]
        q[mask], u0[mask], s[mask] = values[0], values[1], values[2]
        launch_gap[mask] = hamiltonian_derivs(kernel, q_h)[0] - c

    return _Branches(q, u0, s, launch_gap)


def asexual_U0(kernel: KernelSpec, sel: SelectionSpec, c: float, grid: np.ndarray) -> Profile:
    """Leading asexual profile U0 with U0(0) = 0, by RK45 integration from both sides of z = 0.

    Raises:
        TippingError: If the speed is beyond tipping.
        SingularityError: If H'(U0') - c vanishes away from z = 0.
        ConvergenceError: If the profile misses its Hamilton-Jacobi equation by more than `U0_RESIDUAL_TOL`.
    """
    assert(isinstance(kernel, KernelSpec))
    assert(isinstance(sel, SelectionSpec))
    assert(c >= 0)
    z = np.asarray(grid, dtype=float)

    law = lagrangian(kernel, c, LagrangianOrder.VALUE)
    branches = _march(kernel, sel, c, z)

    residual = np.max(np.abs(hamiltonian(kernel, branches.q) - c * branches.q + law.value - m_derivs(sel, z, 0)[0]))
    if residual > U0_RESIDUAL_TOL:
        raise ConvergenceError(f"U0 misses its equation by {residual} on the grid")

    return Profile(z, branches.u0, branches.q, Mode.ASEXUAL, c, _lag_from_load(sel, law.value))


def asexual_U1(kernel: KernelSpec, sel: SelectionSpec, c: float, profile: Profile) -> Profile:
    """First asexual corrector U1 along the characteristics dz/ds = H'(U0') - c.

    The characteristics leave the characteristic equilibrium z = 0 on both sides, where
    U1(z) = U1(+-h) + lambda1 s(z) + log|g(z)/g(+-h)|/2 with g = H'(U0') - c. U1 is linear
    near z = 0, with the slope obtained by differentiating the corrector equation there.
    The additive constant is fixed by U1(zstar0) = 0.
    """
    assert(isinstance(kernel, KernelSpec))
    assert(isinstance(sel, SelectionSpec))
    assert(isinstance(profile, Profile))
    assert(profile.mode == Mode.ASEXUAL)

    z = profile.z
    law = lagrangian(kernel, c)
    p0 = law.slope
    lambda1 = -0.5 * math.sqrt(1 / law.curvature)

    h2 = hamiltonian_derivs(kernel, p0)[1]
    h3 = hamiltonian_third(kernel, p0)
    m3 = m_derivs(sel, 0.0, 3)[3]
    u2 = 1 / math.sqrt(h2)
    u3 = (m3 - h3 * u2 ** 3) / (3 * h2 * u2)
    slope = (h3 * u2 ** 2 + h2 * u3) / (2 * h2 * u2)

    branches = _march(kernel, sel, c, z)
    gap = hamiltonian_derivs(kernel, branches.q)[0] - c

    u1 = slope * z
    far = np.abs(z) >= LAUNCH_OFFSET
    if np.any(far):
        start = slope * np.sign(z[far]) * LAUNCH_OFFSET
        u1[far] = start + lambda1 * branches.s[far] + 0.5 * np.log(gap[far] / branches.launch_gap[far])

    u1 = u1 - np.interp(profile.zstar0, z, u1)
    return profile.with_u1(u1)


def asexual_lambda1_identity(kernel: KernelSpec, profile: Profile) -> float:
    """Estimates lambda1 from a computed U1 through the corrector equation (H'(U0') - c) U1' - H''(U0') U0''/2.

    Derivatives of U1 are taken by finite differences on the profile grid, and the estimate is the median
    over the nodes away from z = 0.
    """
    assert(isinstance(profile, Profile))
    assert(profile.u1 is not None)

    z, q = profile.z, profile.du0
    d1, d2 = hamiltonian_derivs(kernel, q)
    gap = d1 - profile.c
    du1 = np.gradient(profile.u1, z)
    dq = np.gradient(q, z)
    estimates = gap * du1 - 0.5 * d2 * dq

    interior = (np.abs(z) > 2 * (z[1] - z[0]))
    interior[[0, -1]] = False
    return float(np.median(estimates[interior]))


def infinitesimal_equilibria(sel: SelectionSpec, c: float) -> Tuple[float, Optional[float]]:
    """Lags (z_s, z_u) where m'(z) = -c: the stable one on the convex branch and, for bounded
    selection, the unstable one past the inflection point.

    Raises:
        TippingError: If `c` exceeds the maximal gradient of the selection function.
    """
    assert(isinstance(sel, SelectionSpec))
    assert(c >= 0)

    try:
        stable = gradient_inverse_convex(sel, c)
        unstable = gradient_inverse_concave(sel, c)
    except BeyondGradientError as e:
        raise TippingError(f"Speed c={c} exceeds the maximal gradient of {sel.label} selection") from e

    return -stable, None if unstable is None else -unstable


def infinitesimal_leading(sel: SelectionSpec, eps: float, c: float) -> AsymptoticPrediction:
    """Leading-order infinitesimal prediction: m'(zstar0) = -c, lambda0 = 1 - m(zstar0), Var = eps^2."""
    assert(isinstance(sel, SelectionSpec))
    assert(eps > 0)

    zstar0, _ = infinitesimal_equilibria(sel, c)
    lambda0 = 1 - m_derivs(sel, zstar0, 0)[0]

    return AsymptoticPrediction(Mode.INFINITESIMAL, Order.LEADING, eps, c, lambda0=lambda0, zstar0=zstar0,
                                var_leading=eps ** 2)


def infinitesimal_correction(sel: SelectionSpec, eps: float, c: float) -> AsymptoticPrediction:
    """First-order infinitesimal prediction, with corrections in powers of eps^2.

    zstar1 = -(m'''/(2m'') + 2c), lambda1 = -(2c^2 + c m'''/(2m'') + m''/2) and
    Var = eps^2/(1 + 2 eps^2 m''), all derivatives taken at zstar0.

    Raises:
        DegenerateError: If m''(zstar0) = 0, which happens exactly at tipping.
    """
    leading = infinitesimal_leading(sel, eps, c)
    _, _, m2, m3 = m_derivs(sel, leading.zstar0, 3)

    if abs(m2) < 1e-12:
        raise DegenerateError(f"m''(zstar0) vanishes at zstar0={leading.zstar0}")

    ratio = m3 / (2 * m2)
    return AsymptoticPrediction(Mode.INFINITESIMAL, Order.FIRST_CORRECTION, eps, c,
                                lambda0=leading.lambda0, zstar0=leading.zstar0, var_leading=leading.var_leading,
                                lambda1=-(2 * c ** 2 + c * ratio + 0.5 * m2),
                                zstar1=-(ratio + 2 * c),
                                var_correction=eps ** 2 / (1 + 2 * eps ** 2 * m2))


def infinitesimal_U1(sel: SelectionSpec, c: float, grid: np.ndarray) -> Profile:
    """Infinitesimal profiles: U0 = (z - zstar0)^2/2 and the series corrector

        U1(zstar0 + h) = p* h + sum_n 2^n log(1 + G(zstar0 + 2^-n h)),

    with G(z) = m(z) - m(zstar0) - m'(zstar0)(z - zstar0) and p* = m'''/(2m'') + 2c at zstar0.

    Raises:
        DivergenceError: If 1 + G <= 0 somewhere on the grid.
    """
    assert(isinstance(sel, SelectionSpec))
    z = np.asarray(grid, dtype=float)

    zstar0, _ = infinitesimal_equilibria(sel, c)
    m0, m1, m2, m3 = m_derivs(sel, zstar0, 3)
    if abs(m2) < 1e-12:
        raise DegenerateError(f"m''(zstar0) vanishes at zstar0={zstar0}")
    pstar = m3 / (2 * m2) + 2 * c

    def one_plus_gap(x):
        return 1 + m_derivs(sel, x, 0)[0] - m0 - m1 * (x - zstar0)

    h = z - zstar0
    base = one_plus_gap(z)
    if np.any(base <= 0):
        raise DivergenceError(f"1 + G vanishes at z={z[np.argmax(base <= 0)]}, shrink the grid")

    u1 = pstar * h
    for n in range(SERIES_MAX_TERMS):
        values = one_plus_gap(zstar0 + h * 2.0 ** -n)
        if np.any(values <= 0):
            raise DivergenceError("1 + G vanishes inside the series")
        term = 2.0 ** n * np.log(values)
        u1 = u1 + term
        if np.all(np.abs(term) < SERIES_TOL * (1 + np.abs(u1))):
            break
    else:
        logger.debug(f"U1 series truncated after {SERIES_MAX_TERMS} terms")

    return Profile(z, h ** 2 / 2, h, Mode.INFINITESIMAL, c, zstar0, u1)


def infinitesimal_lambda1_identity(profile: Profile, c: float) -> float:
    """Returns -U1''(zstar0)/4 - c U1'(zstar0), estimated by finite differences on the profile grid."""
    assert(isinstance(profile, Profile))
    assert(profile.mode == Mode.INFINITESIMAL)
    assert(profile.u1 is not None)

    d1 = np.gradient(profile.u1, profile.z)
    d2 = np.gradient(d1, profile.z)
    slope = float(np.interp(profile.zstar0, profile.z, d1))
    curvature = float(np.interp(profile.zstar0, profile.z, d2))

    return -curvature / 4 - c * slope


def predict(mode: Mode, kernel: Optional[KernelSpec], sel: SelectionSpec, eps: float, c: float,
            order: Order = Order.FIRST_CORRECTION) -> AsymptoticPrediction:
    """Prediction of the requested order for either mode. Below `C_SEAM` the asexual corrections
    take their c = 0 values lambda1 = -1/2, zstar1 = 0 and Var = eps."""
    assert(isinstance(mode, Mode))
    assert(isinstance(order, Order))

    if mode == Mode.ASEXUAL:
        assert(isinstance(kernel, KernelSpec))
        if order == Order.LEADING:
            return asexual_leading(kernel, sel, eps, c)
        if c < C_SEAM:
            return _asexual_seam(kernel, sel, eps, c)
        return asexual_correction(kernel, sel, eps, c)

    if order == Order.LEADING:
        return infinitesimal_leading(sel, eps, c)
    return infinitesimal_correction(sel, eps, c)


def _asexual_critical_speeds(kernel: KernelSpec, sel: SelectionSpec, params: ModelParams) -> CriticalSpeeds:
    scale = params.speed_scale(Mode.ASEXUAL)
    target = (params.beta - params.mu0) / params.beta
    eps = params.eps

    leading = lagrangian_inverse(kernel, target)

    def first_order_load(c: float) -> float:
        law = lagrangian(kernel, c)
        return law.value + 0.5 * eps * math.sqrt(1 / law.curvature) - target

    if first_order_load(0.0) >= 0:
        corrected = 0.0
    else:
        corrected = solve_increasing(first_order_load, 0.0, max(leading, 1e-3))

    bound = sup(sel)
    tip = math.inf if math.isinf(bound) else scale * lagrangian_inverse(kernel, bound)

    return CriticalSpeeds(c_star=scale * corrected, c_star_leading=scale * leading, c_tip=tip)


def _infinitesimal_critical_speeds(sel: SelectionSpec, params: ModelParams) -> CriticalSpeeds:
    scale = params.speed_scale(Mode.INFINITESIMAL)
    target = (params.beta - params.mu0) / params.beta
    eps = params.eps

    inflection, max_slope = max_gradient(sel)
    tip = scale * max_slope

    try:
        z = m_inverse_pos(sel, target)
        leading = max_slope if z > inflection else m_derivs(sel, z, 1)[1]
    except BeyondRangeError:
        leading = max_slope

    def corrected_fitness(c: float) -> float:
        return infinitesimal_correction(sel, eps, c).lam - params.mu0 / params.beta

    high = leading if leading < max_slope else leading * (1 - 1e-6)
    try:
        corrected = brentq(corrected_fitness, 0.0, high, xtol=1e-14)
    except (ValueError, RuntimeError, DegenerateError, TippingError):
        logger.debug(f"No sign change of the corrected mean fitness on [0, {high}], using the leading speed")
        corrected = leading

    return CriticalSpeeds(c_star=scale * corrected, c_star_leading=scale * leading, c_tip=tip)


def critical_speeds(mode: Mode, kernel: Optional[KernelSpec], sel: SelectionSpec,
                    params: ModelParams) -> CriticalSpeeds:
    """Dimensional critical speeds for a scaled selection function and dimensional parameters.

    For asexual reproduction c_star does not depend on the selection function:
    sigma beta L^-1((beta - mu0)/beta) at leading order. The tipping speed is sigma beta L^-1(sup m),
    which is sqrt(2 sigma^2 beta sup m_dim) for the diffusion kernel. For infinitesimal reproduction
    the tipping speed is sigma^2 sqrt(alpha beta) max m', and c_star is the gradient at the lag where
    the mean fitness vanishes, capped by the tipping speed.
    """
    assert(isinstance(mode, Mode))
    assert(isinstance(sel, SelectionSpec))
    assert(isinstance(params, ModelParams))

    if mode == Mode.ASEXUAL:
        assert(isinstance(kernel, KernelSpec))
        return _asexual_critical_speeds(kernel, sel, params)
    return _infinitesimal_critical_speeds(sel, params)


def variance_trend(kernel: KernelSpec, sel: SelectionSpec, c: float, tolerance: float = 1e-6) -> Trend:
    """Whether the asexual standing variance -eps c/m'(zstar0) grows with the speed around `c`.

    The derivative of c/m'(|zstar0(c)|) is taken by central differences with step 1e-4 c. For the
    diffusion kernel it is also the convexity of c -> m^-1(L(c)), which is checked and logged.

    Raises:
        TippingError: Near or beyond the tipping speed.
    """
    assert(isinstance(kernel, KernelSpec))
    assert(isinstance(sel, SelectionSpec))
    assert(c > 0)

    def ratio(speed: float) -> float:
        lag = _lag_from_load(sel, lagrangian(kernel, speed, LagrangianOrder.VALUE).value)
        return speed / m_derivs(sel, abs(lag), 1)[1]

    step = 1e-4 * c
    derivative = central_difference(ratio, c, step)
    level = abs(ratio(c)) / c

    if derivative > tolerance * level:
        trend = Trend.INCREASING
    elif derivative < -tolerance * level:
        trend = Trend.DECREASING
    else:
        trend = Trend.FLAT

    if kernel.family == KernelFamily.DIFFUSION and trend != Trend.FLAT:
        def lag(speed: float) -> float:
            return -_lag_from_load(sel, speed ** 2 / 2)

        convexity = lag(c + step) - 2 * lag(c) + lag(c - step)
        if (convexity > 0) != (trend == Trend.INCREASING):
            logger.warning(f"Variance trend {trend.name} at c={c} disagrees with the convexity of the lag")

    return trend
