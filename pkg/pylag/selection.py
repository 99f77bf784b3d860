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

from pylag import BeyondGradientError, BeyondRangeError
from pylag.numeric import solve_increasing

DEFAULT_A6 = 1 / 64


class SelectionFamily(Enum):
    QUADRATIC = auto()
    SUPER_QUADRATIC = auto()
    BOUNDED = auto()


class Shape(Enum):
    SUB_QUADRATIC = auto()
    QUADRATIC = auto()
    SUPER_QUADRATIC = auto()


class ShapeClassification(NamedTuple):
    asexual: Shape
    infinitesimal: Shape


class SelectionSpec:
    """Increment of mortality m(z), in adimensional units where m(0) = m'(0) = 0 and m''(0) = 1.

    The three families are:

        Quadratic:       m(z) = z^2/2
        SuperQuadratic:  m(z) = z^2/2 + a6 z^6
        Bounded:         m(z) = m_inf (1 - exp(-z^2/(2 m_inf)))

    Attributes:
        family: Selection family.
        a6: Coefficient of the sextic term, `SUPER_QUADRATIC` only.
        m_inf: Supremum of m, `BOUNDED` only.
    """

    def __init__(self, family: SelectionFamily, a6: Optional[float] = None, m_inf: Optional[float] = None):
        assert(isinstance(family, SelectionFamily))

        self.family = family
        self.a6 = None
        self.m_inf = None

        if family == SelectionFamily.SUPER_QUADRATIC:
            self.a6 = float(DEFAULT_A6 if a6 is None else a6)
            assert(self.a6 >= 0)
        elif family == SelectionFamily.BOUNDED:
            assert(m_inf is not None)
            self.m_inf = float(m_inf)
            assert(self.m_inf > 0)

    @staticmethod
    def quadratic() -> 'SelectionSpec':
        return SelectionSpec(SelectionFamily.QUADRATIC)

    @staticmethod
    def super_quadratic(a6: float = DEFAULT_A6) -> 'SelectionSpec':
        return SelectionSpec(SelectionFamily.SUPER_QUADRATIC, a6=a6)

    @staticmethod
    def bounded(m_inf: float) -> 'SelectionSpec':
        return SelectionSpec(SelectionFamily.BOUNDED, m_inf=m_inf)

    @staticmethod
    def from_dimensional(family: SelectionFamily, alpha: float, beta: float,
                         a6: Optional[float] = None, m_inf: Optional[float] = None) -> 'SelectionSpec':
        """Scales a dimensional selection function.

        The dimensional families are alpha z^2/2, alpha z^2/2 + a6 z^6 and
        m_inf (1 - exp(-alpha z^2/(2 m_inf))). With traits measured in units of sqrt(beta/alpha)
        and rates in units of beta, they become the adimensional families with
        a6 -> a6 beta^2/alpha^3 and m_inf -> m_inf/beta.
        """
        assert(isinstance(family, SelectionFamily))
        assert(alpha > 0)
        assert(beta > 0)

        if family == SelectionFamily.SUPER_QUADRATIC:
            a6 = DEFAULT_A6 if a6 is None else a6
            return SelectionSpec.super_quadratic(a6 * beta ** 2 / alpha ** 3)
        elif family == SelectionFamily.BOUNDED:
            return SelectionSpec.bounded(m_inf / beta)
        else:
            return SelectionSpec.quadratic()

    @staticmethod
    def from_name(name: str, a6: Optional[float] = None, m_inf: Optional[float] = None) -> 'SelectionSpec':
        try:
            family = SelectionFamily[name.upper()]
        except KeyError:
            raise ValueError(f"Unknown selection family '{name}'")

        return SelectionSpec(family, a6=a6, m_inf=m_inf)

    @property
    def name(self) -> str:
        return self.family.name.lower()

    @property
    def label(self) -> str:
        if self.family == SelectionFamily.SUPER_QUADRATIC:
            return f"super_quadratic({self.a6:g})"
        elif self.family == SelectionFamily.BOUNDED:
            return f"bounded({self.m_inf:g})"
        return self.name

    def m(self, z):
        return m_derivs(self, z, 0)[0]

    def to_dict(self) -> dict:
        result = {'family': self.name}
        if self.a6 is not None:
            result['a6'] = self.a6
        if self.m_inf is not None:
            result['m_inf'] = self.m_inf
        return result

    def __eq__(self, other):
        assert(isinstance(other, SelectionSpec))
        return self.family == other.family and self.a6 == other.a6 and self.m_inf == other.m_inf

    def __hash__(self):
        return hash((self.family, self.a6, self.m_inf))

    def __repr__(self):
        return f"SelectionSpec({pformat(vars(self))})"


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def m_derivs(sel: SelectionSpec, z: Union[float, np.ndarray], upto: int = 3) -> Tuple:
    """Returns (m, m', m'', m''') at `z`, truncated after the derivative of order `upto`."""
    assert(isinstance(sel, SelectionSpec))
    assert(0 <= upto <= 3)
    z = np.asarray(z, dtype=float)

    if sel.family == SelectionFamily.BOUNDED:
        big_m = sel.m_inf
        e = np.exp(-z ** 2 / (2 * big_m))
        values = (-big_m * np.expm1(-z ** 2 / (2 * big_m)),
                  z * e,
                  (1 - z ** 2 / big_m) * e,
                  (z / big_m) * (z ** 2 / big_m - 3) * e)
    else:
        values = (z ** 2 / 2, z, np.ones_like(z), np.zeros_like(z))
        if sel.family == SelectionFamily.SUPER_QUADRATIC:
            a6 = sel.a6
            values = (values[0] + a6 * z ** 6,
                      values[1] + 6 * a6 * z ** 5,
                      values[2] + 30 * a6 * z ** 4,
                      values[3] + 120 * a6 * z ** 3)

    return tuple(_scalar(value) for value in values[:upto + 1])


def sup(sel: SelectionSpec) -> float:
    """Supremum of m: `m_inf` for bounded selection, +inf otherwise."""
    assert(isinstance(sel, SelectionSpec))
    return sel.m_inf if sel.family == SelectionFamily.BOUNDED else math.inf


def max_gradient(sel: SelectionSpec) -> Tuple[float, float]:
    """Location and value of the maximum of m' on z >= 0.

    Bounded selection reaches it at the inflection point sqrt(m_inf), with value
    sqrt(m_inf) exp(-1/2). The other families have unbounded gradients.
    """
    assert(isinstance(sel, SelectionSpec))

    if sel.family == SelectionFamily.BOUNDED:
        z = math.sqrt(sel.m_inf)
        return z, z * math.exp(-0.5)

    return math.inf, math.inf


def m_inverse_pos(sel: SelectionSpec, v: float) -> float:
    """The unique z >= 0 with m(z) = `v`.

    Raises:
        BeyondRangeError: If `v` is not below sup m.
    """
    assert(isinstance(sel, SelectionSpec))
    assert(v >= 0)

    if v >= sup(sel):
        raise BeyondRangeError(f"No trait reaches a mortality increment of {v} under {sel.label} selection")
    if v == 0:
        return 0.0

    if sel.family == SelectionFamily.QUADRATIC:
        return math.sqrt(2 * v)
    elif sel.family == SelectionFamily.BOUNDED:
        return math.sqrt(-2 * sel.m_inf * math.log1p(-v / sel.m_inf))
    else:
        return solve_increasing(lambda z: m_derivs(sel, z, 0)[0] - v, 0.0, math.sqrt(2 * v),
                                df=lambda z: m_derivs(sel, z, 1)[1])


def gradient_inverse_convex(sel: SelectionSpec, g: float) -> float:
    """Smallest z >= 0 with m'(z) = `g`, the root on the convex branch.

    Raises:
        BeyondGradientError: If `g` exceeds the maximum of m' on z >= 0.
    """
    assert(isinstance(sel, SelectionSpec))
    assert(g >= 0)

    z_max, g_max = max_gradient(sel)
    if g > g_max:
        raise BeyondGradientError(f"Gradient {g} exceeds the maximal gradient {g_max} of {sel.label} selection")
    if g == 0:
        return 0.0
    if sel.family == SelectionFamily.QUADRATIC:
        return float(g)
    if g >= g_max * (1 - 1e-15):
        return z_max

    return solve_increasing(lambda z: m_derivs(sel, z, 1)[1] - g, 0.0, min(g, 0.5 * z_max), limit=z_max,
                            df=lambda z: m_derivs(sel, z, 2)[2])


def gradient_inverse_concave(sel: SelectionSpec, g: float) -> Optional[float]:
    """Root of m'(z) = `g` on the concave branch, past the inflection point.

    Returns:
        The root, `math.inf` for `g = 0`, or `None` for families whose gradient is unbounded.

    Raises:
        BeyondGradientError: If `g` exceeds the maximum of m' on z >= 0.
    """
    assert(isinstance(sel, SelectionSpec))
    assert(g >= 0)

    z_max, g_max = max_gradient(sel)
    if math.isinf(g_max):
        return None
    if g > g_max:
        raise BeyondGradientError(f"Gradient {g} exceeds the maximal gradient {g_max} of {sel.label} selection")
    if g == 0:
        return math.inf
    if g >= g_max * (1 - 1e-15):
        return z_max

    return solve_increasing(lambda z: g - m_derivs(sel, z, 1)[1], z_max, z_max,
                            df=lambda z: -m_derivs(sel, z, 2)[2])


def _sign_to_shape(value: float, tolerance: float = 1e-12) -> Shape:
    if value > tolerance:
        return Shape.SUPER_QUADRATIC
    elif value < -tolerance:
        return Shape.SUB_QUADRATIC
    else:
        return Shape.QUADRATIC


def classify_shape(sel: SelectionSpec, z: float) -> ShapeClassification:
    """Sub-/super-quadratic classification of the selection function around |z|.

    The asexual criterion compares m'' m/(m')^2 with 1/2. The infinitesimal criterion is the sign of
    m''' on the lagging side z < 0, where a negative third derivative means super-quadratic.
    """
    assert(isinstance(sel, SelectionSpec))
    assert(z != 0)

    lag = -abs(z)
    m, m1, m2, m3 = m_derivs(sel, lag, 3)

    return ShapeClassification(asexual=_sign_to_shape(m2 * m / m1 ** 2 - 0.5),
                               infinitesimal=_sign_to_shape(-m3))
