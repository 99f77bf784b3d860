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
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from pylag import ConvergenceError


def expand_bracket(f: Callable[[float], float], lo: float, step: float, limit: float = math.inf,
                   factor: float = 2.0, max_steps: int = 200) -> Tuple[float, float]:
    """Finds `hi` such that an increasing function `f` changes sign on `[lo, hi]`.

    The upper end grows geometrically from `lo`. When `limit` is finite, the upper end
    approaches it geometrically instead and never reaches it, so `f` is only evaluated
    inside the open interval `(lo, limit)`.

    Args:
        f: Strictly increasing function with `f(lo) <= 0`.
        lo: Lower end of the bracket.
        step: Initial width of the bracket.
        limit: Exclusive upper limit of the domain of `f`.
        factor: Growth factor of the bracket width.
        max_steps: Number of growth steps before giving up.

    Returns:
        A pair `(lo, hi)` with `f(lo) <= 0 <= f(hi)`.
    """
    assert(isinstance(lo, float) or isinstance(lo, int))
    assert(step > 0)
    assert(limit > lo)

    low = float(lo)
    for k in range(1, max_steps + 1):
        high = lo + step * factor ** (k - 1)
        if not math.isinf(limit):
            high = min(high, limit - (limit - lo) * 2.0 ** -k)
        value = f(high)
        if value >= 0:
            return low, high
        low = high

    raise ConvergenceError(f"Unable to bracket the root of an increasing function from {lo} (limit {limit})")


def solve_increasing(f: Callable[[float], float], lo: float, step: float, limit: float = math.inf,
                     df: Optional[Callable[[float], float]] = None, xtol: float = 1e-12) -> float:
    """Solves `f(x) = 0` for a strictly increasing `f` on `[lo, limit)`.

    The bracket is grown geometrically from `lo` (see `expand_bracket`), refined by Brent's method
    and, when the derivative `df` is given, polished by one Newton step that is kept only if it stays
    inside the bracket and lowers the residual.

    Returns:
        The root, to `xtol`.
    """
    f_lo = f(lo)
    if f_lo == 0:
        return float(lo)
    if f_lo > 0:
        raise ConvergenceError(f"Increasing function is already positive at the lower end {lo}")

    low, high = expand_bracket(f, lo, step, limit)
    try:
        root = brentq(f, low, high, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as e:
        raise ConvergenceError(f"Root refinement on [{low}, {high}] failed ({e})")

    if df is not None:
        slope = df(root)
        if slope > 0:
            candidate = root - f(root) / slope
            if low <= candidate <= high and abs(f(candidate)) < abs(f(root)):
                root = candidate

    return float(root)


def central_difference(f: Callable[[float], float], x: float, h: float) -> float:
    return (f(x + h) - f(x - h)) / (2 * h)
