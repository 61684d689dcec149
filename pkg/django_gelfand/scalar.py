"""
Scalar analysis: Lambert W branches, the critical point s₀ of g(s) = s/f(s),
the envelope inverses g₁⁻¹, g₂⁻¹ and the resulting bounds on λ*.
"""
import logging
import math

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from django.core.exceptions import ValidationError

from .models.nonlinearities import Exp, Nonlinearity


logger = logging.getLogger(__name__)

BRANCH_POINT = -1.0 / math.e
_HALLEY_MAX_ITER = 50
_EPS = np.finfo(float).eps


def _halley(x: float, w: float) -> float:
    for _ in range(_HALLEY_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            break
        d1 = ew * (w + 1.0)
        d2 = ew * (w + 2.0)
        denom = 2.0 * d1 * d1 - f * d2
        if denom == 0.0:
            break
        step = 2.0 * f * d1 / denom
        w -= step
        if abs(step) <= 4.0 * _EPS * (1.0 + abs(w)):
            break
    return w


def lambert_w0(x: float) -> float:
    """
    Principal branch W₀: w e^w = x with w >= -1, for x >= -1/e.

    Raises:
        ValidationError: x below the branch point -1/e.
    """
    x = float(x)
    if not x >= BRANCH_POINT - 1e-15:
        raise ValidationError(f"W0 is undefined below -1/e, got {x!r}", code='out_of_range')
    if x <= BRANCH_POINT:
        return -1.0
    if x == 0.0:
        return 0.0
    if x < 0:
        w = -1.0 + math.sqrt(2.0 * (math.e * x + 1.0))
    elif x < 3.0:
        w = math.log1p(x)
    else:
        l1 = math.log(x)
        w = l1 - math.log(l1)
    return max(_halley(x, w), -1.0)


def lambert_wm1(x: float) -> float:
    """
    Lower branch W₋₁: w e^w = x with w <= -1, for -1/e <= x < 0.

    Raises:
        ValidationError: x outside [-1/e, 0).
    """
    x = float(x)
    if not (BRANCH_POINT - 1e-15 <= x < 0.0):
        raise ValidationError(f"W-1 is defined on [-1/e, 0), got {x!r}", code='out_of_range')
    if x <= BRANCH_POINT:
        return -1.0
    if x < -0.25:
        w = -1.0 - math.sqrt(2.0 * (math.e * x + 1.0))
    else:
        l1 = math.log(-x)
        w = l1 - math.log(-l1)
    return min(_halley(x, w), -1.0)


def g_ratio(f: Nonlinearity, s):
    """g(s) = s / f(s)."""
    return s / f.value(s)


@dataclass
class Envelope:
    """
    The two monotone inverses of g(s) = s/f(s) around its maximizer s₀.

    For affine-like f there is no maximizer: `s0` is None and `lambda_cap`
    is the (unattained) supremum of g.
    """

    f: Nonlinearity
    s0: Optional[float]
    lambda_cap: float

    @property
    def exists(self) -> bool:
        return self.s0 is not None

    def _check(self, lam: float, allow_zero: bool) -> float:
        if not self.exists:
            raise ValidationError(f"{self.f.spec} has no critical point s0; envelope bounds are unavailable", code='no_critical_point')
        lam = float(lam)
        low_ok = lam >= 0 if allow_zero else lam > 0
        if not (low_ok and lam <= self.lambda_cap * (1 + 1e-12)):
            raise ValidationError(f"lambda={lam!r} outside (0, {self.lambda_cap!r}]", code='out_of_range')
        return min(lam, self.lambda_cap)

    def g1_inv(self, lam: float) -> float:
        lam = self._check(lam, allow_zero=True)
        if lam == 0.0:
            return 0.0
        if lam == self.lambda_cap:
            return self.s0
        if isinstance(self.f, Exp):
            return -lambert_w0(-lam)
        return bisect(lambda s: g_ratio(self.f, s) - lam, 0.0, self.s0, xtol=1e-14, rtol=4 * _EPS, maxiter=400)

    def g2_inv(self, lam: float) -> float:
        lam = self._check(lam, allow_zero=False)
        if lam == self.lambda_cap:
            return self.s0
        if isinstance(self.f, Exp):
            return -lambert_wm1(-lam)
        upper = 2.0 * self.s0
        with np.errstate(over='ignore'):
            while g_ratio(self.f, upper) > lam:
                upper *= 2.0
                if upper > 1e300:
                    raise ValidationError(f"g2 inverse of {self.f.spec} at {lam!r} not bracketed", code='no_critical_point')
            return bisect(lambda s: g_ratio(self.f, s) - lam, self.s0, upper, xtol=1e-14, rtol=4 * _EPS, maxiter=400)


def critical_s0(f: Nonlinearity) -> Envelope:
    """
    Locate s₀, the root of h(s) = f(s) - s f'(s), and build the envelope.

    Raises:
        ValidationError: f not admissible, not convex, or convex without a
            strict maximizer of g; or h without a sign change.
    """
    if not f.admissible:
        raise ValidationError(f"{f.spec} does not satisfy the Gelfand hypotheses", code='not_admissible')
    if not f.superlinear and f.convexity in ('convex', 'strictly-convex'):
        c1 = f.growth_constant()
        return Envelope(f=f, s0=None, lambda_cap=math.inf if c1 == 0 else 1.0 / c1)
    if not (f.strictly_convex and f.superlinear):
        raise ValidationError(f"{f.spec} is not strictly convex and superlinear; h may not be monotone", code='non_convex')

    def h(s):
        return float(f.value(s) - s * f.derivative(s))

    upper = 1.0
    expansions = 0
    while h(upper) > 0:
        upper *= 2.0
        expansions += 1
        if expansions > 60:
            raise ValidationError(f"h(s) = f - s f' has no sign change for {f.spec}", code='no_critical_point')
    s0 = bisect(h, 0.0, upper, xtol=1e-12, maxiter=400)
    lambda_cap = float(s0 / f.value(s0))
    logger.debug(f"Critical point of {f.spec}: s0={s0:.15g}, lambda_cap={lambda_cap:.15g}")
    return Envelope(f=f, s0=float(s0), lambda_cap=lambda_cap)


def envelope_bounds(envelope: Envelope, lam: float) -> Tuple[float, float]:
    """(g₁⁻¹(λ), g₂⁻¹(λ)): every solution at λ has its maximum between these."""
    return envelope.g1_inv(lam), envelope.g2_inv(lam)


def lambda_star_upper_bound(envelope: Envelope, lam_m: float) -> float:
    """λ* <= λₘ · s₀ / f(s₀)."""
    return float(lam_m) * envelope.lambda_cap


def growth_constant(f: Nonlinearity) -> float:
    """
    c₁ = inf_{s>0} f(s)/s, computed on a logarithmic grid and refined with a
    bounded scalar minimization. Returns 0.0 for sublinear growth.
    """
    grid = np.logspace(-6, 6, 1201)
    with np.errstate(over='ignore', invalid='ignore'):
        ratio = np.asarray(f.value(grid), dtype=float) / grid
    ratio = np.where(np.isfinite(ratio), ratio, np.inf)
    i = int(np.argmin(ratio))
    if i == len(grid) - 1:
        # Still decreasing at the end of the grid: the infimum is the limit slope.
        slope = float(f.derivative(grid[-1]))
        return max(0.0, min(float(ratio[-1]), slope))
    lo = grid[max(i - 1, 0)]
    hi = grid[i + 1]
    result = minimize_scalar(lambda s: float(f.value(s)) / s, bounds=(lo, hi), method='bounded',
                             options={'xatol': 1e-12 * max(1.0, hi)})
    return float(min(result.fun, ratio[i]))
