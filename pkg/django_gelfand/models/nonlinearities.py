import logging
import math

from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial as _Poly

from django.core.exceptions import ValidationError
from django.db import models


logger = logging.getLogger(__name__)


class Convexity(models.TextChoices):
    STRICTLY_CONVEX = 'strictly-convex', 'Strictly convex'
    CONVEX = 'convex', 'Convex'
    NON_CONVEX = 'non-convex', 'Non-convex'


def _polynomial_sign_class(poly: _Poly, start: float, stop: float = math.inf) -> int:
    """
    Sign of a polynomial on [start, stop): 1 if > 0 everywhere except
    possibly at isolated points, 0 if >= 0 with a zero interval, -1 if it
    takes negative values.
    """
    coef = np.trim_zeros(poly.coef, 'b')
    if coef.size == 0:
        return 0
    poly = _Poly(coef)
    if poly.degree() == 0:
        return 1 if coef[0] > 0 else (0 if coef[0] == 0 else -1)
    roots = [r.real for r in poly.roots() if abs(r.imag) < 1e-12 and start < r.real < stop]
    points = sorted(set([start] + roots))
    tail = points[-1] + 1.0 if math.isinf(stop) else stop
    samples = [start] + [0.5 * (a + b) for a, b in zip(points, points[1:] + [tail])]
    values = poly(np.array(samples))
    if np.any(values < -1e-12):
        return -1
    return 1


class Nonlinearity:
    """
    A C¹ scalar function f with the metadata the λ* machinery needs.

    Subclasses implement `value`, `derivative`, `second_derivative` and
    `primitive` (F with F(0) = 0) on numpy arrays or floats.
    """

    kind = None
    convexity = Convexity.NON_CONVEX
    superlinear = False
    admissible = True

    def value(self, s):
        raise NotImplementedError

    def derivative(self, s):
        raise NotImplementedError

    def second_derivative(self, s):
        raise NotImplementedError

    def primitive(self, s):
        raise NotImplementedError

    def evaluate(self, s: float) -> Tuple[float, float]:
        """
        Returns (f(s), f'(s)).

        Raises:
            ValidationError: s < 0 for a Gelfand-admissible kind.
        """
        s = float(s)
        if self.admissible and s < 0:
            raise ValidationError(f"{self.spec} is only defined for s >= 0, got {s}", code='negative_argument')
        return float(self.value(s)), float(self.derivative(s))

    @property
    def strictly_convex(self) -> bool:
        return self.convexity == Convexity.STRICTLY_CONVEX

    def growth_constant(self) -> float:
        """c₁ = inf_{s>0} f(s)/s; 0 when f grows sublinearly."""
        from django_gelfand.scalar import growth_constant
        return growth_constant(self)

    @property
    def spec(self) -> str:
        return str(self.kind)

    def __str__(self):
        return self.spec

    def __repr__(self):
        return f"<{self.__class__.__name__}: {self.spec} ({self.convexity})>"


class Exp(Nonlinearity):
    kind = 'exp'
    convexity = Convexity.STRICTLY_CONVEX
    superlinear = True

    def value(self, s):
        return np.exp(s)

    def derivative(self, s):
        return np.exp(s)

    def second_derivative(self, s):
        return np.exp(s)

    def primitive(self, s):
        return np.expm1(s)

    def growth_constant(self) -> float:
        return math.e


class Power(Nonlinearity):
    """f(s) = (1 + s)^p, p >= 1."""

    kind = 'power'

    def __init__(self, p: float = 2.0):
        p = float(p)
        if not p >= 1:
            raise ValidationError(f"Power exponent must be >= 1, got {p}", code='out_of_range')
        self.p = p
        self.convexity = Convexity.STRICTLY_CONVEX if p > 1 else Convexity.CONVEX
        self.superlinear = p > 1

    def value(self, s):
        return np.power(1.0 + np.asarray(s, dtype=float), self.p)

    def derivative(self, s):
        return self.p * np.power(1.0 + np.asarray(s, dtype=float), self.p - 1)

    def second_derivative(self, s):
        return self.p * (self.p - 1) * np.power(1.0 + np.asarray(s, dtype=float), self.p - 2)

    def primitive(self, s):
        return (np.power(1.0 + np.asarray(s, dtype=float), self.p + 1) - 1.0) / (self.p + 1)

    def growth_constant(self) -> float:
        if self.p == 1:
            return 1.0
        # (1+s)^p / s is minimal at s = 1 / (p - 1).
        s = 1.0 / (self.p - 1)
        return float((1.0 + s) ** self.p / s)

    @property
    def spec(self) -> str:
        return f"power:{self.p:g}"


class Affine(Nonlinearity):
    """f(s) = 1 + s: convex, c₁ = 1, no extremal solution."""

    kind = 'affine'
    convexity = Convexity.CONVEX

    def value(self, s):
        return 1.0 + np.asarray(s, dtype=float)

    def derivative(self, s):
        return np.ones_like(np.asarray(s, dtype=float))

    def second_derivative(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def primitive(self, s):
        s = np.asarray(s, dtype=float)
        return s + 0.5 * s * s

    def growth_constant(self) -> float:
        return 1.0


class AllenCahn(Nonlinearity):
    """f(s) = s - s³. Not admissible: f(0) = 0 and f decreases past 1/√3."""

    kind = 'allen-cahn'
    admissible = False

    def value(self, s):
        s = np.asarray(s, dtype=float)
        return s - s ** 3

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        return 1.0 - 3.0 * s * s

    def second_derivative(self, s):
        return -6.0 * np.asarray(s, dtype=float)

    def primitive(self, s):
        s = np.asarray(s, dtype=float)
        return 0.5 * s ** 2 - 0.25 * s ** 4


class Log(Nonlinearity):
    """f(s) = 1 + log(1 + s): admissible but sublinear, so λ* = +∞."""

    kind = 'log'

    def value(self, s):
        return 1.0 + np.log1p(s)

    def derivative(self, s):
        return 1.0 / (1.0 + np.asarray(s, dtype=float))

    def second_derivative(self, s):
        return -1.0 / (1.0 + np.asarray(s, dtype=float)) ** 2

    def primitive(self, s):
        s = np.asarray(s, dtype=float)
        return (1.0 + s) * np.log1p(s)

    def growth_constant(self) -> float:
        return 0.0


class Polynomial(Nonlinearity):
    """Polynomial with ascending coefficients; convexity read off f'' on [0, ∞)."""

    kind = 'poly'

    def __init__(self, coeffs: Sequence[float]):
        coeffs = [float(c) for c in coeffs]
        if not coeffs or not all(math.isfinite(c) for c in coeffs):
            raise ValidationError("Polynomial needs finite coefficients", code='unknown_nonlinearity')
        self.coeffs = tuple(coeffs)
        self._poly = _Poly(coeffs)
        self._d1 = self._poly.deriv(1)
        self._d2 = self._poly.deriv(2)
        self._d3 = self._poly.deriv(3)
        self._int = self._poly.integ(1, lbnd=0)

        sign = _polynomial_sign_class(self._d2, 0.0)
        if sign < 0:
            self.convexity = Convexity.NON_CONVEX
        elif np.count_nonzero(np.trim_zeros(self._d2.coef, 'b')) == 0:
            self.convexity = Convexity.CONVEX
        else:
            self.convexity = Convexity.STRICTLY_CONVEX
        degree = len(np.trim_zeros(np.array(coeffs), 'b')) - 1
        self.superlinear = degree >= 2 and coeffs[degree] > 0
        self.admissible = coeffs[0] > 0 and _polynomial_sign_class(self._d1, 0.0) >= 0

    def value(self, s):
        return self._poly(np.asarray(s, dtype=float))

    def derivative(self, s):
        return self._d1(np.asarray(s, dtype=float))

    def second_derivative(self, s):
        return self._d2(np.asarray(s, dtype=float))

    def primitive(self, s):
        return self._int(np.asarray(s, dtype=float))

    @property
    def spec(self) -> str:
        return 'poly:' + ','.join(f"{c:g}" for c in self.coeffs)


class PiecewiseC1(Nonlinearity):
    """
    Piecewise polynomial f. Segment i covers [knot_i, knot_{i+1}) (the last
    one runs to infinity) and its coefficients are ascending powers of the
    local variable s - knot_i. The first knot must be 0 and consecutive
    segments must agree in value and first derivative at each knot.
    """

    kind = 'piecewise'

    def __init__(self, segments: Sequence[Tuple[float, Sequence[float]]], source: Optional[str] = None):
        segments = sorted(((float(k), tuple(float(c) for c in coeffs)) for k, coeffs in segments), key=lambda seg: seg[0])
        if not segments:
            raise ValidationError("Piecewise nonlinearity needs at least one segment", code='unknown_nonlinearity')
        if segments[0][0] != 0.0:
            raise ValidationError("The first segment must start at 0", code='not_c1')
        knots = [k for k, _ in segments]
        if len(set(knots)) != len(knots):
            raise ValidationError("Segment knots must be distinct", code='not_c1')
        self.source = source
        self.knots = np.array(knots)
        self.segments = [_Poly(coeffs) for _, coeffs in segments]
        self.raw_segments = segments

        for i in range(1, len(self.segments)):
            width = self.knots[i] - self.knots[i - 1]
            left, right = self.segments[i - 1], self.segments[i]
            value_gap = abs(left(width) - right(0.0))
            slope_gap = abs(left.deriv(1)(width) - right.deriv(1)(0.0))
            if value_gap > 1e-12 * max(1.0, abs(right(0.0))) or slope_gap > 1e-12 * max(1.0, abs(right.deriv(1)(0.0))):
                raise ValidationError(
                    f"Segments are not C1 at s={self.knots[i]:g} (value gap {value_gap:.3g}, slope gap {slope_gap:.3g})",
                    code='not_c1'
                )

        signs = []
        for i, poly in enumerate(self.segments):
            stop = self.knots[i + 1] - self.knots[i] if i + 1 < len(self.segments) else math.inf
            d2 = poly.deriv(2)
            if np.count_nonzero(np.trim_zeros(d2.coef, 'b')) == 0:
                signs.append(0)
            else:
                signs.append(_polynomial_sign_class(d2, 0.0, stop))
        if min(signs) < 0:
            self.convexity = Convexity.NON_CONVEX
        elif min(signs) == 0:
            self.convexity = Convexity.CONVEX
        else:
            self.convexity = Convexity.STRICTLY_CONVEX
        last = np.trim_zeros(self.segments[-1].coef, 'b')
        self.superlinear = len(last) >= 3 and last[-1] > 0
        self.admissible = self.segments[0](0.0) > 0 and all(
            _polynomial_sign_class(poly.deriv(1), 0.0,
                                   self.knots[i + 1] - self.knots[i] if i + 1 < len(self.segments) else math.inf) >= 0
            for i, poly in enumerate(self.segments)
        )
        # F at each knot, so the primitive is exact per segment.
        offsets = [0.0]
        for i in range(1, len(self.segments)):
            width = self.knots[i] - self.knots[i - 1]
            offsets.append(offsets[-1] + float(self.segments[i - 1].integ(1, lbnd=0)(width)))
        self._offsets = offsets

    def _dispatch(self, s, evaluate):
        s = np.asarray(s, dtype=float)
        index = np.clip(np.searchsorted(self.knots, s, side='right') - 1, 0, len(self.segments) - 1)
        out = np.empty_like(s)
        for i in np.unique(index):
            mask = index == i
            out[mask] = evaluate(i, s[mask] - self.knots[i])
        return out if out.ndim else float(out)

    def value(self, s):
        return self._dispatch(s, lambda i, t: self.segments[i](t))

    def derivative(self, s):
        return self._dispatch(s, lambda i, t: self.segments[i].deriv(1)(t))

    def second_derivative(self, s):
        return self._dispatch(s, lambda i, t: self.segments[i].deriv(2)(t))

    def primitive(self, s):
        return self._dispatch(s, lambda i, t: self._offsets[i] + self.segments[i].integ(1, lbnd=0)(t))

    @property
    def spec(self) -> str:
        if self.source:
            return f"piecewise:{self.source}"
        return 'piecewise:' + ';'.join(
            f"{k:g}=" + ','.join(f"{c:g}" for c in coeffs) for k, coeffs in self.raw_segments
        )


class Truncated(Nonlinearity):
    """
    f evaluated at the argument clipped to [lower, upper], derivative 0
    outside. This is the nonlinearity of the sub/supersolution truncation.
    """

    kind = 'clip'

    def __init__(self, base: Nonlinearity, lower: float, upper: float):
        if not lower < upper:
            raise ValidationError(f"Truncation needs lower < upper, got [{lower}, {upper}]", code='out_of_range')
        self.base = base
        self.lower = float(lower)
        self.upper = float(upper)
        self.admissible = base.admissible
        self.convexity = Convexity.NON_CONVEX
        self.superlinear = False

    def value(self, s):
        return self.base.value(np.clip(s, self.lower, self.upper))

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s >= self.lower) & (s <= self.upper)
        return np.where(inside, self.base.derivative(np.clip(s, self.lower, self.upper)), 0.0)

    def second_derivative(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s > self.lower) & (s < self.upper)
        return np.where(inside, self.base.second_derivative(np.clip(s, self.lower, self.upper)), 0.0)

    def primitive(self, s):
        s = np.asarray(s, dtype=float)
        clipped = np.clip(s, self.lower, self.upper)
        return self.base.primitive(clipped) + self.base.value(clipped) * (s - clipped)

    def growth_constant(self) -> float:
        return 0.0

    @property
    def spec(self) -> str:
        return f"clip:{self.lower:g},{self.upper:g}:{self.base.spec}"


def truncate(f: Nonlinearity, lower: float, upper: float) -> Truncated:
    return Truncated(f, lower, upper)


def read_piecewise_file(path) -> PiecewiseC1:
    """
    Read segments from a text file, one `<knot> <c0>,<c1>,...` per line,
    '#' starting a comment.

    Raises:
        ValidationError: unreadable file or malformed line (with its number).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ValidationError(f"Cannot read piecewise file {path}: {e}", code='unknown_nonlinearity')
    except UnicodeDecodeError as e:
        raise ValidationError(f"Piecewise file {path} is not UTF-8 text: {e}", code='parse_error')
    segments = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        try:
            knot = float(parts[0])
            coeffs = [float(c) for c in parts[1].replace(' ', '').split(',')]
        except (IndexError, ValueError):
            raise ValidationError(f"{path}:{number}: malformed segment line: {raw!r}", code='malformed_line')
        segments.append((knot, coeffs))
    return PiecewiseC1(segments, source=str(path))


def _floats(text: str, spec: str) -> List[float]:
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise ValidationError(f"Malformed numbers in nonlinearity spec {spec!r}", code='unknown_nonlinearity')


def parse_nonlinearity(spec: str) -> Nonlinearity:
    """
    Parse a nonlinearity spec string.

    Accepted forms: `exp`, `power:<p>`, `affine`, `allen-cahn`, `log`,
    `poly:<c0>,<c1>,...` (ascending coefficients), `piecewise:<file>`,
    inline `piecewise:<k0>=<c0>,<c1>;<k1>=...` (coefficients in s - k),
    and `clip:<lo>,<hi>:<spec>` for a truncated nonlinearity.

    Raises:
        ValidationError: code 'unknown_nonlinearity' for anything else.

    Examples:
        >>> parse_nonlinearity('poly:1,36,24,-10,1').evaluate(0)
        (1.0, 36.0)
    """
    spec = (spec or '').strip()
    name, _, rest = spec.partition(':')
    name = name.lower()
    if name == 'exp' and not rest:
        return Exp()
    if name == 'affine' and not rest:
        return Affine()
    if name in ('allen-cahn', 'allencahn') and not rest:
        return AllenCahn()
    if name == 'log' and not rest:
        return Log()
    if name == 'power':
        values = _floats(rest, spec) if rest else [2.0]
        if len(values) != 1:
            raise ValidationError(f"power takes one exponent: {spec!r}", code='unknown_nonlinearity')
        return Power(values[0])
    if name == 'poly' and rest:
        return Polynomial(_floats(rest, spec))
    if name == 'piecewise' and '=' in rest:
        segments = []
        for chunk in rest.split(';'):
            knot, _, coeffs = chunk.partition('=')
            segments.append((_floats(knot, spec)[0] if knot.strip() else 0.0, _floats(coeffs, spec)))
        return PiecewiseC1(segments)
    if name == 'piecewise' and rest:
        from django_gelfand.conf import gelfand_settings
        return read_piecewise_file(gelfand_settings.resolve_graph_path(rest))
    if name == 'clip' and rest:
        bounds, _, inner = rest.partition(':')
        values = _floats(bounds, spec)
        if len(values) != 2 or not inner:
            raise ValidationError(f"clip needs 'clip:<lo>,<hi>:<spec>': {spec!r}", code='unknown_nonlinearity')
        return truncate(parse_nonlinearity(inner), values[0], values[1])
    raise ValidationError(f"Unknown nonlinearity: {spec!r}", code='unknown_nonlinearity')
