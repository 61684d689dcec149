"""
Built-in example corpus: small graphs with known answers.

Each example is a class registered under a name; parameters follow the name
after a colon, e.g. ``khat-n:1,1,0,5``.
"""
import logging
import math

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from django.core.exceptions import ValidationError

from .branch import find_solutions, lambda_star_bisect
from .formats import to_graph_text
from .models import DirichletDomain, Nonlinearity, WeightedGraph, parse_nonlinearity, truncate
from .scalar import lambert_w0, lambert_wm1
from .solver import minimal_solve, monotone_iterates, newton_solve
from .spectral import dirichlet_eigenpair


logger = logging.getLogger(__name__)

EXAMPLES: Dict[str, Type['BuiltinExample']] = {}


class Provenance:
    REFERENCE = 'reference'
    DERIVED = 'derived'
    TRIVIAL = 'trivial'


@dataclass
class Expectation:
    quantity: str
    value: float
    tolerance: float
    provenance: str
    measure: Callable[['BuiltinExample'], float]

    def check(self, example: 'BuiltinExample') -> Tuple[float, bool]:
        measured = float(self.measure(example))
        if math.isinf(self.value):
            return measured, measured == self.value
        return measured, abs(measured - self.value) <= self.tolerance


def register_example(name: str):
    """Class decorator adding an example to the corpus under `name`."""
    def decorator(cls):
        if name in EXAMPLES:
            raise ValidationError(f"Example {name!r} is already registered", code='duplicate_example')
        cls.name = name
        EXAMPLES[name] = cls
        return cls
    return decorator


class BuiltinExample:
    name: Optional[str] = None
    description = ''
    f_spec = 'exp'
    defaults: Tuple[float, ...] = ()

    def __init__(self, *params):
        params = tuple(float(p) for p in params) or self.defaults
        if len(params) != len(self.defaults):
            raise ValidationError(
                f"{self.name} takes {len(self.defaults)} parameters, got {len(params)}", code='unknown_example'
            )
        self.params = params

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}:" + ','.join(f"{p:g}" for p in self.params)

    def edges(self) -> List[Tuple[str, str, float]]:
        raise NotImplementedError

    def omega(self) -> List[str]:
        return ['2', '3']

    def graph(self) -> WeightedGraph:
        return WeightedGraph.from_edges(self.edges())

    def build_domain(self) -> DirichletDomain:
        return DirichletDomain.build(self.graph(), self.omega())

    def nonlinearity(self) -> Nonlinearity:
        return parse_nonlinearity(self.f_spec)

    def expected(self) -> List[Expectation]:
        return []

    def to_graph_text(self) -> str:
        return to_graph_text(self.graph(), self.omega(), comment=f"{self.label}: {self.description}")

    @cached_property
    def domain(self) -> DirichletDomain:
        return self.build_domain()

    @cached_property
    def f(self) -> Nonlinearity:
        return self.nonlinearity()

    @cached_property
    def extremal(self):
        return lambda_star_bisect(self.domain, self.f)

    # Measures used by the expectations.

    def lambda_m(self) -> float:
        return dirichlet_eigenpair(self.domain).value

    def lambda_star(self) -> float:
        return self.extremal[0]

    def u_star_norm(self) -> float:
        u_star = self.extremal[1]
        return math.nan if u_star is None else u_star.norm_inf

    def u_star_at(self, vertex: str) -> float:
        u_star = self.extremal[1]
        return math.nan if u_star is None else float(u_star.values[self.domain.omega_labels.index(vertex)])

    def minimal_at(self, lam: float, vertex: str) -> float:
        sol = minimal_solve(self.domain, self.f, lam)
        return float(sol.values[self.domain.omega_labels.index(vertex)])

    def newton_at(self, lam: float, init: Sequence[float], vertex: str, f: Optional[Nonlinearity] = None) -> float:
        sol = newton_solve(self.domain, f or self.f, lam, init=init)
        return float(sol.values[self.domain.omega_labels.index(vertex)])

    def solution_count(self, lam: float) -> int:
        return len(find_solutions(self.domain, self.f, lam))

    def __repr__(self):
        return f"<BuiltinExample: {self.label}>"


def _path(weights: Sequence[float]) -> List[Tuple[str, str, float]]:
    return [(str(i + 1), str(i + 2), w) for i, w in enumerate(weights)]


@register_example('path4-exp')
class Path4Exp(BuiltinExample):
    description = "path 1-2-3-4 with unit weights, Omega={2,3}, f=exp"

    def edges(self):
        return _path([1, 1, 1])

    def expected(self):
        return [
            Expectation('lambda_m', 0.5, 1e-10, Provenance.REFERENCE, lambda e: e.lambda_m()),
            Expectation('lambda_star', 1 / (2 * math.e), 1e-6, Provenance.REFERENCE, lambda e: e.lambda_star()),
            Expectation('u_star', 1.0, 1e-4, Provenance.REFERENCE, lambda e: e.u_star_norm()),
            Expectation('minimal_u2@0.1', -lambert_w0(-0.2), 1e-8, Provenance.REFERENCE,
                        lambda e: e.minimal_at(0.1, '2')),
            Expectation('upper_u2@0.1', -lambert_wm1(-0.2), 1e-8, Provenance.REFERENCE,
                        lambda e: e.newton_at(0.1, [3.0, 3.0], '2')),
            Expectation('solutions@0.05', 4, 0, Provenance.REFERENCE, lambda e: e.solution_count(0.05)),
            Expectation('solutions@0.1', 2, 0, Provenance.REFERENCE, lambda e: e.solution_count(0.1)),
        ]


@register_example('path4-weighted')
class Path4Weighted(BuiltinExample):
    description = "path 1-2-3-4 with weights b, a, b, Omega={2,3}, f=exp"
    defaults = (1.0, 2.0)

    def edges(self):
        a, b = self.params
        return _path([b, a, b])

    def expected(self):
        a, b = self.params
        lam_m = b / (a + b)
        return [
            Expectation('lambda_m', lam_m, 1e-10, Provenance.REFERENCE, lambda e: e.lambda_m()),
            Expectation('lambda_star', lam_m / math.e, 1e-6, Provenance.REFERENCE, lambda e: e.lambda_star()),
        ]


@register_example('two-point')
class TwoPoint(BuiltinExample):
    description = "single edge {1,2}, Omega={1}, f=exp"

    def edges(self):
        return [('1', '2', 1.0)]

    def omega(self):
        return ['1']

    def expected(self):
        return [
            Expectation('lambda_m', 1.0, 1e-12, Provenance.TRIVIAL, lambda e: e.lambda_m()),
            Expectation('lambda_star', 1 / math.e, 1e-6, Provenance.REFERENCE, lambda e: e.lambda_star()),
            Expectation('minimal_u1@0.2', -lambert_w0(-0.2), 1e-8, Provenance.REFERENCE,
                        lambda e: e.minimal_at(0.2, '1')),
        ]


@register_example('path3-exp')
class Path3Exp(BuiltinExample):
    description = "path 1-2-3 with unit weights, Omega={2,3}, f=exp"

    def edges(self):
        return _path([1, 1])

    def expected(self):
        return [
            Expectation('lambda_m', 1 - 1 / math.sqrt(2), 1e-10, Provenance.DERIVED, lambda e: e.lambda_m()),
            Expectation('lambda_star', 0.106159, 1e-5, Provenance.REFERENCE, lambda e: e.lambda_star()),
            Expectation('u_star(3)', 1.164771, 1e-4, Provenance.REFERENCE, lambda e: e.u_star_at('3')),
        ]


@register_example('path5-exp')
class Path5Exp(BuiltinExample):
    description = "path 1-2-3-4-5 with unit weights, Omega={2,3,4}, f=exp"

    def edges(self):
        return _path([1, 1, 1, 1])

    def omega(self):
        return ['2', '3', '4']

    def expected(self):
        return [
            Expectation('lambda_m', 1 - 1 / math.sqrt(2), 1e-10, Provenance.DERIVED, lambda e: e.lambda_m()),
            Expectation('lambda_star', 0.106159, 1e-5, Provenance.REFERENCE, lambda e: e.lambda_star()),
            Expectation('u_star(3)', 1.164771, 1e-4, Provenance.REFERENCE, lambda e: e.u_star_at('3')),
        ]


@register_example('khat-n')
class KHatN(BuiltinExample):
    """
    Complete graph K_n with cycle weights a and chord weights c, each vertex
    joined to its own Dirichlet vertex -i with weight b.
    """
    description = "weighted K_n with pendant Dirichlet vertices, Omega=K_n, f=exp"
    defaults = (1.0, 1.0, 0.0, 4.0)

    def __init__(self, *params):
        super().__init__(*params)
        a, b, c, n = self.params
        if n < 3 or n != int(n) or a <= 0 or b <= 0 or c < 0:
            raise ValidationError(f"khat-n needs a, b > 0, c >= 0 and integer n >= 3, got {self.params}",
                                  code='out_of_range')

    @property
    def k(self) -> float:
        a, b, c, n = self.params
        return (2 * a + (n - 3) * c + b) / b

    def edges(self):
        a, b, c, n = self.params
        n = int(n)
        edges = []
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                on_cycle = j == i + 1 or (i == 1 and j == n)
                weight = a if on_cycle else c
                if weight > 0:
                    edges.append((str(i), str(j), weight))
        edges += [(str(i), str(-i), b) for i in range(1, n + 1)]
        return edges

    def omega(self):
        return [str(i) for i in range(1, int(self.params[3]) + 1)]

    def expected(self):
        k = self.k
        return [
            Expectation('lambda_m', 1 / k, 1e-10, Provenance.DERIVED, lambda e: e.lambda_m()),
            Expectation('lambda_star', 1 / (k * math.e), 1e-6, Provenance.REFERENCE, lambda e: e.lambda_star()),
            Expectation('minimal_u1@0.05', -lambert_w0(-k * 0.05), 1e-8, Provenance.REFERENCE,
                        lambda e: e.minimal_at(0.05, '1')),
        ]


@register_example('regular-dirichlet')
class RegularDirichlet(BuiltinExample):
    """6-cycle with unit weights, each vertex joined to a Dirichlet vertex with weight 2/(k-1)."""
    description = "6-cycle with a Dirichlet vertex at each site, f=exp"
    defaults = (4.0,)

    def __init__(self, *params):
        super().__init__(*params)
        if not self.params[0] > 1:
            raise ValidationError(f"regular-dirichlet needs k > 1, got {self.params[0]}", code='out_of_range')

    def edges(self):
        k = self.params[0]
        b = 2.0 / (k - 1)
        edges = [(str(i), str(i % 6 + 1), 1.0) for i in range(1, 7)]
        edges += [(str(i), f"d{i}", b) for i in range(1, 7)]
        return edges

    def omega(self):
        return [str(i) for i in range(1, 7)]

    def expected(self):
        k = self.params[0]
        return [
            Expectation('lambda_star', 1 / (k * math.e), 1e-6, Provenance.REFERENCE, lambda e: e.lambda_star()),
            Expectation('minimal_u1@0.05', -lambert_w0(-k * 0.05), 1e-8, Provenance.REFERENCE,
                        lambda e: e.minimal_at(0.05, '1')),
        ]


ENVELOPE_INVERSE = np.array([
    [160, 80, 64, 80, 96],
    [80, 160, 80, 64, 96],
    [64, 80, 160, 80, 96],
    [80, 64, 80, 160, 96],
    [96, 96, 96, 96, 192],
]) / 384.0


@register_example('envelope')
class Envelope(BuiltinExample):
    """4-cycle 1-2-3-4 with a center 5 joined to each, and a pendant Dirichlet vertex -i at each cycle vertex."""
    description = "4-cycle with center and pendant Dirichlet vertices, Omega={1,...,5}, f=exp"

    def edges(self):
        edges = [(str(i), str(i % 4 + 1), 1.0) for i in range(1, 5)]
        edges += [(str(i), '5', 1.0) for i in range(1, 5)]
        edges += [(str(i), str(-i), 1.0) for i in range(1, 5)]
        return edges

    def omega(self):
        return ['1', '2', '3', '4', '5']

    def inverse_error(self) -> float:
        inverse = np.linalg.inv(self.domain.operator)
        return float(np.max(np.abs(inverse - 4.0 * ENVELOPE_INVERSE)))

    def second_iterate(self, lam: float, vertex: str) -> float:
        iterates = monotone_iterates(self.domain, self.f, lam, 2)
        return float(iterates[2][self.domain.omega_labels.index(vertex)])

    def expected(self):
        lam = 0.05
        return [
            Expectation('inverse_error', 0.0, 1e-12, Provenance.REFERENCE, lambda e: e.inverse_error()),
            Expectation('u2(1)@0.05', 4 * lam * math.exp(5 * lam) + lam * math.exp(6 * lam), 1e-12,
                        Provenance.REFERENCE, lambda e: e.second_iterate(lam, '1')),
            Expectation('u2(5)@0.05', 4 * lam * math.exp(5 * lam) + 2 * lam * math.exp(6 * lam), 1e-12,
                        Provenance.REFERENCE, lambda e: e.second_iterate(lam, '5')),
        ]


@register_example('path4-asym')
class Path4Asym(BuiltinExample):
    description = "path 1-2-3-4 with weights 1, 1, 2, Omega={2,3}, f=exp"

    def edges(self):
        return _path([1, 1, 2])

    def expected(self):
        return [
            Expectation('lambda_m', 1 - 1 / math.sqrt(6), 1e-10, Provenance.DERIVED, lambda e: e.lambda_m()),
            Expectation('solutions@0.02', 4, 0, Provenance.REFERENCE, lambda e: e.solution_count(0.02)),
        ]


@register_example('path4-quartic')
class Path4Quartic(BuiltinExample):
    description = "path 1-2-3-4 with unit weights, Omega={2,3}, f=s^4-10s^3+24s^2+36s+1"
    f_spec = 'poly:1,36,24,-10,1'

    def expected(self):
        return [
            Expectation('lambda_star', 0.0161546, 2e-4, Provenance.REFERENCE, lambda e: e.lambda_star()),
            Expectation('u_star', 5.1007955, 5e-3, Provenance.REFERENCE, lambda e: e.u_star_norm()),
        ]

    def edges(self):
        return _path([1, 1, 1])


@register_example('path4-piecewise')
class Path4Piecewise(BuiltinExample):
    description = "path 1-2-3-4 with unit weights, Omega={2,3}, f convex piecewise with a linear middle piece"
    f_spec = 'piecewise:0=1,0,1;1=2,2;2=4,2,1'

    def edges(self):
        return _path([1, 1, 1])

    def expected(self):
        return [
            Expectation('lambda_star', 0.25, 1e-5, Provenance.REFERENCE, lambda e: e.lambda_star()),
        ]


@register_example('path4-power2')
class Path4Power2(BuiltinExample):
    description = "path 1-2-3-4 with unit weights, Omega={2,3}, f=(1+s)^2"
    f_spec = 'power:2'

    def edges(self):
        return _path([1, 1, 1])

    def expected(self):
        lam = 0.1
        root = math.sqrt(1 - 8 * lam)
        return [
            Expectation('lambda_star', 0.125, 1e-6, Provenance.REFERENCE, lambda e: e.lambda_star()),
            Expectation('u_star', 1.0, 1e-4, Provenance.REFERENCE, lambda e: e.u_star_norm()),
            Expectation('minimal_u2@0.1', 4 * lam / (1 - 4 * lam + root), 1e-8, Provenance.DERIVED,
                        lambda e: e.minimal_at(lam, '2')),
            Expectation('upper_u2@0.1', (1 - 4 * lam + root) / (4 * lam), 1e-8, Provenance.REFERENCE,
                        lambda e: e.newton_at(lam, [3.0, 3.0], '2')),
        ]


@register_example('path4-affine')
class Path4Affine(BuiltinExample):
    description = "path 1-2-3-4 with unit weights, Omega={2,3}, f=1+s"
    f_spec = 'affine'

    def edges(self):
        return _path([1, 1, 1])

    def expected(self):
        return [
            Expectation('lambda_star', 0.5, 1e-4, Provenance.REFERENCE, lambda e: e.lambda_star()),
            Expectation('u_star_absent', 1.0, 0, Provenance.REFERENCE, lambda e: float(e.extremal[1] is None)),
            Expectation('minimal_u2@0.25', 1.0, 1e-9, Provenance.REFERENCE, lambda e: e.minimal_at(0.25, '2')),
        ]


@register_example('allen-cahn-ab')
class AllenCahnAB(BuiltinExample):
    """u = 0 is stable up to λₘ = b/(a+b); beyond it the truncated problem gives u² = 1 - λₘ/λ."""
    description = "path 1-2-3-4 with weights b, a, b, Omega={2,3}, f=s-s^3"
    f_spec = 'allen-cahn'
    defaults = (1.0, 1.0)

    def edges(self):
        a, b = self.params
        return _path([b, a, b])

    def expected(self):
        a, b = self.params
        lam_m = b / (a + b)
        lam = 1.5 * lam_m
        clipped = truncate(self.nonlinearity(), 0.0, 1.0)
        return [
            Expectation('stability_threshold', lam_m, 1e-10, Provenance.REFERENCE, lambda e: e.lambda_m()),
            Expectation('truncated_u2@1.5lambda_m', math.sqrt(1 - lam_m / lam), 1e-8, Provenance.DERIVED,
                        lambda e: e.newton_at(lam, [0.5, 0.5], '2', f=clipped)),
        ]


def uniform_kernel(z: float) -> float:
    return 0.5 if abs(z) <= 1.0 else 0.0


@register_example('kernel-uniform')
class KernelUniform(BuiltinExample):
    """Uniform kernel J = 1/2 on [-1, 1] discretized on Omega = (-1, 1) with grid step h."""
    description = "uniform convolution kernel on the line, Omega=(-1,1), f=exp"
    defaults = (0.1,)

    def edges(self):
        return self.graph().edges()

    def graph(self):
        return self.domain.graph

    def omega(self):
        return list(self.domain.omega_labels)

    def build_domain(self):
        return DirichletDomain.from_kernel(uniform_kernel, self.params[0], (-1.0, 1.0), 1.0)

    def refined_lambda_m(self) -> float:
        refined = DirichletDomain.from_kernel(uniform_kernel, self.params[0] / 2, (-1.0, 1.0), 1.0)
        return dirichlet_eigenpair(refined).value

    def expected(self):
        return [
            Expectation('lambda_m_refinement_gap', 0.0, 5e-2, Provenance.DERIVED,
                        lambda e: e.lambda_m() - e.refined_lambda_m()),
        ]


def get_example(name: str) -> BuiltinExample:
    """
    Instantiate a built-in example from `name[:p1,p2,...]`.

    Raises:
        ValidationError: code 'unknown_example'.
    """
    base, _, rest = (name or '').strip().partition(':')
    if base not in EXAMPLES:
        raise ValidationError(
            f"Unknown example {name!r}; choose from {', '.join(sorted(EXAMPLES))}", code='unknown_example'
        )
    try:
        params = [float(p) for p in rest.split(',')] if rest else []
    except ValueError:
        raise ValidationError(f"Malformed example parameters in {name!r}", code='unknown_example')
    return EXAMPLES[base](*params)


def builtin_corpus() -> List[BuiltinExample]:
    return [cls() for _, cls in sorted(EXAMPLES.items())]
