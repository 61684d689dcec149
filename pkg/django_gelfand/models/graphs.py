import logging
import math

from functools import cached_property
from typing import Callable, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from django.core.exceptions import ValidationError


logger = logging.getLogger(__name__)


def _label(value: Hashable) -> str:
    return str(value).strip()


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class WeightedGraph:
    """
    A finite random walk space: symmetric nonnegative weights w_xy,
    degrees d_x = Σ_y w_xy, transition probabilities P_xy = w_xy / d_x and
    the reversible measure ν(x) = d_x.

    Vertices are indexed 0..n-1; the original labels are kept (as strings) for
    reporting and for looking vertices up again.
    """

    def __init__(self, weights, labels: Optional[Sequence[Hashable]] = None):
        weights = np.array(weights, dtype=float)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise ValidationError(
                f"Weight matrix must be square, got shape {weights.shape}", code='dimension_mismatch'
            )
        n = weights.shape[0]
        if n == 0:
            raise ValidationError("Graph has no vertices", code='no_edges')
        if labels is None:
            labels = range(n)
        labels = [_label(label) for label in labels]
        if len(labels) != n:
            raise ValidationError(
                f"Expected {n} labels, got {len(labels)}", code='dimension_mismatch'
            )
        if len(set(labels)) != n:
            raise ValidationError("Vertex labels must be unique", code='duplicate_label')
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValidationError("Weights must be finite and nonnegative", code='nonpositive_weight')
        if not np.array_equal(weights, weights.T):
            raise ValidationError("Weight matrix must be symmetric", code='asymmetric_matrix')

        degrees = weights.sum(axis=1)
        isolated = [labels[i] for i in np.flatnonzero(degrees <= 0)]
        if isolated:
            raise ValidationError(
                f"Vertices with zero degree: {', '.join(isolated)}", code='isolated_vertex'
            )

        self._weights = _frozen(weights)
        self._degrees = _frozen(degrees)
        self._labels = tuple(labels)
        self._index = {label: i for i, label in enumerate(self._labels)}

    @classmethod
    def from_edges(cls, edges: Iterable[Tuple[Hashable, Hashable, float]], vertices: Iterable[Hashable] = ()) -> 'WeightedGraph':
        """
        Build a graph from (x, y, w) triples.

        Vertex ids are normalized to contiguous indices in order of first
        appearance (declared `vertices` first, then edge endpoints).

        Raises:
            ValidationError: nonpositive weight, duplicate edge (in either
                orientation) or a vertex with zero degree.

        Examples:
            >>> WeightedGraph.from_edges([(1, 2, 1), (2, 3, 1), (3, 4, 1)]).degrees
            array([1., 2., 2., 1.])
        """
        order = {}
        for vertex in vertices:
            order.setdefault(_label(vertex), len(order))
        triples = []
        seen = set()
        for x, y, w in edges:
            x, y = _label(x), _label(y)
            w = float(w)
            if not math.isfinite(w) or w <= 0:
                raise ValidationError(
                    f"Edge {x}-{y} has nonpositive weight {w}", code='nonpositive_weight'
                )
            key = frozenset((x, y))
            if key in seen:
                raise ValidationError(f"Duplicate edge {x}-{y}", code='duplicate_edge')
            seen.add(key)
            order.setdefault(x, len(order))
            order.setdefault(y, len(order))
            triples.append((x, y, w))
        if not triples:
            raise ValidationError("Graph has no edges", code='no_edges')

        weights = np.zeros((len(order), len(order)))
        for x, y, w in triples:
            weights[order[x], order[y]] = w
            weights[order[y], order[x]] = w
        return cls(weights, labels=list(order))

    @property
    def n_vertices(self) -> int:
        return len(self._labels)

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    @property
    def labels(self) -> Tuple[str, ...]:
        return self._labels

    @cached_property
    def transition(self) -> np.ndarray:
        return _frozen(self._weights / self._degrees[:, None])

    def index_of(self, label: Hashable) -> int:
        try:
            return self._index[_label(label)]
        except KeyError:
            raise ValidationError(f"Unknown vertex label: {label}", code='unknown_label')

    def measure(self, vertices: Iterable[Hashable]) -> float:
        """ν(A) = Σ_{x∈A} d_x."""
        return float(sum(self._degrees[self.index_of(v)] for v in vertices))

    def edges(self) -> List[Tuple[str, str, float]]:
        """Edges as (x, y, w) with x <= y in index order, loops included."""
        rows, cols = np.nonzero(np.triu(self._weights))
        return [(self._labels[i], self._labels[j], float(self._weights[i, j])) for i, j in zip(rows, cols)]

    def __repr__(self):
        return f"<WeightedGraph: {self.n_vertices} vertices, {len(self.edges())} edges>"


def build_graph(edge_list: Iterable[Tuple[Hashable, Hashable, float]]) -> WeightedGraph:
    return WeightedGraph.from_edges(edge_list)


class DirichletDomain:
    """
    A vertex set Ω of a WeightedGraph together with its m-boundary
    ∂Ω = {x ∉ Ω : m_x(Ω) > 0} and the data the Dirichlet problem needs.

    Functions on the closure Ωₘ = Ω ∪ ∂Ω are stored as vectors ordered Ω
    first, then ∂Ω (see `closure`). Vertices outside Ωₘ are dropped.
    """

    def __init__(self, graph: WeightedGraph, omega: Sequence[int], check_connected: bool = True):
        n = graph.n_vertices
        omega = sorted(set(int(i) for i in omega))
        if not omega:
            raise ValidationError("Omega must not be empty", code='empty_omega')
        if len(omega) == n:
            raise ValidationError("Omega must be a strict subset of the vertices", code='omega_is_everything')

        in_omega = np.zeros(n, dtype=bool)
        in_omega[omega] = True
        weights = graph.weights
        mass_into_omega = weights[:, in_omega].sum(axis=1)
        boundary = [x for x in range(n) if not in_omega[x] and mass_into_omega[x] > 0]
        closure = omega + boundary

        transition = graph.transition
        rows = transition[omega]
        self._graph = graph
        self._omega = tuple(omega)
        self._boundary = tuple(boundary)
        self._closure = tuple(closure)
        self._p_omega = _frozen(rows[:, omega].copy())
        self._leak = _frozen(rows[:, boundary].sum(axis=1) if boundary else np.zeros(len(omega)))
        self._p_closure = _frozen(rows[:, closure].copy())
        self._escape = _frozen(1.0 - self._p_closure.sum(axis=1))
        self._nu_omega = _frozen(graph.degrees[omega].copy())
        self._nu_closure = _frozen(graph.degrees[closure].copy())
        self._closure_weights = _frozen(weights[np.ix_(closure, closure)].copy())

        row_mass = self._p_omega.sum(axis=1) + self._leak
        empty = [self.omega_labels[i] for i in np.flatnonzero(row_mass <= 0)]
        if empty:
            raise ValidationError(
                f"Vertices of Omega with no mass inside the closure: {', '.join(empty)}", code='zero_mass'
            )
        if not boundary:
            raise ValidationError(
                "Omega has an empty m-boundary; the Dirichlet problem is not well posed",
                code='no_boundary'
            )
        if check_connected and not self.is_m_connected():
            raise ValidationError(
                f"Omega {{{', '.join(self.omega_labels)}}} is not m-connected", code='not_m_connected'
            )

    @classmethod
    def build(cls, graph: WeightedGraph, omega: Iterable[Hashable], check_connected: bool = True) -> 'DirichletDomain':
        """Build the domain for Ω given by vertex labels."""
        return cls(graph, [graph.index_of(label) for label in omega], check_connected=check_connected)

    @classmethod
    def from_kernel(cls, kernel: Callable[[float], float], grid_step: float,
                    omega_interval: Tuple[float, float], radius: float) -> 'DirichletDomain':
        """
        Discretize the convolution random walk m_x = J(x - y) dy on the line.

        Ω = (lo, hi) is sampled at the midpoints lo + (i + 1/2) h, and the
        closure Ωₘ = Ω ⊕ [-radius, radius] gets radius/h extra points on each
        side. Weights are the cell masses w_ij = J((i - j) h) h, except at
        |i - j| h = radius where the cell is half inside the support and
        gets half weight; the row is then scaled to unit mass. A point of Ω
        reaches only points of Ωₘ, so its row has no loop and no escape.
        Boundary points keep the mass that falls outside Ωₘ as a loop; it
        never enters P_Ω or the Dirichlet data and only makes every degree 1.

        Raises:
            ValidationError: negative kernel samples, empty support, or a
                grid step that does not divide the radius and the interval.
        """
        lo, hi = (float(v) for v in omega_interval)
        h = float(grid_step)
        if not (h > 0 and hi > lo and radius > 0):
            raise ValidationError(
                "Need grid_step > 0, radius > 0 and a nonempty interval", code='out_of_range'
            )
        n_omega = int(round((hi - lo) / h))
        n_radius = int(round(radius / h))
        if n_omega < 1 or n_radius < 1 or abs(n_omega * h - (hi - lo)) > 1e-9 * max(1.0, hi - lo) \
                or abs(n_radius * h - radius) > 1e-9 * max(1.0, radius):
            raise ValidationError(
                f"grid_step {h} must divide the interval length {hi - lo} and the radius {radius}",
                code='out_of_range'
            )

        offsets = np.arange(-n_radius, n_radius + 1)
        samples = np.array([float(kernel(k * h)) for k in offsets])
        if np.any(samples < 0) or not np.all(np.isfinite(samples)):
            raise ValidationError("Kernel has negative samples", code='negative_kernel')
        coefficients = samples * h
        coefficients[0] *= 0.5
        coefficients[-1] *= 0.5
        total = coefficients.sum()
        if total <= 0:
            raise ValidationError("Kernel has empty support on the grid", code='empty_support')
        coefficients /= total

        coordinates = lo + (np.arange(-n_radius, n_omega + n_radius) + 0.5) * h
        size = len(coordinates)
        weights = np.zeros((size, size))
        for k, c in zip(offsets, coefficients):
            if c == 0:
                continue
            idx = np.arange(max(0, -k), min(size, size - k))
            weights[idx, idx + k] = c
        # Mass beyond the closure stays at the point.
        missing = 1.0 - weights.sum(axis=1)
        weights[np.diag_indices(size)] += np.clip(missing, 0.0, None)
        weights = 0.5 * (weights + weights.T)

        labels = [f"{x:.12g}" for x in coordinates]
        graph = WeightedGraph(weights, labels=labels)
        omega = list(range(n_radius, n_radius + n_omega))
        logger.debug(f"Kernel space with h={h}: {n_omega} interior points, {2 * n_radius} boundary points")
        return cls(graph, omega)

    @property
    def graph(self) -> WeightedGraph:
        return self._graph

    @property
    def omega(self) -> Tuple[int, ...]:
        return self._omega

    @property
    def boundary(self) -> Tuple[int, ...]:
        return self._boundary

    @property
    def closure(self) -> Tuple[int, ...]:
        return self._closure

    @property
    def n_omega(self) -> int:
        return len(self._omega)

    @property
    def omega_labels(self) -> Tuple[str, ...]:
        return tuple(self._graph.labels[i] for i in self._omega)

    @property
    def boundary_labels(self) -> Tuple[str, ...]:
        return tuple(self._graph.labels[i] for i in self._boundary)

    @property
    def closure_labels(self) -> Tuple[str, ...]:
        return tuple(self._graph.labels[i] for i in self._closure)

    @property
    def p_omega(self) -> np.ndarray:
        return self._p_omega

    @property
    def p_closure(self) -> np.ndarray:
        """P̃: transition probabilities from Ω into Ωₘ (|Ω| x |Ωₘ|)."""
        return self._p_closure

    @property
    def leak(self) -> np.ndarray:
        return self._leak

    @property
    def escape(self) -> np.ndarray:
        """m_x(V \\ Ωₘ) for x ∈ Ω."""
        return self._escape

    @property
    def nu_omega(self) -> np.ndarray:
        return self._nu_omega

    @property
    def nu_closure(self) -> np.ndarray:
        return self._nu_closure

    @property
    def closure_weights(self) -> np.ndarray:
        """ν(x) P_xy = w_xy for x, y ∈ Ωₘ."""
        return self._closure_weights

    @cached_property
    def operator(self) -> np.ndarray:
        """I - P_Ω, the matrix of -Δ on functions vanishing on ∂Ω."""
        return _frozen(np.eye(self.n_omega) - self._p_omega)

    @cached_property
    def lu(self):
        """LU factors of I - P_Ω, computed once per domain."""
        return scipy.linalg.lu_factor(self.operator)

    @cached_property
    def symmetrized(self) -> np.ndarray:
        """D^{1/2} (I - P_Ω) D^{-1/2}, built from the weights so it is exactly symmetric."""
        w = self._graph.weights[np.ix_(self._omega, self._omega)]
        sqrt_d = np.sqrt(self._nu_omega)
        return _frozen(np.eye(self.n_omega) - w / np.outer(sqrt_d, sqrt_d))

    def extend(self, values) -> np.ndarray:
        """Extend a function on Ω by zero to Ωₘ."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_omega,):
            raise ValidationError(
                f"Expected {self.n_omega} values on Omega, got shape {values.shape}", code='dimension_mismatch'
            )
        return np.concatenate([values, np.zeros(len(self._boundary))])

    def on_closure(self, values) -> np.ndarray:
        """Accept a function on Ω (extended by zero) or on Ωₘ."""
        values = np.asarray(values, dtype=float)
        if values.shape == (self.n_omega,):
            return self.extend(values)
        if values.shape != (len(self._closure),):
            raise ValidationError(
                f"Expected {self.n_omega} or {len(self._closure)} values, got shape {values.shape}",
                code='dimension_mismatch'
            )
        return values

    def apply_laplacian(self, u) -> np.ndarray:
        """
        Δu(x) = Σ_{y∈Ωₘ} P̃_xy u(y) - u(x) for x ∈ Ω, with u given on Ωₘ
        in closure order (Ω first, then ∂Ω).
        """
        u = np.asarray(u, dtype=float)
        if u.shape != (len(self._closure),):
            raise ValidationError(
                f"Expected {len(self._closure)} values on the closure, got shape {u.shape}",
                code='dimension_mismatch'
            )
        return self._p_closure @ u - u[:self.n_omega]

    def interaction(self, a: Iterable[Hashable], b: Iterable[Hashable]) -> float:
        """L(A, B) = Σ_{x∈A} ν(x) m_x(B) for vertex labels A, B ⊆ Ωₘ."""
        closure = set(self._closure)
        rows = [self._graph.index_of(x) for x in a]
        cols = [self._graph.index_of(y) for y in b]
        outside = [self._graph.labels[i] for i in rows + cols if i not in closure]
        if outside:
            raise ValidationError(
                f"Vertices outside the closure of Omega: {', '.join(outside)}", code='unknown_label'
            )
        if not rows or not cols:
            return 0.0
        return float(self._graph.weights[np.ix_(rows, cols)].sum())

    def is_m_connected(self) -> bool:
        """True iff the positive-weight graph induced on Ω is connected (breadth-first traversal)."""
        if self.n_omega == 1:
            return True
        adjacency = csr_matrix(self._graph.weights[np.ix_(self._omega, self._omega)] > 0)
        reached = breadth_first_order(adjacency, 0, directed=False, return_predecessors=False)
        return len(reached) == self.n_omega

    def labelled(self, values) -> List[Tuple[str, float]]:
        return list(zip(self.omega_labels, (float(v) for v in values)))

    def __repr__(self):
        return (
            f"<DirichletDomain: Omega={{{', '.join(self.omega_labels)}}}, "
            f"boundary={{{', '.join(self.boundary_labels)}}}>"
        )


def build_domain(graph: WeightedGraph, omega: Iterable[Hashable], check_connected: bool = True) -> DirichletDomain:
    return DirichletDomain.build(graph, omega, check_connected=check_connected)


def build_kernel_space(kernel: Callable[[float], float], grid_step: float,
                       omega_interval: Tuple[float, float], radius: float = 1.0) -> DirichletDomain:
    return DirichletDomain.from_kernel(kernel, grid_step, omega_interval, radius)


def is_m_connected(domain: DirichletDomain) -> bool:
    return domain.is_m_connected()


def nonlocal_gradient(u, x: int, y: int) -> float:
    """∇u(x, y) = u(y) - u(x)."""
    return float(u[y] - u[x])


def gradient_field(u) -> np.ndarray:
    """The full matrix ∇u(x, y) = u(y) - u(x)."""
    u = np.asarray(u, dtype=float)
    return u[None, :] - u[:, None]


def nonlocal_divergence(domain: DirichletDomain, z) -> np.ndarray:
    """
    div z(x) = 1/2 Σ_y (z(x, y) - z(y, x)) P̃_xy for x ∈ Ω, with z a field on
    Ωₘ x Ωₘ in closure order. div ∇u = Δu.
    """
    z = np.asarray(z, dtype=float)
    size = len(domain.closure)
    if z.shape != (size, size):
        raise ValidationError(
            f"Expected a {size}x{size} field, got shape {z.shape}", code='dimension_mismatch'
        )
    n = domain.n_omega
    return 0.5 * ((z - z.T)[:n] * domain.p_closure).sum(axis=1)
