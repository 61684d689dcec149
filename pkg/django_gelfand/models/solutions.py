from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from django.db import models


class BranchLabel(models.TextChoices):
    MINIMAL = 'minimal', 'Minimal branch'
    UPPER = 'upper', 'Upper branch'
    OTHER = 'other', 'Other branch'


@dataclass
class EigenPair:
    """λₘ(Ω) and the ground state φ normalized to max 1, so M_Ω = 1 and α_Ω = min φ."""

    value: float
    vector: np.ndarray
    alpha: float
    big_m: float

    @property
    def bounds(self) -> Tuple[float, float]:
        return self.alpha, self.big_m


@dataclass
class Solution:
    """A solution u ≥ 0 on Ω of (I - P_Ω) u = λ f(u)."""

    lam: float
    values: np.ndarray
    residual: float
    mu1: Optional[float] = None
    stable: Optional[bool] = None
    minimal: bool = False
    iterations: int = 0

    @property
    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def summary(self) -> dict:
        return {
            'lambda': float(self.lam),
            'residual': float(self.residual),
            'mu1': None if self.mu1 is None else float(self.mu1),
            'stable': None if self.stable is None else bool(self.stable),
            'minimal': bool(self.minimal),
        }

    def __str__(self):
        return f"Solution(lambda={self.lam:.10g}, |u|={self.norm_inf:.10g}, residual={self.residual:.2g})"


@dataclass
class BranchPoint:
    lam: float
    values: np.ndarray
    norm_inf: float
    mu1: float
    arc_param: float
    residual: float = 0.0

    @classmethod
    def from_solution(cls, solution: Solution, arc_param: float = 0.0) -> 'BranchPoint':
        return cls(
            lam=float(solution.lam),
            values=np.array(solution.values, dtype=float),
            norm_inf=solution.norm_inf,
            mu1=float('nan') if solution.mu1 is None else float(solution.mu1),
            arc_param=float(arc_param),
            residual=float(solution.residual),
        )

    def stable(self, stab_tol: float) -> bool:
        return bool(self.mu1 >= -stab_tol)


@dataclass
class Fold:
    """A turning point in λ along a branch; `segment` spans the points where λ stagnates."""

    index: int
    lam: float
    values: np.ndarray
    mu1: float
    refined: bool
    segment: Tuple[int, int]


@dataclass
class Branch:
    points: List[BranchPoint] = field(default_factory=list)
    folds: List[int] = field(default_factory=list)
    label: str = BranchLabel.MINIMAL
    name: Optional[str] = None
    stop_reason: str = ''

    def __post_init__(self):
        if self.name is None:
            self.name = str(self.label)

    def __len__(self):
        return len(self.points)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    @property
    def norms(self) -> np.ndarray:
        return np.array([p.norm_inf for p in self.points])

    @property
    def arcs(self) -> np.ndarray:
        return np.array([p.arc_param for p in self.points])

    def split(self, index: int, first: str, second: str) -> Tuple['Branch', 'Branch']:
        """Cut at a point (kept on both sides), e.g. into the minimal and upper parts at the fold."""
        head = Branch(points=self.points[:index + 1], label=first, stop_reason='fold')
        tail = Branch(points=self.points[index:], label=second, stop_reason=self.stop_reason)
        return head, tail


@dataclass
class VerificationReport:
    residual: float
    residual_ok: bool
    nonnegative: bool
    envelope_ok: Optional[bool]
    mu1: float
    stable: bool
    quadratic_form_ok: bool
    minimal_bound_ok: Optional[bool] = None
    violations: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def rows(self) -> List[Tuple[str, object]]:
        return [
            ('residual', self.residual),
            ('residual_ok', self.residual_ok),
            ('nonnegative', self.nonnegative),
            ('envelope_ok', self.envelope_ok),
            ('minimal_bound_ok', self.minimal_bound_ok),
            ('mu1', self.mu1),
            ('stable', self.stable),
            ('quadratic_form_ok', self.quadratic_form_ok),
        ]
