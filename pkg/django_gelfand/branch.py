"""
Parameter-space machinery: locating λ*, sweeping the minimal branch,
pseudo-arclength continuation through folds and assembling bifurcation
diagrams.
"""
import logging
import math

from functools import partial
from multiprocessing import Pool
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from django.core.exceptions import ValidationError

from .conf import gelfand_settings
from .exceptions import Diverged, GelfandError, NoConvergence, NonMonotonePredicate
from .models import Branch, BranchLabel, BranchPoint, DirichletDomain, Fold, Nonlinearity, Solution
from .scalar import critical_s0, envelope_bounds, lambda_star_upper_bound
from .solver import (
    minimal_solve,
    newton_solve,
    residual_norm,
    residual_vector,
    stability_mu1,
)
from .spectral import dirichlet_eigenpair, full_spectrum, smallest_eigenvalue_shifted


logger = logging.getLogger(__name__)

SLOW_LEVELS = 3
SLOW_FACTOR = 10
STEP_GROWTH = 1.3
FAST_CORRECTOR = 3
CORRECTOR_MAX_ITER = 10
FOLD_MAX_ITER = 50
FLAT_LAMBDA = 1e-12
MAX_SEEDS = 729
MAX_LEVELS = 9
BRANCH_MATCH_TOL = 1e-2


def _has_envelope(f: Nonlinearity) -> bool:
    return f.admissible and f.strictly_convex and f.superlinear


def lambda_star_bounds(domain: DirichletDomain, f: Nonlinearity) -> Tuple[float, float]:
    """
    A-priori bracket for λ*. With φₘ normalized to max 1 and
    k = min(α_Ω λₘ, λₘ/c₁): k / f(1) <= λ* <= λₘ / c₁, the upper end
    being λₘ s₀/f(s₀) when f is strictly convex and superlinear.
    """
    if not f.admissible:
        raise ValidationError(f"{f.spec} is not admissible", code='not_admissible')
    eigenpair = dirichlet_eigenpair(domain)
    lam_m = eigenpair.value
    if _has_envelope(f):
        envelope = critical_s0(f)
        upper = lambda_star_upper_bound(envelope, lam_m)
        c1 = 1.0 / envelope.lambda_cap
    else:
        c1 = f.growth_constant()
        upper = math.inf if c1 == 0 else lam_m / c1
    k = eigenpair.alpha * lam_m if c1 == 0 else min(eigenpair.alpha * lam_m, lam_m / c1)
    lower = k / float(f.value(eigenpair.big_m))
    return lower, upper


def refine_fold(domain: DirichletDomain, f: Nonlinearity, lam: float, u, tol: Optional[float] = None,
                max_iter: int = FOLD_MAX_ITER) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Newton on the extended system F(u, λ) = 0, F_u(u, λ) v = 0, ℓᵀv = 1 that
    characterizes a fold, started from a nearby point.

    Returns:
        (λ_fold, u_fold, v) with v the null vector of the linearization.

    Raises:
        NoConvergence: singular extended system or no convergence.
    """
    tol = gelfand_settings.GELFAND_NEWTON_TOL if tol is None else float(tol)
    n = domain.n_omega
    u = np.array(u, dtype=float)
    lam = float(lam)
    sqrt_d = np.sqrt(domain.nu_omega)
    _, vectors = full_spectrum(domain.symmetrized - np.diag(lam * f.derivative(u)))
    v = vectors[:, 0] / sqrt_d
    v = v / np.linalg.norm(v)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    ell = v.copy()
    operator = domain.operator

    for iteration in range(1, max_iter + 1):
        jac_u = operator - lam * np.diag(f.derivative(u))
        g = np.concatenate([
            residual_vector(domain, f, lam, u),
            jac_u @ v,
            [ell @ v - 1.0],
        ])
        if not np.all(np.isfinite(g)):
            raise NoConvergence(f"fold refinement left the domain of f at lambda={lam}", fold=True)
        scale = max(1.0, float(np.max(np.abs(u))))
        if np.max(np.abs(g)) <= tol * scale:
            logger.debug(f"Fold refined to lambda={lam:.15g} in {iteration - 1} iterations")
            return lam, u, v
        jacobian = np.zeros((2 * n + 1, 2 * n + 1))
        jacobian[:n, :n] = jac_u
        jacobian[:n, 2 * n] = -f.value(u)
        jacobian[n:2 * n, :n] = -lam * np.diag(f.second_derivative(u) * v)
        jacobian[n:2 * n, n:2 * n] = jac_u
        jacobian[n:2 * n, 2 * n] = -f.derivative(u) * v
        jacobian[2 * n, n:2 * n] = ell
        try:
            delta = scipy.linalg.solve(jacobian, -g)
        except scipy.linalg.LinAlgError:
            raise NoConvergence(f"singular fold system at lambda={lam}", fold=True)
        u = u + delta[:n]
        v = v + delta[n:2 * n]
        lam = lam + float(delta[2 * n])
    raise NoConvergence(f"fold refinement did not converge in {max_iter} iterations", fold=True)


def lambda_star_bisect(domain: DirichletDomain, f: Nonlinearity,
                       tol_lambda: Optional[float] = None) -> Tuple[float, Optional[Solution]]:
    """
    Locate λ* by bisection, using success of the monotone iteration as the
    predicate, on [0, λₘ s₀/f(s₀)] (or [0, λₘ/c₁]).

    Returns:
        (λ*, u*): the midpoint of the final bracket, and the extremal solution
        or None when the iteration does not settle there (affine f). λ* is
        math.inf when c₁ = 0.

    Raises:
        ValidationError: f not admissible or tol_lambda not positive.
        NonMonotonePredicate: a solution found above λ is smaller than the one at λ.
    """
    tol_lambda = gelfand_settings.GELFAND_LAMBDA_TOL if tol_lambda is None else float(tol_lambda)
    if not tol_lambda > 0:
        raise ValidationError(f"tol_lambda must be positive, got {tol_lambda}", code='out_of_range')
    if not f.admissible:
        raise ValidationError(f"{f.spec} is not admissible", code='not_admissible')
    _, upper = lambda_star_bounds(domain, f)
    if math.isinf(upper):
        logger.info(f"{f.spec} grows sublinearly: lambda_star is infinite")
        return math.inf, None

    base_iter = gelfand_settings.GELFAND_MAX_ITER
    best = Solution(lam=0.0, values=np.zeros(domain.n_omega), residual=0.0, minimal=True)
    try:
        at_upper = minimal_solve(domain, f, upper)
    except GelfandError:
        pass
    else:
        logger.info(f"Solution exists at the upper bound {upper:.12g}")
        stability_mu1(domain, f, at_upper)
        return upper, at_upper

    lo, hi = 0.0, upper
    while hi - lo > tol_lambda:
        mid = 0.5 * (lo + hi)
        remaining = math.ceil(math.log2((hi - lo) / tol_lambda))
        max_iter = base_iter * SLOW_FACTOR if remaining <= SLOW_LEVELS else base_iter
        try:
            sol = minimal_solve(domain, f, mid, max_iter=max_iter, init=best.values)
        except Diverged:
            hi = mid
            continue
        if sol.norm_inf < best.norm_inf - 1e-9 * max(1.0, best.norm_inf):
            raise NonMonotonePredicate(
                f"minimal solution at lambda={mid} is below the one at lambda={best.lam}"
            )
        lo, best = mid, sol

    estimate = 0.5 * (lo + hi)
    logger.info(f"lambda_star of {f.spec} in [{lo:.12g}, {hi:.12g}]")
    u_star = _extremal_solution(domain, f, estimate, best, tol_lambda)
    return estimate, u_star


def _extremal_solution(domain: DirichletDomain, f: Nonlinearity, estimate: float, best: Solution,
                       tol_lambda: float) -> Optional[Solution]:
    # Without superlinear growth the solutions blow up as λ approaches λ*.
    if not f.superlinear:
        return None
    if best.lam > 0:
        try:
            lam, u, _ = refine_fold(domain, f, best.lam, best.values)
        except NoConvergence as e:
            logger.debug(f"Fold refinement near lambda_star failed: {e}")
        else:
            if abs(lam - estimate) <= SLOW_FACTOR * tol_lambda and np.all(u >= -1e-12):
                sol = Solution(lam=lam, values=u, residual=residual_norm(domain, f, lam, u), minimal=True)
                stability_mu1(domain, f, sol)
                return sol
    try:
        sol = minimal_solve(domain, f, estimate, max_iter=gelfand_settings.GELFAND_MAX_ITER * SLOW_FACTOR,
                            init=best.values)
    except GelfandError:
        sol = best
    stability_mu1(domain, f, sol)
    return sol


def _check_grid(lambda_grid: Iterable[float]) -> List[float]:
    grid = [float(lam) for lam in lambda_grid]
    if any(not math.isfinite(lam) or lam < 0 for lam in grid):
        raise ValidationError("Lambda grid values must be finite and nonnegative", code='out_of_range')
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValidationError("Lambda grid must be ascending", code='out_of_range')
    return grid


def _cold_solve(domain: DirichletDomain, f: Nonlinearity, lam: float) -> Solution:
    sol = minimal_solve(domain, f, lam)
    stability_mu1(domain, f, sol)
    return sol


def sweep_minimal(domain: DirichletDomain, f: Nonlinearity, lambda_grid: Sequence[float],
                  parallel: bool = False, processes: Optional[int] = None) -> Branch:
    """
    Minimal solutions along an ascending λ grid.

    Each solve is warm-started from the previous minimal solution, which is
    a subsolution for the next λ. With `parallel`, points are cold-started
    in a process pool instead.

    Raises:
        Diverged: the grid reaches past λ* (carries the offending λ).
    """
    grid = _check_grid(lambda_grid)
    solutions = []
    try:
        if parallel and len(grid) > 1:
            with Pool(processes=processes) as pool:
                solutions = pool.map(partial(_cold_solve, domain, f), grid)
        else:
            previous = None
            for lam in grid:
                sol = minimal_solve(domain, f, lam, init=None if previous is None else previous.values)
                stability_mu1(domain, f, sol)
                solutions.append(sol)
                previous = sol
    except Diverged as e:
        logger.error(f"Minimal branch of {f.spec} diverged at lambda={e.lam}")
        raise

    branch = Branch(label=BranchLabel.MINIMAL)
    arc = 0.0
    for i, sol in enumerate(solutions):
        if i:
            prev = solutions[i - 1]
            arc += float(np.linalg.norm(np.append(sol.values - prev.values, sol.lam - prev.lam)))
        branch.points.append(BranchPoint.from_solution(sol, arc_param=arc))
    branch.stop_reason = 'grid'
    logger.info(f"Swept {len(grid)} points of the minimal branch of {f.spec}")
    return branch


def _tangent(domain: DirichletDomain, f: Nonlinearity, u: np.ndarray, lam: float) -> np.ndarray:
    jacobian = np.hstack([
        domain.operator - lam * np.diag(f.derivative(u)),
        -np.asarray(f.value(u), dtype=float)[:, None],
    ])
    kernel = scipy.linalg.null_space(jacobian)
    if kernel.shape[1] != 1:
        logger.warning(f"Tangent space of dimension {kernel.shape[1]} at lambda={lam}; possible branch point")
    if kernel.shape[1] == 0:
        _, _, vt = np.linalg.svd(jacobian)
        return vt[-1]
    return kernel[:, 0]


def _correct(domain: DirichletDomain, f: Nonlinearity, predicted: np.ndarray, previous: np.ndarray,
             tangent: np.ndarray, step: float, tol: float) -> Optional[Tuple[np.ndarray, int]]:
    """Newton on the bordered system [F(u, λ); tᵀ(y - y_prev) - step] = 0."""
    n = domain.n_omega
    y = predicted.copy()
    for iteration in range(1, CORRECTOR_MAX_ITER + 1):
        u, lam = y[:n], y[n]
        with np.errstate(over='ignore', invalid='ignore'):
            g = np.append(residual_vector(domain, f, lam, u), tangent @ (y - previous) - step)
            fu = np.asarray(f.value(u), dtype=float)
            du = f.derivative(u)
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(fu)) and np.all(np.isfinite(du))):
            return None
        jacobian = np.zeros((n + 1, n + 1))
        jacobian[:n, :n] = domain.operator - lam * np.diag(du)
        jacobian[:n, n] = -fu
        jacobian[n] = tangent
        try:
            delta = scipy.linalg.solve(jacobian, -g)
        except scipy.linalg.LinAlgError:
            return None
        y = y + delta
        scale = max(1.0, float(np.max(np.abs(y[:n]))))
        if np.max(np.abs(delta)) <= tol * scale and residual_norm(domain, f, y[n], y[:n]) <= tol * scale:
            return y, iteration
    return None


def continue_branch(domain: DirichletDomain, f: Nonlinearity, start, direction: int = 1,
                    step: Optional[float] = None, max_points: Optional[int] = None,
                    norm_cap: Optional[float] = None, min_step: Optional[float] = None,
                    label: str = BranchLabel.MINIMAL, name: Optional[str] = None) -> Branch:
    """
    Pseudo-arclength continuation of the solution set of F(u, λ) = 0 in (u, λ).

    The tangent is the null vector of [F_u, -f(u)], oriented to keep a positive
    inner product with the previous one (initially: sign of dλ equal to
    `direction`). The step is halved on corrector failure and grown by 1.3
    after fast corrections, within [min_step, step].

    Stops at max_points, when λ <= 0, when ‖u‖∞ exceeds norm_cap, or when the
    step falls below min_step (see `Branch.stop_reason`).
    """
    step = gelfand_settings.GELFAND_CONTINUATION_STEP if step is None else float(step)
    max_points = gelfand_settings.GELFAND_CONTINUATION_MAX_POINTS if max_points is None else int(max_points)
    norm_cap = gelfand_settings.GELFAND_NORM_CAP if norm_cap is None else float(norm_cap)
    min_step = gelfand_settings.GELFAND_CONTINUATION_MIN_STEP if min_step is None else float(min_step)
    tol = gelfand_settings.GELFAND_NEWTON_TOL
    if not (step > 0 and min_step > 0 and min_step <= step):
        raise ValidationError(f"Need 0 < min_step <= step, got {min_step}, {step}", code='out_of_range')
    if direction not in (1, -1):
        raise ValidationError(f"direction must be +1 or -1, got {direction}", code='out_of_range')

    if isinstance(start, Solution):
        if start.mu1 is None:
            stability_mu1(domain, f, start)
        start = BranchPoint.from_solution(start)
    n = domain.n_omega
    start_residual = residual_norm(domain, f, start.lam, start.values)
    if start_residual > 10 * tol * max(1.0, start.norm_inf):
        raise ValidationError(
            f"Start point is not a solution (residual {start_residual:.3g})", code='out_of_range'
        )

    y = np.append(np.asarray(start.values, dtype=float), start.lam)
    tangent = _tangent(domain, f, y[:n], y[n])
    if tangent[n] * direction < 0 or (tangent[n] == 0 and direction < 0):
        tangent = -tangent
    branch = Branch(points=[BranchPoint(lam=float(y[n]), values=y[:n].copy(), norm_inf=start.norm_inf,
                                        mu1=start.mu1, arc_param=0.0, residual=start_residual)],
                    label=label, name=name)
    h = step
    arc = 0.0
    stop_reason = 'max_points'
    while len(branch.points) < max_points:
        corrected = _correct(domain, f, y + h * tangent, y, tangent, h, tol)
        if corrected is None:
            h *= 0.5
            if h < min_step:
                logger.warning(f"Continuation step fell below {min_step:g} at lambda={y[n]:.10g}")
                stop_reason = 'min_step'
                break
            continue
        y_new, iterations = corrected
        u_new, lam_new = y_new[:n], float(y_new[n])
        if lam_new <= 0:
            stop_reason = 'lambda_nonpositive'
            break
        norm = float(np.max(np.abs(u_new)))
        if norm > norm_cap:
            stop_reason = 'norm_cap'
            break

        new_tangent = _tangent(domain, f, u_new, lam_new)
        if new_tangent @ tangent < 0:
            new_tangent = -new_tangent
        arc += float(np.linalg.norm(y_new - y))
        mu1 = smallest_eigenvalue_shifted(domain, lam_new * f.derivative(u_new))
        branch.points.append(BranchPoint(
            lam=lam_new, values=u_new.copy(), norm_inf=norm, mu1=mu1, arc_param=arc,
            residual=residual_norm(domain, f, lam_new, u_new),
        ))
        y, tangent = y_new, new_tangent
        if iterations <= FAST_CORRECTOR:
            h = min(h * STEP_GROWTH, step)

    branch.stop_reason = stop_reason
    branch.folds = [fold.index for fold in detect_fold(branch)]
    logger.info(
        f"Continued {branch.name} branch of {f.spec}: {len(branch)} points, "
        f"{len(branch.folds)} folds, stopped on {stop_reason}"
    )
    return branch


def detect_fold(branch: Branch, domain: Optional[DirichletDomain] = None, f: Optional[Nonlinearity] = None,
                fold_tol: Optional[float] = None) -> List[Fold]:
    """
    Turning points of λ along a branch: sign changes of Δλ, with steps where
    |Δλ| <= 1e-12 treated as flat. A flat stretch between the two signs is
    reported as one fold whose `segment` spans it.

    With `domain` and `f`, isolated folds are refined on the extended fold
    system so that |μ₁| <= fold_tol; otherwise (or if refinement fails) the
    discrete extremum is reported.
    """
    fold_tol = gelfand_settings.GELFAND_FOLD_TOL if fold_tol is None else float(fold_tol)
    points = branch.points
    if len(points) < 3:
        return []
    lambdas = branch.lambdas
    diffs = np.diff(lambdas)
    signs = np.where(np.abs(diffs) <= FLAT_LAMBDA, 0, np.sign(diffs)).astype(int)

    folds = []
    last_index, last_sign = None, 0
    for i, sign in enumerate(signs):
        if sign == 0:
            continue
        if last_sign and sign != last_sign:
            first, last = last_index + 1, i
            segment = lambdas[first:last + 1]
            offset = int(np.argmax(segment) if last_sign > 0 else np.argmin(segment))
            index = first + offset
            folds.append(_make_fold(points, index, (first, last), domain, f, fold_tol))
        last_index, last_sign = i, sign
    return folds


def _make_fold(points: List[BranchPoint], index: int, segment: Tuple[int, int],
               domain: Optional[DirichletDomain], f: Optional[Nonlinearity], fold_tol: float) -> Fold:
    point = points[index]
    if domain is not None and f is not None and segment[0] == segment[1]:
        try:
            lam, u, _ = refine_fold(domain, f, point.lam, point.values)
            mu1 = smallest_eigenvalue_shifted(domain, lam * f.derivative(u))
        except GelfandError as e:
            logger.debug(f"Fold near lambda={point.lam} not refined: {e}")
        else:
            if abs(mu1) <= fold_tol and abs(lam - point.lam) <= 10 * max(abs(point.lam), 1.0) * 1e-2:
                return Fold(index=index, lam=lam, values=u, mu1=mu1, refined=True, segment=segment)
    return Fold(index=index, lam=point.lam, values=np.array(point.values), mu1=point.mu1,
                refined=False, segment=segment)


def find_solutions(domain: DirichletDomain, f: Nonlinearity, lam: float,
                   box: Optional[Tuple[float, float]] = None, tol: Optional[float] = None,
                   dedup_tol: Optional[float] = None) -> List[Solution]:
    """
    All solutions Newton finds from a deterministic lattice of starting points.

    Per-vertex levels are spread over `box`, by default the envelope
    [g₁⁻¹(λ), g₂⁻¹(λ)]; the lattice has at most 729 points (constant starts
    when Ω has more than 6 vertices). The minimal solution is included when
    it exists. Results are deduplicated in the sup norm and sorted by ‖u‖∞.
    """
    lam = float(lam)
    tol = gelfand_settings.GELFAND_NEWTON_TOL if tol is None else float(tol)
    dedup_tol = gelfand_settings.GELFAND_DEDUP_TOL if dedup_tol is None else float(dedup_tol)
    n = domain.n_omega
    if box is None:
        if not _has_envelope(f):
            raise ValidationError(f"{f.spec} has no envelope; pass an explicit box", code='no_critical_point')
        envelope = critical_s0(f)
        if lam > envelope.lambda_cap:
            return []
        if lam == 0:
            return [Solution(lam=0.0, values=np.zeros(n), residual=0.0, minimal=True, mu1=None)]
        box = envelope_bounds(envelope, lam)
    lo, hi = (float(v) for v in box)

    found: List[Solution] = []
    if f.admissible:
        try:
            found.append(minimal_solve(domain, f, lam))
        except GelfandError:
            pass

    levels = min(MAX_LEVELS, int(math.floor(MAX_SEEDS ** (1.0 / n) + 1e-9))) if n <= 6 else 1
    if levels >= 2:
        axis = np.linspace(lo, hi, levels)
        seeds = (np.array(seed) for seed in np.array(np.meshgrid(*([axis] * n), indexing='ij')).reshape(n, -1).T)
    else:
        seeds = (np.full(n, c) for c in np.linspace(lo, hi, MAX_LEVELS))

    for seed in seeds:
        try:
            sol = newton_solve(domain, f, lam, init=seed, tol=tol)
        except GelfandError:
            continue
        if f.admissible and np.any(sol.values < -1e-12):
            continue
        if any(np.max(np.abs(sol.values - other.values)) <= dedup_tol for other in found):
            continue
        found.append(sol)

    for sol in found:
        stability_mu1(domain, f, sol)
    found.sort(key=lambda s: s.norm_inf)
    logger.info(f"Found {len(found)} solutions of {f.spec} at lambda={lam}")
    return found


def _on_branch(branch: Branch, sol: Solution) -> bool:
    points = branch.points
    for a, b in zip(points, points[1:]):
        if (a.lam - sol.lam) * (b.lam - sol.lam) > 0 or a.lam == b.lam:
            continue
        t = (sol.lam - a.lam) / (b.lam - a.lam)
        estimate = (1 - t) * a.values + t * b.values
        if np.max(np.abs(estimate - sol.values)) <= BRANCH_MATCH_TOL * max(1.0, sol.norm_inf):
            return True
    return False


def _join(backward: Branch, forward: Branch, label: str, name: str) -> Branch:
    head = list(reversed(backward.points))
    total = head[0].arc_param if head else 0.0
    points = [
        BranchPoint(lam=p.lam, values=p.values, norm_inf=p.norm_inf, mu1=p.mu1,
                    arc_param=total - p.arc_param, residual=p.residual)
        for p in head
    ]
    points += [
        BranchPoint(lam=p.lam, values=p.values, norm_inf=p.norm_inf, mu1=p.mu1,
                    arc_param=total + p.arc_param, residual=p.residual)
        for p in forward.points[1:]
    ]
    branch = Branch(points=points, label=label, name=name, stop_reason=forward.stop_reason)
    branch.folds = [fold.index for fold in detect_fold(branch)]
    return branch


def bifurcation_diagram(domain: DirichletDomain, f: Nonlinearity, start_lambda: Optional[float] = None,
                        step: Optional[float] = None, max_points: Optional[int] = None,
                        norm_cap: Optional[float] = None,
                        reference_fractions: Sequence[float] = (0.1, 0.25, 0.5)) -> List[Branch]:
    """
    The branches of a diagram: the continued minimal branch (split at its
    first fold into minimal and upper parts) plus every further branch through
    solutions that `find_solutions` turns up at a few reference λ.
    """
    _, upper = lambda_star_bounds(domain, f)
    if math.isinf(upper):
        raise ValidationError(f"{f.spec} has no finite lambda_star; nothing to continue", code='out_of_range')
    start_lambda = 0.02 * upper if start_lambda is None else float(start_lambda)
    options = dict(step=step, max_points=max_points, norm_cap=norm_cap)

    start = minimal_solve(domain, f, start_lambda)
    main = continue_branch(domain, f, start, direction=1, **options)
    branches = []
    if main.folds:
        minimal, upper_part = main.split(main.folds[0], BranchLabel.MINIMAL, BranchLabel.UPPER)
        upper_part.folds = [fold.index for fold in detect_fold(upper_part)]
        branches += [minimal, upper_part]
    else:
        branches.append(main)

    if not _has_envelope(f):
        return branches
    others = 0
    for fraction in reference_fractions:
        for sol in find_solutions(domain, f, fraction * upper):
            if any(_on_branch(b, sol) for b in branches):
                continue
            others += 1
            forward = continue_branch(domain, f, sol, direction=1, label=BranchLabel.OTHER, **options)
            backward = continue_branch(domain, f, sol, direction=-1, label=BranchLabel.OTHER, **options)
            branches.append(_join(backward, forward, BranchLabel.OTHER, f"other-{others}"))
    return branches


def assemble_diagram(branches: Sequence[Branch], vertex_labels: Sequence[str],
                     stab_tol: Optional[float] = None) -> Tuple[List[str], List[list]]:
    """
    Flatten branches into (header, rows) with columns
    branch,arc,lambda,norm_inf,mu1,stable,u_<label>..., sorted by branch
    name and then by arc parameter.
    """
    stab_tol = gelfand_settings.GELFAND_STAB_TOL if stab_tol is None else float(stab_tol)
    header = ['branch', 'arc', 'lambda', 'norm_inf', 'mu1', 'stable'] + [f"u_{label}" for label in vertex_labels]
    rows = []
    for branch in sorted(branches, key=lambda b: str(b.name)):
        for point in sorted(branch.points, key=lambda p: p.arc_param):
            rows.append(
                [str(branch.name), point.arc_param, point.lam, point.norm_inf, point.mu1, point.stable(stab_tol)]
                + [float(v) for v in point.values]
            )
    return header, rows
