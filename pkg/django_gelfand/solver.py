"""
Fixed-λ solvers for (I - P_Ω) u = λ f(u) with u = 0 on the m-boundary.
"""
import logging
import math

from typing import List, Optional

import numpy as np
import scipy.linalg

from django.core.exceptions import ValidationError

from .conf import gelfand_settings
from .exceptions import Diverged, NoConvergence, SingularSystem
from .models import DirichletDomain, EigenPair, Nonlinearity, Solution, VerificationReport, gradient_field
from .scalar import critical_s0
from .spectral import dirichlet_eigenpair, smallest_eigenvalue_shifted


logger = logging.getLogger(__name__)

DAMPING_STEPS = 30
ENVELOPE_SLACK = 1e-8
RANDOM_DIRECTIONS = 100


def _has_envelope(f: Nonlinearity) -> bool:
    return f.admissible and f.strictly_convex and f.superlinear


def linear_dirichlet_solve(domain: DirichletDomain, rhs) -> np.ndarray:
    """
    Solve (I - P_Ω) u = rhs with the domain's cached LU factors.

    Raises:
        ValidationError: rhs of the wrong size or not finite.
        SingularSystem: the factorization has a zero pivot.
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (domain.n_omega,):
        raise ValidationError(
            f"Expected {domain.n_omega} right-hand side values, got shape {rhs.shape}", code='dimension_mismatch'
        )
    if not np.all(np.isfinite(rhs)):
        raise ValidationError("Right-hand side must be finite", code='out_of_range')
    lu, piv = domain.lu
    if np.any(np.diag(lu) == 0):
        raise SingularSystem(f"I - P_Omega is singular on {domain!r}")
    return scipy.linalg.lu_solve((lu, piv), rhs)


def residual_vector(domain: DirichletDomain, f: Nonlinearity, lam: float, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return domain.operator @ u - lam * f.value(u)


def residual_norm(domain: DirichletDomain, f: Nonlinearity, lam: float, u) -> float:
    """‖(I - P_Ω) u - λ f(u)‖∞."""
    with np.errstate(over='ignore', invalid='ignore'):
        r = residual_vector(domain, f, lam, u)
    if not np.all(np.isfinite(r)):
        return math.inf
    return float(np.max(np.abs(r))) if r.size else 0.0


def divergence_cap(f: Nonlinearity, lam: float) -> float:
    """
    Threshold above which a monotone iterate proves there is no solution at λ:
    twice g₂⁻¹(λ) when the envelope exists, GELFAND_DIVERGENCE_CAP otherwise.
    """
    if _has_envelope(f):
        envelope = critical_s0(f)
        return 2.0 * envelope.g2_inv(min(lam, envelope.lambda_cap))
    return gelfand_settings.GELFAND_DIVERGENCE_CAP


def _check_admissible(f: Nonlinearity):
    if not f.admissible:
        raise ValidationError(
            f"{f.spec} is not admissible for the monotone iteration; use newton_solve", code='not_admissible'
        )


def _check_lambda(lam) -> float:
    lam = float(lam)
    if not (math.isfinite(lam) and lam >= 0):
        raise ValidationError(f"lambda must be a finite nonnegative number, got {lam!r}", code='out_of_range')
    return lam


def monotone_iterates(domain: DirichletDomain, f: Nonlinearity, lam: float, n: int) -> List[np.ndarray]:
    """
    The first iterates u⁰ = 0, uᵏ = (I - P_Ω)⁻¹ λ f(uᵏ⁻¹), k = 1..n.
    """
    _check_admissible(f)
    lam = _check_lambda(lam)
    iterates = [np.zeros(domain.n_omega)]
    for _ in range(int(n)):
        iterates.append(linear_dirichlet_solve(domain, lam * f.value(iterates[-1])))
    return iterates


def minimal_solve(domain: DirichletDomain, f: Nonlinearity, lam: float, tol: Optional[float] = None,
                  cap: Optional[float] = None, max_iter: Optional[int] = None, init=None) -> Solution:
    """
    The minimal solution u_λ as the limit of the monotone iteration from 0.

    Args:
        domain: the Dirichlet domain.
        f: an admissible nonlinearity.
        lam: λ >= 0.
        tol: stop once ‖uₙ - uₙ₋₁‖∞ <= tol * max(1, ‖uₙ‖∞). Defaults to GELFAND_SOLVE_TOL.
        cap: divergence threshold on ‖uₙ‖∞. Defaults to `divergence_cap`.
        max_iter: iteration limit. Defaults to GELFAND_MAX_ITER.
        init: starting point instead of 0. Must lie below u_λ, e.g. the
            minimal solution at a smaller λ, or the limit is not minimal.

    Returns:
        A Solution with minimal=True.

    Raises:
        ValidationError: f not admissible, or λ negative.
        Diverged: the iterates exceed the cap, overflow, or do not settle within max_iter.
        NoConvergence: the limit does not pass the residual re-check.
    """
    _check_admissible(f)
    lam = _check_lambda(lam)
    tol = gelfand_settings.GELFAND_SOLVE_TOL if tol is None else float(tol)
    max_iter = gelfand_settings.GELFAND_MAX_ITER if max_iter is None else int(max_iter)
    n = domain.n_omega
    if lam == 0.0:
        return Solution(lam=0.0, values=np.zeros(n), residual=0.0, minimal=True, iterations=1)
    cap = divergence_cap(f, lam) if cap is None else float(cap)

    u = np.zeros(n) if init is None else np.array(init, dtype=float)
    if u.shape != (n,):
        raise ValidationError(f"Expected {n} initial values, got shape {u.shape}", code='dimension_mismatch')
    for iteration in range(1, max_iter + 1):
        try:
            with np.errstate(over='raise', invalid='raise'):
                rhs = lam * f.value(u)
        except FloatingPointError:
            raise Diverged(lam, iteration, float(np.max(u)), reason='overflow')
        if not np.all(np.isfinite(rhs)):
            raise Diverged(lam, iteration, float(np.max(u)), reason='overflow')
        new = linear_dirichlet_solve(domain, rhs)
        norm = float(np.max(new))
        if norm > cap:
            logger.debug(f"Monotone iteration at lambda={lam} crossed the cap {cap:.6g} after {iteration} steps")
            raise Diverged(lam, iteration, norm, reason='cap')
        step = float(np.max(np.abs(new - u)))
        u = new
        if step <= tol * max(1.0, norm):
            break
    else:
        raise Diverged(lam, max_iter, float(np.max(u)), reason='max_iter')

    residual = residual_norm(domain, f, lam, u)
    if residual > 10.0 * tol * max(1.0, float(np.max(u))):
        logger.warning(f"Monotone iteration at lambda={lam} settled with residual {residual:.3g}")
        raise NoConvergence(f"monotone iteration at lambda={lam} settled with residual {residual:.3g}", residual=residual)
    logger.debug(f"Minimal solution at lambda={lam}: |u|={np.max(u):.10g} in {iteration} iterations")
    return Solution(lam=lam, values=u, residual=residual, minimal=True, iterations=iteration)


def newton_solve(domain: DirichletDomain, f: Nonlinearity, lam: float, init=None, tol: Optional[float] = None,
                 max_iter: Optional[int] = None) -> Solution:
    """
    Damped Newton iteration on F(u) = (I - P_Ω) u - λ f(u) with Jacobian
    (I - P_Ω) - λ diag(f'(u)). A step is halved up to 30 times until the
    residual decreases.

    Raises:
        NoConvergence: singular Jacobian (fold=True), damping exhausted, or
            max_iter reached.
    """
    lam = float(lam)
    tol = gelfand_settings.GELFAND_NEWTON_TOL if tol is None else float(tol)
    max_iter = gelfand_settings.GELFAND_NEWTON_MAX_ITER if max_iter is None else int(max_iter)
    n = domain.n_omega
    u = np.zeros(n) if init is None else np.array(init, dtype=float)
    if u.shape != (n,):
        raise ValidationError(f"Expected {n} initial values, got shape {u.shape}", code='dimension_mismatch')
    if not np.all(np.isfinite(u)):
        raise ValidationError("Initial guess must be finite", code='out_of_range')

    residual = residual_norm(domain, f, lam, u)
    for iteration in range(max_iter + 1):
        if residual <= tol * max(1.0, float(np.max(np.abs(u)))):
            return Solution(lam=lam, values=u, residual=residual, iterations=iteration)
        if iteration == max_iter:
            break
        jacobian = domain.operator - lam * np.diag(f.derivative(u))
        lu, piv = scipy.linalg.lu_factor(jacobian, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if pivots.min() <= 1e-14 * max(1.0, pivots.max()):
            raise NoConvergence(f"singular Jacobian at lambda={lam}", fold=True, residual=residual)
        with np.errstate(over='ignore', invalid='ignore'):
            delta = scipy.linalg.lu_solve((lu, piv), -residual_vector(domain, f, lam, u))

        t = 1.0
        for _ in range(DAMPING_STEPS + 1):
            trial = u + t * delta
            trial_residual = residual_norm(domain, f, lam, trial)
            if trial_residual < residual:
                break
            t *= 0.5
        else:
            logger.warning(f"Newton damping exhausted at lambda={lam} with residual {residual:.3g}")
            raise NoConvergence(f"Newton damping exhausted at lambda={lam}", residual=residual)
        u, residual = trial, trial_residual

    raise NoConvergence(f"Newton did not converge in {max_iter} iterations at lambda={lam}", residual=residual)


def stability_mu1(domain: DirichletDomain, f: Nonlinearity, sol: Solution, stab_tol: Optional[float] = None) -> float:
    """
    μ₁, the bottom of the spectrum of the operator linearized at u. Sets
    `sol.mu1` and `sol.stable` (μ₁ >= -stab_tol).
    """
    stab_tol = gelfand_settings.GELFAND_STAB_TOL if stab_tol is None else float(stab_tol)
    mu1 = smallest_eigenvalue_shifted(domain, sol.lam * f.derivative(np.asarray(sol.values, dtype=float)))
    sol.mu1 = mu1
    sol.stable = mu1 >= -stab_tol
    return mu1


def energy(domain: DirichletDomain, f: Nonlinearity, lam: float, u) -> float:
    """
    E(u) = 1/4 Σ_{x,y∈Ωₘ} w_xy (u(y) - u(x))² - λ Σ_{x∈Ω} ν(x) F(u(x)).

    `u` may be given on Ω (extended by zero) or on Ωₘ in closure order.
    """
    u = domain.on_closure(u)
    grad = gradient_field(u)
    dirichlet = 0.25 * float(np.sum(domain.closure_weights * grad * grad))
    inner = u[:domain.n_omega]
    return dirichlet - float(lam) * float(np.sum(domain.nu_omega * f.primitive(inner)))


def quadratic_form(domain: DirichletDomain, f: Nonlinearity, lam: float, u, v) -> float:
    """Q_u(v) = 1/2 Σ_{x,y∈Ωₘ} w_xy (v(y) - v(x))² - λ Σ_{x∈Ω} ν(x) f'(u(x)) v(x)²."""
    u = np.asarray(u, dtype=float)
    v_closure = domain.on_closure(v)
    grad = gradient_field(v_closure)
    inner = v_closure[:domain.n_omega]
    return 0.5 * float(np.sum(domain.closure_weights * grad * grad)) \
        - float(lam) * float(np.sum(domain.nu_omega * f.derivative(u) * inner * inner))


def minimal_upper_bound(domain: DirichletDomain, f: Nonlinearity, lam: float, lam_star: Optional[float] = None,
                        eigenpair: Optional[EigenPair] = None) -> np.ndarray:
    """
    Componentwise bound u_λ <= λ f(g₂⁻¹(λ*)) / (λₘ α_Ω) φₘ on the minimal
    solution, for strictly convex superlinear f. Without λ*, g₂⁻¹(λ) is used.
    """
    if not _has_envelope(f):
        raise ValidationError(f"{f.spec} has no envelope", code='non_convex')
    envelope = critical_s0(f)
    eigenpair = eigenpair or dirichlet_eigenpair(domain)
    level = envelope.g2_inv(min(float(lam_star if lam_star is not None else lam), envelope.lambda_cap))
    return float(lam) * float(f.value(level)) / (eigenpair.value * eigenpair.alpha) * eigenpair.vector


def verify_solution(domain: DirichletDomain, f: Nonlinearity, sol: Solution,
                    lam_star: Optional[float] = None) -> VerificationReport:
    """
    Check a solution against the a-priori theory and report every violation.

    The checks are: the residual; nonnegativity (admissible f); the
    envelope g₁⁻¹(λ) <= u(x) <= g₂⁻¹(λ) at every vertex (strictly convex f); the
    bound on minimal solutions; and Q_u(v) >= μ₁ Σ ν v² on 100 seeded
    random directions.
    """
    u = np.asarray(sol.values, dtype=float)
    lam = float(sol.lam)
    norm = float(np.max(np.abs(u))) if u.size else 0.0
    violations = []

    residual = residual_norm(domain, f, lam, u)
    tolerance = 10.0 * max(gelfand_settings.GELFAND_SOLVE_TOL, gelfand_settings.GELFAND_NEWTON_TOL) * max(1.0, norm)
    residual_ok = residual <= tolerance
    if not residual_ok:
        violations.append(f"residual {residual:.3g} exceeds {tolerance:.3g}")

    nonnegative = bool(np.all(u >= -1e-12))
    if f.admissible and not nonnegative:
        violations.append(f"negative values: min u = {u.min():.6g}")

    envelope_ok = None
    minimal_bound_ok = None
    if _has_envelope(f):
        envelope = critical_s0(f)
        if lam == 0.0:
            envelope_ok = norm <= ENVELOPE_SLACK
        elif lam > envelope.lambda_cap:
            envelope_ok = False
        else:
            lo, hi = envelope.g1_inv(lam), envelope.g2_inv(lam)
            envelope_ok = bool(np.all(u >= lo - ENVELOPE_SLACK) and np.all(u <= hi + ENVELOPE_SLACK))
        if not envelope_ok:
            violations.append(f"solution outside the envelope at lambda={lam}")
        if sol.minimal and 0.0 < lam <= envelope.lambda_cap:
            bound = minimal_upper_bound(domain, f, lam, lam_star=lam_star)
            minimal_bound_ok = bool(np.all(u <= bound + ENVELOPE_SLACK))
            if not minimal_bound_ok:
                violations.append("minimal solution above its a-priori bound")

    mu1 = stability_mu1(domain, f, sol)
    rng = np.random.default_rng(0)
    quadratic_form_ok = True
    for _ in range(RANDOM_DIRECTIONS):
        v = rng.standard_normal(domain.n_omega)
        mass = float(np.sum(domain.nu_omega * v * v))
        if quadratic_form(domain, f, lam, u, v) < mu1 * mass - 1e-9 * max(1.0, mass):
            quadratic_form_ok = False
            break
    if not quadratic_form_ok:
        violations.append(f"quadratic form below mu1={mu1:.6g} along a test direction")

    return VerificationReport(
        residual=residual,
        residual_ok=residual_ok,
        nonnegative=nonnegative,
        envelope_ok=envelope_ok,
        mu1=mu1,
        stable=bool(sol.stable),
        quadratic_form_ok=quadratic_form_ok,
        minimal_bound_ok=minimal_bound_ok,
        violations=violations,
    )


def allen_cahn_threshold(domain: DirichletDomain) -> float:
    """u = 0 is a stable solution of the Allen-Cahn problem exactly when λ <= λₘ(Ω)."""
    return dirichlet_eigenpair(domain).value


def allen_cahn_condition(domain: DirichletDomain, lam: float) -> bool:
    """
    m_x(Ω) <= 1 - 2λ/(3√3) on Ω: under it the truncated problem between
    0 and 1 has a solution that solves the Allen-Cahn problem itself.
    """
    mass_inside = domain.p_omega.sum(axis=1)
    return bool(np.all(mass_inside <= 1.0 - 2.0 * float(lam) / (3.0 * math.sqrt(3.0)) + 1e-12))
