import logging
import math

from typing import List, Optional, Tuple

import numpy as np

from django.core.exceptions import ValidationError

from .conf import gelfand_settings
from .exceptions import EigenSolverError
from .models import DirichletDomain, EigenPair


logger = logging.getLogger(__name__)

MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-10
THETA_CAP = 1e150


def full_spectrum(matrix, tol: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Args:
        matrix: square symmetric matrix.
        tol: stop once the off-diagonal Frobenius norm is below
            tol * max(1, ||A||_F). Defaults to GELFAND_JACOBI_TOL.

    Returns:
        (values, vectors): eigenvalues ascending, orthonormal eigenvectors as columns.

    Raises:
        ValidationError: code 'asymmetric_matrix' for non-symmetric input.
        EigenSolverError: no convergence within MAX_SWEEPS sweeps.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"Expected a square matrix, got shape {a.shape}", code='dimension_mismatch')
    if not np.all(np.isfinite(a)):
        raise ValidationError("Matrix has non-finite entries", code='asymmetric_matrix')
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise ValidationError("Matrix is not symmetric", code='asymmetric_matrix')
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    threshold = (gelfand_settings.GELFAND_JACOBI_TOL if tol is None else tol) * max(1.0, float(np.linalg.norm(a)))

    for sweep in range(MAX_SWEEPS):
        off = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                # Negligible against both diagonal entries: drop it.
                if sweep > 3 and abs(app) + 100.0 * abs(apq) == abs(app) and abs(aqq) + 100.0 * abs(apq) == abs(aqq):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > THETA_CAP:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0

                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        raise EigenSolverError(f"Jacobi rotations did not converge in {MAX_SWEEPS} sweeps (off-diagonal norm {off:.3g})")

    values = np.diag(a).copy()
    order = np.argsort(values, kind='stable')
    logger.debug(f"Jacobi converged after {sweep} sweeps for a {n}x{n} matrix")
    return values[order], v[:, order]


def dirichlet_eigenpair(domain: DirichletDomain) -> EigenPair:
    """
    λₘ(Ω) and its ground state φₘ > 0, normalized to max 1.

    The symmetric similarity transform D^{1/2}(I - P_Ω)D^{-1/2} is
    diagonalized and its bottom eigenvector mapped back by D^{-1/2}.
    """
    values, vectors = full_spectrum(domain.symmetrized)
    value = float(values[0])
    phi = vectors[:, 0] / np.sqrt(domain.nu_omega)
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    phi = phi / phi.max()
    if np.any(phi <= 0):
        raise EigenSolverError(f"Ground state of {domain!r} is not positive; is Omega m-connected?")
    if not (0.0 < value <= 1.0 + 1e-12):
        raise EigenSolverError(f"lambda_m = {value!r} outside (0, 1]")
    value = min(value, 1.0)
    return EigenPair(value=value, vector=phi, alpha=float(phi.min()), big_m=float(phi.max()))


def lambda_via_moments(domain: DirichletDomain, n_max: int = 20) -> List[float]:
    """
    Estimates 1 - (g(2n) / g(n))^{1/n}, n = 1..n_max, of λₘ(Ω), where
    g(k) = νᵀ P_Ω^k 1. Powers are renormalized each step and g is tracked
    through its logarithm.
    """
    n_max = int(n_max)
    if n_max < 2:
        raise ValidationError(f"n_max must be >= 2, got {n_max}", code='out_of_range')
    nu = domain.nu_omega
    p = domain.p_omega
    vector = np.ones(domain.n_omega)
    log_scale = 0.0
    log_g = [math.log(float(nu.sum()))]
    for _ in range(2 * n_max):
        vector = p @ vector
        peak = float(vector.max(initial=0.0))
        if peak <= 0.0:
            log_g.append(-math.inf)
            continue
        log_scale += math.log(peak)
        vector = vector / peak
        log_g.append(log_scale + math.log(float(nu @ vector)))

    estimates = []
    for n in range(1, n_max + 1):
        if math.isinf(log_g[2 * n]):
            estimates.append(1.0)
        else:
            estimates.append(1.0 - math.exp((log_g[2 * n] - log_g[n]) / n))
    return estimates


def smallest_eigenvalue_shifted(domain: DirichletDomain, diagonal_shift) -> float:
    """Smallest eigenvalue of D^{1/2}(I - P_Ω)D^{-1/2} - diag(shift)."""
    shift = np.asarray(diagonal_shift, dtype=float)
    if shift.shape != (domain.n_omega,):
        raise ValidationError(
            f"Expected {domain.n_omega} shift values, got shape {shift.shape}", code='dimension_mismatch'
        )
    values, _ = full_spectrum(domain.symmetrized - np.diag(shift))
    return float(values[0])
