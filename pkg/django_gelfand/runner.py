"""
Dispatch of the `gelfand` commands.

A RunConfig is built from the command options (the management command does
this) and `run` resolves the graph, calls the numerical modules and writes
CSV. Input problems surface as ValidationError, numerical ones as
GelfandError; both are mapped to exit codes by the caller.
"""
import json
import logging
import math

from dataclasses import dataclass, field
from typing import List, Optional, TextIO, Tuple

import numpy as np

from django.core.exceptions import ValidationError
from django.core.management.base import CommandError
from django.core.serializers.json import DjangoJSONEncoder
from django.db import models

from .branch import (
    assemble_diagram,
    bifurcation_diagram,
    continue_branch,
    lambda_star_bisect,
    lambda_star_bounds,
    sweep_minimal,
)
from .catalogs import BuiltinExample, builtin_corpus, get_example
from .conf import gelfand_settings
from .formats import emit_csv, parse_graph_file
from .models import DirichletDomain, Nonlinearity, Solution, parse_nonlinearity
from .solver import energy, minimal_solve, newton_solve, stability_mu1, verify_solution
from .spectral import dirichlet_eigenpair, lambda_via_moments


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class Action(models.TextChoices):
    EIG = 'eig', 'Dirichlet eigenpair'
    SOLVE = 'solve', 'Solve at one lambda'
    SWEEP = 'sweep', 'Minimal branch on a lambda grid'
    LAMBDA_STAR = 'lambda-star', 'Extremal parameter'
    CONTINUE = 'continue', 'Continue the minimal branch'
    DIAGRAM = 'diagram', 'Bifurcation diagram'
    STABILITY = 'stability', 'Stability of a solution'
    VERIFY = 'verify', 'Check a solution against the a-priori bounds'
    DEMO = 'demo', 'Run built-in examples'


@dataclass
class RunConfig:
    command: str
    graph: Optional[str] = None
    builtin: Optional[str] = None
    omega: List[str] = field(default_factory=list)
    f_spec: Optional[str] = None
    lam: Optional[float] = None
    init: Optional[List[float]] = None
    newton: bool = False
    lam_from: Optional[float] = None
    lam_to: Optional[float] = None
    points: int = 20
    tol: Optional[float] = None
    solve_tol: Optional[float] = None
    stab_tol: Optional[float] = None
    out: Optional[str] = None
    parallel: bool = False
    start_lambda: Optional[float] = None
    step: Optional[float] = None
    max_points: Optional[int] = None
    target: Optional[str] = None

    def __post_init__(self):
        if self.command not in Action.values:
            raise CommandError(f"Unknown command {self.command!r}", returncode=EXIT_USAGE)
        # Unset tolerances fall back to the settings.
        if self.tol is None:
            self.tol = gelfand_settings.GELFAND_LAMBDA_TOL
        if self.solve_tol is None:
            self.solve_tol = gelfand_settings.GELFAND_SOLVE_TOL
        if self.stab_tol is None:
            self.stab_tol = gelfand_settings.GELFAND_STAB_TOL
        for name in ('tol', 'solve_tol', 'stab_tol'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be positive, got {value}", code='out_of_range')
        if self.graph and self.builtin:
            raise CommandError("Use either --graph or --builtin, not both", returncode=EXIT_USAGE)


def _usage(message: str) -> CommandError:
    return CommandError(message, returncode=EXIT_USAGE)


def resolve_problem(config: RunConfig) -> Tuple[DirichletDomain, Nonlinearity]:
    """The domain and nonlinearity named by --graph/--builtin and --f."""
    if config.builtin:
        example = get_example(config.builtin)
        domain = example.domain
        f_spec = config.f_spec or example.f_spec
    elif config.graph:
        graph, omega = parse_graph_file(gelfand_settings.resolve_graph_path(config.graph))
        omega = config.omega or omega
        if not omega:
            raise ValidationError(f"{config.graph} has no omega line and no --omega was given", code='empty_omega')
        domain = DirichletDomain.build(graph, omega)
        f_spec = config.f_spec or 'exp'
    else:
        raise _usage("One of --graph or --builtin is required")
    return domain, parse_nonlinearity(f_spec)


def _require_lambda(config: RunConfig) -> float:
    if config.lam is None:
        raise _usage(f"'{config.command}' needs --lambda")
    return config.lam


def _solve(config: RunConfig, domain: DirichletDomain, f: Nonlinearity) -> Solution:
    lam = _require_lambda(config)
    if config.newton or config.init is not None:
        init = config.init
        if init is not None and len(init) == 1:
            init = [init[0]] * domain.n_omega
        sol = newton_solve(domain, f, lam, init=init)
    else:
        sol = minimal_solve(domain, f, lam, tol=config.solve_tol)
    stability_mu1(domain, f, sol, stab_tol=config.stab_tol)
    return sol


def _run_eig(config, domain, f, stream):
    eigenpair = dirichlet_eigenpair(domain)
    moments = lambda_via_moments(domain)
    rows = [
        ['lambda_m', eigenpair.value],
        ['alpha', eigenpair.alpha],
        ['big_m', eigenpair.big_m],
        ['moment_estimate', moments[-1]],
    ]
    rows += [[f"phi_{label}", float(v)] for label, v in zip(domain.omega_labels, eigenpair.vector)]
    emit_csv(['quantity', 'value'], rows, path=config.out, stream=stream)
    return EXIT_OK


def _run_solve(config, domain, f, stream):
    sol = _solve(config, domain, f)
    logger.info(f"Solved {f.spec} at lambda={sol.lam}: {sol}")
    rows = [[label, float(v)] for label, v in zip(domain.omega_labels, sol.values)]
    summary = json.dumps(sol.summary(), cls=DjangoJSONEncoder)
    emit_csv(['vertex', 'value'], rows, path=config.out, stream=stream, trailer=summary)
    return EXIT_OK


def _run_sweep(config, domain, f, stream):
    if config.lam_from is None or config.lam_to is None:
        raise _usage("'sweep' needs --from and --to")
    if config.points < 2:
        raise ValidationError(f"--points must be at least 2, got {config.points}", code='out_of_range')
    grid = np.linspace(config.lam_from, config.lam_to, config.points)
    branch = sweep_minimal(domain, f, grid, parallel=config.parallel)
    header, rows = assemble_diagram([branch], domain.omega_labels, stab_tol=config.stab_tol)
    emit_csv(header, rows, path=config.out, stream=stream)
    return EXIT_OK


def _run_lambda_star(config, domain, f, stream):
    lower, upper = lambda_star_bounds(domain, f)
    lam_star, u_star = lambda_star_bisect(domain, f, tol_lambda=config.tol)
    header = ['lambda_star', 'lower_bound', 'upper_bound', 'u_star_norm', 'mu1'] + [
        f"u_{label}" for label in domain.omega_labels
    ]
    if u_star is None:
        row = [lam_star, lower, upper, None, None] + [None] * domain.n_omega
    else:
        row = [lam_star, lower, upper, u_star.norm_inf, u_star.mu1] + [float(v) for v in u_star.values]
    emit_csv(header, [row], path=config.out, stream=stream)
    return EXIT_OK


def _run_continue(config, domain, f, stream):
    start_lambda = config.start_lambda if config.start_lambda is not None else config.lam
    if start_lambda is None:
        raise _usage("'continue' needs --start-lambda")
    start = minimal_solve(domain, f, start_lambda, tol=config.solve_tol)
    branch = continue_branch(domain, f, start, step=config.step, max_points=config.max_points)
    header, rows = assemble_diagram([branch], domain.omega_labels, stab_tol=config.stab_tol)
    emit_csv(header, rows, path=config.out, stream=stream)
    return EXIT_OK


def _run_diagram(config, domain, f, stream):
    branches = bifurcation_diagram(domain, f, start_lambda=config.start_lambda, step=config.step,
                                   max_points=config.max_points)
    header, rows = assemble_diagram(branches, domain.omega_labels, stab_tol=config.stab_tol)
    emit_csv(header, rows, path=config.out, stream=stream)
    return EXIT_OK


def _run_stability(config, domain, f, stream):
    sol = _solve(config, domain, f)
    rows = [
        ['lambda', sol.lam],
        ['mu1', sol.mu1],
        ['stable', sol.stable],
        ['energy', energy(domain, f, sol.lam, sol.values)],
    ]
    emit_csv(['quantity', 'value'], rows, path=config.out, stream=stream)
    return EXIT_OK


def _run_verify(config, domain, f, stream):
    sol = _solve(config, domain, f)
    report = verify_solution(domain, f, sol)
    emit_csv(['check', 'value'], report.rows(), path=config.out, stream=stream)
    for violation in report.violations:
        logger.error(f"Verification of {f.spec} at lambda={sol.lam}: {violation}")
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def run_demo(examples: List[BuiltinExample]) -> Tuple[List[str], List[list], bool]:
    """Measure every expectation of the given examples; returns (header, rows, all_passed)."""
    header = ['example', 'quantity', 'expected', 'measured', 'tolerance', 'provenance', 'ok']
    rows = []
    passed = True
    for example in examples:
        for expectation in example.expected():
            try:
                measured, ok = expectation.check(example)
            except Exception as e:
                # A failing measurement is a failed check, the remaining ones still run.
                logger.exception(f"{example.label}: measuring {expectation.quantity} failed: {e}")
                measured, ok = None, False
            passed = passed and ok
            rows.append([example.label, expectation.quantity, float(expectation.value), measured,
                         float(expectation.tolerance), expectation.provenance, ok])
    return header, rows, passed


def _run_demo(config, stream):
    name = config.target or config.builtin
    examples = [get_example(name)] if name else builtin_corpus()
    header, rows, passed = run_demo(examples)
    emit_csv(header, rows, path=config.out, stream=stream)
    return EXIT_OK if passed else EXIT_NUMERICAL


HANDLERS = {
    Action.EIG: _run_eig,
    Action.SOLVE: _run_solve,
    Action.SWEEP: _run_sweep,
    Action.LAMBDA_STAR: _run_lambda_star,
    Action.CONTINUE: _run_continue,
    Action.DIAGRAM: _run_diagram,
    Action.STABILITY: _run_stability,
    Action.VERIFY: _run_verify,
}


def run(config: RunConfig, stream: Optional[TextIO] = None) -> int:
    """
    Execute one command and return its exit status.

    CSV goes to `config.out` when set, else to `stream`.

    Raises:
        CommandError: usage problems (returncode 1).
        ValidationError: bad input.
        GelfandError: numerical failure.
    """
    logger.debug(f"Running {config}")
    if config.command == Action.DEMO:
        return _run_demo(config, stream)
    domain, f = resolve_problem(config)
    return HANDLERS[Action(config.command)](config, domain, f, stream)
