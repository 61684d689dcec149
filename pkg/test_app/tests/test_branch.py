"""
Tests for λ*, branch sweeps, continuation and solution search

Covers:
1. The a-priori bracket and bisection for λ*
2. Warm-started and pooled sweeps of the minimal branch
3. Continuation around the fold onto the upper branch
4. Multiplicity of solutions and the envelope they live in
5. Diagram assembly
"""
import math

import numpy as np

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from django_gelfand.branch import (
    assemble_diagram,
    bifurcation_diagram,
    continue_branch,
    detect_fold,
    find_solutions,
    lambda_star_bisect,
    lambda_star_bounds,
    sweep_minimal,
)
from django_gelfand.catalogs import get_example
from django_gelfand.exceptions import Diverged
from django_gelfand.models import Branch, BranchLabel, BranchPoint, build_domain, build_graph, parse_nonlinearity
from django_gelfand.scalar import critical_s0, lambert_w0, lambert_wm1
from django_gelfand.solver import minimal_solve


LAMBDA_STAR_PATH4 = 1 / (2 * math.e)


def path_domain(weights=(1.0, 1.0, 1.0)):
    graph = build_graph([(i + 1, i + 2, w) for i, w in enumerate(weights)])
    return build_domain(graph, ['2', '3'])


def synthetic_branch(lambdas):
    return Branch(points=[
        BranchPoint(lam=lam, values=np.array([float(i)]), norm_inf=float(i), mu1=0.0, arc_param=float(i))
        for i, lam in enumerate(lambdas)
    ])


class LambdaStarTestCase(SimpleTestCase):
    """Test the bracket and the bisection for λ*"""

    def setUp(self):
        self.domain = path_domain()

    def test_bounds_bracket_the_extremal_parameter(self):
        lower, upper = lambda_star_bounds(self.domain, parse_nonlinearity('exp'))
        self.assertLessEqual(lower, LAMBDA_STAR_PATH4)
        self.assertAlmostEqual(upper, LAMBDA_STAR_PATH4, delta=1e-12)

    def test_sublinear_bounds(self):
        lower, upper = lambda_star_bounds(self.domain, parse_nonlinearity('log'))
        self.assertGreater(lower, 0.0)
        self.assertEqual(upper, math.inf)

    def test_exp(self):
        lam_star, u_star = lambda_star_bisect(self.domain, parse_nonlinearity('exp'))
        self.assertAlmostEqual(lam_star, LAMBDA_STAR_PATH4, delta=1e-6)
        np.testing.assert_allclose(u_star.values, [1.0, 1.0], atol=1e-3)

    def test_power2(self):
        lam_star, u_star = lambda_star_bisect(self.domain, parse_nonlinearity('power:2'))
        self.assertAlmostEqual(lam_star, 0.125, delta=1e-6)
        np.testing.assert_allclose(u_star.values, [1.0, 1.0], atol=1e-3)

    def test_weighted_path(self):
        """λ* = b/((a+b)e) for weights b, a, b"""
        for a, b in ((1.0, 2.0), (3.0, 1.0)):
            lam_star, _ = lambda_star_bisect(path_domain((b, a, b)), parse_nonlinearity('exp'))
            with self.subTest(a=a, b=b):
                self.assertAlmostEqual(lam_star, b / ((a + b) * math.e), delta=1e-6)

    def test_sublinear_is_infinite(self):
        self.assertEqual(lambda_star_bisect(self.domain, parse_nonlinearity('log')), (math.inf, None))

    def test_affine(self):
        lam_star, u_star = lambda_star_bisect(self.domain, parse_nonlinearity('affine'))
        self.assertAlmostEqual(lam_star, 0.5, delta=1e-4)
        self.assertIsNone(u_star)

    def test_not_admissible(self):
        with self.assertRaises(ValidationError) as cm:
            lambda_star_bisect(self.domain, parse_nonlinearity('allen-cahn'))
        self.assertEqual(cm.exception.code, 'not_admissible')

    def test_tolerance_must_be_positive(self):
        with self.assertRaises(ValidationError) as cm:
            lambda_star_bisect(self.domain, parse_nonlinearity('exp'), tol_lambda=0.0)
        self.assertEqual(cm.exception.code, 'out_of_range')


class SweepTestCase(SimpleTestCase):
    """Test sweeps of the minimal branch"""

    def setUp(self):
        self.domain = path_domain()
        self.exp = parse_nonlinearity('exp')

    def test_warm_started_sweep(self):
        grid = np.linspace(0.01, 0.18, 10)
        branch = sweep_minimal(self.domain, self.exp, grid)
        self.assertEqual(branch.label, BranchLabel.MINIMAL)
        self.assertEqual(branch.stop_reason, 'grid')
        self.assertEqual(len(branch), 10)
        for point in branch.points:
            with self.subTest(lam=point.lam):
                np.testing.assert_allclose(point.values, -lambert_w0(-2 * point.lam), atol=1e-8)
                self.assertGreater(point.mu1, 0.0)
        self.assertTrue(np.all(np.diff(branch.arcs) > 0))

    def test_pool_matches_serial(self):
        grid = [0.02, 0.06, 0.1, 0.14]
        serial = sweep_minimal(self.domain, self.exp, grid)
        pooled = sweep_minimal(self.domain, self.exp, grid, parallel=True, processes=2)
        for a, b in zip(serial.points, pooled.points):
            np.testing.assert_allclose(a.values, b.values, atol=1e-10)

    def test_sweep_past_lambda_star(self):
        with self.assertRaises(Diverged) as cm:
            sweep_minimal(self.domain, self.exp, [0.1, 0.3])
        self.assertEqual(cm.exception.lam, 0.3)

    def test_bad_grid(self):
        for grid in ([0.2, 0.1], [-0.1, 0.1], [0.1, math.nan]):
            with self.subTest(grid=grid):
                with self.assertRaises(ValidationError) as cm:
                    sweep_minimal(self.domain, self.exp, grid)
                self.assertEqual(cm.exception.code, 'out_of_range')

    def test_quartic_jumps_between_lobes(self):
        """The minimal branch of the non-convex quartic jumps near λ = 0.011"""
        f = parse_nonlinearity('poly:1,36,24,-10,1')
        grid = np.linspace(0.002, 0.015, 27)
        branch = sweep_minimal(self.domain, f, grid)
        jumps = np.diff(branch.norms)
        at = int(np.argmax(jumps))
        self.assertGreater(jumps[at], 2.0)
        self.assertGreaterEqual(branch.lambdas[at], 0.0105 - 1e-12)
        self.assertLessEqual(branch.lambdas[at + 1], 0.0115 + 1e-12)


class ContinuationTestCase(SimpleTestCase):
    """Test pseudo-arclength continuation through the fold"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.domain = path_domain()
        cls.exp = parse_nonlinearity('exp')
        start = minimal_solve(cls.domain, cls.exp, 0.01)
        cls.branch = continue_branch(cls.domain, cls.exp, start, step=0.05, max_points=500, norm_cap=8.0)

    def test_one_fold_at_lambda_star(self):
        self.assertEqual(len(self.branch.folds), 1)
        folds = detect_fold(self.branch, self.domain, self.exp)
        self.assertEqual(len(folds), 1)
        fold = folds[0]
        self.assertTrue(fold.refined)
        self.assertAlmostEqual(fold.lam, LAMBDA_STAR_PATH4, delta=1e-6)
        self.assertLessEqual(abs(fold.mu1), 1e-6)
        np.testing.assert_allclose(fold.values, [1.0, 1.0], atol=1e-5)

    def test_stops_on_norm_cap(self):
        self.assertEqual(self.branch.stop_reason, 'norm_cap')
        self.assertLessEqual(self.branch.norms.max(), 8.0)

    def test_upper_branch_matches_closed_form(self):
        """u^λ = -W-1(-2λ) past the fold"""
        fold = self.branch.folds[0]
        for point in self.branch.points[fold + 1:]:
            if point.norm_inf < 1.1:
                continue
            with self.subTest(lam=point.lam):
                np.testing.assert_allclose(point.values, -lambert_wm1(-2 * point.lam), atol=1e-6)

    def test_upper_branch_reaches_the_envelope(self):
        """For every ε the upper branch passes g₂⁻¹(ε) at some λ < ε"""
        envelope = critical_s0(self.exp)
        for eps in (0.05, 0.1, 0.15):
            target = envelope.g2_inv(eps)
            with self.subTest(eps=eps):
                self.assertTrue(any(p.lam < eps and p.norm_inf >= target for p in self.branch.points))

    def test_stability_changes_at_the_fold(self):
        self.assertGreater(self.branch.points[0].mu1, 0.0)
        self.assertLess(self.branch.points[-1].mu1, 0.0)

    def test_symmetry_is_preserved(self):
        for point in self.branch.points:
            self.assertLessEqual(abs(point.values[0] - point.values[1]), 1e-9)

    def test_split_at_fold(self):
        minimal, upper = self.branch.split(self.branch.folds[0], BranchLabel.MINIMAL, BranchLabel.UPPER)
        self.assertEqual(minimal.name, 'minimal')
        self.assertEqual(upper.name, 'upper')
        self.assertEqual(minimal.points[-1].lam, upper.points[0].lam)

    def test_start_must_be_a_solution(self):
        start = minimal_solve(self.domain, self.exp, 0.01)
        start.values = start.values + 0.1
        with self.assertRaises(ValidationError) as cm:
            continue_branch(self.domain, self.exp, start)
        self.assertEqual(cm.exception.code, 'out_of_range')

    def test_bad_step(self):
        start = minimal_solve(self.domain, self.exp, 0.01)
        with self.assertRaises(ValidationError) as cm:
            continue_branch(self.domain, self.exp, start, step=1e-7, min_step=1e-6)
        self.assertEqual(cm.exception.code, 'out_of_range')

    def test_piecewise_plateau(self):
        """f/s is constant on [1, 2], so λ stays at 1/4 while ‖u‖∞ crosses that interval"""
        f = parse_nonlinearity('piecewise:0=1,0,1;1=2,2;2=4,2,1')
        start = minimal_solve(self.domain, f, 0.05)
        branch = continue_branch(self.domain, f, start, step=0.05, max_points=400, norm_cap=3.0)
        plateau = [p.norm_inf for p in branch.points if abs(p.lam - 0.25) <= 1e-8]
        self.assertLessEqual(min(plateau), 1.1)
        self.assertGreaterEqual(max(plateau), 1.9)
        self.assertLessEqual(branch.lambdas.max(), 0.25 + 1e-8)


class DetectFoldTestCase(SimpleTestCase):

    def test_short_branch(self):
        self.assertEqual(detect_fold(synthetic_branch([0.1, 0.2])), [])

    def test_turning_point(self):
        folds = detect_fold(synthetic_branch([0.1, 0.2, 0.3, 0.2, 0.1]))
        self.assertEqual(len(folds), 1)
        self.assertEqual(folds[0].index, 2)
        self.assertFalse(folds[0].refined)

    def test_flat_stretch_is_one_fold(self):
        folds = detect_fold(synthetic_branch([0.1, 0.2, 0.2, 0.2, 0.1]))
        self.assertEqual(len(folds), 1)
        self.assertEqual(folds[0].segment, (1, 3))

    def test_monotone_branch(self):
        self.assertEqual(detect_fold(synthetic_branch([0.1, 0.2, 0.3, 0.4])), [])


class FindSolutionsTestCase(SimpleTestCase):
    """Test the Newton lattice search"""

    def setUp(self):
        self.domain = path_domain()
        self.exp = parse_nonlinearity('exp')

    def test_counts_on_path4(self):
        for lam, count in ((0.05, 4), (0.06, 4), (0.08, 2), (0.1, 2), (0.4, 0)):
            with self.subTest(lam=lam):
                self.assertEqual(len(find_solutions(self.domain, self.exp, lam)), count)

    def test_asymmetric_onset(self):
        """Four solutions below λ̂ = 1.5/e³, two above"""
        lo, hi = 0.05, 0.1
        while hi - lo > 1e-3:
            mid = 0.5 * (lo + hi)
            if len(find_solutions(self.domain, self.exp, mid)) >= 4:
                lo = mid
            else:
                hi = mid
        self.assertLessEqual(abs(0.5 * (lo + hi) - 0.076), 5e-3)
        self.assertLessEqual(abs(0.5 * (lo + hi) - 1.5 * math.exp(-3)), 1e-3)

    def test_minimal_lies_below_every_solution(self):
        for name, lam in (('path4-exp', 0.02), ('path4-exp', 0.05), ('path4-exp', 0.1),
                          ('khat-n', 0.05), ('path4-asym', 0.02), ('path4-power2', 0.1)):
            example = get_example(name)
            minimal = minimal_solve(example.domain, example.f, lam)
            for sol in find_solutions(example.domain, example.f, lam):
                with self.subTest(example=name, lam=lam, norm=sol.norm_inf):
                    self.assertTrue(np.all(minimal.values <= sol.values + 1e-8))

    def test_solutions_lie_in_the_envelope(self):
        envelope = critical_s0(self.exp)
        for name, lam in (('path4-exp', 0.05), ('path3-exp', 0.05), ('khat-n', 0.05), ('path4-asym', 0.02)):
            example = get_example(name)
            lo, hi = envelope.g1_inv(lam), envelope.g2_inv(lam)
            solutions = find_solutions(example.domain, example.f, lam)
            with self.subTest(example=name):
                self.assertTrue(solutions[0].minimal)
                self.assertTrue(np.all(np.diff([s.norm_inf for s in solutions]) >= 0))
                for sol in solutions:
                    self.assertTrue(np.all(sol.values >= lo - 1e-8))
                    self.assertTrue(np.all(sol.values <= hi + 1e-8))

    def test_minimal_is_stable_and_others_are_not(self):
        solutions = find_solutions(self.domain, self.exp, 0.05)
        self.assertTrue(solutions[0].stable)
        self.assertTrue(all(not sol.stable for sol in solutions[1:]))

    def test_zero_lambda(self):
        solutions = find_solutions(self.domain, self.exp, 0.0)
        self.assertEqual(len(solutions), 1)
        np.testing.assert_array_equal(solutions[0].values, [0.0, 0.0])

    def test_box_required_without_envelope(self):
        with self.assertRaises(ValidationError) as cm:
            find_solutions(self.domain, parse_nonlinearity('affine'), 0.1)
        self.assertEqual(cm.exception.code, 'no_critical_point')

    def test_explicit_box(self):
        solutions = find_solutions(self.domain, parse_nonlinearity('affine'), 0.25, box=(0.0, 2.0))
        self.assertEqual(len(solutions), 1)
        np.testing.assert_allclose(solutions[0].values, [1.0, 1.0], atol=1e-10)


class FoldAgreementTestCase(SimpleTestCase):
    """Test that the fold found by continuation is the extremal parameter"""

    def test_builtins(self):
        for name in ('path3-exp', 'path5-exp', 'khat-n', 'path4-weighted:1,3', 'path4-asym', 'path4-power2'):
            example = get_example(name)
            lam_star, _ = lambda_star_bisect(example.domain, example.f)
            start = minimal_solve(example.domain, example.f, 0.2 * lam_star)
            branch = continue_branch(example.domain, example.f, start, step=0.05, max_points=500, norm_cap=8.0)
            folds = detect_fold(branch, example.domain, example.f)
            with self.subTest(example=name):
                self.assertTrue(folds)
                self.assertTrue(folds[0].refined)
                self.assertAlmostEqual(folds[0].lam, lam_star, delta=1e-5)
                self.assertAlmostEqual(branch.lambdas.max(), lam_star, delta=1e-3)


class DiagramTestCase(SimpleTestCase):
    """Test diagram construction and flattening"""

    def test_path4_diagram(self):
        domain = path_domain()
        branches = bifurcation_diagram(domain, parse_nonlinearity('exp'), step=0.05, max_points=300, norm_cap=6.0)
        names = [branch.name for branch in branches]
        self.assertEqual(names[:2], ['minimal', 'upper'])
        minimal = branches[0]
        self.assertAlmostEqual(minimal.lambdas.max(), LAMBDA_STAR_PATH4, delta=1e-3)
        others = [branch for branch in branches if branch.label == BranchLabel.OTHER]
        self.assertTrue(others)
        for branch in others:
            self.assertTrue(branch.name.startswith('other-'))
            self.assertTrue(any(abs(p.values[0] - p.values[1]) > 1e-3 for p in branch.points))

    def test_sublinear_has_no_diagram(self):
        with self.assertRaises(ValidationError) as cm:
            bifurcation_diagram(path_domain(), parse_nonlinearity('log'))
        self.assertEqual(cm.exception.code, 'out_of_range')

    def test_assemble(self):
        upper = synthetic_branch([0.3, 0.2])
        upper.name = 'upper'
        minimal = synthetic_branch([0.1, 0.2])
        minimal.points[1].mu1 = -1.0
        header, rows = assemble_diagram([upper, minimal], ['2'])
        self.assertEqual(header, ['branch', 'arc', 'lambda', 'norm_inf', 'mu1', 'stable', 'u_2'])
        self.assertEqual([row[0] for row in rows], ['minimal', 'minimal', 'upper', 'upper'])
        self.assertEqual([row[5] for row in rows], [True, False, True, True])
        self.assertEqual(rows[2][2], 0.3)
