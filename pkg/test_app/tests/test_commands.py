"""
Tests for the gelfand management command

Exit codes: 0 success, 1 usage, 2 invalid input, 3 numerical failure or
failed checks.
"""
import csv
import io
import json
import tempfile

from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from django_gelfand.scalar import lambert_w0, lambert_wm1


def gelfand(*args, **options):
    out = io.StringIO()
    call_command('gelfand', *args, stdout=out, **options)
    return out.getvalue()


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def quantities(text):
    return {row['quantity']: row['value'] for row in read_rows(text)}


def solve_output(text):
    """Per-vertex rows and the summary line of the solve action."""
    lines = text.strip().splitlines()
    values = {row['vertex']: float(row['value']) for row in csv.DictReader(lines[:-1])}
    return values, json.loads(lines[-1])


class EigCommandTestCase(SimpleTestCase):
    """Test the eig action and graph resolution"""

    def test_builtin(self):
        values = quantities(gelfand('eig', builtin='path4-exp'))
        self.assertAlmostEqual(float(values['lambda_m']), 0.5, delta=1e-12)
        self.assertAlmostEqual(float(values['big_m']), 1.0, delta=1e-12)
        self.assertAlmostEqual(float(values['alpha']), 1.0, delta=1e-12)
        self.assertAlmostEqual(float(values['phi_2']), 1.0, delta=1e-12)
        self.assertAlmostEqual(float(values['moment_estimate']), 0.5, delta=1e-3)

    def test_graph_file_from_the_graph_dir(self):
        values = quantities(gelfand('eig', graph='path4.g'))
        self.assertAlmostEqual(float(values['lambda_m']), 0.5, delta=1e-12)

    def test_omega_override(self):
        values = quantities(gelfand('eig', graph='path4.g', omega=['2']))
        self.assertAlmostEqual(float(values['lambda_m']), 1.0, delta=1e-12)
        self.assertNotIn('phi_3', values)


class SolveCommandTestCase(SimpleTestCase):
    """Test solve, stability and verify"""

    def test_minimal(self):
        text = gelfand('solve', builtin='path4-exp', lam=0.1)
        self.assertEqual(text.splitlines()[0], 'vertex,value')
        self.assertEqual(len(text.strip().splitlines()), 4)
        values, summary = solve_output(text)
        self.assertEqual(list(values), ['2', '3'])
        self.assertAlmostEqual(values['2'], -lambert_w0(-0.2), delta=1e-8)
        self.assertEqual(set(summary), {'lambda', 'residual', 'mu1', 'stable', 'minimal'})
        self.assertEqual(summary['lambda'], 0.1)
        self.assertLess(summary['residual'], 1e-9)
        self.assertGreater(summary['mu1'], 0.0)
        self.assertIs(summary['stable'], True)
        self.assertIs(summary['minimal'], True)

    def test_newton_from_a_constant(self):
        values, summary = solve_output(gelfand('solve', builtin='path4-exp', lam=0.1, init=[3.0]))
        self.assertAlmostEqual(values['3'], -lambert_wm1(-0.2), delta=1e-8)
        self.assertIs(summary['stable'], False)
        self.assertIs(summary['minimal'], False)

    def test_nonlinearity_option(self):
        values, _ = solve_output(gelfand('solve', graph='path4.g', lam=0.25, f_spec='affine'))
        self.assertAlmostEqual(values['2'], 1.0, delta=1e-9)

    def test_divergence_exits_with_3(self):
        with self.assertRaises(CommandError) as cm:
            gelfand('solve', builtin='path4-exp', lam=0.3)
        self.assertEqual(cm.exception.returncode, 3)
        self.assertIn('diverged', str(cm.exception))

    def test_stability(self):
        values = quantities(gelfand('stability', builtin='path4-exp', lam=0.1, newton=True, init=[3.0, 3.0]))
        self.assertLess(float(values['mu1']), 0.0)
        self.assertEqual(values['stable'], 'false')
        self.assertIn('energy', values)

    def test_verify(self):
        values = {row['check']: row['value'] for row in read_rows(gelfand('verify', builtin='path4-exp', lam=0.1))}
        self.assertEqual(values['residual_ok'], 'true')
        self.assertEqual(values['envelope_ok'], 'true')

    def test_write_to_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'solve.csv'
            output = gelfand('solve', builtin='path4-exp', lam=0.1, out=str(path))
            self.assertIn(f"Wrote {path}", output)
            values, summary = solve_output(path.read_text(encoding='utf-8'))
            self.assertEqual(len(values), 2)
            self.assertIs(summary['minimal'], True)


class BranchCommandTestCase(SimpleTestCase):
    """Test sweep, lambda-star and continue"""

    def test_sweep(self):
        rows = read_rows(gelfand('sweep', builtin='path4-exp', lam_from=0.01, lam_to=0.1, points=5))
        self.assertEqual(len(rows), 5)
        self.assertEqual(list(rows[0]), ['branch', 'arc', 'lambda', 'norm_inf', 'mu1', 'stable', 'u_2', 'u_3'])
        self.assertEqual({row['branch'] for row in rows}, {'minimal'})

    def test_lambda_star(self):
        rows = read_rows(gelfand('lambda-star', builtin='path4-power2'))
        self.assertAlmostEqual(float(rows[0]['lambda_star']), 0.125, delta=1e-6)
        self.assertLessEqual(float(rows[0]['lower_bound']), 0.125)

    def test_lambda_star_of_sublinear_growth(self):
        rows = read_rows(gelfand('lambda-star', graph='path4.g', f_spec='log'))
        self.assertEqual(float(rows[0]['lambda_star']), float('inf'))
        self.assertEqual(rows[0]['u_star_norm'], '')

    def test_continue(self):
        rows = read_rows(gelfand('continue', builtin='path4-exp', start_lambda=0.05, max_points=40))
        self.assertEqual(len(rows), 40)
        lambdas = [float(row['lambda']) for row in rows]
        self.assertLessEqual(max(lambdas), 0.184)


class DemoCommandTestCase(SimpleTestCase):

    def test_single_example(self):
        rows = read_rows(gelfand('demo', 'two-point'))
        self.assertEqual({row['example'] for row in rows}, {'two-point'})
        self.assertTrue(all(row['ok'] == 'true' for row in rows))

    def test_unknown_example(self):
        with self.assertRaises(CommandError) as cm:
            gelfand('demo', 'nothing-here')
        self.assertEqual(cm.exception.returncode, 2)


class CommandErrorsTestCase(SimpleTestCase):
    """Test the mapping of failures to exit codes"""

    def test_usage_errors(self):
        cases = (
            (('eig',), {}),
            (('eig',), {'graph': 'path4.g', 'builtin': 'path4-exp'}),
            (('solve',), {'builtin': 'path4-exp'}),
            (('sweep',), {'builtin': 'path4-exp', 'lam_from': 0.01}),
            (('continue',), {'builtin': 'path4-exp'}),
            (('bogus',), {'builtin': 'path4-exp'}),
        )
        for args, options in cases:
            with self.subTest(args=args, options=options):
                with self.assertRaises(CommandError) as cm:
                    gelfand(*args, **options)
                self.assertEqual(cm.exception.returncode, 1)

    def test_input_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            bad = Path(tmp) / 'bad.g'
            bad.write_text("edge 1 2 -1\nomega 1\n", encoding='utf-8')
            bare = Path(tmp) / 'bare.g'
            bare.write_text("edge 1 2 1\nedge 2 3 1\n", encoding='utf-8')
            cases = (
                {'graph': str(bad)},
                {'graph': str(bare)},
                {'graph': str(Path(tmp) / 'missing.g')},
                {'builtin': 'path4-exp', 'f_spec': 'sinh'},
                {'builtin': 'no-such-example'},
                {'builtin': 'path4-exp', 'tol': -1.0},
            )
            for options in cases:
                with self.subTest(options=options):
                    with self.assertRaises(CommandError) as cm:
                        gelfand('eig', **options)
                    self.assertEqual(cm.exception.returncode, 2)

    def test_not_admissible_is_an_input_error(self):
        with self.assertRaises(CommandError) as cm:
            gelfand('solve', builtin='allen-cahn-ab', lam=0.1)
        self.assertEqual(cm.exception.returncode, 2)
