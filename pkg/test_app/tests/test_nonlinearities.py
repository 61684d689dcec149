"""
Tests for nonlinearities and their spec strings
"""
import math
import tempfile

from pathlib import Path

from scipy.integrate import quad

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from django_gelfand.models import (
    Affine,
    AllenCahn,
    Convexity,
    Exp,
    Log,
    PiecewiseC1,
    Polynomial,
    Power,
    Truncated,
    parse_nonlinearity,
    read_piecewise_file,
    truncate,
)


class ParseNonlinearityTestCase(SimpleTestCase):
    """Test the spec string parser"""

    def test_simple_kinds(self):
        self.assertIsInstance(parse_nonlinearity('exp'), Exp)
        self.assertIsInstance(parse_nonlinearity('affine'), Affine)
        self.assertIsInstance(parse_nonlinearity('allen-cahn'), AllenCahn)
        self.assertIsInstance(parse_nonlinearity('log'), Log)
        self.assertEqual(parse_nonlinearity('power:3').p, 3.0)
        self.assertEqual(parse_nonlinearity('power').p, 2.0)

    def test_polynomial(self):
        f = parse_nonlinearity('poly:1,36,24,-10,1')
        self.assertIsInstance(f, Polynomial)
        self.assertEqual(f.evaluate(0), (1.0, 36.0))
        self.assertEqual(f.spec, 'poly:1,36,24,-10,1')

    def test_inline_piecewise(self):
        f = parse_nonlinearity('piecewise:0=1,0,1;1=2,2;2=4,2,1')
        self.assertIsInstance(f, PiecewiseC1)
        self.assertAlmostEqual(float(f.value(1.5)), 3.0)
        self.assertAlmostEqual(float(f.value(3.0)), 7.0)

    def test_clip(self):
        f = parse_nonlinearity('clip:0,1:allen-cahn')
        self.assertIsInstance(f, Truncated)
        self.assertEqual(float(f.value(2.0)), 0.0)
        self.assertEqual(float(f.derivative(2.0)), 0.0)

    def test_unknown(self):
        for spec in ('', 'sinh', 'poly:', 'power:1,2', 'exp:2', 'clip:0:exp'):
            with self.subTest(spec=spec):
                with self.assertRaises(ValidationError) as cm:
                    parse_nonlinearity(spec)
                self.assertEqual(cm.exception.code, 'unknown_nonlinearity')


class NonlinearityFlagsTestCase(SimpleTestCase):
    """Test the convexity, growth and admissibility flags"""

    def test_exp(self):
        f = Exp()
        self.assertTrue(f.strictly_convex)
        self.assertTrue(f.superlinear)
        self.assertTrue(f.admissible)
        self.assertEqual(f.growth_constant(), math.e)

    def test_power(self):
        self.assertTrue(Power(2).strictly_convex)
        self.assertEqual(Power(2).growth_constant(), 4.0)
        self.assertEqual(Power(1).convexity, Convexity.CONVEX)
        with self.assertRaises(ValidationError) as cm:
            Power(0.5)
        self.assertEqual(cm.exception.code, 'out_of_range')

    def test_affine_and_log(self):
        self.assertEqual(Affine().convexity, Convexity.CONVEX)
        self.assertFalse(Affine().superlinear)
        self.assertFalse(Log().superlinear)
        self.assertEqual(Log().growth_constant(), 0.0)

    def test_allen_cahn_is_not_admissible(self):
        f = AllenCahn()
        self.assertFalse(f.admissible)
        self.assertEqual(f.evaluate(-0.5), (-0.375, 0.25))

    def test_negative_argument(self):
        with self.assertRaises(ValidationError) as cm:
            Exp().evaluate(-1.0)
        self.assertEqual(cm.exception.code, 'negative_argument')

    def test_quartic_is_not_convex(self):
        f = Polynomial([1, 36, 24, -10, 1])
        self.assertEqual(f.convexity, Convexity.NON_CONVEX)
        self.assertTrue(f.superlinear)
        self.assertTrue(f.admissible)

    def test_polynomial_admissibility(self):
        self.assertFalse(Polynomial([0, 1, 1]).admissible)
        self.assertFalse(Polynomial([1, -1, 1]).admissible)
        self.assertEqual(Polynomial([1, 2, 1]).convexity, Convexity.STRICTLY_CONVEX)

    def test_piecewise_with_linear_piece_is_convex(self):
        f = parse_nonlinearity('piecewise:0=1,0,1;1=2,2;2=4,2,1')
        self.assertEqual(f.convexity, Convexity.CONVEX)
        self.assertTrue(f.superlinear)
        self.assertTrue(f.admissible)
        self.assertAlmostEqual(f.growth_constant(), 2.0, places=8)

    def test_piecewise_must_be_c1(self):
        with self.assertRaises(ValidationError) as cm:
            PiecewiseC1([(0, [1, 0, 1]), (1, [2, 3])])
        self.assertEqual(cm.exception.code, 'not_c1')
        with self.assertRaises(ValidationError) as cm:
            PiecewiseC1([(0.5, [1, 1])])
        self.assertEqual(cm.exception.code, 'not_c1')

    def test_primitives_match_quadrature(self):
        for spec in ('exp', 'power:3', 'affine', 'log', 'poly:1,36,24,-10,1', 'piecewise:0=1,0,1;1=2,2;2=4,2,1'):
            f = parse_nonlinearity(spec)
            with self.subTest(spec=spec):
                integral, _ = quad(lambda s: float(f.value(s)), 0.0, 3.0, points=[1.0, 2.0])
                self.assertAlmostEqual(float(f.primitive(3.0)), integral, delta=1e-8 * max(1.0, abs(integral)))

    def test_truncate_bounds(self):
        with self.assertRaises(ValidationError) as cm:
            truncate(Exp(), 1.0, 1.0)
        self.assertEqual(cm.exception.code, 'out_of_range')


class PiecewiseFileTestCase(SimpleTestCase):
    """Test reading segments from a file"""

    def test_read_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'f.txt'
            path.write_text("# convex with a plateau in f/s\n0 1,0,1\n1 2,2\n2 4,2,1\n", encoding='utf-8')
            f = read_piecewise_file(path)
            self.assertEqual(f.spec, f"piecewise:{path}")
            self.assertAlmostEqual(float(f.value(0.5)), 1.25)

    def test_malformed_line(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'f.txt'
            path.write_text("0 1,0,1\n1\n", encoding='utf-8')
            with self.assertRaises(ValidationError) as cm:
                read_piecewise_file(path)
            self.assertEqual(cm.exception.code, 'malformed_line')
            self.assertIn(':2:', cm.exception.messages[0])

    def test_file_that_is_not_utf8(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'f.txt'
            path.write_bytes(b"0 1,0,1 # \xe9\n")
            with self.assertRaises(ValidationError) as cm:
                read_piecewise_file(path)
            self.assertEqual(cm.exception.code, 'parse_error')
