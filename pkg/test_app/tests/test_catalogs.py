"""
Tests for the built-in example corpus
"""
import math

from unittest.mock import patch

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from django_gelfand.catalogs import (
    EXAMPLES,
    BuiltinExample,
    Expectation,
    Provenance,
    builtin_corpus,
    get_example,
    register_example,
)


class RegistryTestCase(SimpleTestCase):
    """Test registration and lookup"""

    def test_corpus_is_sorted_and_complete(self):
        names = [example.name for example in builtin_corpus()]
        self.assertEqual(names, sorted(EXAMPLES))
        for name in ('path4-exp', 'two-point', 'khat-n', 'envelope', 'path4-quartic', 'allen-cahn-ab'):
            self.assertIn(name, names)

    def test_register(self):
        with patch.dict(EXAMPLES):
            @register_example('segment')
            class Segment(BuiltinExample):
                def edges(self):
                    return [('1', '2', 1.0), ('2', '3', 1.0)]

                def omega(self):
                    return ['2']

            self.assertIs(EXAMPLES['segment'], Segment)
            example = get_example('segment')
            self.assertEqual(example.label, 'segment')
            self.assertAlmostEqual(example.lambda_m(), 1.0, delta=1e-12)
        self.assertNotIn('segment', EXAMPLES)

    def test_duplicate_name(self):
        with self.assertRaises(ValidationError) as cm:
            @register_example('path4-exp')
            class Again(BuiltinExample):
                pass
        self.assertEqual(cm.exception.code, 'duplicate_example')

    def test_unknown_name(self):
        for name in ('', 'path9', 'khat-n:1,x', 'path4-exp:1', 'khat-n:1,2'):
            with self.subTest(name=name):
                with self.assertRaises(ValidationError) as cm:
                    get_example(name)
                self.assertEqual(cm.exception.code, 'unknown_example')

    def test_parameters(self):
        example = get_example('khat-n:1,1,0,5')
        self.assertEqual(example.params, (1.0, 1.0, 0.0, 5.0))
        self.assertEqual(example.label, 'khat-n:1,1,0,5')
        self.assertEqual(example.k, 3.0)
        self.assertEqual(example.domain.n_omega, 5)
        self.assertEqual(get_example('khat-n').params, (1.0, 1.0, 0.0, 4.0))
        self.assertAlmostEqual(get_example('path4-weighted:2,3').lambda_m(), 0.6, delta=1e-12)

    def test_parameter_ranges(self):
        for name in ('khat-n:1,1,0,2', 'khat-n:0,1,0,4', 'khat-n:1,1,0,4.5', 'regular-dirichlet:1'):
            with self.subTest(name=name):
                with self.assertRaises(ValidationError) as cm:
                    get_example(name)
                self.assertEqual(cm.exception.code, 'out_of_range')

    def test_piecewise_segments(self):
        f = get_example('path4-piecewise').f
        for s in (0.0, 0.5, 0.999):
            self.assertAlmostEqual(float(f.value(s)), s * s + 1.0, delta=1e-12)
        for s in (1.0, 1.5, 2.0):
            self.assertAlmostEqual(float(f.value(s)), 2.0 * s, delta=1e-12)
        for s in (2.5, 3.0):
            self.assertAlmostEqual(float(f.value(s)), (s - 2) ** 2 + 2 * (s - 2) + 4, delta=1e-12)
        self.assertAlmostEqual(float(f.derivative(2.0 + 1e-9)), 2.0, delta=1e-6)

    def test_graph_text_has_a_comment(self):
        text = get_example('two-point').to_graph_text()
        self.assertTrue(text.startswith('# two-point: '))
        self.assertTrue(text.endswith('omega 1\n'))


class ExpectationTestCase(SimpleTestCase):

    def test_check(self):
        expectation = Expectation('x', 1.0, 0.1, Provenance.DERIVED, lambda e: 1.05)
        self.assertEqual(expectation.check(None), (1.05, True))
        expectation = Expectation('x', 1.0, 0.01, Provenance.DERIVED, lambda e: 1.05)
        self.assertFalse(expectation.check(None)[1])

    def test_infinite_value_must_match_exactly(self):
        expectation = Expectation('x', math.inf, 0.0, Provenance.TRIVIAL, lambda e: math.inf)
        self.assertTrue(expectation.check(None)[1])

    def test_nan_never_passes(self):
        expectation = Expectation('x', 1.0, 1.0, Provenance.TRIVIAL, lambda e: math.nan)
        self.assertFalse(expectation.check(None)[1])


class CorpusValuesTestCase(SimpleTestCase):
    """Every built-in example reproduces its known values"""

    def test_expectations(self):
        for example in builtin_corpus():
            expectations = example.expected()
            self.assertTrue(expectations, example.label)
            for expectation in expectations:
                with self.subTest(example=example.label, quantity=expectation.quantity):
                    self.assertIn(expectation.provenance, (Provenance.REFERENCE, Provenance.DERIVED, Provenance.TRIVIAL))
                    measured, ok = expectation.check(example)
                    self.assertTrue(
                        ok, f"{example.label} {expectation.quantity}: measured {measured!r}, expected "
                            f"{expectation.value!r} +/- {expectation.tolerance!r}"
                    )

    def test_parametrized_families(self):
        for name in ('path4-weighted:1,3', 'khat-n:2,1,0.5,6', 'regular-dirichlet:3', 'allen-cahn-ab:2,3'):
            example = get_example(name)
            for expectation in example.expected():
                with self.subTest(example=name, quantity=expectation.quantity):
                    self.assertTrue(expectation.check(example)[1])
