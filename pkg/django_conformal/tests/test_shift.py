import itertools

import numpy as np
from django.test import SimpleTestCase

from django_conformal.exceptions import InputError, UnsupportedError
from django_conformal.shift import (ShiftSpec, bip_witnesses, check_dagger, common_prefix,
                                    is_admissible, is_mixing, metric, mixing_exponent, mixing_report,
                                    words_of_length)


class ShiftSpecTestCase(SimpleTestCase):
    def setUp(self):
        self.golden = ShiftSpec(['a', 'b'], [[1, 1], [1, 0]])

    def testBasic(self):
        self.assertEqual(len(self.golden), 2)
        self.assertTrue(self.golden.allows('b', 'a'))
        self.assertFalse(self.golden.allows('b', 'b'))
        self.assertEqual(self.golden.successors('b'), ('a',))
        self.assertEqual(self.golden.predecessors('b'), ('a',))

    def testInvalid(self):
        self.assertRaises(InputError, ShiftSpec, [], [])
        self.assertRaises(InputError, ShiftSpec, ['a', 'a'], [[1, 1], [1, 1]])
        self.assertRaises(InputError, ShiftSpec, ['a', 'b'], [[1, 2], [1, 1]])
        self.assertRaises(InputError, ShiftSpec, ['a', 'b'], [[1, 0], [1, 0]])
        self.assertRaises(InputError, ShiftSpec, ['a', 'b'], [[1, 1], [1, 1]], {'a': 'c'})

    def testExtend(self):
        self.assertEqual(self.golden.extend(('b',), 4), ('b', 'a', 'a', 'a'))
        self.assertEqual(self.golden.extend((), 1), ('a',))


class WordsTestCase(SimpleTestCase):
    def setUp(self):
        self.golden = ShiftSpec(['a', 'b'], [[1, 1], [1, 0]])

    def testCount(self):
        self.assertEqual(len(list(words_of_length(self.golden, 3))), 5)
        self.assertEqual(len(list(words_of_length(self.golden, 5))), 13)

    def testCountMatchesAdjacency(self):
        shift = ShiftSpec(['a', 'b', 'c'], [[1, 1, 0], [0, 1, 1], [1, 0, 1]])
        for spec in (self.golden, shift):
            for n in range(1, 8):
                expected = int(np.linalg.matrix_power(spec.adjacency, n - 1).sum())
                self.assertEqual(len(list(words_of_length(spec, n))), expected)

    def testOrder(self):
        self.assertEqual(list(words_of_length(self.golden, 2)),
                         [('a', 'a'), ('a', 'b'), ('b', 'a')])

    def testAdmissible(self):
        self.assertTrue(is_admissible(self.golden, ('a', 'b', 'a')))
        self.assertFalse(is_admissible(self.golden, ('a', 'b', 'b')))
        self.assertRaises(InputError, is_admissible, self.golden, ('c',))


class MetricTestCase(SimpleTestCase):

    def testBasic(self):
        self.assertEqual(common_prefix(('a', 'b', 'a'), ('a', 'b', 'b')), 2)
        self.assertEqual(metric(('a', 'b'), ('a', 'a'), 0.5), 0.5)
        self.assertEqual(metric(('a', 'b'), ('b', 'b'), 0.5), 1.0)
        self.assertEqual(metric(('a', 'b'), ('a', 'b'), 0.5), 0.25)

    def testInvalid(self):
        self.assertRaises(InputError, metric, ('a',), ('a',), 1.5)
        self.assertRaises(InputError, metric, (), ('a',), 0.5)

    def testUltrametric(self):
        golden = ShiftSpec(['a', 'b'], [[1, 1], [1, 0]])
        words = list(words_of_length(golden, 4))
        for x, y, z in itertools.product(words, repeat=3):
            self.assertLessEqual(metric(x, z, 0.5), max(metric(x, y, 0.5), metric(y, z, 0.5)))


class MixingTestCase(SimpleTestCase):

    def testGoldenMean(self):
        golden = ShiftSpec(['a', 'b'], [[1, 1], [1, 0]])
        self.assertEqual(mixing_exponent(golden, 10), 2)
        self.assertTrue(is_mixing(golden, 10))

    def testPeriodic(self):
        flip = ShiftSpec(['a', 'b'], [[0, 1], [1, 0]])
        self.assertFalse(is_mixing(flip, 10))
        self.assertRaises(InputError, is_mixing, flip, 0)

    def testBigImagesAndPreimages(self):
        golden = ShiftSpec(['a', 'b'], [[1, 1], [1, 0]])
        report = mixing_report(golden, 10)
        self.assertTrue(report.mixing)
        self.assertEqual(report.exponent, 2)
        self.assertTrue(report.bip)
        self.assertEqual(report.witnesses, ('a',))
        flip = ShiftSpec(['a', 'b'], [[0, 1], [1, 0]])
        report = mixing_report(flip, 10)
        self.assertFalse(report.mixing)
        self.assertIsNone(report.exponent)
        self.assertEqual(bip_witnesses(flip), ('a', 'b'))


class DaggerTestCase(SimpleTestCase):

    def testFullShift(self):
        full = ShiftSpec(['a', 'b'], [[1, 1], [1, 1]], {'a': 'b', 'b': 'a'})
        self.assertTrue(check_dagger(full))
        self.assertEqual(full.dagger_word(('a', 'a', 'b')), ('a', 'b', 'b'))

    def testBijectionOnWords(self):
        shift = ShiftSpec(['a', 'b', 'c'], [[1, 1, 0], [1, 1, 1], [0, 1, 1]],
                          {'a': 'c', 'b': 'b', 'c': 'a'})
        self.assertTrue(check_dagger(shift))
        for n in range(1, 6):
            words = set(words_of_length(shift, n))
            images = set(shift.dagger_word(w) for w in words)
            self.assertEqual(images, words)
            for w in words:
                self.assertEqual(shift.dagger_word(shift.dagger_word(w)), w)

    def testAsymmetricAdjacency(self):
        shift = ShiftSpec(['a', 'b', 'c'], [[1, 1, 1], [1, 1, 0], [1, 0, 1]],
                          {'a': 'b', 'b': 'a', 'c': 'c'})
        self.assertFalse(check_dagger(shift))

    def testMissing(self):
        shift = ShiftSpec(['a'], [[1]])
        self.assertRaises(UnsupportedError, check_dagger, shift)
        self.assertRaises(UnsupportedError, shift.dagger_word, ('a',))
