import itertools

from django.test import SimpleTestCase, override_settings

from django_conformal.exceptions import InputError, ResourceError
from django_conformal.groups import FreeGroup, LatticeGroup, TableGroup, ball, multiply, word_length


class LatticeGroupTestCase(SimpleTestCase):
    def setUp(self):
        self.group = LatticeGroup(2)

    def testBasic(self):
        a = self.group.element([1, -2])
        self.assertEqual(a, (1, -2))
        self.assertEqual(multiply(self.group, a, (2, 2)), (3, 0))
        self.assertEqual(self.group.inverse(a), (-1, 2))
        self.assertEqual(word_length(self.group, a), 3)
        self.assertEqual(self.group.identity, (0, 0))

    def testBall(self):
        self.assertEqual(len(ball(self.group, 2)), 13)
        self.assertEqual(self.group.ball_size(2), 13)
        self.assertEqual(len(LatticeGroup(1).ball(3)), 7)

    def testInvalid(self):
        self.assertRaises(InputError, self.group.element, [1])
        self.assertRaises(InputError, self.group.check, (1, 2, 3))
        self.assertRaises(InputError, LatticeGroup, 0)


class FreeGroupTestCase(SimpleTestCase):
    def setUp(self):
        self.group = FreeGroup(2)

    def testReduction(self):
        self.assertEqual(self.group.element([1, -1, 2]), (2,))
        self.assertEqual(self.group.multiply((1, 2), (-2, -1)), ())
        self.assertEqual(self.group.multiply((1,), (2,)), (1, 2))
        self.assertEqual(self.group.inverse((1, 2)), (-2, -1))
        self.assertEqual(self.group.word_length((1, 2, 1)), 3)
        self.assertTrue(self.group.is_reduced((1, 2, -1)))

    def testBall(self):
        self.assertEqual(len(self.group.ball(2)), 17)
        self.assertEqual(self.group.ball_size(2), 17)
        self.assertEqual(FreeGroup(1).ball_size(3), 7)

    def testInvalid(self):
        self.assertRaises(InputError, self.group.element, [3])
        self.assertRaises(InputError, self.group.check, [1])

    @override_settings(CONFORMAL_FREE_BALL_CAP=2)
    def testBallCap(self):
        with self.assertRaises(ResourceError) as context:
            self.group.ball(3)
        self.assertEqual(context.exception.suggestion, {'radius': 2})


class TableGroupTestCase(SimpleTestCase):
    def setUp(self):
        self.group = TableGroup([[0, 1, 2], [1, 2, 0], [2, 0, 1]], generators=[1])

    def testBasic(self):
        self.assertEqual(self.group.multiply(1, 2), 0)
        self.assertEqual(self.group.inverse(1), 2)
        self.assertEqual(self.group.word_length(2), 1)
        self.assertEqual(self.group.ball(0), [0])
        self.assertEqual(len(self.group.ball(1)), 3)

    def testInvalid(self):
        self.assertRaises(InputError, TableGroup, [[0, 1], [0, 1]])
        self.assertRaises(InputError, TableGroup, [[0, 1, 2], [1, 0, 0], [2, 0, 1]])
        self.assertRaises(InputError, self.group.element, 3)


class GroupAxiomsTestCase(SimpleTestCase):
    groups = (LatticeGroup(2), FreeGroup(2),
              TableGroup([[0, 1, 2], [1, 2, 0], [2, 0, 1]], generators=[1]))

    def testAxioms(self):
        for group in self.groups:
            elements = group.ball(3)
            e = group.identity
            for a in elements:
                self.assertEqual(group.multiply(a, e), a)
                self.assertEqual(group.multiply(e, a), a)
                self.assertEqual(group.multiply(a, group.inverse(a)), e)
                self.assertEqual(group.multiply(group.inverse(a), a), e)
            for a, b, c in itertools.product(elements[:13], repeat=3):
                self.assertEqual(group.multiply(group.multiply(a, b), c),
                                 group.multiply(a, group.multiply(b, c)))

    def testTriangleInequality(self):
        for group in self.groups:
            elements = group.ball(3)
            for a, b in itertools.product(elements, repeat=2):
                self.assertLessEqual(group.word_length(group.multiply(a, b)),
                                     group.word_length(a) + group.word_length(b))
                self.assertEqual(group.word_length(group.inverse(a)), group.word_length(a))

    def testFreeSpheres(self):
        for d, top in ((1, 8), (2, 8), (3, 6)):
            group = FreeGroup(d)
            lengths = [group.word_length(g) for g in group.ball(top)]
            for k in range(1, top + 1):
                self.assertEqual(lengths.count(k), 2 * d * (2 * d - 1) ** (k - 1))
