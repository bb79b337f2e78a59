import math
from fractions import Fraction

from django.test import SimpleTestCase, override_settings

from django_conformal import signals
from django_conformal.exceptions import InputError, InsufficientDataError, ResourceError
from django_conformal.transfer import (CylinderFunction, ReturnProfile, connecting_constant,
                                       displacement_ratios, doeblin_fortet_check, extension_apply,
                                       limit_ratio, lipschitz_coefficients, spectral_radius, zcount)

from django_conformal.tests.systems import depth_two, golden_mean, walk


class ZcountTestCase(SimpleTestCase):

    def testSymmetricExact(self):
        table = zcount(walk(1, exact=True), ('1+',), 20, exact=True)
        for n in range(1, 11):
            self.assertEqual(table.exact_values[2 * n], Fraction(math.comb(2 * n, n), 4 ** n))
            self.assertEqual(table.exact_values[2 * n - 1], 0)
        self.assertEqual(table.period, 2)

    def testAsymmetricExact(self):
        e = walk(1, [Fraction(4, 5), Fraction(1, 5)], exact=True)
        table = zcount(e, ('1+',), 20, exact=True)
        for n in range(1, 11):
            self.assertEqual(table.exact_values[2 * n], math.comb(2 * n, n) * Fraction(4, 25) ** n)

    def testFloatAgreesWithExact(self):
        table = zcount(walk(2), ('1+',), 12)
        profile = ReturnProfile(walk(2, exact=True), ('1+',), 12)
        for n in (2, 6, 12):
            self.assertAlmostEqual(table.log_values[n], math.log(profile.exact(n)), places=9)
        self.assertEqual(profile.exact(4), Fraction(36, 256))

    def testProfilePowers(self):
        e = walk(1, [0.8, 0.2])
        profile = ReturnProfile(e, ('1+',), 10)
        squared = zcount(e.with_potential(e.potential.power(2)), ('1+',), 10)
        self.assertAlmostEqual(profile.log_z(8, 2.0), squared.log_values[8], places=9)

    def testPruningKeepsReturns(self):
        for e in (walk(2), walk(2, free=True), walk(1, [0.8, 0.2])):
            table = zcount(e, ('1+',), 14)
            wider = zcount(e, ('1+',), 14, slack=6)
            for n in range(1, 15):
                if table.log_values[n] == -math.inf:
                    self.assertEqual(wider.log_values[n], -math.inf)
                else:
                    self.assertAlmostEqual(table.log_values[n], wider.log_values[n], places=10)

    def testFiniteGroup(self):
        table = zcount(golden_mean(), ('a',), 24)
        self.assertEqual(table.period, 1)
        self.assertGreater(table.z(1), 0)

    def testInvalid(self):
        self.assertRaises(InputError, zcount, golden_mean(), ('b', 'b'), 10)
        self.assertRaises(InputError, zcount, depth_two(), ('a',), 10)
        self.assertRaises(InputError, zcount, walk(1), ('1+',), 0)

    @override_settings(CONFORMAL_MAX_STATES=10)
    def testResourceCeiling(self):
        with self.assertRaises(ResourceError) as context:
            zcount(walk(2), ('1+',), 20)
        self.assertIn('N', context.exception.suggestion)

    @override_settings(CONFORMAL_EXACT_MAX_N=10)
    def testExactCeiling(self):
        self.assertRaises(ResourceError, zcount, walk(1, exact=True), ('1+',), 12, exact=True)

    def testSignal(self):
        seen = []

        def receiver(sender, table, **kwargs):
            seen.append(table)
        signals.partition_table_computed.connect(receiver)
        try:
            table = zcount(walk(1), ('1+',), 6)
        finally:
            signals.partition_table_computed.disconnect(receiver)
        self.assertEqual(len(seen), 1)
        self.assertIs(seen[0], table)


class SpectralRadiusTestCase(SimpleTestCase):

    def testSymmetricWalk(self):
        estimate = spectral_radius(zcount(walk(1), ('1+',), 40))
        self.assertLessEqual(abs(estimate.rho_hat - 1.0), 0.002)
        self.assertLessEqual(abs(estimate.beta - 0.5), 0.2)
        self.assertEqual(estimate.period, 2)

    def testAsymmetricWalk(self):
        estimate = spectral_radius(zcount(walk(1, [0.8, 0.2]), ('1+',), 40))
        self.assertLessEqual(abs(estimate.rho_hat - 0.8), 0.002)

    def testPlane(self):
        estimate = spectral_radius(zcount(walk(2), ('1+',), 40))
        self.assertLessEqual(abs(estimate.rho_hat - 1.0), 0.002)
        self.assertLessEqual(abs(estimate.beta - 1.0), 0.2)

    def testFiniteGroup(self):
        table = zcount(golden_mean(), ('a',), 60)
        estimate = spectral_radius(table)
        self.assertLessEqual(estimate.rho_hat, table.rho_base)
        self.assertLess(abs(estimate.rho_hat - table.rho_base) / table.rho_base, 1e-2)

    def testSpace(self):
        estimate = spectral_radius(zcount(walk(3), ('1+',), 40))
        self.assertLessEqual(abs(estimate.rho_hat - 1.0), 0.002)
        self.assertLessEqual(abs(estimate.beta - 1.5), 0.2)

    def testScaledPotential(self):
        e = walk(1, [0.8, 0.2])
        doubled = e.with_potential(e.potential.scaled(2))
        rho = spectral_radius(zcount(e, ('1+',), 40)).rho_hat
        self.assertAlmostEqual(spectral_radius(zcount(doubled, ('1+',), 40)).rho_hat, 2 * rho)

    def testTooShort(self):
        self.assertRaises(InsufficientDataError, spectral_radius, zcount(walk(1), ('1+',), 10))

    def testConnectingConstant(self):
        self.assertGreater(connecting_constant(zcount(walk(1), ('1+',), 20)), 0.0)


class DisplacementTestCase(SimpleTestCase):
    def setUp(self):
        self.e = walk(2, free=True)

    def testTreeRatios(self):
        # P(X_n = g) / P(X_n = id) on the 4-regular tree, |g| = 2
        ratios = displacement_ratios(self.e, ('1+',), (1, 2), 12)
        self.assertEqual(ratios[0], 0.0)
        self.assertAlmostEqual(ratios[2], 0.25)
        self.assertAlmostEqual(ratios[4], 10 / 28)
        self.assertAlmostEqual(ratios[8], 958 / 2092)
        self.assertAlmostEqual(ratios[12], 99124 / 195352)
        for n in (1, 3, 5, 11):
            self.assertTrue(math.isnan(ratios[n]))

    def testLimit(self):
        ratios = displacement_ratios(self.e, ('1+',), (1, 2), 22)
        limit, last = limit_ratio(ratios)
        self.assertEqual(last, ratios[22])
        self.assertLess(last, 0.6)
        self.assertLess(abs(limit - 2 / 3) / (2 / 3), 0.02)

    def testIdentity(self):
        ratios = displacement_ratios(walk(1), ('1+',), (0,), 6)
        self.assertEqual(ratios[0], 1.0)
        self.assertEqual(ratios[4], 1.0)

    def testInvalid(self):
        self.assertRaises(InputError, displacement_ratios, self.e, ('1+',), (1,), 0)
        self.assertRaises(InsufficientDataError, limit_ratio, [1.0, math.nan, math.nan])


class ExtensionApplyTestCase(SimpleTestCase):
    def setUp(self):
        self.e = walk(1)

    def testCylinder(self):
        f = CylinderFunction({(('1+',), (0,)): 1.0})
        self.assertAlmostEqual(extension_apply(self.e, f, 1, (('1+',), (1,))), 0.5)
        self.assertEqual(extension_apply(self.e, f, 1, (('1+',), (0,))), 0.0)

    def testFibre(self):
        f = CylinderFunction({((), (0,)): 1.0})
        self.assertAlmostEqual(extension_apply(self.e, f, 2, (('1-',), (0,))), 0.5)
        self.assertRaises(InputError, extension_apply, self.e, f, 0, (('1-',), (0,)))


class RegularityTestCase(SimpleTestCase):
    def setUp(self):
        self.e = depth_two()
        self.f = CylinderFunction({(('a', 'a'), (0,)): 1.0, (('a', 'b'), (0,)): 0.5})

    def testCoefficients(self):
        d, ld = lipschitz_coefficients(self.e, self.f)
        self.assertAlmostEqual(d[('a', (0,))], 1.0)
        self.assertAlmostEqual(ld[('a', (0,))], 2.0)

    def testMixedZeros(self):
        f = CylinderFunction({(('a', 'a'), (0,)): 1.0})
        _, ld = lipschitz_coefficients(self.e, f)
        self.assertIsNone(ld[('a', (0,))])

    def testDoeblinFortet(self):
        pairs = [((('a', 'a', 'b'), (0,)), (('a', 'b', 'a'), (0,))),
                 ((('b', 'a', 'a'), (1,)), (('b', 'b', 'b'), (1,)))]
        for n in range(1, 5):
            result = doeblin_fortet_check(self.e, self.f, n, pairs)
            self.assertLessEqual(result['max_excess'], 1e-12)
            self.assertLessEqual(result['max_excess_log'], 1e-12)
