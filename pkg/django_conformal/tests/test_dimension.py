import math

from django.test import SimpleTestCase

from django_conformal.dimension import PressureCurve, decay_check, extended_pressure, find_delta
from django_conformal.exceptions import BracketError, NotApplicableError
from django_conformal.harmonic import sample_paths
from django_conformal.oracles import oracle_for
from django_conformal.potential import base_pressure
from django_conformal.tests.systems import walk


class PressureCurveTestCase(SimpleTestCase):
    def testDecreasing(self):
        curve = PressureCurve(walk(1), 40)
        self.assertIsNotNone(curve.profile)
        self.assertGreater(curve(0.5), curve(1.0))
        self.assertGreater(curve(1.0), curve(2.0))

    def testCached(self):
        curve = PressureCurve(walk(1), 40)
        self.assertIs(curve.estimate(1), curve.estimate(1.0))

    def testExtendedPressure(self):
        # the symmetric walk on Z at h = 0 counts 2^n paths
        self.assertAlmostEqual(extended_pressure(walk(1), 0.0, 40), 2.0, places=2)


class FindDeltaTestCase(SimpleTestCase):
    def testAmenable(self):
        report = find_delta(walk(1), N=40, tol=1e-5)
        self.assertAlmostEqual(report.delta, 1.0, places=2)
        self.assertAlmostEqual(report.dim_value, 1.0, places=6)
        self.assertAlmostEqual(report.entropy_value, 1.0, places=6)
        self.assertAlmostEqual(report.lyapunov, -math.log(2))
        self.assertTrue(report.amenable_consistent)
        low, high = report.delta_interval
        self.assertLessEqual(low, report.delta)
        self.assertGreaterEqual(high, report.delta)
        self.assertLessEqual(report.certificate['h_high'] - report.certificate['h_low'], 1e-5)

    def testFreeGroup(self):
        report = find_delta(walk(2, free=True), N=20, tol=1e-4)
        # rho(h) = 4^(1-h) sqrt(3)/2 crosses 1 at h = 1 - log(2/sqrt 3)/log 4
        expected = 1 - math.log(2 / math.sqrt(3)) / math.log(4)
        self.assertLess(abs(report.delta - expected), 0.03)
        self.assertGreater(report.dim_value, report.delta)
        self.assertFalse(report.amenable_consistent)
        self.assertGreater(report.amenability_gap, 0.1)

    def testPowerScaling(self):
        e = walk(2, free=True)
        report = find_delta(e, N=20, tol=1e-5, interval=False)
        squared = find_delta(e.with_potential(e.potential.power(2)), N=20, tol=1e-5,
                             interval=False)
        self.assertLess(abs(squared.delta - report.delta / 2), 1e-3)

    def testExplicitBracket(self):
        with self.assertRaises(BracketError) as cm:
            find_delta(walk(1), bracket=(2.0, 3.0), N=40)
        self.assertEqual(sorted(cm.exception.pressures), [2.0, 3.0])

    def testDecayNotApplicable(self):
        report = find_delta(walk(1), N=40, tol=1e-4, interval=False)
        self.assertIsNone(report.delta_interval)
        with self.assertRaises(NotApplicableError):
            decay_check(walk(1), report, [], lambda g: 1.0)


class DecayTestCase(SimpleTestCase):

    def testFreeGroup(self):
        e = walk(2, free=True)
        report = find_delta(e, N=20, tol=1e-4, interval=False)
        oracle = oracle_for(e)
        gibbs = base_pressure(e.potential, e.shift)
        paths = sample_paths(e, gibbs, 200, 100, seed=3)
        result = decay_check(e, report, paths, lambda g: oracle.nu_group_at(g, report.delta))
        self.assertTrue(result['applicable'])
        self.assertEqual(len(result['paths']), 100)
        self.assertGreaterEqual(result['passed_fraction'], 0.95)
        self.assertLess(result['slope'], 0.0)

    def testAsymmetricWalk(self):
        e = walk(1, [0.8, 0.2])
        report = find_delta(e, N=40, tol=1e-4, interval=False)
        self.assertFalse(report.amenable_consistent)
        oracle = oracle_for(e)
        paths = sample_paths(e, base_pressure(e.potential, e.shift), 200, 20, seed=5)
        result = decay_check(e, report, paths, lambda g: oracle.nu_group_at(g, report.delta))
        self.assertEqual(result['passed_fraction'], 1.0)
