from django.test import SimpleTestCase

from django_conformal.exceptions import InputError
from django_conformal.harmonic import (KernelWindow, MeshFunction, apply_once, eigen_relation,
                                       harmonicity_residual, kernel_estimate, lipschitz_kernel_check,
                                       martingale_test, normalized_potential, ratio_martingale,
                                       regularity_coefficients, sample_paths, t_invariance_check,
                                       theta_eval, theta_mesh)
from django_conformal.oracles import oracle_for
from django_conformal.patterson import build_bn
from django_conformal.potential import base_pressure
from django_conformal.transfer import CylinderFunction, spectral_radius, zcount

from django_conformal.tests.systems import depth_two, walk


def make_window(e, xi, N, depth, radius):
    table = zcount(e, xi, N)
    estimate = spectral_radius(table)
    return KernelWindow(e, xi, build_bn(table, estimate.rho_hat), N, depth, radius), estimate


class KernelTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super(KernelTestCase, cls).setUpClass()
        cls.e = walk(1, [0.8, 0.2])
        cls.xi = ('1+', '1+')
        cls.window, cls.estimate = make_window(cls.e, cls.xi, 40, 2, 3)

    def testAnchor(self):
        for w in (('1+',), ('1-',), ('1+', '1-')):
            self.assertEqual(self.window.kernel((self.xi, (0,)), w, (0,)), 1.0)

    def testKernelValue(self):
        cylinders = [(('1+',), (0,)), (('1+', '1+'), (0,))]
        oracle = oracle_for(self.e)
        for g in ((1,), (-1,)):
            estimate = kernel_estimate(self.e, (self.xi, g), cylinders, self.window)
            self.assertFalse(estimate.zero_mass)
            self.assertLessEqual(abs(estimate.limit / oracle.kernel(g) - 1), 0.05)

    def testTInvariance(self):
        cylinders = [(('1+', '1+'), (0,))]
        for g in ((1,), (-1,)):
            result = t_invariance_check(self.e, (self.xi, g), cylinders, self.window, tol=0.1)
            self.assertTrue(result['passed'], result)
        self.assertRaises(InputError, t_invariance_check, self.e, (self.xi, (1,)),
                          [(('1+',), (0,))], self.window)

    def testNotNested(self):
        cylinders = [(('1+', '1+'), (0,)), (('1-',), (0,))]
        self.assertRaises(InputError, kernel_estimate, self.e, (self.xi, (1,)), cylinders,
                          self.window)

    def testTheta(self):
        f = CylinderFunction({((), (0,)): 1.0})
        self.assertAlmostEqual(theta_eval(self.e, f, (self.xi, (0,)), self.window), 1.0, places=6)

    def testEigenRelation(self):
        result = eigen_relation(self.e, (self.xi, (0,)), ('1+',), (0,), self.window,
                                self.estimate.rho_hat)
        self.assertLessEqual(result['relative'], 0.05)

    def testLipschitz(self):
        pairs = [((('1+', '1+'), (0,)), (('1+', '1-'), (0,)))]
        mesh = [(('1+',), (0,)), (('1+', '1+'), (0,)), (('1-', '1+'), (0,))]
        result = lipschitz_kernel_check(self.e, pairs, mesh, self.window)
        self.assertTrue(result['finite'])
        self.assertRaises(InputError, lipschitz_kernel_check, self.e,
                          [((('1+',), (0,)), (('1-',), (0,)))], mesh, self.window)


class HarmonicFunctionTestCase(SimpleTestCase):

    def testOracleHarmonic(self):
        e = walk(1, [0.8, 0.2])
        oracle = oracle_for(e)
        h = MeshFunction.tabulate(e, 1, 3, oracle.harmonic)
        self.assertAlmostEqual(apply_once(e, h, ('1+',), (0,)), 0.8)
        self.assertLess(harmonicity_residual(e, h, 0.8), 1e-12)
        self.assertGreater(harmonicity_residual(e, h, 0.7), 0.1)
        self.assertEqual(len(h.inner()), 2 * 5)

    def testThetaImage(self):
        e = walk(1)
        window, estimate = make_window(e, ('1+',), 40, 1, 3)
        mesh = theta_mesh(e, CylinderFunction({((), (0,)): 1.0}), window, 1, 2)
        self.assertLess(harmonicity_residual(e, mesh, estimate.rho_hat), 0.05)

    def testRegularity(self):
        e = depth_two()
        window, _ = make_window(e, ('a', 'a'), 24, 2, 2)
        mesh = theta_mesh(e, CylinderFunction({((), (0,)): 1.0}), window, 2, 1)
        coefficients = regularity_coefficients(e, mesh, theta_image=True)
        self.assertTrue(coefficients.within_bound)
        self.assertGreater(coefficients.pairs, 0)


class PathsTestCase(SimpleTestCase):
    def setUp(self):
        self.e = walk(1, [0.8, 0.2])
        self.gibbs = base_pressure(self.e.potential, self.e.shift)
        self.oracle = oracle_for(self.e)

    def testDeterministic(self):
        first = sample_paths(self.e, self.gibbs, 50, 3, seed=7, nu_group=self.oracle.nu_group,
                             rho_hat=0.8, past=5)
        second = sample_paths(self.e, self.gibbs, 50, 3, seed=7, nu_group=self.oracle.nu_group,
                              rho_hat=0.8, past=5)
        self.assertEqual([s.base_path for s in first], [s.base_path for s in second])
        self.assertEqual([s.past for s in first], [s.past for s in second])
        self.assertEqual(len(first[0].observables), 50)
        self.assertEqual(len(first[0].as_rows(0)), 50)

    def testDecay(self):
        paths = sample_paths(self.e, self.gibbs, 200, 100, seed=1, nu_group=self.oracle.nu_group,
                             rho_hat=self.oracle.rho())
        decayed = [s for s in paths if s.observables[0] / s.observables[-1] >= 1e3]
        self.assertGreaterEqual(len(decayed), 95)

    def testInvalid(self):
        self.assertRaises(InputError, sample_paths, self.e, self.gibbs, 0, 1)

    def testNormalizedPotential(self):
        self.assertIs(normalized_potential(self.e), self.e.potential)
        e = depth_two()
        q = normalized_potential(e)
        self.assertAlmostEqual(base_pressure(q, e.shift).rho_base, 1.0, places=8)

    def testMartingale(self):
        h = MeshFunction.tabulate(self.e, 1, 12, self.oracle.harmonic)
        result = martingale_test(self.e, h, 0.8, 2, 10000, seed=3)
        self.assertTrue(result['buckets'])
        self.assertLessEqual(result['max_z'], 3.0)
        self.assertTrue(result['passed'])

    def testRatio(self):
        h = MeshFunction.tabulate(self.e, 1, 12, self.oracle.harmonic)
        paths = sample_paths(self.e, self.gibbs, 1, 20, seed=2, past=6)
        result = ratio_martingale(self.e, h, h, paths)
        self.assertFalse(result['vanished'])
        self.assertEqual(result['terminal_spread'], 0.0)
