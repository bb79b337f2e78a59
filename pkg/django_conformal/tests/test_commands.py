import csv
import json
import os
import shutil
import tempfile
from io import StringIO

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from django.test.utils import override_settings

from django_conformal import cli


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.out = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.out)

    def call(self, *args, **options):
        options.setdefault('out', self.out)
        stdout, stderr = StringIO(), StringIO()
        call_command('conformal', *args, stdout=stdout, stderr=stderr, **options)
        return stdout.getvalue()

    def read_json(self, name, out=None):
        with open(os.path.join(out or self.out, name)) as handle:
            return json.load(handle)


class ZcountCommandTestCase(CommandTestCase):
    def testExact(self):
        self.call('zcount', config='polya_d1_sym', exact=True, N=12)
        with open(os.path.join(self.out, 'zcount.csv')) as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ['n', 'Z_float', 'log_Z', 'Z_rational', 'states_visited'])
        self.assertEqual(len(rows), 13)
        self.assertEqual(rows[1][1:4], ['0.0', '-inf', '0/1'])
        self.assertAlmostEqual(float(rows[2][1]), 0.5)
        self.assertEqual(rows[2][3], '1/2')
        self.assertEqual(rows[4][3], '3/8')
        manifest = self.read_json('manifest.json')
        self.assertEqual(manifest['artifacts'], ['zcount.csv', 'zcount.json'])
        self.assertEqual(manifest['config'], 'polya_d1_sym')
        self.assertEqual(manifest['seed'], 1)

    @override_settings(CONFORMAL_EXACT_MAX_N=10)
    def testResourceLimit(self):
        with self.assertRaises(CommandError) as cm:
            self.call('zcount', config='polya_d1_sym', exact=True, N=12)
        self.assertEqual(cm.exception.returncode, 3)


class SpectrumCommandTestCase(CommandTestCase):
    def testAsymmetric(self):
        output = self.call('spectrum', config='polya_d1_asym')
        self.assertIn('rho_hat', output)
        spectrum = self.read_json('spectrum.json')['spectrum']
        self.assertAlmostEqual(spectrum['rho_hat'], 0.8, places=2)
        self.assertLess(abs(spectrum['beta'] - 0.5), 0.2)

    def testDeterministic(self):
        other = tempfile.mkdtemp()
        try:
            self.call('spectrum', config='polya_d1_sym', N=30)
            self.call('spectrum', config='polya_d1_sym', N=30, out=other)
            with open(os.path.join(self.out, 'spectrum.json')) as first, \
                    open(os.path.join(other, 'spectrum.json')) as second:
                self.assertEqual(first.read(), second.read())
        finally:
            shutil.rmtree(other)

    def testSeedRecorded(self):
        self.call('spectrum', config='polya_d1_sym', seed=9)
        self.assertEqual(self.read_json('spectrum.json')['seed'], 9)


class ConfigErrorTestCase(CommandTestCase):
    def write_config(self, config):
        path = os.path.join(self.out, 'system.json')
        with open(path, 'w') as handle:
            json.dump(config, handle)
        return path

    def testMissingPsi(self):
        with open(os.path.join(os.path.dirname(cli.__file__), 'configs', 'polya_d1_sym.json')) as f:
            config = json.load(f)
        del config['psi']
        with self.assertRaises(CommandError) as cm:
            self.call('spectrum', config=self.write_config(config))
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn('psi', str(cm.exception))

    def testUnreadable(self):
        with self.assertRaises(CommandError) as cm:
            self.call('spectrum', config='no_such_system')
        self.assertEqual(cm.exception.returncode, 2)

    def testNotJSON(self):
        path = os.path.join(self.out, 'broken.json')
        with open(path, 'w') as handle:
            handle.write('{"shift": ')
        with self.assertRaises(CommandError) as cm:
            self.call('spectrum', config=path)
        self.assertEqual(cm.exception.returncode, 2)

    def testWrongExample(self):
        with self.assertRaises(CommandError) as cm:
            self.call('example-zd', config='free_d2_sym')
        self.assertEqual(cm.exception.returncode, 2)


class ExampleCommandTestCase(CommandTestCase):
    def testPolya(self):
        self.call('example-zd', config='polya_d1_asym', N=10)
        tables = self.read_json('example_zd.json')
        self.assertAlmostEqual(tables['rho'], 0.8)
        masses = dict((tuple(row['g']), row['mass']) for row in tables['nu_group'])
        self.assertAlmostEqual(masses[(1,)], 0.5)
        self.assertAlmostEqual(masses[(-2,)], 4.0)
        self.assertEqual(tables['returns'][1], '8/25')

    def testFree(self):
        self.call('example-fd', config='free_d2_sym', N=10)
        tables = self.read_json('example_fd.json')
        self.assertAlmostEqual(tables['rho'], 3 ** 0.5 / 2)
        ratios = [row['ratio'] for row in tables['llt_ratio'] if row['g'] == []]
        self.assertEqual(ratios, [1.0])


class DimensionCommandTestCase(CommandTestCase):
    def testDecay(self):
        output = self.call('dimension', config='polya_d1_asym')
        self.assertIn('delta = ', output)
        payload = self.read_json('dimension.json')
        self.assertLess(abs(payload['dimension']['delta'] - 0.7565), 0.03)
        decay = payload['decay']
        self.assertTrue(decay['applicable'])
        self.assertEqual(len(decay['paths']), 100)
        self.assertGreaterEqual(decay['passed_fraction'], 0.95)

    def testDecayNotApplicable(self):
        self.call('dimension', config='polya_d1_sym')
        decay = self.read_json('dimension.json')['decay']
        self.assertFalse(decay['applicable'])
        self.assertIn('nothing decays', decay['reason'])


class PathsCommandTestCase(CommandTestCase):
    def testOracleMeasure(self):
        self.call('paths', config='polya_d1_asym')
        payload = self.read_json('paths.json')
        self.assertEqual(payload['source'], 'polya')
        self.assertEqual(payload['count'], 100)
        self.assertGreaterEqual(payload['decayed_fraction'], 0.95)


class ValidateCommandTestCase(CommandTestCase):
    def testPolya(self):
        output = self.call('validate', config='polya_d1_sym')
        self.assertIn('validation passed', output)
        with open(os.path.join(self.out, 'validation.txt')) as handle:
            text = handle.read()
        self.assertIn('Validation of polya_d1_sym', text)
        self.assertIn('All checks passed.', text)
        self.assertTrue(self.read_json('validation.json')['validation']['passed'])


class ConformalCommandTestCase(CommandTestCase):
    def testWeights(self):
        self.call('conformal', config='polya_d1_sym', weights='power')
        self.assertEqual(self.read_json('conformal.json')['weights']['method'], 'power')


class RunTestCase(CommandTestCase):
    def testExitCodes(self):
        args = ['--config', 'polya_d1_sym', '--out', self.out, '--N', '10']
        self.assertEqual(cli.run(['zcount'] + args), 0)
        self.assertTrue(os.path.exists(os.path.join(self.out, 'zcount.csv')))
        self.assertEqual(cli.run(['example-fd'] + args), 2)
