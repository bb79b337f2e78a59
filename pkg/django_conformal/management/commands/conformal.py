import csv
import logging
import math
import os

from django.core.management.base import BaseCommand, CommandError
from django.template.loader import render_to_string

from django_conformal.dimension import decay_check, find_delta
from django_conformal.exceptions import ConformalError, NotApplicableError, ResourceError
from django_conformal.forms import SystemConfigForm, load_config
from django_conformal.harmonic import (KernelWindow, MeshFunction, eigen_relation, harmonicity_residual,
                                       kernel_estimate, regularity_coefficients, sample_paths,
                                       theta_mesh)
from django_conformal.oracles import oracle_for
from django_conformal.patterson import (WEIGHT_METHODS, build_bn, classify_ergodicity,
                                        measure_properties)
from django_conformal.potential import base_pressure
from django_conformal.shift import words_of_length
from django_conformal.transfer import CylinderFunction, spectral_radius, zcount
from django_conformal.utils import canonical_json, config_hash, format_fraction, word_label
from django_conformal.validation import validate

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('zcount', 'spectrum', 'conformal', 'classify', 'martin', 'paths',
               'harmonic-check', 'dimension', 'example-zd', 'example-fd', 'validate')


class Command(BaseCommand):
    help = "Conformal measures, spectral radii and harmonic functions of group extensions."

    def add_arguments(self, parser):
        parser.add_argument('subcommand', choices=SUBCOMMANDS)
        parser.add_argument('--config', required=True,
                            help="Path of a system config, or the name of a bundled one.")
        parser.add_argument('--out', default='.', help="Directory for the output artifacts.")
        parser.add_argument('--workers', type=int)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--exact', action='store_true', default=None)
        parser.add_argument('--N', type=int, dest='N')
        parser.add_argument('--depth', type=int)
        parser.add_argument('--ball-radius', type=int, dest='ball_radius')
        parser.add_argument('--weights', choices=WEIGHT_METHODS,
                            help="Construction of the Patterson weights b_n.")

    def handle(self, *args, **options):
        subcommand = options['subcommand']
        config = self.read_config(options)
        form = SystemConfigForm(config)
        if not form.is_valid():
            raise CommandError(form.error_text(), returncode=2)
        self.extension = form.cleaned_data['extension']
        self.xi = form.cleaned_data['xi']
        self.numerics = form.cleaned_data['numerics']
        self.name = form.cleaned_data['name']
        self.meta = {'command': subcommand, 'config': self.name,
                     'config_hash': config_hash(config), 'seed': self.numerics.seed}
        self.out = options['out']
        self.artifacts = []
        os.makedirs(self.out, exist_ok=True)
        handler = getattr(self, 'handle_%s' % subcommand.replace('-', '_'))
        try:
            handler()
        except ResourceError as exc:
            raise CommandError("%s (estimate %s; try %s)" % (exc, exc.estimate, exc.suggestion),
                               returncode=3)
        except ConformalError as exc:
            raise CommandError(str(exc), returncode=1)
        finally:
            if self.artifacts:
                self.write_json('manifest.json', {'artifacts': self.artifacts})

    def read_config(self, options):
        try:
            config = load_config(options['config'])
        except (OSError, ValueError) as exc:
            raise CommandError("config: %s" % exc, returncode=2)
        if not isinstance(config, dict):
            raise CommandError("config: expected a JSON object", returncode=2)
        overrides = dict((k, options[k]) for k in ('workers', 'seed', 'exact', 'N', 'depth',
                                                   'ball_radius', 'weights')
                         if options.get(k) is not None)
        if overrides:
            numerics = config.get('numerics')
            config['numerics'] = dict(numerics if isinstance(numerics, dict) else {}, **overrides)
        return config

    def write_json(self, name, payload):
        if name != 'manifest.json':
            self.artifacts.append(name)
        with open(os.path.join(self.out, name), 'w') as handle:
            handle.write(canonical_json(dict(payload, **self.meta)))
            handle.write('\n')

    def write_csv(self, name, header, rows):
        self.artifacts.append(name)
        with open(os.path.join(self.out, name), 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(v) if isinstance(v, float) else v for v in row])

    # shared steps

    def table(self):
        if not hasattr(self, '_table'):
            self._table = zcount(self.extension, self.xi, self.numerics.N)
        return self._table

    def estimate(self):
        if not hasattr(self, '_estimate'):
            self._estimate = spectral_radius(self.table())
        return self._estimate

    def window(self):
        n = self.numerics
        weights = build_bn(self.table(), self.estimate().rho_hat, method=n.weights)
        return KernelWindow(self.extension, self.xi, weights, n.N, n.depth,
                            n.ball_radius, schedule=n.schedule)

    def oracle(self, kind):
        oracle = oracle_for(self.extension)
        if oracle is None or oracle.kind != kind:
            raise CommandError("config does not describe a %s random walk" % (
                'Z^d' if kind == 'polya' else 'free group'), returncode=2)
        return oracle

    # subcommands

    def handle_zcount(self):
        e, n = self.extension, self.numerics
        table = zcount(e, self.xi, n.N, exact=n.exact)
        rows = []
        for k in range(1, table.N + 1):
            log_z = table.log_values[k]
            exact = format_fraction(table.exact_values[k]) if table.exact_values else ''
            rows.append((k, math.exp(log_z) if log_z > -math.inf else 0.0,
                         log_z if log_z > -math.inf else '-inf', exact, table.states_visited[k]))
        self.write_csv('zcount.csv', ('n', 'Z_float', 'log_Z', 'Z_rational', 'states_visited'), rows)
        self.write_json('zcount.json', {'table': table})
        self.stdout.write("period %d, %d nonzero terms" % (table.period, len(table.nonzero_indices())))

    def handle_spectrum(self):
        estimate = self.estimate()
        self.write_json('spectrum.json', {'spectrum': estimate, 'N': self.numerics.N})
        self.stdout.write("rho_hat = %r, beta = %r +- %r" % (estimate.rho_hat, estimate.beta,
                                                             estimate.stderr))

    def handle_conformal(self):
        window = self.window()
        nu = window.nu
        self.write_json('conformal.json', {'weights': window.weights, 'measure': nu,
                                           'properties': measure_properties(nu, self.extension),
                                           'rho_stderr': self.estimate().rho_stderr})
        if nu.unconverged:
            self.stderr.write("extrapolation did not settle on every cylinder")

    def handle_classify(self):
        verdict = classify_ergodicity(self.table(), self.estimate())
        self.write_json('classify.json', {'ergodicity': verdict, 'spectrum': self.estimate()})
        self.stdout.write(verdict.verdict)

    def handle_martin(self):
        e = self.extension
        window = self.window()
        identity = e.group.identity
        target = self.xi[:self.numerics.depth]
        cylinders = [(target[:k], identity) for k in range(1, len(target) + 1)]
        kernels, relations = [], []
        for g in e.group.ball(1):
            kernels.append(kernel_estimate(e, (self.xi, g), cylinders, window))
            relation = eigen_relation(e, (self.xi, g), target, identity, window,
                                      self.estimate().rho_hat)
            relations.append(dict(relation, source=e.group.literal(g)))
        self.write_json('martin.json', {'kernels': kernels, 'eigen_relation': relations})

    def handle_paths(self):
        e, n = self.extension, self.numerics
        gibbs = base_pressure(e.potential.as_float(), e.shift)
        oracle = oracle_for(e)
        if oracle is not None:
            nu_group, rho = oracle.nu_group_at, oracle.rho()
        else:
            nu = self.window().nu
            radius = nu.truncation['ball_radius']

            def nu_group(g):
                return nu.group_mass(g) if e.group.word_length(g) <= radius else None
            rho = self.estimate().rho_hat
        paths = sample_paths(e, gibbs, n.length, n.paths, seed=n.seed, nu_group=nu_group,
                             rho_hat=rho)
        rows = []
        for path_id, sample in enumerate(paths):
            rows.extend(sample.as_rows(path_id))
        self.write_csv('paths.csv', ('path_id', 'n', 'observable'), rows)
        drops = []
        for sample in paths:
            finite = [v for v in sample.observables if math.isfinite(v) and v > 0]
            drops.append(finite[0] / finite[-1] if len(finite) > 1 else None)
        decayed = [d for d in drops if d is not None and d >= 1e3]
        self.write_json('paths.json', {'rho': rho, 'count': len(paths), 'length': n.length,
                                       'drops': drops,
                                       'decayed_fraction': len(decayed) / len(paths),
                                       'source': oracle.kind if oracle else 'engine'})

    def handle_harmonic_check(self):
        e = self.extension
        identity = e.group.identity
        radius = e.max_step + 1
        window = self.window()
        rho = self.estimate().rho_hat
        f = CylinderFunction({((), identity): 1.0})
        mesh = theta_mesh(e, f, window, e.potential.depth, radius)
        result = {'rho_hat': rho,
                  'theta_residual': harmonicity_residual(e, mesh, rho),
                  'regularity': regularity_coefficients(e, mesh, theta_image=True,
                                                        tol=self.numerics.tol)}
        oracle = oracle_for(e)
        if oracle is not None and oracle.kind == 'polya':
            exact = MeshFunction.tabulate(e, e.potential.depth, radius, oracle.harmonic)
            result['oracle_residual'] = harmonicity_residual(e, exact, oracle.rho())
        self.write_json('harmonic.json', result)

    def handle_dimension(self):
        e, n = self.extension, self.numerics
        report = find_delta(e, tol=n.tol, N=n.N, xi=self.xi)
        self.write_json('dimension.json', {'dimension': report, 'decay': self.decay(report)})
        self.stdout.write("delta = %r, dim = %r" % (report.delta, report.dim_value))

    def decay(self, report):
        e, n = self.extension, self.numerics
        oracle = oracle_for(e)
        if oracle is None:
            return {'applicable': False, 'reason': 'no closed-form measure along paths'}
        gibbs = base_pressure(e.potential.as_float(), e.shift)
        paths = sample_paths(e, gibbs, n.length, n.paths, seed=n.seed)
        try:
            return decay_check(e, report, paths, lambda g: oracle.nu_group_at(g, report.delta))
        except NotApplicableError as exc:
            return {'applicable': False, 'reason': str(exc)}

    def _oracle_tables(self, oracle):
        e, n = self.extension, self.numerics
        try:
            returns = oracle.returns(min(n.N, 20))
        except ConformalError:
            returns = None
        ball = e.group.ball(min(n.ball_radius, 2))
        cylinders = []
        for depth in range(1, n.depth + 1):
            for w in words_of_length(e.shift, depth):
                for g in e.group.ball(1):
                    cylinders.append({'word': word_label(w), 'g': e.group.literal(g),
                                      'mass': oracle.cylinder(w, g)})
        return {'rho': oracle.rho(),
                'nu_group': [{'g': e.group.literal(g), 'mass': oracle.nu_group(g)} for g in ball],
                'cylinders': cylinders,
                'returns': returns[1:] if returns is not None else None}, ball

    def handle_example_zd(self):
        oracle = self.oracle('polya')
        tables, ball = self._oracle_tables(oracle)
        tables['harmonic'] = [{'g': self.extension.group.literal(g), 'h': oracle.harmonic((), g)}
                              for g in ball]
        self.write_json('example_zd.json', tables)

    def handle_example_fd(self):
        oracle = self.oracle('free')
        tables, ball = self._oracle_tables(oracle)
        n = self.numerics.N - self.numerics.N % 2
        tables['llt_ratio'] = [{'g': list(g), 'ratio': oracle.llt_ratio(g, n)}
                               for g in ball if len(g) % 2 == 0]
        self.write_json('example_fd.json', tables)

    def handle_validate(self):
        report = validate(self.extension, self.xi, self.numerics, name=self.name)
        self.write_json('validation.json', {'validation': report})
        self.artifacts.append('validation.txt')
        with open(os.path.join(self.out, 'validation.txt'), 'w') as handle:
            handle.write(render_to_string('django_conformal/validation_report.txt', {
                'report': report, 'meta': self.meta,
            }))
        if not report.passed:
            raise CommandError("validation failed: %s" % ', '.join(
                c.name for c in report.failures), returncode=1)
        self.stdout.write("validation passed (%d checks)" % len(report.checks))
