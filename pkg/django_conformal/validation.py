"""
The oracle-versus-engine suite behind ``conformal validate``.

Every check compares one engine quantity with its closed form or with a
structural identity. Checks without a reference for the given system are
reported as informational and never fail the run.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

from django_conformal.dimension import decay_check, find_delta
from django_conformal.exceptions import ConformalError, NotApplicableError
from django_conformal.extension import ExtensionSpec, psi_n
from django_conformal.harmonic import (KernelWindow, MeshFunction, harmonicity_residual,
                                       kernel_estimate, regularity_coefficients, sample_paths,
                                       t_invariance_check)
from django_conformal.oracles import oracle_for
from django_conformal.patterson import (CONSERVATIVE, DISSIPATIVE, build_bn, classify_ergodicity,
                                        conformality_residual)
from django_conformal.potential import PotentialSpec, base_pressure
from django_conformal.shift import words_of_length
from django_conformal.transfer import (CylinderFunction, displacement_ratios, doeblin_fortet_check,
                                       limit_ratio, spectral_radius, zcount)
from django_conformal.utils import setting, word_label

logger = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    passed: object
    value: object = None
    expected: object = None
    tolerance: object = None
    detail: str = ''

    @property
    def failed(self):
        return self.passed is False

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class ValidationReport:
    name: str
    oracle: str
    checks: list = field(default_factory=list)

    def add(self, *args, **kwargs):
        check = Check(*args, **kwargs)
        self.checks.append(check)
        log = logger.warning if check.failed else logger.info
        log("%s: %s (value=%r expected=%r)", check.name,
            {True: 'ok', False: 'FAILED', None: 'info'}[check.passed], check.value, check.expected)
        return check

    @property
    def failures(self):
        return [c for c in self.checks if c.failed]

    @property
    def passed(self):
        return not self.failures

    def as_dict(self):
        return {'name': self.name, 'oracle': self.oracle, 'passed': self.passed,
                'checks': self.checks}


def exact_copy(e):
    """The extension with its potential values read as rationals."""
    values = dict((w, Fraction(repr(v)) if isinstance(v, float) else Fraction(v))
                  for w, v in e.potential.values.items())
    potential = PotentialSpec(e.shift, e.potential.depth, values, e.potential.metric_r, exact=True)
    return ExtensionSpec(e.shift, potential, e.group, e.psi)


def _relative(value, expected):
    return abs(value - expected) / abs(expected)


def check_exact_returns(report, e, xi, N, oracle):
    n_max = min(N, 20, setting('EXACT_MAX_N', 30))
    table = zcount(exact_copy(e), xi, n_max, exact=True)
    drift = [abs(float(table.exact_values[n]) - math.exp(table.log_values[n]))
             / float(table.exact_values[n])
             for n in range(1, n_max + 1) if table.exact_values[n]]
    worst = max(drift) if drift else 0.0
    report.add('zcount_float', worst <= 1e-10, value=worst, tolerance=1e-10)
    if oracle is None:
        report.add('zcount_exact', None, detail='no closed form for Z^n')
        return
    try:
        expected = oracle.returns(n_max)
    except ConformalError as exc:
        report.add('zcount_exact', None, detail=str(exc))
        return
    wrong = [n for n in range(1, n_max + 1) if table.exact_values[n] != expected[n]]
    report.add('zcount_exact', not wrong, value=wrong[:5], expected=[],
               detail='n <= %d compared as rationals' % n_max)


def check_spectrum(report, e, xi, numerics, oracle):
    table = zcount(e, xi, numerics.N)
    estimate = spectral_radius(table)
    if table.rho_base is not None:
        report.add('rho_below_base', estimate.rho_hat <= table.rho_base + 1e-12,
                   value=estimate.rho_hat, expected=table.rho_base)
    if oracle is None:
        report.add('rho', None, value=estimate.rho_hat)
        report.add('beta', None, value=estimate.beta, tolerance=estimate.stderr)
    elif oracle.kind == 'polya':
        rho = oracle.rho()
        report.add('rho', abs(estimate.rho_hat - rho) <= 0.002, value=estimate.rho_hat,
                   expected=rho, tolerance=0.002)
        d = e.group.d
        report.add('beta', abs(estimate.beta - d / 2) <= 0.2, value=estimate.beta,
                   expected=d / 2, tolerance=0.2)
    else:
        rho = oracle.rho()
        report.add('rho', _relative(estimate.rho_hat, rho) <= 0.02, value=estimate.rho_hat,
                   expected=rho, tolerance='2%')
        report.add('beta', abs(estimate.beta - 1.5) <= 0.3, value=estimate.beta,
                   expected=1.5, tolerance=0.3)
    verdict = classify_ergodicity(table, estimate)
    if oracle is None:
        report.add('ergodicity', None, value=verdict.verdict, detail=verdict.note)
    else:
        expected = CONSERVATIVE if oracle.kind == 'polya' and e.group.d <= 2 else DISSIPATIVE
        report.add('ergodicity', verdict.verdict == expected, value=verdict.verdict,
                   expected=expected, detail=verdict.note)
    return table, estimate


def check_measure(report, e, xi, numerics, table, estimate, oracle):
    weights = build_bn(table, estimate.rho_hat, method=numerics.weights)
    radius = min(numerics.ball_radius, 2)
    window = KernelWindow(e, xi, weights, numerics.N, numerics.depth, radius,
                          schedule=numerics.schedule)
    nu = window.nu
    identity = e.group.identity
    base = nu.group_mass(identity)
    report.add('identity_fibre_mass', abs(base - 1) < 1e-9, value=base, expected=1.0,
               tolerance=1e-9)

    anchor = [window.kernel((xi, identity), w, identity)
              for n in range(1, numerics.depth + 1) for w in words_of_length(e.shift, n)]
    anchor = [k for k in anchor if k is not None]
    report.add('kernel_anchor', all(k == 1.0 for k in anchor), value=sorted(set(anchor))[:3],
               expected=[1.0])

    residuals = []
    for n in range(1, min(numerics.depth, 3) + 1):
        for w in words_of_length(e.shift, n):
            if n < e.potential.depth:
                continue
            if e.group.word_length(psi_n(e, w[:1])) > radius:
                continue
            value = conformality_residual(e, nu, w, 1, identity)
            if not math.isnan(value):
                residuals.append(value)
    worst = max(residuals) if residuals else math.nan
    if oracle is not None and oracle.kind == 'polya':
        report.add('conformality', worst < 1e-2, value=worst, tolerance=1e-2)
    else:
        report.add('conformality', None, value=worst)
    check_invariance(report, e, xi, numerics, window, oracle)

    if oracle is None:
        return
    ball = [g for g in e.group.ball(1) if g != identity]
    tol = 0.05 if oracle.kind == 'polya' else 0.15
    errors = {}
    for g in ball:
        mass = nu.group_mass(g)
        expected = oracle.nu_group(g) / oracle.nu_group(identity)
        errors[repr(g)] = _relative(mass / base, expected) if mass > 0 else math.inf
    worst = max(errors.values()) if errors else 0.0
    report.add('nu_group', worst <= tol, value=errors, tolerance=tol)

    checked = []
    for depth in range(1, min(numerics.depth, 3) + 1):
        for w in words_of_length(e.shift, depth):
            for g in e.group.ball(1):
                moved = e.group.multiply(g, e.psi[w[0]])
                image = oracle.nu_group(moved) if depth == 1 else oracle.cylinder(w[1:], moved)
                rhs = oracle.rho() * oracle.cylinder(w, g) / float(e.potential.value(w))
                checked.append(abs(image - rhs) / image)
    report.add('oracle_conformality', max(checked) < 1e-12, value=max(checked),
               tolerance=1e-12)

    if oracle.kind != 'polya':
        report.add('kernel_value', None, detail='free-group kernels need long target paths')
        return
    target = xi[:numerics.depth]
    cylinders = [(target[:k], identity) for k in range(1, len(target) + 1)]
    worst = 0.0
    for g in ball:
        estimate = kernel_estimate(e, (xi, g), cylinders, window)
        expected = oracle.kernel(g)
        worst = max(worst, _relative(estimate.limit, expected))
    report.add('kernel_value', worst <= 0.05, value=worst, tolerance=0.05)


def check_invariance(report, e, xi, numerics, window, oracle):
    identity = e.group.identity
    if numerics.depth < 2:
        report.add('kernel_invariance', None, detail='needs cylinders of depth 2')
        return
    sources = [g for g in e.group.ball(1) if g != identity]
    if oracle is None or oracle.kind != 'polya':
        sources = sources[:1]
    targets = [w for w in words_of_length(e.shift, 2) if len(w) >= e.potential.depth]
    worst, failed = 0.0, False
    for g in sources:
        for w in targets:
            result = t_invariance_check(e, (xi, g), [(w, identity)], window, tol=0.1)
            if result['passed'] is None:
                continue
            worst = max(worst, result['relative'])
            failed = failed or not result['passed']
    if oracle is not None and oracle.kind == 'polya':
        report.add('kernel_invariance', not failed, value=worst, tolerance=0.1)
    else:
        report.add('kernel_invariance', None, value=worst)


def check_harmonic(report, e, oracle):
    if oracle is None or oracle.kind != 'polya':
        report.add('harmonic_residual', None, detail='no closed-form harmonic function')
        return
    mesh = MeshFunction.tabulate(e, max(e.potential.depth, 2), e.max_step + 1, oracle.harmonic)
    residual = harmonicity_residual(e, mesh, oracle.rho())
    report.add('harmonic_residual', residual <= 1e-10, value=residual, tolerance=1e-10)
    coefficients = regularity_coefficients(e, mesh, theta_image=True)
    report.add('harmonic_ld', coefficients.within_bound, value=coefficients.LD,
               expected=coefficients.c_phi, detail='LD(h) <= C_phi')


def check_operator(report, e, xi):
    """Doeblin-Fortet inequalities for L^n, n <= 4, on a depth-2 test function."""
    identity = e.group.identity
    head = [w for w in words_of_length(e.shift, 2) if w[0] == xi[0]]
    f = CylinderFunction(((w, identity), 1.0 / (1 + j)) for j, w in enumerate(head))
    pairs = []
    for g in e.group.ball(1)[:2]:
        for a in e.shift.symbols:
            words = [w for w in words_of_length(e.shift, 3) if w[0] == a]
            if len(words) > 1:
                pairs.append(((words[0], g), (words[-1], g)))
    worst, worst_log = -math.inf, -math.inf
    for n in range(1, 5):
        result = doeblin_fortet_check(e, f, n, pairs)
        worst = max(worst, result['max_excess'])
        if result['max_excess_log'] is not None:
            worst_log = max(worst_log, result['max_excess_log'])
    report.add('doeblin_fortet', worst <= 1e-12, value=worst, tolerance=1e-12,
               detail='%d pairs, n <= 4' % len(pairs))
    if worst_log > -math.inf:
        report.add('doeblin_fortet_log', worst_log <= 1e-12, value=worst_log, tolerance=1e-12)


def check_dimension(report, e, xi, numerics, oracle):
    try:
        dim = find_delta(e, N=numerics.N, xi=xi, tol=1e-4, interval=False)
    except ConformalError as exc:
        report.add('delta', None, detail=str(exc))
        return None
    if oracle is None:
        report.add('delta', None, value=dim.delta)
        report.add('amenable', None, value=dim.amenable_consistent)
        report.add('dimension', None, value=dim.dim_value)
        return dim
    delta = oracle.delta()
    report.add('delta', abs(dim.delta - delta) <= 0.03, value=dim.delta, expected=delta,
               tolerance=0.03)
    p = e.potential.as_float()
    gibbs = base_pressure(p.power(delta), e.shift)
    lyapunov = replace(gibbs, potential=p).lyapunov()
    expected = delta + math.log(gibbs.rho_base) / abs(lyapunov)
    report.add('dimension', abs(dim.dim_value - expected) <= 0.03, value=dim.dim_value,
               expected=expected, tolerance=0.03)
    if not oracle.symmetric():
        report.add('amenable', None, value=dim.amenable_consistent,
                   detail='asymmetric walks keep a pressure gap on amenable groups')
        return dim
    amenable = oracle.kind == 'polya'
    report.add('amenable', dim.amenable_consistent == amenable, value=dim.amenable_consistent,
               expected=amenable)
    gap = dim.dim_value - dim.delta
    if amenable:
        report.add('dimension_gap', abs(gap) <= 0.02, value=gap, expected=0.0, tolerance=0.02)
    else:
        report.add('dimension_gap', gap >= 0.05, value=gap, expected='>= 0.05')
    return dim


def check_decay(report, e, numerics, oracle, dim):
    if dim is None or oracle is None:
        report.add('decay', None, detail='no closed-form measure along paths')
        return
    gibbs = base_pressure(e.potential.as_float(), e.shift)
    paths = sample_paths(e, gibbs, numerics.length, numerics.paths, seed=numerics.seed)
    try:
        result = decay_check(e, dim, paths, lambda g: oracle.nu_group_at(g, dim.delta))
    except NotApplicableError as exc:
        report.add('decay', None, detail=str(exc))
        return
    report.add('decay', result['passed_fraction'] >= 0.95, value=result['passed_fraction'],
               expected=0.95, detail='%d paths of length %d, mean slope %.4f'
               % (numerics.paths, numerics.length, result['slope']))


def check_local_limit(report, e, xi, numerics, oracle):
    if oracle is None or oracle.kind != 'free':
        return
    g = [k for k in e.group.ball(2) if len(k) == 2][0]
    n = numerics.N - len(g)
    n -= n % 2
    if n < 6:
        report.add('llt_ratio', None, detail='N too small for the local limit')
        return
    limit, last = limit_ratio(displacement_ratios(e, xi, g, n))
    expected = oracle.llt_ratio(g, n)
    report.add('llt_ratio', _relative(limit, expected) <= 0.1, value=limit, expected=expected,
               tolerance=0.1, detail='P(X_%d = g) / P(X_%d = id) = %.4f, extrapolated in 1/n'
               % (n, n, last))


def validate(e, xi, numerics, name=''):
    """Runs every applicable check and returns the report."""
    oracle = oracle_for(e)
    report = ValidationReport(name=name, oracle=oracle.kind if oracle else 'none')
    logger.info("validating %s against %s", name or word_label(xi), report.oracle)
    check_exact_returns(report, e, xi, numerics.N, oracle)
    table, estimate = check_spectrum(report, e, xi, numerics, oracle)
    check_measure(report, e, xi, numerics, table, estimate, oracle)
    check_harmonic(report, e, oracle)
    check_operator(report, e, xi)
    dim = check_dimension(report, e, xi, numerics, oracle)
    check_decay(report, e, numerics, oracle, dim)
    check_local_limit(report, e, xi, numerics, oracle)
    return report
