"""
Patterson construction of the conformal measure.

The series m_s = (1/P(s)) sum_n b_n s^-n sum_{T^n(x, g) = (xi, id)} Phi_n(x) delta_(x, g)
is tabulated once per cylinder and evaluated for any s afterwards, so a whole
extrapolation schedule costs a single backward pass.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from django_conformal.exceptions import DomainError, InputError, UnsupportedError
from django_conformal.extension import check_symmetric, psi_n
from django_conformal.potential import log_phi_n, phi_n
from django_conformal.shift import words_of_length
from django_conformal.transfer import backward_levels
from django_conformal.utils import log_sum, neville, word_label

logger = logging.getLogger(__name__)

CONSERVATIVE, DISSIPATIVE, INCONCLUSIVE = 'conservative_ergodic', 'dissipative', 'inconclusive'
GREEDY, POWER = 'greedy', 'power'
WEIGHT_METHODS = (GREEDY, POWER)
PARTITION, DISTANCE = 'partition', 'distance'
EXTRAPOLATION_VARIABLES = (PARTITION, DISTANCE)


@dataclass
class PattersonWeights:
    """b_n = prod_{k <= n} lambda(k), with lambda(0) = b_0 = 1."""
    lambdas: np.ndarray
    b: np.ndarray
    rho_hat: float
    partial_sums: np.ndarray
    target: float
    method: str = GREEDY
    gamma: float = None

    @property
    def N(self):
        return len(self.b) - 1

    def log_b(self):
        return np.log(self.b)

    def as_dict(self):
        return {'method': self.method, 'gamma': self.gamma, 'rho_hat': self.rho_hat,
                'lambdas': self.lambdas[1:], 'b': self.b[1:],
                'partial_sums': self.partial_sums[1:], 'target': self.target}


def _power_weights(gamma, N):
    n = np.arange(N + 1, dtype=float)
    return (n + 1) ** gamma


def _greedy_lambdas(terms, targets):
    """
    lambda(k) is the boost that lifts the partial sum to targets[k], clamped
    to [1, 1 + 1/k] and never above lambda(k - 1).
    """
    N = len(terms) - 1
    lambdas = np.ones(N + 1)
    b, total = 1.0, 0.0
    for k in range(1, N + 1):
        reached = total + b * terms[k]
        if reached >= targets[k]:
            needed = 1.0
        elif terms[k] > 0:
            needed = (targets[k] - total) / (b * terms[k])
        else:
            needed = math.inf
        boost = min(max(needed, 1.0), 1.0 + 1.0 / k)
        if k > 1:
            boost = min(boost, lambdas[k - 1])
        lambdas[k] = boost
        b *= boost
        total += b * terms[k]
    return lambdas


def _power_gamma(log_terms, n, target):
    def excess(gamma):
        return log_sum(log_terms + gamma * np.log(n + 1)) - math.log(target)

    if excess(0.0) >= 0:
        return 0.0
    if excess(1.0) < 0:
        logger.warning("build_bn: partial sums stay below log(1 + N) even with gamma = 1")
        return 1.0
    return brentq(excess, 0.0, 1.0, xtol=1e-10)


def build_bn(t, rho_hat, N=None, method=GREEDY):
    """
    Slowly varying weights that make the return series diverge at rho_hat.

    The greedy method picks lambda(k) so that sum_{j <= k} b_j Z^j rho_hat^-j
    reaches log(1 + k), clamped to [1, 1 + 1/k] and nonincreasing in k. The
    power method uses b_n = (n + 1)^gamma with the smallest gamma in [0, 1]
    whose partial sum reaches log(1 + N).
    """
    N = t.N if N is None else N
    if N < 1 or N > t.N:
        raise InputError("build_bn: N must lie in 1..%d" % t.N)
    if method not in WEIGHT_METHODS:
        raise InputError("build_bn: method must be one of %s" % ', '.join(WEIGHT_METHODS))
    if not t.nonzero_indices():
        raise InputError("build_bn: every Z^n vanishes")
    n = np.arange(N + 1, dtype=float)
    log_terms = t.log_values[:N + 1] - n * math.log(rho_hat)
    log_terms[0] = -math.inf
    terms = np.exp(np.minimum(log_terms, 700))
    target = math.log(1 + N)
    gamma = None
    if method == GREEDY:
        lambdas = _greedy_lambdas(terms, np.log1p(n))
        b = np.cumprod(lambdas)
    else:
        gamma = _power_gamma(log_terms, n, target)
        b = _power_weights(gamma, N)
        lambdas = np.ones(N + 1)
        lambdas[1:] = b[1:] / b[:-1]
    partial = np.cumsum(terms * b)
    if partial[-1] < target:
        logger.info("build_bn: partial sum %.4g stays below log(1 + N) = %.4g", partial[-1], target)
    return PattersonWeights(lambdas=lambdas, b=b, rho_hat=rho_hat, partial_sums=partial,
                            target=target, method=method, gamma=gamma)


class CylinderSeries(object):
    """
    For every cylinder [w, g] with |w| <= depth and |g| <= ball_radius, the
    log weight of the n-step preimages of ``start`` lying in it, n = 1..N.
    """

    def __init__(self, e, start, depth, ball_radius, N):
        if depth < 1 or N < 1 or ball_radius < 0:
            raise InputError("series: depth and N must be positive, ball_radius nonnegative")
        self.extension = e
        self.start = e.point(*start)
        self.depth = depth
        self.ball_radius = ball_radius
        self.N = N
        self.terms = {}
        self._collect()

    def _add(self, key, n, log_value):
        row = self.terms.get(key)
        if row is None:
            row = self.terms[key] = np.full(self.N + 1, -math.inf)
        row[n] = np.logaddexp(row[n], log_value)

    def _collect(self):
        e = self.extension
        shift, group = e.shift, e.group
        p = e.potential.as_float()
        word, g0 = self.start
        R = self.ball_radius
        words = [u for L in range(1, self.depth + 1) for u in words_of_length(shift, L)]
        psi_inv = dict((u, group.inverse(psi_n(e, u))) for u in words)
        ending = {}
        for u in words:
            for b in shift.successors(u[-1]):
                ending.setdefault(b, []).append(u)

        x = shift.extend(word, self.depth + p.depth)
        for u in words:
            for n in range(1, min(len(u), self.N + 1)):
                if x[:len(u) - n] != u[n:]:
                    continue
                g = group.compose(g0, psi_inv[u[:n]])
                if group.size(g) <= R:
                    self._add((u, g), n, log_phi_n(p, shift, u[:n] + x, n))

        bound = None
        if group.kind != 'table':
            bound = lambda t: R + (self.depth + self.N - 1 - t) * e.max_step
        cache = {}
        for t, states, log_scale in backward_levels(e, word, g0, self.N - 1, bound):
            acc = {}
            for (q, k), weight in states.items():
                for u in ending.get(q[0], ()):
                    if t + len(u) > self.N:
                        continue
                    g = group.compose(k, psi_inv[u])
                    if group.size(g) > R:
                        continue
                    factor = cache.get((u, q))
                    if factor is None:
                        factor = cache[(u, q)] = math.exp(log_phi_n(p, shift, u + q, len(u)))
                    acc[(u, g)] = acc.get((u, g), 0.0) + weight * factor
            for (u, g), value in acc.items():
                if value > 0:
                    self._add((u, g), t + len(u), math.log(value) + log_scale)
        logger.debug("series from %s: %d cylinders", word_label(word), len(self.terms))

    def returns(self):
        """log Z^n for n = 0..N, read off the depth-1 cylinders over the identity."""
        identity = self.extension.group.identity
        rows = [row for (u, g), row in self.terms.items() if len(u) == 1 and g == identity]
        if not rows:
            return np.full(self.N + 1, -math.inf)
        return np.logaddexp.reduce(np.array(rows), axis=0)

    def log_mass(self, key, coeffs):
        row = self.terms.get(key)
        if row is None:
            return -math.inf
        return log_sum(row + coeffs)


@dataclass
class MeasureApprox:
    s: object
    masses: dict
    truncation: dict
    rho_hat: float
    tail_bound: float = 0.0
    spread: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    unconverged: bool = False

    @property
    def extrapolated(self):
        return self.s == 'extrapolated'

    def mass(self, word, g):
        return self.masses.get((tuple(word), g), 0.0)

    def group_mass(self, g):
        """nu(X_g), the sum of the depth-1 cylinders over g."""
        return math.fsum(m for (u, h), m in self.masses.items() if len(u) == 1 and h == g)

    def has(self, word, g):
        word = tuple(word)
        return len(word) <= self.truncation['depth'] and g in self._groups()

    def _groups(self):
        if not hasattr(self, '_group_cache'):
            self._group_cache = set(self.truncation.get('ball', ()))
        return self._group_cache

    def as_dict(self):
        entries = []
        for (u, g), m in sorted(self.masses.items(), key=lambda item: (len(item[0][0]), item[0][0],
                                                                         repr(item[0][1]))):
            entries.append({'word': word_label(u), 'g': g, 'mass': m,
                            'spread': self.spread.get((u, g), 0.0)})
        result = {'s': self.s, 'rho_hat': self.rho_hat, 'masses': entries,
                  'truncation': dict((k, v) for k, v in self.truncation.items() if k != 'ball'),
                  'tail_bound': self.tail_bound, 'unconverged': self.unconverged}
        if self.diagnostics:
            result['diagnostics'] = dict((word_label(u) + ' @ ' + repr(g), d)
                                         for (u, g), d in sorted(self.diagnostics.items(),
                                                                 key=lambda item: repr(item[0])))
        return result


class PattersonFamily(object):
    """
    The measures m_s of one truncated series for every s. ``start`` moves the
    series to another base point while keeping the normalization of xi.
    """

    def __init__(self, e, xi, weights, depth, ball_radius, N, start=None, base=None):
        if N > weights.N:
            raise InputError("series length %d exceeds the %d Patterson weights" % (N, weights.N))
        self.extension = e
        self.xi = tuple(xi)
        self.weights = weights
        self.depth, self.ball_radius, self.N = depth, ball_radius, N
        self.base = base or CylinderSeries(e, (self.xi, e.group.identity), depth, ball_radius, N)
        if start is None or e.point(*start) == self.base.start:
            self.series = self.base
        else:
            self.series = CylinderSeries(e, start, depth, ball_radius, N)
        self.log_z = self.base.returns()
        self.ball = [g for g in e.group.ball(ball_radius)]

    def coefficients(self, s):
        n = np.arange(self.N + 1, dtype=float)
        coeffs = np.log(self.weights.b[:self.N + 1]) - n * math.log(s)
        coeffs[0] = -math.inf
        return coeffs

    def log_partition(self, s):
        return log_sum(self.log_z + self.coefficients(s))

    def tail_bound(self, s, log_partition=None):
        rho = self.weights.rho_hat
        if s <= rho or self.log_z[self.N] == -math.inf:
            return math.inf if s <= rho else 0.0
        log_p = self.log_partition(s) if log_partition is None else log_partition
        last = self.coefficients(s)[self.N] + self.log_z[self.N]
        return math.exp(last - log_p) / (1 - rho / s)

    def measure(self, s):
        coeffs = self.coefficients(s)
        log_p = self.log_partition(s)
        if log_p == -math.inf:
            raise InputError("series: no returns to the identity within N = %d" % self.N)
        masses = {}
        for key in self.series.terms:
            value = self.series.log_mass(key, coeffs)
            masses[key] = math.exp(value - log_p) if value > -math.inf else 0.0
        return MeasureApprox(s=s, masses=masses, rho_hat=self.weights.rho_hat,
                             truncation={'N': self.N, 'ball_radius': self.ball_radius,
                                         'depth': self.depth, 'ball': self.ball},
                             tail_bound=self.tail_bound(s, log_p))


def m_s_measure(e, xi, w, s, depth, ball_radius, N):
    if not s > w.rho_hat:
        raise DomainError("m_s: s = %r does not exceed rho_hat = %r" % (s, w.rho_hat))
    return PattersonFamily(e, xi, w, depth, ball_radius, N).measure(s)


def default_schedule(rho_hat, steps=8):
    return [rho_hat * (1 + 2.0 ** -k) for k in range(1, steps + 1)]


def _variable(family, s, variable):
    if variable == DISTANCE:
        return s - family.weights.rho_hat
    return math.exp(-family.log_partition(s))


def _extrapolate(family, schedule, order, variable):
    measures = [family.measure(s) for s in schedule]
    us = [_variable(family, s, variable) for s in schedule]
    tail = order + 1
    result, diagnostics = {}, {}
    for key in family.series.terms:
        ys = [m.masses.get(key, 0.0) for m in measures]
        value = neville(us[-tail:], ys[-tail:]) if len(ys) > 1 else ys[0]
        result[key] = max(value, 0.0)
        diffs = [abs(b - a) for a, b in zip(ys, ys[1:])]
        ratios = [d2 / d1 for d1, d2 in zip(diffs, diffs[1:]) if d1 > 0]
        diagnostics[key] = ratios
    return result, diagnostics


def conformal_limit(e, xi, weights, depth, ball_radius, N, schedule=None, rho_stderr=0.0,
                    order=2, family=None, variable=PARTITION):
    """
    Extrapolates m_{s_k} along a schedule s_k decreasing to rho_hat.

    With ``variable='distance'`` the masses are extrapolated in s_k - rho_hat
    to 0, which recovers the truncated series at s = rho_hat. The default
    ``'partition'`` uses u = 1/P(s_k) instead. For a divergent series u is an
    increasing function of s - rho_hat vanishing at the same point, so both
    target the same limit. On a truncated series 1/P_N(rho_hat) is still
    positive, and extrapolating u to 0 removes the finite-n part that the
    distance variable keeps.

    With ``rho_stderr`` the schedule is also run around rho_hat +- rho_stderr
    and the spread is attached to every mass.
    """
    rho = weights.rho_hat
    if variable not in EXTRAPOLATION_VARIABLES:
        raise InputError("conformal_limit: variable must be one of %s"
                         % ', '.join(EXTRAPOLATION_VARIABLES))
    schedule = list(schedule) if schedule is not None else default_schedule(rho)
    if not schedule or any(s <= rho for s in schedule) \
            or any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise InputError("conformal_limit: schedule must decrease strictly and stay above rho_hat")
    family = family or PattersonFamily(e, xi, weights, depth, ball_radius, N)
    masses, ratios = _extrapolate(family, schedule, order, variable)
    spread = {}
    if rho_stderr > 0:
        for shifted in (rho - rho_stderr, rho + rho_stderr):
            if shifted <= 0:
                continue
            moved = [s * shifted / rho for s in schedule]
            other, _ = _extrapolate(family, moved, order, variable)
            for key, value in other.items():
                spread[key] = max(spread.get(key, 0.0), abs(value - masses[key]))
    checked = [key for key, value in masses.items() if value > 0 and ratios[key]]
    bad = [key for key in checked
           if any(b > a * (1 + 1e-9) for a, b in zip(ratios[key], ratios[key][1:]))]
    unconverged = bool(checked) and len(bad) > 0.1 * len(checked)
    if unconverged:
        logger.warning("conformal_limit: %d of %d cylinders did not settle", len(bad), len(checked))
    last = family.measure(schedule[-1])
    return MeasureApprox(s='extrapolated', masses=masses, rho_hat=rho, truncation=last.truncation,
                         tail_bound=last.tail_bound, spread=spread, diagnostics=ratios,
                         unconverged=unconverged)


def _image_mass(e, nu, w, g, k):
    h = e.group.multiply(g, psi_n(e, w[:k]))
    if len(w) > k:
        return nu.mass(w[k:], h), (w[k:], h)
    total = math.fsum(nu.mass((b,), h) for b in e.shift.successors(w[-1]))
    return total, ((), h)


def conformality_residual(e, nu, w, k, g=None):
    """
    |nu(T^k [w, g]) - rho^k nu([w, g]) / Phi_k(w)| / nu(T^k [w, g]).
    Returns nan when the image has no mass.
    """
    w = tuple(w)
    g = e.group.identity if g is None else g
    if k < 1 or len(w) < k + e.potential.depth - 1 or len(w) < k:
        raise InputError("conformality_residual: [w] must fix Phi_%d" % k)
    if not nu.has(w, g) or e.group.word_length(e.group.multiply(g, psi_n(e, w[:k]))) \
            > nu.truncation['ball_radius']:
        raise InputError("conformality_residual: cylinder outside the computed window")
    image, _ = _image_mass(e, nu, w, g, k)
    if image <= 0:
        logger.warning("conformality_residual: image of [%s] has no mass", word_label(w))
        return math.nan
    phi = phi_n(e.potential.as_float(), e.shift, w, k)
    return abs(image - nu.rho_hat ** k * nu.mass(w, g) / phi) / image


def measure_properties(nu, e):
    """
    Ranges of rho^n nu([w, g]) / (Phi_n(w) nu(X_{g psi_n(w)})) over the
    computed cylinders and, for symmetric extensions, of nu(X_g)/nu(X_{g^-1}).
    """
    group = e.group
    p = e.potential.as_float()
    fibre = dict((g, nu.group_mass(g)) for g in nu.truncation['ball'])
    ratios = []
    for (u, g), mass in nu.masses.items():
        h = group.multiply(g, psi_n(e, u))
        if mass <= 0 or fibre.get(h, 0.0) <= 0:
            continue
        ratios.append(nu.rho_hat ** len(u) * mass / (phi_n(p, e.shift, u, len(u)) * fibre[h]))
    report = {'cylinder_ratio': (min(ratios), max(ratios)) if ratios else None,
              'symmetric': False, 'symmetric_ratio': None}
    try:
        symmetric = check_symmetric(e).is_symmetric_extension
    except UnsupportedError:
        symmetric = False
    if symmetric:
        pairs = [fibre[g] / fibre[group.inverse(g)] for g in fibre
                 if fibre[g] > 0 and fibre.get(group.inverse(g), 0.0) > 0]
        report['symmetric'] = True
        report['symmetric_ratio'] = (min(pairs), max(pairs)) if pairs else None
    return report


@dataclass
class ErgodicityVerdict:
    verdict: str
    beta: float
    stderr: float
    partial_sums: np.ndarray
    note: str = ''

    def as_dict(self):
        return {'verdict': self.verdict, 'beta': self.beta, 'stderr': self.stderr,
                'partial_sums': self.partial_sums, 'note': self.note}


def classify_ergodicity(t, se):
    """
    Divergence of sum rho^-n Z^n decides between conservative and
    dissipative; with Z^n ~ rho^n n^-beta it diverges iff beta <= 1.
    """
    n = np.arange(t.N + 1, dtype=float)
    terms = np.exp(np.minimum(t.log_values - n * math.log(se.rho_hat), 700))
    terms[0] = 0.0
    partial = np.cumsum(terms)[1:]
    beta, sigma = se.beta, se.stderr
    note = ''
    if beta < 1 - 2 * sigma:
        verdict = CONSERVATIVE
    elif beta > 1 + 2 * sigma:
        verdict = DISSIPATIVE
    elif beta <= 1 + sigma:
        verdict = CONSERVATIVE
        note = 'boundary: beta is compatible with 1 and sum 1/n diverges'
    else:
        verdict = INCONCLUSIVE
        note = 'beta within two standard errors above 1'
    return ErgodicityVerdict(verdict=verdict, beta=beta, stderr=sigma, partial_sums=partial,
                             note=note)
