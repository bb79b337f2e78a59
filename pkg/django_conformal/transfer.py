"""
Dynamic programming over preimage trees of the extended transfer operator.

A backward pass starts from a point (x, g) of X and repeatedly prepends
admissible symbols: prepending a maps (x, k) to (a x, k psi(a)^-1) with weight
phi(a x). After t steps the states (prefix, k) carry the total weight of the
inverse branches tau_u with |u| = t, keyed by the first symbols of u x and
the group coordinate of tau_u(x, g). Everything in this module, Z^n, L^n f
and the cylinder series of the Patterson construction, reads off these levels.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from django_conformal import signals
from django_conformal.exceptions import InputError, InsufficientDataError, ResourceError, \
    StructuralError
from django_conformal.potential import base_pressure, log_phi_n, phi_n
from django_conformal.shift import is_admissible, metric, words_of_length
from django_conformal.utils import log_sum, neville, setting

logger = logging.getLogger(__name__)

FLOAT, EXACT, PROFILE = 'float', 'exact', 'profile'


class Transitions(object):
    """Predecessor lists of every state prefix, with weights in each arithmetic."""

    def __init__(self, e):
        self.extension = e
        p = e.potential
        s = e.state_length
        distinct = sorted(set(p.values.values()))
        self.distinct = distinct
        value_index = dict((v, j) for j, v in enumerate(distinct))
        self.table = {}
        for prefix in words_of_length(e.shift, s):
            moves = []
            for a in e.shift.predecessors(prefix[0]):
                word = (a,) + prefix
                value = p.value(word)
                moves.append((((a,) + prefix)[:s], float(value), Fraction(value),
                              value_index[value], e.psi_inv[a]))
            self.table[prefix] = moves


def start_prefix(e, word):
    return e.shift.extend(word, e.state_length)[:e.state_length]


def backward_levels(e, word, g, steps, bound=None, mode=FLOAT, transitions=None):
    """
    Yields ``(t, states, log_scale)`` for t = 0..steps.

    ``bound(t)`` caps the word length of the group coordinate kept at level t.
    Float weights are rescaled at every level, the true weight of a state is
    ``weight * exp(log_scale)``. Profile states carry an extra exponent tuple
    counting how often each distinct potential value was used, with integer
    counts as weights.
    """
    trans = transitions or Transitions(e)
    group = e.group
    prefix = start_prefix(e, word)
    width = len(trans.distinct)
    if mode == PROFILE:
        states = {(prefix, g, (0,) * width): 1}
    elif mode == EXACT:
        states = {(prefix, g): Fraction(1)}
    else:
        states = {(prefix, g): 1.0}
    log_scale = 0.0
    yield 0, states, log_scale
    for t in range(1, steps + 1):
        limit = bound(t) if bound is not None else None
        new = {}
        if mode == PROFILE:
            for (q, k, expo), count in states.items():
                for nq, _, _, j, inv in trans.table[q]:
                    nk = group.compose(k, inv)
                    if limit is not None and group.size(nk) > limit:
                        continue
                    key = (nq, nk, expo[:j] + (expo[j] + 1,) + expo[j + 1:])
                    new[key] = new.get(key, 0) + count
        else:
            pick = 2 if mode == EXACT else 1
            for (q, k), weight in states.items():
                for move in trans.table[q]:
                    nk = group.compose(k, move[4])
                    if limit is not None and group.size(nk) > limit:
                        continue
                    key = (move[0], nk)
                    new[key] = new.get(key, 0) + weight * move[pick]
        if mode == FLOAT and new:
            top = max(new.values())
            if top > 0:
                log_scale += math.log(top)
                new = dict((key, w / top) for key, w in new.items())
        states = new
        logger.debug("backward level %d: %d states", t, len(states))
        yield t, states, log_scale


def estimate_states(e, radius):
    group = e.group
    if group.kind == 'table':
        size = group.order
    else:
        size = group.ball_size(radius)
    return len(list(words_of_length(e.shift, e.state_length))) * size


def ensure_capacity(e, N, extra=0, profile_width=1):
    cap = setting('MAX_STATES', 5000000)
    radius = int(math.ceil(N / 2.0)) * e.max_step + extra
    estimate = estimate_states(e, radius) * profile_width
    if estimate > cap:
        n = N
        while n > 1 and estimate_states(e, int(math.ceil(n / 2.0)) * e.max_step + extra) \
                * profile_width > cap:
            n -= 1
        raise ResourceError("DP would hold about %d states, above the cap %d" % (estimate, cap),
                            estimate=estimate, suggestion={'N': n})


def return_bound(e, N, slack=0):
    if e.group.kind == 'table':
        return None
    return lambda t: (N - t) * e.max_step + slack


@dataclass
class PartitionTable:
    xi_prefix: tuple
    N: int
    log_values: np.ndarray
    exact_values: list = None
    period: int = 1
    states_visited: list = field(default_factory=list)
    rho_base: float = None

    def nonzero_indices(self):
        return [n for n in range(1, self.N + 1) if self.log_values[n] > -math.inf]

    def values(self):
        return np.exp(self.log_values)

    def z(self, n):
        if self.exact_values is not None:
            return self.exact_values[n]
        return math.exp(self.log_values[n])

    def as_dict(self):
        return {
            'xi': list(self.xi_prefix), 'N': self.N, 'period': self.period,
            'log_values': self.log_values[1:], 'states_visited': self.states_visited[1:],
            'exact_values': self.exact_values[1:] if self.exact_values is not None else None,
            'rho_base': self.rho_base,
        }


def detect_period(log_values):
    nonzero = [n for n in range(1, len(log_values)) if log_values[n] > -math.inf]
    if not nonzero:
        return 1
    return reduce(math.gcd, nonzero)


def _base_rho(e):
    try:
        return base_pressure(e.potential.as_float(), e.shift).rho_base
    except StructuralError:
        return None


def _float_returns(e, xi, N, slack=0):
    log_values = np.full(N + 1, -math.inf)
    log_values[0] = 0.0
    visited = [1]
    identity = e.group.identity
    for t, states, log_scale in backward_levels(e, xi, identity, N, return_bound(e, N, slack)):
        if t == 0:
            continue
        visited.append(len(states))
        back = math.fsum(w for (q, k), w in states.items() if k == identity)
        if back > 0:
            log_values[t] = math.log(back) + log_scale
    return log_values, visited


def zcount(e, xi, N, exact=False, slack=0):
    """
    Partition functions Z^n(xi) for n = 1..N: the weight of the words u of
    length n with u xi admissible and psi_n(u) = id.
    """
    xi = tuple(xi)
    if not xi or not is_admissible(e.shift, xi):
        raise InputError("zcount: inadmissible base point %r" % ' '.join(xi))
    if len(xi) < e.potential.depth:
        raise InputError("zcount: base point must have at least %d symbols" % e.potential.depth)
    if N < 1:
        raise InputError("zcount: N must be positive")
    ensure_capacity(e, N, slack)
    log_values, visited = _float_returns(e, xi, N, slack)
    exact_values = None
    if exact:
        limit = setting('EXACT_MAX_N', 30)
        if N > limit:
            raise ResourceError("exact rationals are limited to n <= %d" % limit,
                                estimate=N, suggestion={'N': limit})
        exact_values = exact_returns(e, xi, N)
        for n in range(1, N + 1):
            value = exact_values[n]
            approx = math.exp(log_values[n]) if log_values[n] > -math.inf else 0.0
            if value and abs(float(value) - approx) > 1e-10 * float(value):
                logger.warning("exact and float Z^%d disagree: %s vs %r", n, value, approx)
    table = PartitionTable(xi_prefix=xi, N=N, log_values=log_values, exact_values=exact_values,
                           period=detect_period(log_values), states_visited=visited,
                           rho_base=_base_rho(e))
    signals.partition_table_computed.send(sender=PartitionTable, table=table)
    return table


def displacement_ratios(e, xi, g, N):
    """
    W_n(g) / W_n(id) for n = 1..N, where W_n(g) is the weight of the words
    u of length n with u xi admissible and psi_n(u) = g. For a random walk
    this is P(X_n = g) / P(X_n = id). NaN where W_n(id) vanishes.
    """
    xi = tuple(xi)
    if not xi or not is_admissible(e.shift, xi):
        raise InputError("displacement_ratios: inadmissible base point %r" % ' '.join(xi))
    if N < 1:
        raise InputError("displacement_ratios: N must be positive")
    identity = e.group.identity
    target = e.group.inverse(g)
    extra = e.group.word_length(g) if e.group.kind != 'table' else 0
    # levels past the middle only keep elements that can still reach g
    ensure_capacity(e, N + extra)
    ratios = np.full(N + 1, math.nan)
    ratios[0] = 1.0 if g == identity else 0.0
    for t, states, _ in backward_levels(e, xi, identity, N, return_bound(e, N, extra)):
        if t == 0:
            continue
        base = math.fsum(w for (q, k), w in states.items() if k == identity)
        if base > 0:
            ratios[t] = math.fsum(w for (q, k), w in states.items() if k == target) / base
    return ratios


def limit_ratio(ratios, period=2, points=3):
    """
    Extrapolates the last ``points`` ratios on the period lattice in 1/n.
    Returns (limit, last ratio).
    """
    N = len(ratios) - 1
    ns = [n for n in range(N, 0, -period) if math.isfinite(ratios[n])][:points]
    if not ns:
        raise InsufficientDataError("limit_ratio: no finite ratio on the lattice")
    ns.reverse()
    limit = neville([1.0 / n for n in ns], [ratios[n] for n in ns])
    return limit, ratios[ns[-1]]


class ReturnProfile(object):
    """
    Integer path counts of returning words, split by how often each distinct
    potential value occurs. Gives exact Z^n and Z^n for any power phi^h.
    """

    def __init__(self, e, xi, N):
        self.extension = e
        self.xi = tuple(xi)
        self.N = N
        trans = Transitions(e)
        self.values = trans.distinct
        self.log_values = [math.log(float(v)) for v in self.values]
        ensure_capacity(e, N, profile_width=max(1, N) ** (len(self.values) - 1))
        identity = e.group.identity
        self.counts = [Counter({(0,) * len(self.values): 1})]
        self.states_visited = [1]
        for t, states, _ in backward_levels(e, xi, identity, N, return_bound(e, N),
                                            mode=PROFILE, transitions=trans):
            if t == 0:
                continue
            back = Counter()
            for (q, k, expo), count in states.items():
                if k == identity:
                    back[expo] += count
            self.counts.append(back)
            self.states_visited.append(len(states))

    def log_z(self, n, h=1.0):
        return log_sum([math.log(c) + h * sum(e * lv for e, lv in zip(expo, self.log_values))
                        for expo, c in self.counts[n].items()])

    def exact(self, n):
        values = [Fraction(v) for v in self.values]
        total = Fraction(0)
        for expo, count in self.counts[n].items():
            term = Fraction(count)
            for v, k in zip(values, expo):
                term *= v ** k
            total += term
        return total

    def table(self, h=1.0):
        log_values = np.array([self.log_z(n, h) for n in range(self.N + 1)])
        rho_base = None
        try:
            rho_base = base_pressure(self.extension.potential.power(h), self.extension.shift).rho_base
        except StructuralError:
            pass
        return PartitionTable(xi_prefix=self.xi, N=self.N, log_values=log_values,
                              period=detect_period(log_values),
                              states_visited=list(self.states_visited), rho_base=rho_base)


def profile_supported(e):
    return len(set(e.potential.values.values())) <= setting('PROFILE_MAX_VALUES', 3)


def exact_returns(e, xi, N):
    """Exact rational Z^0..Z^N."""
    if profile_supported(e):
        profile = ReturnProfile(e, xi, N)
        return [profile.exact(n) for n in range(N + 1)]
    identity = e.group.identity
    result = [Fraction(1)]
    for t, states, _ in backward_levels(e, xi, identity, N, return_bound(e, N), mode=EXACT):
        if t:
            result.append(sum((w for (q, k), w in states.items() if k == identity), Fraction(0)))
    return result


class CylinderFunction(dict):
    """
    A finite linear combination of indicators of X-cylinders [w, g], keyed
    by (word, g). The empty word stands for the whole fibre X_g.
    """

    def word_depth(self):
        return max([len(w) for w, _ in self] or [0])

    def group_radius(self, group):
        return max([group.word_length(g) for _, g in self] or [0])


def refine(e, f, depth=None):
    """Values of ``f`` on the cylinders of a common word length (at least 1)."""
    depth = max(depth or 0, f.word_depth(), 1)
    atoms = {}
    words = list(words_of_length(e.shift, depth))
    for (w, g), c in f.items():
        for u in words:
            if u[:len(w)] == tuple(w):
                atoms[(u, g)] = atoms.get((u, g), 0.0) + c
    return atoms


def _cylinder_terms(e, f, n, at):
    """
    Splits L^n f(at) into (level, word, g, coeff) lookups and direct terms
    for the cylinders deeper than n.
    """
    word, g0 = at
    direct = 0.0
    lookups = []
    for (w, g), c in f.items():
        w = tuple(w)
        if len(w) <= n:
            lookups.append((n - len(w), w, g, c))
            continue
        x = e.shift.extend(word, len(w) - n + e.potential.depth)
        if x[:len(w) - n] != w[n:] or not is_admissible(e.shift, w[:n] + x[:1]):
            continue
        k = e.group.multiply(g0, e.group.inverse(_psi(e, w[:n])))
        if k == g:
            direct += c * phi_n(e.potential.as_float(), e.shift, w[:n] + x, n)
    return lookups, direct


def _psi(e, w):
    g = e.group.identity
    for a in w:
        g = e.group.multiply(g, e.psi[a])
    return g


def extension_apply(e, f, n, at):
    """(L^n f)(at) for a cylinder function ``f``."""
    if n < 1:
        raise InputError("extension_apply: n must be positive")
    at = e.point(*at)
    f = CylinderFunction(f)
    if not f:
        return 0.0
    lookups, direct = _cylinder_terms(e, f, n, at)
    radius = f.group_radius(e.group) + f.word_depth() * e.max_step
    bound = None
    if e.group.kind != 'table':
        bound = lambda t: radius + (n - t) * e.max_step + e.group.word_length(at[1])
    wanted = {}
    for level, w, g, c in lookups:
        wanted.setdefault(level, []).append((w, g, c))
    p = e.potential.as_float()
    total = [direct]
    for t, states, log_scale in backward_levels(e, at[0], at[1], n, bound):
        for w, g, c in wanted.get(t, ()):
            psi_w_inv = e.group.inverse(_psi(e, w))
            acc = []
            for (q, k), weight in states.items():
                if w and not e.shift.allows(w[-1], q[0]):
                    continue
                if e.group.compose(k, psi_w_inv) != g:
                    continue
                acc.append(weight * math.exp(log_phi_n(p, e.shift, w + q, len(w))))
            total.append(c * math.fsum(acc) * math.exp(log_scale))
    return math.fsum(total)


@dataclass
class SpectralEstimate:
    rho_hat: float
    method: str
    hadamard_root: float
    correction_exponent_beta: float
    stderr: float
    rho_stderr: float
    period: int
    disagreement: float
    points: int

    @property
    def beta(self):
        return self.correction_exponent_beta

    def as_dict(self):
        return dict(self.__dict__)


def _ratio_fit(k, y, terms):
    columns = [np.ones_like(k), -np.log((k + 1) / k), 1 / (k + 1) - 1 / k,
               1 / (k + 1) ** 2 - 1 / k ** 2]
    x = np.column_stack(columns[:terms])
    coef, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef
    dof = len(y) - terms
    if dof > 0:
        sigma2 = float(resid @ resid) / dof
        cov = sigma2 * np.linalg.pinv(x.T @ x)
        se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    else:
        se = np.zeros(terms)
    return coef, se


def spectral_radius(t):
    """
    rho and the polynomial correction exponent beta from
    Z^{pk} ~ C rho^{pk} k^-beta, fitted on successive log-ratios within the
    period class over the last half of the table.
    """
    p = t.period
    run = []
    for n in range(p, t.N + 1, p):
        if t.log_values[n] > -math.inf:
            run.append(n)
        else:
            run = []
    if len(t.nonzero_indices()) < 8 or len(run) < 8:
        raise InsufficientDataError("spectral_radius needs at least 8 nonzero entries")
    ks = np.array([n // p for n in run], dtype=float)
    logs = np.array([t.log_values[n] for n in run])
    ratios = logs[1:] - logs[:-1]
    kk = ks[:-1]
    half = max(len(kk) // 2, 4)
    kk, ratios = kk[-half:], ratios[-half:]
    terms = 4 if len(kk) >= 8 else 3
    coef, se = _ratio_fit(kk, ratios, terms)
    reduced, _ = _ratio_fit(kk, ratios, terms - 1)
    rho = math.exp(coef[0] / p)
    beta = float(coef[1])
    model_beta = abs(coef[1] - reduced[1])
    model_rho = abs(rho - math.exp(reduced[0] / p))
    beta_err = max(math.hypot(se[1], model_beta), setting('BETA_FLOOR', 0.02))
    rho_err = math.hypot(rho * se[0] / p, model_rho)
    n_max = run[-1]
    hadamard = math.exp(t.log_values[n_max] / n_max)
    if t.rho_base is not None and rho > t.rho_base:
        rho = t.rho_base
    disagreement = abs(hadamard - rho) / rho
    if disagreement > 0.1:
        logger.warning("root and ratio estimators disagree by %.1f%%", 100 * disagreement)
    return SpectralEstimate(rho_hat=rho, method='ratio_extrapolated', hadamard_root=hadamard,
                            correction_exponent_beta=beta, stderr=beta_err, rho_stderr=rho_err,
                            period=p, disagreement=disagreement, points=len(kk))


def connecting_constant(t):
    """Empirical c with Z^{m+n} >= c Z^m Z^n over the table."""
    nonzero = t.nonzero_indices()
    best = math.inf
    for m in nonzero:
        for n in nonzero:
            if m + n <= t.N and t.log_values[m + n] > -math.inf:
                best = min(best, t.log_values[m + n] - t.log_values[m] - t.log_values[n])
    return math.exp(best) if best < math.inf else 0.0


def _common_cylinder(e, x, y):
    if x[0][0] != y[0][0] or x[1] != y[1]:
        raise InputError("doeblin_fortet_check: points must share their first symbol and group")


def lipschitz_coefficients(e, f):
    """
    D(f) and LD(f) on every 1-cylinder [a, g] touched by ``f``. LD is None
    where f changes between zero and nonzero inside the cylinder.
    """
    atoms = refine(e, f)
    r = e.potential.metric_r
    by_cylinder = {}
    for (u, g), value in atoms.items():
        by_cylinder.setdefault((u[0], g), []).append((u, value))
    d_coef, ld_coef = {}, {}
    for key, items in by_cylinder.items():
        words = set(u for u, _ in items)
        values = dict(items)
        depth = len(items[0][0])
        for u in words_of_length(e.shift, depth):
            if u[0] == key[0] and u not in values:
                values[u] = 0.0
        pairs = [(u, v) for u in values for v in values if u < v]
        d = max([abs(values[u] - values[v]) / metric(u, v, r) for u, v in pairs] or [0.0])
        d_coef[key] = d
        if all(v == 0 for v in values.values()):
            ld_coef[key] = 0.0
        elif any(v == 0 for v in values.values()):
            ld_coef[key] = None
        else:
            ld_coef[key] = max([abs(values[u] / values[v] - 1) / metric(u, v, r)
                                for u in values for v in values if u != v] or [0.0])
    return d_coef, ld_coef


def doeblin_fortet_check(e, f, n, pairs, c_phi=None):
    """
    Checks |L^n f(x) - L^n f(y)| <= d(x,y) (C_phi L^n|f|(x) + r^n L^n D(f)(y))
    and the log-Hoelder variant with |f| LD(f) in place of D(f).
    """
    from django_conformal.potential import distortion_constant
    if c_phi is None:
        c_phi = distortion_constant(e.potential, e.shift)
    f = CylinderFunction(f)
    r = e.potential.metric_r
    atoms = refine(e, f)
    abs_f = CylinderFunction((key, abs(v)) for key, v in atoms.items() if v)
    d_coef, ld_coef = lipschitz_coefficients(e, f)
    d_f = CylinderFunction((((a,), g), v) for (a, g), v in d_coef.items() if v)
    log_defined = all(v is not None for v in ld_coef.values())
    ld_f = None
    if log_defined:
        ld_f = CylinderFunction((key, v * ld_coef[(key[0][0], key[1])])
                                for key, v in abs_f.items() if ld_coef[(key[0][0], key[1])])
    excess, excess_log, rows = -math.inf, (-math.inf if log_defined else None), []
    for x, y in pairs:
        x, y = e.point(*x), e.point(*y)
        _common_cylinder(e, x, y)
        length = max(len(x[0]), len(y[0]), f.word_depth()) + n + e.potential.depth
        xe, ye = e.shift.extend(x[0], length), e.shift.extend(y[0], length)
        if xe == ye:
            continue
        dist = metric(xe, ye, r)
        lhs = abs(extension_apply(e, f, n, x) - extension_apply(e, f, n, y))
        first = c_phi * (extension_apply(e, abs_f, n, x) if abs_f else 0.0)
        rhs = dist * (first + r ** n * (extension_apply(e, d_f, n, y) if d_f else 0.0))
        row = {'x': x, 'y': y, 'lhs': lhs, 'rhs': rhs}
        excess = max(excess, lhs - rhs)
        if log_defined:
            rhs_log = dist * (first + r ** n * (extension_apply(e, ld_f, n, y) if ld_f else 0.0))
            row['rhs_log'] = rhs_log
            excess_log = max(excess_log, lhs - rhs_log)
        rows.append(row)
    return {'max_excess': excess if rows else 0.0,
            'max_excess_log': (excess_log if rows else 0.0) if log_defined else None,
            'c_phi': c_phi, 'pairs': rows}
