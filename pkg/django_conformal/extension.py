"""
Group extensions T(x, g) = (theta x, g psi(x)) of a shift by a deck group.
"""
import logging
import math
from dataclasses import dataclass

from django_conformal.exceptions import InputError, UnsupportedError
from django_conformal.shift import check_dagger, is_admissible, words_of_length
from django_conformal.utils import setting

logger = logging.getLogger(__name__)


class ExtensionSpec(object):

    def __init__(self, shift, potential, group, psi):
        if potential.shift is not shift:
            raise InputError("potential is defined over a different shift")
        missing = [a for a in shift.symbols if a not in psi]
        if missing:
            raise InputError("psi: no group element for symbol %r" % missing[0])
        extra = [a for a in psi if a not in shift.symbols]
        if extra:
            raise InputError("psi: unknown symbol %r" % extra[0])
        self.shift = shift
        self.potential = potential
        self.group = group
        self.psi = dict((a, group.check(psi[a])) for a in shift.symbols)
        self.psi_inv = dict((a, group.inverse(g)) for a, g in self.psi.items())
        self.max_step = max(group.word_length(g) for g in self.psi.values())

    @property
    def state_length(self):
        return self.potential.state_length

    def with_potential(self, potential):
        return ExtensionSpec(self.shift, potential, self.group, self.psi)

    def point(self, word, g=None):
        """Canonical (word, g) point: word checked and g validated."""
        word = tuple(word)
        if not word or not is_admissible(self.shift, word):
            raise InputError("inadmissible point word %r" % ' '.join(word))
        return word, self.group.check(self.group.identity if g is None else g)


def psi_n(e, w):
    g = e.group.identity
    for a in w:
        g = e.group.multiply(g, e.psi[a])
    return g


def step(e, x, g):
    x = tuple(x)
    if len(x) < 2:
        raise InputError("step: representative %r is too short to shift" % ' '.join(x))
    return x[1:], e.group.multiply(g, e.psi[x[0]])


def inverse_branch(e, v, x, g):
    """tau_v(x, g) = (v x, g psi(v)^-1)."""
    return tuple(v) + tuple(x), e.group.multiply(g, e.group.inverse(psi_n(e, v)))


@dataclass
class ReachabilityReport:
    radius: int
    semigroup_generates: bool
    transitive: bool

    def as_dict(self):
        return {'radius': self.radius, 'semigroup_generates': self.semigroup_generates,
                'transitive': self.transitive}


def reachability(e, radius=None):
    """
    Checks up to ``radius`` that every (symbol, g) with |g| <= radius is
    reachable from every (symbol, id). Transitivity itself is not decidable.
    """
    if radius is None:
        radius = setting('REACH_RADIUS', 6)
    group, shift = e.group, e.shift
    limit = radius + 2 * e.max_step
    target = set(group.ball(radius))
    attained = set()
    transitive = True
    for a in shift.symbols:
        seen = set([(a, group.identity)])
        frontier = [(a, group.identity)]
        while frontier:
            nxt = []
            for b, g in frontier:
                h = group.multiply(g, e.psi[b])
                if group.word_length(h) > limit:
                    continue
                for c in shift.successors(b):
                    if (c, h) not in seen:
                        seen.add((c, h))
                        nxt.append((c, h))
            frontier = nxt
        reached = set(g for _, g in seen)
        attained |= reached
        if any((b, g) not in seen for b in shift.symbols for g in target):
            transitive = False
    report = ReachabilityReport(radius, target <= attained, transitive)
    if not (report.semigroup_generates and report.transitive):
        logger.warning("extension is not transitive within radius %d", radius)
    return report


@dataclass
class SymmetryReport:
    is_symmetric_triple: bool
    is_symmetric_extension: bool
    distortion_bound: float
    growth_rate: float

    def as_dict(self):
        return {'is_symmetric_triple': self.is_symmetric_triple,
                'is_symmetric_extension': self.is_symmetric_extension,
                'distortion_bound': self.distortion_bound,
                'growth_rate': self.growth_rate}


def _window_graph(e):
    p, shift = e.potential, e.shift
    nodes = list(words_of_length(shift, p.depth))
    index = dict((u, i) for i, u in enumerate(nodes))
    edges = []
    for u in nodes:
        for b in shift.successors(u[-1]):
            v = (u + (b,))[1:] if p.depth > 1 else (b,)
            edges.append((index[u], index[v]))
    weights = [p.log_value(u) - p.log_value(shift.dagger_word(u)) for u in nodes]
    return nodes, edges, weights


def _walk_maxima(n, edges, weights, steps):
    """best[k][v]: max weight of a walk of k edges ending at v (weights on sources)."""
    best = [[0.0] * n]
    for _ in range(steps):
        prev = best[-1]
        cur = [-math.inf] * n
        for u, v in edges:
            value = prev[u] + weights[u]
            if value > cur[v]:
                cur[v] = value
        best.append(cur)
    return best


def max_cycle_mean(n, edges, weights):
    """Karp's maximum mean cycle value."""
    best = _walk_maxima(n, edges, weights, n)
    result = -math.inf
    for v in range(n):
        if best[n][v] == -math.inf:
            continue
        worst = min((best[n][v] - best[k][v]) / (n - k)
                    for k in range(n) if best[k][v] != -math.inf)
        result = max(result, worst)
    return result


def check_symmetric(e):
    shift = e.shift
    if shift.dagger is None:
        raise UnsupportedError("check_symmetric: shift has no dagger")
    triple = check_dagger(shift) and all(
        e.psi[shift.dagger[a]] == e.psi_inv[a] for a in shift.symbols)
    if not triple:
        return SymmetryReport(False, False, math.inf, math.nan)
    nodes, edges, weights = _window_graph(e)
    growth = max_cycle_mean(len(nodes), edges, weights)
    decay = -max_cycle_mean(len(nodes), edges, [-w for w in weights])
    tol = 1e-12
    if growth > tol or decay < -tol:
        return SymmetryReport(True, False, math.inf, max(growth, -decay))
    best = _walk_maxima(len(nodes), edges, weights, 2 * len(nodes) + e.potential.depth)
    bound = math.exp(max(max(row) for row in best))
    return SymmetryReport(True, True, bound, 0.0)
