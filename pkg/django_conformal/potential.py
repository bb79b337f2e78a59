"""
Locally constant potentials on a shift: Birkhoff products, distortion
constants and Perron-Frobenius data of the base.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from django_conformal.exceptions import InputError, StructuralError
from django_conformal.shift import is_admissible, mixing_report, words_of_length
from django_conformal.utils import setting

logger = logging.getLogger(__name__)


class PotentialSpec(object):
    """
    A strictly positive potential of finite depth m: phi(x) = values[x_1..x_m].
    Values are Fractions in exact mode and floats otherwise.
    """

    def __init__(self, shift, depth, values, metric_r=None, exact=False):
        if depth < 1:
            raise InputError("potential.depth must be positive")
        self.shift = shift
        self.depth = int(depth)
        self.metric_r = metric_r if metric_r is not None else setting('METRIC_R', 0.5)
        if not 0 < self.metric_r < 1:
            raise InputError("potential.metric_r must lie in (0, 1)")
        self.exact = exact
        expected = set(words_of_length(shift, self.depth))
        cleaned = {}
        for word, value in values.items():
            word = tuple(word)
            if word not in expected:
                raise InputError("potential.values: %r is not an admissible word of length %d"
                                 % (' '.join(word), self.depth))
            value = Fraction(value) if exact else float(value)
            if not value > 0:
                raise InputError("potential.values: %r must be strictly positive" % ' '.join(word))
            cleaned[word] = value
        missing = expected - set(cleaned)
        if missing:
            raise InputError("potential.values: missing word %r"
                             % ' '.join(sorted(missing, key=shift.sort_key)[0]))
        self.values = cleaned
        self.log_values = dict((w, math.log(v)) for w, v in cleaned.items())

    @property
    def state_length(self):
        return max(self.depth - 1, 1)

    def value(self, word):
        return self.values[tuple(word[:self.depth])]

    def log_value(self, word):
        return self.log_values[tuple(word[:self.depth])]

    def distinct_values(self):
        return sorted(set(float(v) for v in self.values.values()))

    def power(self, h):
        if self.exact and float(h).is_integer():
            values = dict((w, v ** int(h)) for w, v in self.values.items())
            return PotentialSpec(self.shift, self.depth, values, self.metric_r, exact=True)
        values = dict((w, math.exp(h * lv)) for w, lv in self.log_values.items())
        return PotentialSpec(self.shift, self.depth, values, self.metric_r)

    def scaled(self, c):
        exact = self.exact and isinstance(c, (int, Fraction))
        values = dict((w, v * c if exact else float(v) * float(c)) for w, v in self.values.items())
        return PotentialSpec(self.shift, self.depth, values, self.metric_r, exact=exact)

    def as_float(self):
        if not self.exact:
            return self
        return PotentialSpec(self.shift, self.depth,
                             dict((w, float(v)) for w, v in self.values.items()), self.metric_r)


def phi_n(p, spec, w, n=None):
    """
    Phi_n on the cylinder [w]: the product of phi along the first n shifts.
    By default n counts every position of w whose depth-m window lies in w.
    Short words are continued by their least admissible extension.
    """
    w = tuple(w)
    if not is_admissible(spec, w):
        raise InputError("phi_n: inadmissible word %r" % ' '.join(w))
    if n is None:
        n = max(len(w) - p.depth + 1, 0)
    if n == 0:
        return Fraction(1) if p.exact else 1.0
    x = spec.extend(w, n + p.depth - 1)
    if p.exact:
        result = Fraction(1)
        for k in range(n):
            result *= p.value(x[k:])
        return result
    return math.exp(sum(p.log_value(x[k:]) for k in range(n)))


def log_phi_n(p, spec, w, n=None):
    w = tuple(w)
    if n is None:
        n = max(len(w) - p.depth + 1, 0)
    if n == 0:
        return 0.0
    x = spec.extend(w, n + p.depth - 1)
    return math.fsum(p.log_value(x[k:]) for k in range(n))


def variations(p, spec):
    """V_k(log phi) for k = 1..depth-1; zero from depth on."""
    words = list(words_of_length(spec, p.depth))
    result = []
    for k in range(1, p.depth):
        groups = {}
        for word in words:
            groups.setdefault(word[:k], []).append(p.log_values[word])
        result.append(max(max(vs) - min(vs) for vs in groups.values()))
    return result


def distortion_constant(p, spec):
    """
    C_phi with |Phi_n(x)/Phi_n(y) - 1| <= C_phi d_r(x, y) whenever x and y
    share their first symbol.
    """
    a = variations(p, spec)
    if not a or max(a) == 0:
        return 0.0
    r = p.metric_r
    k_const = max(sum(a[k - 1:]) / r ** k for k in range(1, len(a) + 1))
    return k_const * math.exp(k_const)


@dataclass
class GibbsData:
    shift: object
    potential: object
    states: list
    matrix: np.ndarray
    rho_base: float
    left_eigen: np.ndarray
    right_eigen: np.ndarray
    stationary: np.ndarray
    transition: np.ndarray
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = dict((u, i) for i, u in enumerate(self.states))

    @property
    def state_length(self):
        return len(self.states[0])

    def gibbs_mass(self, w):
        return gibbs_mass(self, w)

    def conformal_mass(self, w):
        """Mass of [w] under the base (rho/phi)-conformal probability."""
        w = tuple(w)
        if not is_admissible(self.shift, w):
            return 0.0
        s = self.state_length
        if len(w) < s:
            return float(sum(self.right_eigen[i] for u, i in self.index.items()
                             if u[:len(w)] == w))
        k = len(w) - s
        return float(self.right_eigen[self.index[w[k:]]]
                     * phi_n(self.potential.as_float(), self.shift, w, k) / self.rho_base ** k)

    def lyapunov(self):
        """Integral of log phi against the Gibbs measure."""
        p = self.potential
        total = []
        for u, i in self.index.items():
            for v, j in self.index.items():
                if self.transition[i, j] > 0:
                    total.append(self.stationary[i] * self.transition[i, j]
                                 * p.log_value(u + v[-1:]))
        return math.fsum(total)

    def entropy(self):
        logs = np.zeros_like(self.transition)
        mask = self.transition > 0
        logs[mask] = np.log(self.transition[mask])
        return float(-np.sum(self.stationary[:, None] * self.transition * logs))


def state_space(p, spec):
    return list(words_of_length(spec, p.state_length))


def weighted_matrix(p, spec):
    """
    M[u, v] = phi(u v_last) for overlapping admissible states u -> v, so that
    the transfer operator acts on state functions as its transpose.
    """
    states = state_space(p, spec)
    index = dict((u, i) for i, u in enumerate(states))
    matrix = np.zeros((len(states), len(states)))
    for u in states:
        for b in spec.successors(u[-1]):
            v = u[1:] + (b,)
            matrix[index[u], index[v]] = float(p.value(u + (b,)))
    return states, matrix


def _perron(matrix, tol, max_iter=200000):
    x = np.ones(matrix.shape[0])
    rho = 0.0
    for _ in range(max_iter):
        y = matrix @ x
        rho = y.sum() / x.sum()
        y /= y.sum()
        if np.max(np.abs(y - x)) <= tol * np.max(np.abs(y)):
            x = y
            break
        x = y
    rho = float((matrix @ x).sum() / x.sum())
    return rho, x / x.sum()


def base_pressure(p, spec):
    """Perron root and eigendata of the weighted transition matrix."""
    states, matrix = weighted_matrix(p, spec)
    horizon = (len(spec) - 1) ** 2 + 1
    if not mixing_report(spec, max(horizon, 1)).mixing:
        raise StructuralError("base_pressure: shift is not mixing, Perron root may not be simple")
    tol = setting('POWER_TOL', 1e-12) * 1e-1
    rho, right = _perron(matrix, tol)
    _, left = _perron(matrix.T, tol)
    stationary = left * right
    stationary /= stationary.sum()
    transition = matrix * right[None, :] / (rho * right[:, None])
    logger.debug("base pressure: rho=%.15g on %d states", rho, len(states))
    return GibbsData(shift=spec, potential=p, states=states, matrix=matrix, rho_base=rho,
                     left_eigen=left, right_eigen=right, stationary=stationary,
                     transition=transition)


def normalize(p, spec, gibbs=None):
    """
    phi' = phi h / (rho h o theta) of depth max(m, 2), with L_{phi'} 1 = 1.
    Collapses back to depth m when h is constant.
    """
    g = gibbs or base_pressure(p, spec)
    h = g.left_eigen
    s = g.state_length
    depth = s + 1
    values = {}
    for word in words_of_length(spec, depth):
        values[word] = (float(p.value(word)) * h[g.index[word[:s]]]
                        / (g.rho_base * h[g.index[word[1:s + 1]]]))
    if depth > p.depth:
        collapsed = {}
        for word, value in values.items():
            key = word[:p.depth]
            if key in collapsed and abs(collapsed[key] - value) > 1e-13 * value:
                break
            collapsed[key] = value
        else:
            return PotentialSpec(spec, p.depth, collapsed, p.metric_r)
    return PotentialSpec(spec, depth, values, p.metric_r)


def gibbs_mass(g, w):
    """mu([w]) for the stationary Markov measure of ``g``."""
    w = tuple(w)
    if not w or not is_admissible(g.shift, w):
        return 0.0
    s = g.state_length
    if len(w) < s:
        return float(sum(g.stationary[i] for u, i in g.index.items() if u[:len(w)] == w))
    mass = g.stationary[g.index[w[:s]]]
    for k in range(len(w) - s):
        mass *= g.transition[g.index[w[k:k + s]], g.index[w[k + 1:k + s + 1]]]
    return float(mass)


def gibbs_constant(g):
    """C with mu([w]) rho^n / Phi_n(w) ranging within a factor C over all words."""
    values = [float(v) for v in g.potential.values.values()]
    eig = (g.left_eigen.max() * g.right_eigen.max()) / (g.left_eigen.min() * g.right_eigen.min())
    return float(eig * (max(values) / min(values)) ** g.state_length)
