"""
Closed forms for nearest-neighbour random walks on Z^d and on free groups.

Values are exact sympy expressions: rational transition probabilities and
square roots of them. ``oracle_for`` wraps them for an extension built from
such a walk so that engine output can be compared directly.
"""
import logging
import math
from fractions import Fraction

import sympy
from scipy.optimize import brentq

from django_conformal.exceptions import InputError, NeedsLongerPathError
from django_conformal.groups import FreeGroup, LatticeGroup

logger = logging.getLogger(__name__)

STABLE_STEPS = 10


def _rational(value):
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, float):
        return sympy.Rational(repr(value))
    return sympy.Rational(value)


def _signed(p, d):
    """Probabilities keyed by signed generator index from a dict or a list."""
    if isinstance(p, dict):
        values = dict((int(k), _rational(v)) for k, v in p.items())
    else:
        p = list(p)
        if len(p) != 2 * d:
            raise InputError("p: expected %d probabilities" % (2 * d))
        values = dict(zip(list(range(1, d + 1)) + list(range(-1, -d - 1, -1)),
                          [_rational(v) for v in p]))
    expected = set(range(1, d + 1)) | set(range(-d, 0))
    if set(values) != expected:
        raise InputError("p: keys must be the signed indices +-1..+-%d" % d)
    if any(v <= 0 for v in values.values()):
        raise InputError("p: probabilities must be positive")
    if sum(values.values()) != 1:
        raise InputError("p: probabilities must sum to 1, got %s" % sum(values.values()))
    return values


class PolyaSpec(object):

    def __init__(self, d, p):
        if d < 1:
            raise InputError("d must be positive")
        self.d = d
        self.p = _signed(p, d)
        self.lambdas = dict((i, sympy.sqrt(self.p[i] / self.p[-i])) for i in range(1, d + 1))

    def symmetric(self):
        return all(self.p[i] == self.p[-i] for i in range(1, self.d + 1))


class FreeWalkSpec(object):

    def __init__(self, d, p):
        if d < 1:
            raise InputError("d must be positive")
        self.d = d
        self.p = _signed(p, d)
        qs = [sympy.sqrt(self.p[i] * self.p[-i]) for i in range(1, d + 1)]
        if any(abs(float(q - qs[0])) > 1e-12 for q in qs):
            raise InputError("p: sqrt(p_i p_-i) must not depend on i")
        self.q = qs[0]
        self.lambdas = dict((i, sympy.sqrt(self.p[i] / self.p[-i])) for i in self.p)

    @property
    def rho(self):
        return 2 * self.q * sympy.sqrt(2 * self.d - 1)

    def mu(self, word):
        return sympy.Mul(*[self.p[i] for i in word])

    def c(self, k):
        return 1 + sympy.Rational(k * (self.d - 1), self.d)


def polya_rho(ps):
    return 2 * sympy.Add(*[sympy.sqrt(ps.p[i] * ps.p[-i]) for i in range(1, ps.d + 1)])


def _vector(ps, k):
    k = tuple(k) if isinstance(k, (list, tuple)) else (k,)
    if len(k) != ps.d:
        raise InputError("expected a vector of %d integers" % ps.d)
    return k


def polya_nu_group(ps, k):
    """nu(X_k) = prod lambda_i^-k_i."""
    k = _vector(ps, k)
    return sympy.Mul(*[ps.lambdas[i + 1] ** -k[i] for i in range(ps.d)])


def polya_psi(ps, w):
    z = [0] * ps.d
    for i in w:
        z[abs(i) - 1] += 1 if i > 0 else -1
    return tuple(z)


def polya_cylinder(ps, w, z):
    """nu([w, z]) = 2^-n nu(X_z) prod_k sqrt(p_ik p_-ik) / sum_i sqrt(p_i p_-i)."""
    w = tuple(w)
    if any(i == 0 or abs(i) > ps.d for i in w):
        raise InputError("w: letters must be signed indices in +-1..+-%d" % ps.d)
    total = sympy.Add(*[sympy.sqrt(ps.p[i] * ps.p[-i]) for i in range(1, ps.d + 1)])
    factors = [sympy.sqrt(ps.p[i] * ps.p[-i]) / total for i in w]
    return sympy.Rational(1, 2 ** len(w)) * polya_nu_group(ps, z) * sympy.Mul(*factors)


def polya_harmonic(ps, k):
    """h(x, k) = nu_k(X_id) = prod lambda_i^k_i, with L h = rho h."""
    return 1 / polya_nu_group(ps, k)


def reduce_word(w):
    return tuple(w[i] for i in _survivors(w))


def _survivors(w):
    stack = []
    for position, letter in enumerate(w):
        if stack and w[stack[-1]] == -letter:
            stack.pop()
        else:
            stack.append(position)
    return stack


def active_part(w):
    """The letters of w that survive free reduction of psi_n(w)."""
    w = tuple(w)
    return tuple(w[i] for i in _survivors(w))


def inactive_part(w):
    w = tuple(w)
    keep = set(_survivors(w))
    return tuple(letter for i, letter in enumerate(w) if i not in keep)


def inverse_word(v):
    return tuple(-i for i in reversed(tuple(v)))


def _check_reduced(g):
    g = tuple(g)
    if any(a == -b for a, b in zip(g, g[1:])):
        raise InputError("g: %r is not reduced" % (g,))
    return g


def fd_nu_group(fs, g):
    """nu(X_g) = C_k (2/rho)^k prod p_-i over the reduced word of g."""
    g = _check_reduced(g)
    k = len(g)
    return fs.c(k) * (2 / fs.rho) ** k * sympy.Mul(*[fs.p[-i] for i in g])


def fd_cylinder(fs, w, g):
    w = tuple(w)
    active = active_part(_check_reduced(g) + w)
    base = fs.rho ** -len(w) * fs.mu(w)
    if not active:
        return base
    k = len(active)
    return base * fs.c(k) * (2 / fs.rho) ** k * fs.mu(inverse_word(active))


def _length_gap(g1, g2, prefix):
    g1_inv = inverse_word(g1)
    return len(reduce_word(g1_inv + tuple(g2) + prefix)) - len(reduce_word(tuple(g2) + prefix))


class FreeKernel(object):

    def __init__(self, value, k, fluctuation):
        self.value = value
        self.k = k
        self.fluctuation = fluctuation

    def __float__(self):
        return float(self.value)


def fd_kernel(fs, g1, g2, x):
    """
    K(g1, (x, g2)) = (2d - 1)^(-k/2) sqrt(mu[v_g1] / mu[kappa v_g1]) with k the
    eventual value of |g1^-1 g2 psi_n(x)| - |g2 psi_n(x)|.
    """
    g1, g2, x = _check_reduced(g1), _check_reduced(g2), tuple(x)
    if len(x) < STABLE_STEPS:
        raise NeedsLongerPathError("fd_kernel: x must have at least %d letters" % STABLE_STEPS)
    gaps = [_length_gap(g1, g2, x[:n]) for n in range(len(x) - STABLE_STEPS + 1, len(x) + 1)]
    if len(set(gaps)) != 1:
        raise NeedsLongerPathError("fd_kernel: length gap has not settled along x")
    k = gaps[-1]
    asymmetry = sympy.sqrt(fs.mu(g1) / fs.mu(inverse_word(g1)))
    value = (2 * fs.d - 1) ** sympy.Rational(-k, 2) * asymmetry
    fluctuation = (2 * fs.d - 1) ** len(g1) * asymmetry
    return FreeKernel(value, k, fluctuation)


def fd_llt_ratio(fs, g, n):
    """lim P(X_n = g) / P(X_n = id) for n and |g| even."""
    g = _check_reduced(g)
    if n % 2 or len(g) % 2:
        raise InputError("fd_llt_ratio: n and |g| must be even")
    k = len(g)
    return fs.c(k) * (2 * fs.d - 1) ** sympy.Rational(-k, 2) * sympy.Mul(*[fs.lambdas[i] for i in g])


class PolyaOracle(object):
    """Closed forms for an extension by Z^d with one symbol per step +-e_i."""
    kind = 'polya'

    def __init__(self, spec, letters):
        self.spec = spec
        self.letters = letters

    def word(self, symbols):
        return tuple(self.letters[a] for a in symbols)

    def rho(self):
        return float(polya_rho(self.spec))

    def nu_group(self, g):
        return float(polya_nu_group(self.spec, g))

    def cylinder(self, symbols, g):
        return float(polya_cylinder(self.spec, self.word(symbols), g))

    def kernel(self, g1, symbols=None, g2=None):
        """
        K(delta_(x, g1), .) = nu(X_{g1^-1}) / nu(X_id) = lambda^g1, constant in
        the target. The source is the point whose preimages feed the series,
        so this is the reciprocal of nu(X_g1), e.g. 2 rather than 0.5 at g1 = 1
        for p = (0.8, 0.2).
        """
        return float(polya_harmonic(self.spec, g1))

    def harmonic(self, symbols, g):
        return float(polya_harmonic(self.spec, g))

    def delta(self):
        """The h where the extended pressure 2 sum_i (p_i p_-i)^(h/2) of phi^h is 1."""
        qs = [math.sqrt(float(self.spec.p[i] * self.spec.p[-i]))
              for i in range(1, self.spec.d + 1)]
        return brentq(lambda h: 2 * math.fsum(q ** h for q in qs) - 1, 0.0, 64.0)

    def nu_group_at(self, g, h=1.0):
        """nu(X_g) for the conformal measure of phi^h, in floats."""
        k = _vector(self.spec, g)
        return math.prod(float(self.spec.lambdas[i + 1]) ** (-h * k[i])
                         for i in range(self.spec.d))

    def returns(self, N):
        return polya_returns(self.spec, N)

    def symmetric(self):
        return self.spec.symmetric()


class FreeOracle(object):
    """Closed forms for an extension by F_d with one symbol per generator."""
    kind = 'free'

    def __init__(self, spec, letters):
        self.spec = spec
        self.letters = letters

    def word(self, symbols):
        return tuple(self.letters[a] for a in symbols)

    def rho(self):
        return float(self.spec.rho)

    def nu_group(self, g):
        return float(fd_nu_group(self.spec, g))

    def cylinder(self, symbols, g):
        return float(fd_cylinder(self.spec, self.word(symbols), g))

    def kernel(self, g1, symbols, g2):
        return float(fd_kernel(self.spec, g1, g2, self.word(symbols)))

    def llt_ratio(self, g, n):
        return float(fd_llt_ratio(self.spec, g, n))

    def delta(self):
        """The h where 2 q^h sqrt(2d - 1), the extended pressure of phi^h, is 1."""
        d = self.spec.d
        return -math.log(2 * math.sqrt(2 * d - 1)) / math.log(float(self.spec.q))

    def nu_group_at(self, g, h=1.0):
        """
        nu(X_g) = C_k (2d - 1)^(-k/2) prod (p_-i / q)^h for the conformal
        measure of phi^h, in floats so that long paths stay cheap.
        """
        g = _check_reduced(g)
        d, k = self.spec.d, len(g)
        if not hasattr(self, '_weights'):
            self._weights = dict((i, float(self.spec.p[-i] / self.spec.q)) for i in self.spec.p)
        c = 1 + k * (d - 1) / d
        return c * (2 * d - 1) ** (-k / 2) * math.prod(self._weights[i] ** h for i in g)

    def returns(self, N):
        return free_returns(self.spec, N)

    def symmetric(self):
        return all(self.spec.p[i] == self.spec.p[-i] for i in range(1, self.spec.d + 1))


def _walk_letters(e):
    """Signed generator index per symbol, or None when psi is not a unit step."""
    letters = {}
    for a, g in e.psi.items():
        if isinstance(e.group, LatticeGroup):
            nonzero = [(i, x) for i, x in enumerate(g) if x]
            if len(nonzero) != 1 or abs(nonzero[0][1]) != 1:
                return None
            i, x = nonzero[0]
            letters[a] = (i + 1) * x
        elif len(g) == 1:
            letters[a] = g[0]
        else:
            return None
    if sorted(letters.values()) != sorted(set(letters.values())):
        return None
    expected = set(range(1, e.group.d + 1)) | set(range(-e.group.d, 0))
    if set(letters.values()) != expected:
        return None
    return letters


def oracle_for(e):
    """A closed-form oracle for a random-walk extension, or None."""
    if not isinstance(e.group, (LatticeGroup, FreeGroup)):
        return None
    if not e.shift.adjacency.all() or e.potential.depth != 1:
        return None
    letters = _walk_letters(e)
    if letters is None:
        return None
    p = dict((letters[a], e.potential.value((a,))) for a in e.shift.symbols)
    try:
        if isinstance(e.group, LatticeGroup):
            return PolyaOracle(PolyaSpec(e.group.d, p), letters)
        return FreeOracle(FreeWalkSpec(e.group.d, p), letters)
    except InputError as exc:
        logger.info("no closed form for this extension: %s", exc)
        return None


def _fraction(value):
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def polya_returns(ps, N):
    """Exact P(X_n = 0), n = 0..N, by dynamic programming over the lattice."""
    steps = []
    for i, p in ps.p.items():
        move = [0] * ps.d
        move[abs(i) - 1] = 1 if i > 0 else -1
        steps.append((tuple(move), _fraction(p)))
    origin = (0,) * ps.d
    layer = {origin: Fraction(1)}
    result = [Fraction(1)]
    for t in range(1, N + 1):
        nxt = {}
        for x, weight in layer.items():
            for move, p in steps:
                y = tuple(a + b for a, b in zip(x, move))
                if sum(abs(c) for c in y) <= N - t:
                    nxt[y] = nxt.get(y, Fraction(0)) + weight * p
        layer = nxt
        result.append(layer.get(origin, Fraction(0)))
    return result


def free_returns(fs, N):
    """
    Exact P(X_n = id) for the simple random walk on F_d, from the distance
    to the identity, which is a birth-death chain.
    """
    p = set(fs.p.values())
    if len(p) != 1:
        raise InputError("free_returns: the walk must be simple")
    p = _fraction(p.pop())
    down, up = p, (2 * fs.d - 1) * p
    layer = [Fraction(1)] + [Fraction(0)] * N
    result = [Fraction(1)]
    for _ in range(N):
        nxt = [Fraction(0)] * (N + 1)
        nxt[1] += layer[0]
        for k in range(1, N):
            if layer[k]:
                nxt[k - 1] += layer[k] * down
                nxt[k + 1] += layer[k] * up
        layer = nxt
        result.append(layer[0])
    return result
