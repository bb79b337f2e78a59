"""
Finite-alphabet topological Markov chains.

Symbols are strings, words are tuples of symbols. Points of the shift space
are represented by finite words continued by their lexicographically least
admissible extension, which is exact for everything that depends on finitely
many coordinates.
"""
import logging
from dataclasses import dataclass

import numpy as np

from django_conformal.exceptions import InputError, UnsupportedError
from django_conformal.utils import setting

logger = logging.getLogger(__name__)


class ShiftSpec(object):
    """
    Symbols in declared order, a 0/1 adjacency matrix and an optional
    symbol involution ``dagger``.
    """

    def __init__(self, symbols, adjacency, dagger=None):
        symbols = tuple(str(s) for s in symbols)
        if not symbols:
            raise InputError("symbols: alphabet is empty")
        if len(set(symbols)) != len(symbols):
            raise InputError("symbols: duplicate symbol ids")
        matrix = np.array(adjacency, dtype=np.int64)
        if matrix.shape != (len(symbols), len(symbols)):
            raise InputError("adjacency: expected a %dx%d matrix" % (len(symbols), len(symbols)))
        if not np.isin(matrix, (0, 1)).all():
            raise InputError("adjacency: entries must be 0 or 1")
        if (matrix.sum(axis=1) == 0).any() or (matrix.sum(axis=0) == 0).any():
            raise InputError("adjacency: no row or column may be all zero")
        if dagger is not None:
            dagger = dict((str(k), str(v)) for k, v in dagger.items())
            unknown = (set(dagger) | set(dagger.values())) - set(symbols)
            if unknown or set(dagger) != set(symbols):
                raise InputError("dagger: must map every symbol to a symbol")
        self.symbols = symbols
        self.adjacency = matrix
        self.adjacency.setflags(write=False)
        self.dagger = dagger
        self._index = dict((s, i) for i, s in enumerate(symbols))
        self._successors = dict(
            (a, tuple(b for b in symbols if matrix[self._index[a], self._index[b]]))
            for a in symbols)

    def __len__(self):
        return len(self.symbols)

    def index(self, symbol):
        try:
            return self._index[symbol]
        except KeyError:
            raise InputError("unknown symbol id %r" % (symbol,))

    def allows(self, a, b):
        return bool(self.adjacency[self.index(a), self.index(b)])

    def successors(self, a):
        return self._successors[a]

    def predecessors(self, b):
        j = self.index(b)
        return tuple(a for a in self.symbols if self.adjacency[self._index[a], j])

    def dagger_word(self, word):
        """w† = (w_n†, ..., w_1†)."""
        if self.dagger is None:
            raise UnsupportedError("shift has no dagger")
        return tuple(self.dagger[a] for a in reversed(word))

    def extend(self, word, length):
        """Least admissible extension of ``word`` to at least ``length`` symbols."""
        word = tuple(word)
        if not word:
            word = (self.symbols[0],)
        while len(word) < length:
            word = word + (self._successors[word[-1]][0],)
        return word

    def sort_key(self, word):
        return tuple(self._index[a] for a in word)


def is_admissible(spec, w):
    w = tuple(w)
    for a in w:
        spec.index(a)
    return all(spec.allows(a, b) for a, b in zip(w, w[1:]))


def words_of_length(spec, n):
    """Yields the admissible words of length ``n`` in lexicographic order."""
    if n < 1:
        raise InputError("word length must be positive")
    stack = [(a,) for a in reversed(spec.symbols)]
    while stack:
        word = stack.pop()
        if len(word) == n:
            yield word
            continue
        for b in reversed(spec.successors(word[-1])):
            stack.append(word + (b,))


def common_prefix(x, y):
    k = 0
    for a, b in zip(x, y):
        if a != b:
            break
        k += 1
    return k


def metric(x, y, r=None):
    """
    d_r on cylinder representatives: r to the power of the common prefix
    length. Identical finite words give r^|x|, an upper bound for the
    distance of their extensions.
    """
    if r is None:
        r = setting('METRIC_R', 0.5)
    if not 0 < r < 1:
        raise InputError("metric parameter r must lie in (0, 1)")
    x, y = tuple(x), tuple(y)
    if not x or not y:
        raise InputError("metric of an empty word")
    if x == y:
        return r ** len(x)
    return r ** common_prefix(x, y)


def mixing_exponent(spec, horizon):
    """Smallest N <= horizon with A^N strictly positive, or None."""
    a = (spec.adjacency > 0).astype(np.int64)
    power = a.copy()
    for n in range(1, horizon + 1):
        if (power > 0).all():
            return n
        power = ((power @ a) > 0).astype(np.int64)
    return None


@dataclass
class MixingReport:
    mixing: bool
    exponent: int = None
    bip: bool = False
    witnesses: tuple = ()

    def as_dict(self):
        return dict(self.__dict__)


def bip_witnesses(spec):
    """
    A small set of symbols containing a predecessor and a successor of
    every symbol, picked greedily in declared order. Empty when none exists.
    """
    def covers(b):
        return (set(('in', a) for a in spec.successors(b))
                | set(('out', a) for a in spec.predecessors(b)))
    needs = set(('in', a) for a in spec.symbols) | set(('out', a) for a in spec.symbols)
    chosen = []
    while needs:
        best = max(spec.symbols, key=lambda b: len(covers(b) & needs))
        gained = covers(best) & needs
        if not gained:
            return ()
        needs -= gained
        chosen.append(best)
    return tuple(sorted(chosen, key=spec.index))


def mixing_report(spec, horizon):
    """Primitivity of the adjacency matrix and the big images and preimages property."""
    if horizon < 1:
        raise InputError("horizon must be positive")
    n = mixing_exponent(spec, horizon)
    witnesses = bip_witnesses(spec)
    report = MixingReport(mixing=n is not None, exponent=n, bip=bool(witnesses),
                          witnesses=witnesses)
    if report.mixing:
        logger.debug("shift is mixing at N=%d; b.i.p. witnessed by %s", n, ' '.join(witnesses))
    return report


def is_mixing(spec, horizon):
    return mixing_report(spec, horizon).mixing


def check_dagger(spec):
    if spec.dagger is None:
        raise UnsupportedError("check_dagger: shift has no dagger")
    dagger = spec.dagger
    if any(dagger[dagger[a]] != a for a in spec.symbols):
        return False
    for a in spec.symbols:
        for b in spec.symbols:
            if spec.allows(a, b) != spec.allows(dagger[b], dagger[a]):
                return False
    return True
