"""
Deck groups: the lattice Z^d, the free group F_d and finite groups given by
a multiplication table.

Elements are hashable canonical values: int tuples for lattices, reduced
tuples of signed generator indices for free groups and ints for tables.
"""
import itertools
import logging
from collections import deque
from math import comb

from django_conformal.exceptions import InputError, ResourceError
from django_conformal.utils import setting

logger = logging.getLogger(__name__)


class GroupSpec(object):
    kind = None

    def element(self, literal):
        raise NotImplementedError

    def check(self, a):
        raise NotImplementedError

    def multiply(self, a, b):
        raise NotImplementedError

    def inverse(self, a):
        raise NotImplementedError

    def word_length(self, a):
        raise NotImplementedError

    def ball(self, radius):
        raise NotImplementedError

    def ball_size(self, radius):
        return len(self.ball(radius))

    def sort_key(self, a):
        return (self.word_length(a), a)

    def literal(self, a):
        """JSON literal of an element."""
        return list(a) if isinstance(a, tuple) else a

    def compose(self, a, b):
        """Unchecked product for inner loops."""
        return self.multiply(a, b)

    def size(self, a):
        """Unchecked word length for inner loops."""
        return self.word_length(a)

    def as_dict(self):
        return {'kind': self.kind}


class LatticeGroup(GroupSpec):
    kind = 'lattice'

    def __init__(self, d):
        if d < 1:
            raise InputError("group.d must be positive")
        self.d = d
        self.identity = (0,) * d

    def element(self, literal):
        if isinstance(literal, int) and self.d == 1:
            literal = [literal]
        if not isinstance(literal, (list, tuple)) or len(literal) != self.d \
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in literal):
            raise InputError("lattice element must be a list of %d integers" % self.d)
        return tuple(literal)

    def check(self, a):
        if not (isinstance(a, tuple) and len(a) == self.d):
            raise InputError("element %r does not belong to Z^%d" % (a, self.d))
        return a

    def multiply(self, a, b):
        self.check(a)
        self.check(b)
        return tuple(x + y for x, y in zip(a, b))

    def compose(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def size(self, a):
        return sum(abs(x) for x in a)

    def inverse(self, a):
        return tuple(-x for x in self.check(a))

    def word_length(self, a):
        return sum(abs(x) for x in self.check(a))

    def ball(self, radius):
        if radius < 0:
            raise InputError("radius must be nonnegative")
        points = [p for p in itertools.product(range(-radius, radius + 1), repeat=self.d)
                  if sum(abs(x) for x in p) <= radius]
        return sorted(points, key=self.sort_key)

    def ball_size(self, radius):
        # number of lattice points with l1 norm <= radius
        return sum(comb(self.d, k) * comb(radius, k) * 2 ** k for k in range(self.d + 1))

    def as_dict(self):
        return {'kind': self.kind, 'd': self.d}


class FreeGroup(GroupSpec):
    kind = 'free'

    def __init__(self, d):
        if d < 1:
            raise InputError("group.d must be positive")
        self.d = d
        self.identity = ()
        self.letters = tuple(range(1, d + 1)) + tuple(-i for i in range(1, d + 1))

    def element(self, literal):
        if isinstance(literal, int) and not isinstance(literal, bool):
            literal = [literal]
        if not isinstance(literal, (list, tuple)) \
                or not all(isinstance(x, int) and 0 < abs(x) <= self.d for x in literal):
            raise InputError("free group element must be a list of generators in +-{1..%d}" % self.d)
        return self.reduce(literal)

    def reduce(self, letters):
        stack = []
        for x in letters:
            if stack and stack[-1] == -x:
                stack.pop()
            else:
                stack.append(x)
        return tuple(stack)

    def is_reduced(self, letters):
        return all(a != -b for a, b in zip(letters, letters[1:]))

    def check(self, a):
        if not (isinstance(a, tuple) and all(isinstance(x, int) and 0 < abs(x) <= self.d
                                              for x in a)):
            raise InputError("element %r does not belong to F_%d" % (a, self.d))
        return a

    def multiply(self, a, b):
        self.check(a)
        self.check(b)
        k = 0
        while k < len(a) and k < len(b) and a[len(a) - 1 - k] == -b[k]:
            k += 1
        return a[:len(a) - k] + b[k:]

    def compose(self, a, b):
        if a and b and a[-1] == -b[0]:
            return self.multiply(a, b)
        return a + b

    def size(self, a):
        return len(a)

    def inverse(self, a):
        return tuple(-x for x in reversed(self.check(a)))

    def word_length(self, a):
        return len(self.check(a))

    def ball_size(self, radius):
        if radius == 0:
            return 1
        if self.d == 1:
            return 2 * radius + 1
        return 1 + self.d * ((2 * self.d - 1) ** radius - 1) // (self.d - 1)

    def ball(self, radius):
        if radius < 0:
            raise InputError("radius must be nonnegative")
        cap = setting('FREE_BALL_CAP', 16)
        if radius > cap:
            raise ResourceError(
                "F_%d ball of radius %d has %d elements, above the radius cap %d"
                % (self.d, radius, self.ball_size(radius), cap),
                estimate=self.ball_size(radius), suggestion={'radius': cap})
        result = [()]
        sphere = [()]
        for _ in range(radius):
            sphere = [g + (x,) for g in sphere for x in self.letters if not g or g[-1] != -x]
            result.extend(sorted(sphere))
        return result

    def as_dict(self):
        return {'kind': self.kind, 'd': self.d}


class TableGroup(GroupSpec):
    """
    A finite group from its multiplication table; word length is measured
    in the Cayley graph of ``generators`` (all elements by default).
    """
    kind = 'table'

    def __init__(self, table, identity=0, inverses=None, generators=None):
        n = len(table)
        if n == 0 or any(len(row) != n for row in table):
            raise InputError("group.table must be a square table")
        self.table = tuple(tuple(int(x) for x in row) for row in table)
        self.order = n
        self.identity = int(identity)
        self.d = None
        elements = range(n)
        if any(not 0 <= x < n for row in self.table for x in row):
            raise InputError("group.table entries out of range")
        for a in elements:
            if self.table[self.identity][a] != a or self.table[a][self.identity] != a:
                raise InputError("group.table: %d is not an identity" % self.identity)
        for a, b, c in itertools.product(elements, repeat=3):
            if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]:
                raise InputError("group.table is not associative at (%d, %d, %d)" % (a, b, c))
        if inverses is None:
            inverses = []
            for a in elements:
                found = [b for b in elements if self.table[a][b] == self.identity]
                if not found:
                    raise InputError("group.table: %d has no inverse" % a)
                inverses.append(found[0])
        self.inverses = tuple(int(x) for x in inverses)
        for a in elements:
            if self.table[a][self.inverses[a]] != self.identity \
                    or self.table[self.inverses[a]][a] != self.identity:
                raise InputError("group.inverse: wrong inverse for %d" % a)
        if generators is None:
            generators = [a for a in elements if a != self.identity]
        self.generators = tuple(int(x) for x in generators)
        self._lengths = self._cayley_distances()

    def _cayley_distances(self):
        steps = set(self.generators) | set(self.inverses[g] for g in self.generators)
        dist = {self.identity: 0}
        queue = deque([self.identity])
        while queue:
            a = queue.popleft()
            for g in sorted(steps):
                b = self.table[a][g]
                if b not in dist:
                    dist[b] = dist[a] + 1
                    queue.append(b)
        if len(dist) != self.order:
            raise InputError("group.generators do not generate the group")
        return dist

    def element(self, literal):
        if not isinstance(literal, int) or isinstance(literal, bool) or not 0 <= literal < self.order:
            raise InputError("table element must be an index below %d" % self.order)
        return literal

    def check(self, a):
        if not (isinstance(a, int) and 0 <= a < self.order):
            raise InputError("element %r does not belong to the table group" % (a,))
        return a

    def multiply(self, a, b):
        return self.table[self.check(a)][self.check(b)]

    def compose(self, a, b):
        return self.table[a][b]

    def size(self, a):
        return self._lengths[a]

    def inverse(self, a):
        return self.inverses[self.check(a)]

    def word_length(self, a):
        return self._lengths[self.check(a)]

    def ball(self, radius):
        if radius < 0:
            raise InputError("radius must be nonnegative")
        return sorted((a for a, k in self._lengths.items() if k <= radius), key=self.sort_key)

    def as_dict(self):
        return {'kind': self.kind, 'table': [list(r) for r in self.table],
                'identity': self.identity, 'generators': list(self.generators)}


def multiply(spec, a, b):
    return spec.multiply(a, b)


def word_length(spec, g):
    return spec.word_length(g)


def ball(spec, radius):
    return spec.ball(radius)
