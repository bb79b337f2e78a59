"""
Kernels between the measures nu_z, the map Theta onto rho-harmonic
functions, and path experiments on the natural extension.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from django_conformal.exceptions import InputError
from django_conformal.extension import psi_n
from django_conformal.patterson import PattersonFamily, conformal_limit
from django_conformal.potential import base_pressure, distortion_constant, normalize
from django_conformal.shift import metric, words_of_length
from django_conformal.utils import neville, word_label

logger = logging.getLogger(__name__)


class KernelWindow(object):
    """
    Extrapolated measures nu_z for Dirac sources z, all normalized by the
    return series of (xi, id) and computed on one cylinder window.
    """

    def __init__(self, e, xi, weights, N, depth, ball_radius, schedule=None):
        self.extension = e
        self.xi = tuple(xi)
        self.weights = weights
        self.N, self.depth, self.ball_radius = N, depth, ball_radius
        self.schedule = schedule
        self.family = PattersonFamily(e, xi, weights, depth, ball_radius, N)
        self.nu = conformal_limit(e, xi, weights, depth, ball_radius, N, schedule=schedule,
                                  family=self.family)
        self._cache = {self.family.base.start: self.nu}

    def measure_from(self, zeta):
        zeta = self.extension.point(*zeta)
        if zeta not in self._cache:
            family = PattersonFamily(self.extension, self.xi, self.weights, self.depth,
                                     self.ball_radius, self.N, start=zeta, base=self.family.base)
            self._cache[zeta] = conformal_limit(self.extension, self.xi, self.weights, self.depth,
                                                self.ball_radius, self.N, schedule=self.schedule,
                                                family=family)
        return self._cache[zeta]

    def contains(self, word, g):
        return 0 < len(word) <= self.depth and \
            self.extension.group.word_length(g) <= self.ball_radius

    def cylinder_mass(self, nu, word, g):
        word = tuple(word)
        if not word:
            return nu.group_mass(g)
        return nu.mass(word, g)

    def kernel(self, zeta, word, g):
        """nu_zeta([w, g]) / nu([w, g]), or None when the cylinder has no mass."""
        below = self.cylinder_mass(self.nu, word, g)
        if below <= 0:
            return None
        return self.cylinder_mass(self.measure_from(zeta), word, g) / below


@dataclass
class KernelEstimate:
    source: tuple
    target: list
    values: list
    limit: float
    stabilized: bool
    zero_mass: bool = False

    def as_dict(self):
        return {'source': {'word': word_label(self.source[0]), 'g': self.source[1]},
                'target': [{'word': word_label(w), 'g': g} for w, g in self.target],
                'values': self.values, 'limit': self.limit, 'stabilized': self.stabilized,
                'zero_mass': self.zero_mass}


def kernel_estimate(e, zeta, z_cyls, window):
    """
    K(delta_zeta, z) along cylinders shrinking to z, extrapolated in r^depth.
    """
    z_cyls = [(tuple(w), g) for w, g in z_cyls]
    depths = [len(w) for w, _ in z_cyls]
    if any(b <= a for a, b in zip(depths, depths[1:])) \
            or any(w2[:len(w1)] != w1 or g1 != g2
                   for (w1, g1), (w2, g2) in zip(z_cyls, z_cyls[1:])):
        raise InputError("kernel_estimate: target cylinders must be nested with growing depth")
    values, used, zero = [], [], False
    for w, g in z_cyls:
        if not window.contains(w, g):
            raise InputError("kernel_estimate: [%s] lies outside the window" % word_label(w))
        value = window.kernel(zeta, w, g)
        if value is None:
            zero = True
            continue
        values.append(value)
        used.append(len(w))
    if not values:
        return KernelEstimate(zeta, z_cyls, [], math.nan, False, zero_mass=True)
    limit = values[-1]
    stabilized = len(values) > 1 and abs(values[-1] - values[-2]) <= 0.02 * abs(values[-2])
    if len(values) > 1 and not stabilized:
        r = e.potential.metric_r
        guess = neville([r ** d for d in used[-2:]], values[-2:])
        if guess > 0:
            limit = guess
    return KernelEstimate(zeta, z_cyls, values, limit, stabilized, zero_mass=zero)


def _spread(estimate):
    values = estimate.values
    if len(values) < 2 or not values[-1]:
        return 0.0
    return abs(values[-1] - values[-2]) / abs(values[-1])


def t_invariance_check(e, zeta, z_cyls, window, tol=0.05):
    """
    K(delta_zeta, z) against K(delta_zeta, T z): each target [w, g] is
    moved to its image [w[1:], g psi(w_0)]. The two limits must agree within
    ``tol`` or the larger extrapolation spread.
    """
    z_cyls = [(tuple(w), g) for w, g in z_cyls]
    if any(len(w) < 2 for w, _ in z_cyls):
        raise InputError("t_invariance_check: target words need at least two symbols")
    images = [(w[1:], e.group.multiply(g, e.psi[w[0]])) for w, g in z_cyls]
    before = kernel_estimate(e, zeta, z_cyls, window)
    after = kernel_estimate(e, zeta, images, window)
    spread = max(_spread(before), _spread(after))
    if not before.values or not after.values:
        return {'before': before.limit, 'after': after.limit, 'relative': math.nan,
                'spread': spread, 'passed': None}
    relative = abs(before.limit - after.limit) / abs(after.limit)
    return {'before': before.limit, 'after': after.limit, 'relative': relative,
            'spread': spread, 'passed': relative <= max(tol, spread)}


def theta_eval(e, f, z, window):
    """Theta(f)(z) = nu_z(f) for a finite combination of cylinders [w, g]."""
    nu = window.measure_from(z)
    total, covered, weight = [], 0.0, 0.0
    for (w, g), c in f.items():
        w = tuple(w)
        weight += abs(c)
        if w and not window.contains(w, g) or not w and \
                e.group.word_length(g) > window.ball_radius:
            continue
        covered += abs(c)
        total.append(c * window.cylinder_mass(nu, w, g))
    if weight and covered < weight:
        logger.warning("theta_eval: window covers %.1f%% of the support", 100 * covered / weight)
    return math.fsum(total)


class MeshFunction(object):
    """
    A function on the cylinders [w, g] with |w| = depth and |g| <= radius,
    extended to points by their first ``depth`` symbols.
    """

    def __init__(self, e, depth, radius, values=None):
        self.extension = e
        self.depth = depth
        self.radius = radius
        self.values = dict(values or {})

    @classmethod
    def tabulate(cls, e, depth, radius, fn):
        mesh = cls(e, depth, radius)
        for point in mesh.points():
            mesh.values[point] = fn(*point)
        return mesh

    def points(self):
        ball = self.extension.group.ball(self.radius)
        return [(w, g) for w in words_of_length(self.extension.shift, self.depth) for g in ball]

    def __call__(self, word, g):
        word = self.extension.shift.extend(word, self.depth)
        return self.values.get((tuple(word[:self.depth]), g))

    def inner(self):
        """Mesh points whose one-step preimages stay on the mesh."""
        limit = self.radius - self.extension.max_step
        return [(w, g) for w, g in self.points()
                if self.extension.group.word_length(g) <= limit]


def theta_mesh(e, f, window, depth, radius):
    return MeshFunction.tabulate(e, depth, radius, lambda w, g: theta_eval(e, f, (w, g), window))


def apply_once(e, h, word, g):
    """(L h)(word, g) for a function of points."""
    p = e.potential.as_float()
    x = e.shift.extend(word, max(e.potential.depth - 1, 1))
    total = []
    for a in e.shift.predecessors(x[0]):
        value = h((a,) + x, e.group.multiply(g, e.psi_inv[a]))
        if value is None:
            return None
        total.append(float(p.value((a,) + x)) * value)
    return math.fsum(total)


def harmonicity_residual(e, h, rho_hat):
    """
    max |L h(z) - rho h(z)| / (rho h(z)) over the inner mesh. Returns inf
    when h vanishes at a point whose preimages carry mass.
    """
    worst = 0.0
    for w, g in h.inner():
        value = h(w, g)
        image = apply_once(e, h, w, g)
        if image is None:
            continue
        if value == 0:
            if image != 0:
                logger.warning("harmonicity_residual: h vanishes at [%s] only", word_label(w))
                return math.inf
            continue
        worst = max(worst, abs(image - rho_hat * value) / abs(rho_hat * value))
    return worst


def lipschitz_kernel_check(e, pairs, z_mesh, window):
    """
    D = max |log K(zeta1, z) - log K(zeta2, z)| / d(zeta1, zeta2) over Dirac
    pairs and target cylinders, reported per target depth.
    """
    r = e.potential.metric_r
    by_depth = {}
    for zeta1, zeta2 in pairs:
        zeta1, zeta2 = e.point(*zeta1), e.point(*zeta2)
        if zeta1[0][0] != zeta2[0][0] or zeta1[1] != zeta2[1]:
            raise InputError("lipschitz_kernel_check: pair must share symbol and group element")
        dist = metric(zeta1[0], zeta2[0], r)
        for w, g in z_mesh:
            k1, k2 = window.kernel(zeta1, w, g), window.kernel(zeta2, w, g)
            if not k1 or not k2:
                continue
            value = abs(math.log(k1) - math.log(k2)) / dist
            by_depth[len(w)] = max(by_depth.get(len(w), 0.0), value)
    levels = [by_depth[d] for d in sorted(by_depth)]
    stable = len(levels) < 2 or levels[-1] <= 1.1 * levels[-2] + 1e-12
    return {'D_hat': max(levels) if levels else 0.0, 'by_depth': by_depth,
            'finite': all(math.isfinite(v) for v in levels), 'stable': stable}


def eigen_relation(e, zeta, word, g, window, rho_hat):
    """sum_a phi(tau_a zeta) K(tau_a zeta, z) against rho K(zeta, z)."""
    zeta = e.point(*zeta)
    p = e.potential.as_float()
    x = e.shift.extend(zeta[0], max(e.potential.depth - 1, 1))
    lhs = []
    for a in e.shift.predecessors(x[0]):
        source = ((a,) + zeta[0], e.group.multiply(zeta[1], e.psi_inv[a]))
        if e.group.word_length(source[1]) > window.ball_radius + window.N * e.max_step:
            continue
        value = window.kernel(source, word, g)
        if value is not None:
            lhs.append(float(p.value((a,) + x)) * value)
    rhs = window.kernel(zeta, word, g)
    lhs = math.fsum(lhs)
    if not rhs:
        return {'lhs': lhs, 'rhs': 0.0, 'relative': math.nan}
    rhs *= rho_hat
    return {'lhs': lhs, 'rhs': rhs, 'relative': abs(lhs - rhs) / rhs}


@dataclass
class PathSample:
    base_path: tuple
    group_traj: list
    observables: list
    past: tuple = ()
    truncated: bool = False
    seed: int = 0

    def as_rows(self, path_id):
        return [(path_id, n, value) for n, value in enumerate(self.observables, 1)]


def normalized_potential(e):
    """The potential with L 1 = 1, normalizing it when necessary."""
    p = e.potential.as_float()
    for x in words_of_length(e.shift, max(p.depth - 1, 1)):
        total = math.fsum(float(p.value((a,) + x)) for a in e.shift.predecessors(x[0]))
        if abs(total - 1) > 1e-9:
            logger.warning("potential is not normalized, sampling with its normalization")
            return normalize(p, e.shift)
    return p


def _forward(gibbs, L, rng):
    index = rng.choice(len(gibbs.states), p=gibbs.stationary)
    state = gibbs.states[index]
    path = list(state)
    while len(path) < L:
        row = gibbs.transition[index]
        index = rng.choice(len(gibbs.states), p=row / row.sum())
        path.append(gibbs.states[index][-1])
    return tuple(path[:L])


def _backward(e, p, word, L, rng):
    """Prepends L symbols with probabilities phi(a x)."""
    past = []
    x = tuple(word)
    for _ in range(L):
        head = e.shift.extend(x, max(p.depth - 1, 1))
        options = e.shift.predecessors(head[0])
        weights = np.array([float(p.value((a,) + head)) for a in options])
        a = options[rng.choice(len(options), p=weights / weights.sum())]
        past.append(a)
        x = (a,) + x[:p.depth + 1]
    past.reverse()
    return tuple(past)


def sample_paths(e, gibbs, L, count, seed=0, nu_group=None, rho_hat=None, past=0):
    """
    Stationary paths of the base chain with their cocycle trajectories and
    the observable nu(X_{psi_n(x)}) / rho^n. ``nu_group`` maps g to nu(X_g)
    and returns None outside its window. ``past`` prepends that many
    symbols sampled backwards.
    """
    if L < 1 or count < 1:
        raise InputError("sample_paths: L and count must be positive")
    if abs(gibbs.rho_base - 1) > 1e-9:
        logger.warning("sample_paths: base potential is not normalized (rho = %r)", gibbs.rho_base)
    rho = rho_hat if rho_hat is not None else gibbs.rho_base
    p = normalized_potential(e) if past else None
    samples = []
    for i in range(count):
        rng = np.random.default_rng(seed + i)
        path = _forward(gibbs, L, rng)
        traj, observables, truncated = [], [], False
        g = e.group.identity
        for n, a in enumerate(path, 1):
            g = e.group.multiply(g, e.psi[a])
            traj.append(g)
            if nu_group is None:
                continue
            mass = nu_group(g)
            if mass is None:
                truncated = True
                observables.append(math.nan)
            else:
                observables.append(mass / rho ** n)
        before = _backward(e, p, path, past, rng) if past else ()
        samples.append(PathSample(base_path=path, group_traj=traj, observables=observables,
                                  past=before, truncated=truncated, seed=seed + i))
    if any(s.truncated for s in samples):
        logger.warning("sample_paths: some observables left the measure window")
    return samples


def backward_point(e, sample, n, g=None):
    """pi(S^-n y): the past's last n symbols prepended, group moved along."""
    head = sample.past[len(sample.past) - n:] if n else ()
    g = e.group.identity if g is None else g
    return head + sample.base_path, e.group.multiply(g, e.group.inverse(psi_n(e, head)))


def ratio_martingale(e, f, h, paths, g=None):
    """
    Trajectories of f/h along the backward extensions of the sampled paths,
    with the mean absolute increment per step and the terminal spread.
    """
    trajectories, vanished = [], False
    for sample in paths:
        row = []
        for n in range(1, len(sample.past) + 1):
            word, k = backward_point(e, sample, n, g)
            fv, hv = f(word, k), h(word, k)
            if hv is None or fv is None:
                row.append(math.nan)
            elif hv == 0:
                vanished = True
                row.append(math.nan)
            else:
                row.append(fv / hv)
        trajectories.append(row)
    length = max([len(row) for row in trajectories] or [0])
    increments = []
    for n in range(1, length):
        steps = [abs(row[n] - row[n - 1]) for row in trajectories
                 if n < len(row) and math.isfinite(row[n]) and math.isfinite(row[n - 1])]
        increments.append(float(np.mean(steps)) if steps else math.nan)
    spreads = []
    for row in trajectories:
        tail = [v for v in row[3 * len(row) // 4:] if math.isfinite(v)]
        if tail:
            spreads.append(max(tail) - min(tail))
    return {'trajectories': trajectories, 'increments': increments,
            'terminal_spread': float(np.mean(spreads)) if spreads else math.nan,
            'vanished': vanished}


def martingale_test(e, h, rho, step, count, seed=0, g=None, min_bucket=30):
    """
    Bucketed check that W_n = rho^-n h(pi S^-n y) is a martingale: within
    each state bucket at step n the mean of W_{n+1} matches W_n.
    """
    gibbs = base_pressure(e.potential.as_float(), e.shift)
    paths = sample_paths(e, gibbs, max(e.potential.depth, 1), count, seed=seed, past=step + 1)
    buckets = {}
    for sample in paths:
        w0, k0 = backward_point(e, sample, step, g)
        w1, k1 = backward_point(e, sample, step + 1, g)
        h0, h1 = h(w0, k0), h(w1, k1)
        if h0 is None or h1 is None:
            continue
        key = (tuple(w0[:max(e.potential.depth - 1, 1)]), k0)
        buckets.setdefault(key, []).append((h0 / rho ** step, h1 / rho ** (step + 1)))
    rows, worst = [], 0.0
    for key, values in sorted(buckets.items(), key=lambda item: repr(item[0])):
        if len(values) < min_bucket:
            continue
        before = np.array([v[0] for v in values])
        after = np.array([v[1] for v in values])
        diff = after - before
        se = diff.std(ddof=1) / math.sqrt(len(diff))
        z = abs(diff.mean()) / se if se > 0 else (0.0 if abs(diff.mean()) < 1e-12 else math.inf)
        worst = max(worst, z)
        rows.append({'bucket': (word_label(key[0]), key[1]), 'count': len(values),
                     'w_n': float(before.mean()), 'w_next': float(after.mean()), 'z': z})
    return {'step': step, 'buckets': rows, 'max_z': worst, 'passed': bool(rows) and worst <= 3.0}


@dataclass
class RegularityCoefficients:
    C_n_of_f: dict
    D_x: dict
    LD: float
    c_phi: float = None
    within_bound: bool = None
    pairs: int = 0
    notes: list = field(default_factory=list)

    def as_dict(self):
        return {'C_n': self.C_n_of_f, 'D_x': dict((repr(k), v) for k, v in self.D_x.items()),
                'LD': self.LD, 'c_phi': self.c_phi, 'within_bound': self.within_bound}


def regularity_coefficients(e, f, depths=None, theta_image=False, tol=1e-6):
    """
    C_n(f), the local Lipschitz coefficients D_x(f) on each [a, g] and
    LD(f) for a function tabulated on a mesh. For Theta images the bound
    LD(f) <= C_phi is checked up to ``tol``.
    """
    r = e.potential.metric_r
    depths = list(depths) if depths is not None else list(range(1, f.depth + 1))
    points = [(w, g) for (w, g) in f.points() if f.values.get((w, g)) is not None]
    by_cylinder = {}
    for w, g in points:
        by_cylinder.setdefault((w[0], g), []).append(w)
    c_n = {}
    for n in depths:
        worst = 0.0
        for (a, g), words in by_cylinder.items():
            for w1 in words:
                v1 = f.values[(w1, g)]
                for w2 in words:
                    if w1 != w2 and w1[:n] == w2[:n] and v1 != 0:
                        worst = max(worst, abs(v1 - f.values[(w2, g)]) / abs(v1))
        c_n[n] = worst
    d_x, ld, pairs = {}, 0.0, 0
    for (a, g), words in by_cylinder.items():
        local = 0.0
        for w1 in words:
            for w2 in words:
                if w1 >= w2:
                    continue
                pairs += 1
                v1, v2 = f.values[(w1, g)], f.values[(w2, g)]
                dist = metric(w1, w2, r)
                local = max(local, abs(v1 - v2) / dist)
                if v1 > 0 and v2 > 0:
                    ld = max(ld, abs(v1 / v2 - 1) / dist, abs(v2 / v1 - 1) / dist)
        d_x[(a, g)] = local
    c_phi, within = None, None
    if theta_image:
        c_phi = distortion_constant(e.potential, e.shift)
        within = ld <= c_phi + tol
    return RegularityCoefficients(C_n_of_f=c_n, D_x=d_x, LD=ld, c_phi=c_phi,
                                  within_bound=within, pairs=pairs)
