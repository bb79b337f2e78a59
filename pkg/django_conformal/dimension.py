"""
The exponent delta where the extended pressure of phi^h crosses 1, and the
dimension of the conformal measure derived from it.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from django_conformal.exceptions import BracketError, InputError, NotApplicableError
from django_conformal.potential import base_pressure
from django_conformal.transfer import ReturnProfile, profile_supported, spectral_radius, zcount
from django_conformal.utils import setting

logger = logging.getLogger(__name__)


def default_xi(e):
    return e.shift.extend((), e.potential.depth)


class PressureCurve(object):
    """
    Spectral estimates of the extension for the powers phi^h. With few
    distinct potential values a single return profile serves every h.
    """

    def __init__(self, e, N, xi=None):
        self.extension = e
        self.N = N
        self.xi = tuple(xi) if xi is not None else default_xi(e)
        self.profile = ReturnProfile(e, self.xi, N) if profile_supported(e) else None
        self._cache = {}

    def estimate(self, h):
        h = float(h)
        if h not in self._cache:
            if self.profile is not None:
                table = self.profile.table(h)
            else:
                powered = self.extension.with_potential(self.extension.potential.power(h))
                table = zcount(powered, self.xi, self.N)
            self._cache[h] = spectral_radius(table)
            logger.debug("pressure at h=%r: %r", h, self._cache[h].rho_hat)
        return self._cache[h]

    def __call__(self, h):
        return self.estimate(h).rho_hat


def extended_pressure(e, h, N, xi=None):
    return PressureCurve(e, N, xi)(h)


def _bisect(curve, lo, hi, tol, offset=0.0):
    """Root of rho(h) + offset * stderr(h) = 1 for a decreasing curve."""
    def value(h):
        est = curve.estimate(h)
        return est.rho_hat + offset * est.rho_stderr - 1

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if value(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _bracket(curve, bracket, explicit):
    lo, hi = bracket
    p_lo, p_hi = curve(lo), curve(hi)
    if not explicit:
        steps = 0
        while p_hi >= 1 and steps < 6:
            lo, p_lo = hi, p_hi
            hi *= 2
            p_hi = curve(hi)
            steps += 1
        while p_lo <= 1 and steps < 12:
            hi, p_hi = lo, p_lo
            lo -= max(abs(lo), 1.0)
            p_lo = curve(lo)
            steps += 1
    if not p_lo > 1 > p_hi:
        raise BracketError("find_delta: pressure does not cross 1 on [%r, %r]" % (lo, hi),
                           pressures={lo: p_lo, hi: p_hi})
    return lo, hi


@dataclass
class DimensionReport:
    delta: float
    rho_delta: float
    lyapunov: float
    dim_value: float
    amenability_gap: float
    gap_stderr: float
    amenable_consistent: bool
    extension_rho: float
    entropy_value: float
    delta_interval: tuple = None
    certificate: dict = field(default_factory=dict)
    N: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def find_delta(e, bracket=None, tol=None, N=None, xi=None, interval=True, curve=None):
    """
    Bisects h until the extended pressure of phi^h brackets 1 within ``tol``,
    then assembles the Gibbs data of phi^delta on the base.
    """
    numerics = setting('NUMERICS', {})
    tol = tol if tol is not None else numerics.get('tol', 1e-6)
    N = N if N is not None else numerics.get('N', 24)
    explicit = bracket is not None
    curve = curve or PressureCurve(e, N, xi)
    lo, hi = _bracket(curve, bracket or (0.0, 4.0), explicit)
    lo, hi = _bisect(curve, lo, hi, tol)
    delta = 0.5 * (lo + hi)
    certificate = {'h_low': lo, 'h_high': hi, 'pressure_low': curve(lo), 'pressure_high': curve(hi)}
    delta_interval = None
    if interval:
        a, _ = _bisect(curve, lo - 0.5, hi + 0.5, tol, offset=-1.0)
        _, b = _bisect(curve, lo - 0.5, hi + 0.5, tol, offset=1.0)
        delta_interval = (min(a, delta), max(b, delta))

    p = e.potential.as_float()
    gibbs = base_pressure(p.power(delta), e.shift)
    rho_delta = gibbs.rho_base
    lyapunov = replace(gibbs, potential=p).lyapunov()
    if not lyapunov < 0:
        raise InputError("find_delta: the Lyapunov exponent of phi must be negative")
    dim_value = delta + math.log(rho_delta) / abs(lyapunov)
    entropy_value = gibbs.entropy() / abs(lyapunov)

    est = curve.estimate(delta)
    gap = max(math.log(rho_delta) - math.log(est.rho_hat), 0.0)
    gap_stderr = max(est.rho_stderr / est.rho_hat, setting('GAP_FLOOR', 1e-3))
    amenable = gap < 3 * gap_stderr
    logger.info("delta=%.8f rho_delta=%.8f gap=%.3g", delta, rho_delta, gap)
    return DimensionReport(delta=delta, rho_delta=rho_delta, lyapunov=lyapunov, dim_value=dim_value,
                           amenability_gap=gap, gap_stderr=gap_stderr, amenable_consistent=amenable,
                           extension_rho=est.rho_hat, entropy_value=entropy_value,
                           delta_interval=delta_interval, certificate=certificate, N=N)


def decay_check(e, report, paths, nu_group, factor=10.0):
    """
    rho_delta^n nu([w_1..w_n, id]) / Phi_n(x)^delta along sampled paths; by the
    conformal relation it equals rho_delta^n nu(X_{psi_n(x)}) and must fall by
    ``factor`` over each path.
    """
    if report.amenable_consistent or abs(report.rho_delta - 1) < 1e-12:
        raise NotApplicableError("decay_check: rho_delta = 1, nothing decays")
    log_rho = math.log(report.rho_delta)
    rows, slopes = [], []
    for sample in paths:
        logs = []
        for n, g in enumerate(sample.group_traj, 1):
            mass = nu_group(g)
            logs.append(n * log_rho + math.log(mass) if mass else -math.inf)
        finite = [(n, v) for n, v in enumerate(logs, 1) if math.isfinite(v)]
        if len(finite) < 2:
            rows.append({'seed': sample.seed, 'drop': None, 'passed': False})
            continue
        drop = math.exp(finite[0][1] - finite[-1][1])
        ns = np.array([n for n, _ in finite], dtype=float)
        vs = np.array([v for _, v in finite])
        slopes.append(float(np.polyfit(ns, vs, 1)[0]))
        rows.append({'seed': sample.seed, 'drop': drop, 'passed': drop >= factor})
    passed = sum(1 for row in rows if row['passed'])
    return {'applicable': True, 'paths': rows, 'passed_fraction': passed / len(rows) if rows else 0.0,
            'slope': float(np.mean(slopes)) if slopes else math.nan}
