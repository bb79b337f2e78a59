import hashlib
import json
import logging
import math
from fractions import Fraction

import numpy as np
from django.conf import settings
from scipy.special import logsumexp

logger = logging.getLogger(__name__)


def setting(name, default):
    """
    Reads ``CONFORMAL_<name>`` from the Django settings, falling back
    to ``default``.
    """
    return getattr(settings, 'CONFORMAL_%s' % name, default)


def word_label(word):
    return ' '.join(word)


def parse_word(text):
    return tuple(str(text).split())


def log_sum(log_values):
    """Stable log(sum(exp(v))) for a possibly empty sequence."""
    log_values = [v for v in log_values if v != -math.inf]
    if not log_values:
        return -math.inf
    return float(logsumexp(log_values))


def neville(xs, ys, x0=0.0):
    """
    Evaluates at ``x0`` the interpolating polynomial through the points
    (xs, ys). Used for extrapolation to zero.
    """
    p = list(ys)
    n = len(xs)
    for level in range(1, n):
        for i in range(n - level):
            j = i + level
            p[i] = ((x0 - xs[j]) * p[i] + (xs[i] - x0) * p[i + 1]) / (xs[i] - xs[j])
    return p[0]


def format_fraction(value):
    return '%d/%d' % (value.numerator, value.denominator)


def to_jsonable(obj):
    """
    Converts results into plain JSON data: rationals become "num/den"
    strings, tuples become lists and non-finite floats become null.
    """
    if isinstance(obj, dict):
        return dict((str(k) if not isinstance(k, str) else k, to_jsonable(v))
                    for k, v in obj.items())
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        if not math.isfinite(obj):
            return None
        return obj
    if hasattr(obj, 'as_dict'):
        return to_jsonable(obj.as_dict())
    return obj


def canonical_json(obj):
    # repr of a float round-trips exactly, so no digits are lost
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def config_hash(config):
    payload = json.dumps(to_jsonable(config), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def log_partition_table(sender, table, **kwargs):
    """
    Logs a summary of every freshly computed partition table.
    Connected to ``signals.partition_table_computed``.
    """
    nonzero = table.nonzero_indices()
    logger.info(
        "partition table for xi=%s: N=%d period=%d nonzero=%d peak states=%d",
        word_label(table.xi_prefix), table.N, table.period, len(nonzero),
        max(table.states_visited) if table.states_visited else 0)
