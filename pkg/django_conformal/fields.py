"""
Form fields for the sections of a system config. Each field accepts the
decoded JSON of its section and returns plain python data; the form turns
the cleaned sections into engine objects.
"""
from fractions import Fraction

from django import forms
from django.utils.translation import gettext_lazy as _

from django_conformal.patterson import WEIGHT_METHODS
from django_conformal.utils import parse_word


def _fraction(value):
    if isinstance(value, bool):
        raise ValueError(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


class JSONSectionField(forms.Field):
    """A config section that must decode to ``section_type``."""
    section_type = dict

    def clean(self, value):
        super(JSONSectionField, self).clean(value)
        if value in self.empty_values and not self.required:
            return None
        if not isinstance(value, self.section_type):
            raise forms.ValidationError(_(u"expected a JSON %(kind)s") % {
                'kind': 'object' if self.section_type is dict else 'array'})
        return self.clean_section(value)

    def clean_section(self, value):
        return value


class ShiftField(JSONSectionField):

    def clean_section(self, value):
        symbols = value.get('symbols')
        if not isinstance(symbols, list) or not symbols:
            raise forms.ValidationError(_(u"symbols: expected a non-empty list"))
        adjacency = value.get('adjacency')
        if adjacency is None:
            adjacency = [[1] * len(symbols) for _ in symbols]
        if not isinstance(adjacency, list) or not all(isinstance(row, list) for row in adjacency):
            raise forms.ValidationError(_(u"adjacency: expected a list of rows"))
        dagger = value.get('dagger')
        if dagger is not None and not isinstance(dagger, dict):
            raise forms.ValidationError(_(u"dagger: expected an object"))
        return {'symbols': [str(s) for s in symbols], 'adjacency': adjacency, 'dagger': dagger}


class PotentialField(JSONSectionField):

    def clean_section(self, value):
        depth = value.get('depth', 1)
        if not isinstance(depth, int) or isinstance(depth, bool) or depth < 1:
            raise forms.ValidationError(_(u"depth: expected a positive integer"))
        values = value.get('values')
        if not isinstance(values, dict) or not values:
            raise forms.ValidationError(_(u"values: expected an object of word weights"))
        cleaned = {}
        for word, weight in values.items():
            try:
                cleaned[parse_word(word)] = _fraction(weight)
            except (ValueError, TypeError, ZeroDivisionError):
                raise forms.ValidationError(_(u"values: %(word)s has no numeric weight") % {
                    'word': word})
        metric_r = value.get('metric_r')
        if metric_r is not None and not isinstance(metric_r, (int, float)):
            raise forms.ValidationError(_(u"metric_r: expected a number"))
        return {'depth': depth, 'values': cleaned, 'metric_r': metric_r}


class GroupField(JSONSectionField):
    kinds = ('lattice', 'free', 'table')

    def clean_section(self, value):
        kind = value.get('kind')
        if kind not in self.kinds:
            raise forms.ValidationError(_(u"kind: expected one of %(kinds)s") % {
                'kinds': ', '.join(self.kinds)})
        if kind == 'table':
            if not isinstance(value.get('table'), list):
                raise forms.ValidationError(_(u"table: expected a multiplication table"))
        else:
            d = value.get('d')
            if not isinstance(d, int) or isinstance(d, bool) or d < 1:
                raise forms.ValidationError(_(u"d: expected a positive integer"))
        return dict(value)


class PsiField(JSONSectionField):

    def clean_section(self, value):
        if not value:
            raise forms.ValidationError(_(u"expected one group element per symbol"))
        return dict((str(k), v) for k, v in value.items())


class NumericsField(JSONSectionField):
    types = {
        'N': int, 'depth': int, 'ball_radius': int, 'seed': int, 'workers': int,
        'exact': bool, 'tol': float, 'schedule': list, 'paths': int, 'length': int, 'weights': str,
    }

    def clean_section(self, value):
        unknown = set(value) - set(self.types)
        if unknown:
            raise forms.ValidationError(_(u"unknown setting %(key)s") % {'key': sorted(unknown)[0]})
        cleaned = {}
        for key, item in value.items():
            kind = self.types[key]
            if item is None:
                cleaned[key] = None
            elif kind is float and isinstance(item, (int, float)) and not isinstance(item, bool):
                cleaned[key] = float(item)
            elif kind is int and isinstance(item, int) and not isinstance(item, bool):
                cleaned[key] = item
            elif kind in (bool, list, str) and isinstance(item, kind):
                cleaned[key] = item
            else:
                raise forms.ValidationError(_(u"%(key)s: expected %(kind)s") % {
                    'key': key, 'kind': kind.__name__})
        if cleaned.get('weights') not in (None,) + WEIGHT_METHODS:
            raise forms.ValidationError(_(u"weights: expected one of %(methods)s") % {
                'methods': ', '.join(WEIGHT_METHODS)})
        return cleaned
