import json
import os
from dataclasses import dataclass, fields, replace

from django import forms
from django.utils.translation import gettext_lazy as _

from django_conformal.exceptions import ConformalError
from django_conformal.extension import ExtensionSpec
from django_conformal.fields import GroupField, NumericsField, PotentialField, PsiField, ShiftField
from django_conformal.groups import FreeGroup, LatticeGroup, TableGroup
from django_conformal.potential import PotentialSpec
from django_conformal.shift import ShiftSpec, is_admissible
from django_conformal.utils import parse_word, setting

CONFIG_DIR = os.path.join(os.path.dirname(__file__), 'configs')


@dataclass
class Numerics:
    N: int = 24
    depth: int = 2
    ball_radius: int = 3
    schedule: list = None
    seed: int = 0
    exact: bool = False
    tol: float = 1e-6
    workers: int = 1
    paths: int = 100
    length: int = 200
    weights: str = 'greedy'

    @classmethod
    def build(cls, *layers):
        """Defaults, then the CONFORMAL_NUMERICS setting, then each layer."""
        known = set(f.name for f in fields(cls))
        numerics = cls()
        for layer in (setting('NUMERICS', {}),) + layers:
            numerics = replace(numerics, **dict((k, v) for k, v in (layer or {}).items()
                                                 if k in known and v is not None))
        return numerics


def build_group(section):
    kind = section['kind']
    if kind == 'lattice':
        return LatticeGroup(section['d'])
    if kind == 'free':
        return FreeGroup(section['d'])
    return TableGroup(section['table'], identity=section.get('identity', 0),
                      inverses=section.get('inverses'), generators=section.get('generators'))


class SystemConfigForm(forms.Form):
    """
    Validates a decoded system config and builds the extension it describes.
    """
    shift = ShiftField(label=_(u"Shift"))
    potential = PotentialField(label=_(u"Potential"))
    group = GroupField(label=_(u"Group"))
    psi = PsiField(label=_(u"Cocycle"))
    numerics = NumericsField(label=_(u"Numerics"), required=False)

    def __init__(self, data, *args, **kwargs):
        self.raw = data if isinstance(data, dict) else {}
        super(SystemConfigForm, self).__init__(self.raw, *args, **kwargs)

    def clean(self):
        cleaned = super(SystemConfigForm, self).clean()
        if self.errors:
            return cleaned
        numerics = Numerics.build(cleaned.get('numerics'))
        section = 'shift'
        try:
            shift = ShiftSpec(**cleaned['shift'])
            section = 'potential'
            p = cleaned['potential']
            unknown = set(a for word in p['values'] for a in word) - set(shift.symbols)
            if unknown:
                raise forms.ValidationError(_(u"potential: unknown symbol %(s)s") % {
                    's': sorted(unknown)[0]})
            values = p['values'] if numerics.exact else dict(
                (w, float(v)) for w, v in p['values'].items())
            potential = PotentialSpec(shift, p['depth'], values, p['metric_r'],
                                      exact=numerics.exact)
            section = 'group'
            group = build_group(cleaned['group'])
            section = 'psi'
            unknown = set(cleaned['psi']) - set(shift.symbols)
            if unknown:
                raise forms.ValidationError(_(u"psi: unknown symbol %(s)s") % {
                    's': sorted(unknown)[0]})
            psi = dict((a, group.element(g)) for a, g in cleaned['psi'].items())
            extension = ExtensionSpec(shift, potential, group, psi)
            section = 'xi'
            xi = parse_word(self.raw.get('xi', '')) or shift.extend((), potential.depth)
            if len(xi) < potential.depth or not is_admissible(shift, xi):
                raise forms.ValidationError(_(u"xi: expected an admissible word of length %(m)d")
                                            % {'m': potential.depth})
        except ConformalError as exc:
            message = str(exc)
            if not message.startswith(section):
                message = u"%s: %s" % (section, message)
            raise forms.ValidationError(message)
        cleaned['extension'] = extension
        cleaned['xi'] = xi
        cleaned['numerics'] = numerics
        cleaned['name'] = self.raw.get('name', '')
        return cleaned

    def error_text(self):
        """One line per error, ``<field>: <message>``."""
        lines = []
        for name, errors in self.errors.items():
            for error in errors:
                lines.append(error if name == '__all__' else u"%s: %s" % (name, error))
        return '\n'.join(lines)


def bundled_configs():
    return sorted(name[:-5] for name in os.listdir(CONFIG_DIR) if name.endswith('.json'))


def load_config(name_or_path):
    """Reads a config file, or a bundled config by name."""
    path = name_or_path
    if not os.path.exists(path):
        candidate = os.path.join(CONFIG_DIR, '%s.json' % name_or_path)
        if os.path.exists(candidate):
            path = candidate
    with open(path) as handle:
        return json.load(handle)
