"""
Stand-alone entry point: ``conformal <subcommand> ...`` and
``python -m django_conformal``. Configures a minimal Django project around the
app when no settings module is present, then runs the management command.
"""
import argparse
import os
import sys

import django
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError

LEVELS = {0: 'WARNING', 1: 'INFO', 2: 'DEBUG', 3: 'DEBUG'}


def logging_config(verbosity):
    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'console': {'format': '%(levelname)s %(name)s: %(message)s'},
        },
        'handlers': {
            'console': {'class': 'logging.StreamHandler', 'formatter': 'console'},
        },
        'loggers': {
            'django_conformal': {
                'handlers': ['console'],
                'level': LEVELS.get(verbosity, 'DEBUG'),
                'propagate': False,
            },
        },
    }


def configure(verbosity=1):
    if settings.configured or os.environ.get('DJANGO_SETTINGS_MODULE'):
        django.setup()
        return
    settings.configure(
        INSTALLED_APPS=['django_conformal'],
        TEMPLATES=[{
            'BACKEND': 'django.template.backends.django.DjangoTemplates',
            'APP_DIRS': True,
        }],
        LOGGING=logging_config(verbosity),
        USE_TZ=True,
    )
    django.setup()


def run(argv=None):
    """Runs one subcommand and returns its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('-v', '--verbosity', type=int, default=1)
    known, _ = pre.parse_known_args(argv)
    configure(known.verbosity)
    try:
        call_command('conformal', *argv)
    except CommandError as exc:
        sys.stderr.write("conformal: %s\n" % exc)
        return getattr(exc, 'returncode', 1)
    return 0


def main():
    sys.exit(run())
