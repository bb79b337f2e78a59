#!/usr/bin/env python
"""Runs the app's test suite against ``django_conformal.tests.settings``."""
import os
import sys

import django
from django.conf import settings
from django.test.utils import get_runner


def main(labels):
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'django_conformal.tests.settings')
    django.setup()
    runner = get_runner(settings)()
    failures = runner.run_tests(labels or ['django_conformal.tests'])
    sys.exit(bool(failures))


if __name__ == '__main__':
    main(sys.argv[1:])
