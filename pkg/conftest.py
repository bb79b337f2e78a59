"""Configures Django for pytest the same way ``runtests.py`` does."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'django_conformal.tests.settings')
django.setup()
