VERSION = (0, 1, 0, 'pre')
__version__ = '.'.join(map(str, VERSION))

default_app_config = 'django_conformal.apps.ConformalConfig'
