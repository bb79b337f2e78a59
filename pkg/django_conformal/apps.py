from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class ConformalConfig(AppConfig):
    name = 'django_conformal'
    verbose_name = _(u"Conformal measures")

    def ready(self):
        from django_conformal import signals
        from django_conformal.utils import log_partition_table
        signals.partition_table_computed.connect(
            log_partition_table, dispatch_uid='django_conformal.log_partition_table')
