from django.apps import AppConfig


class OracleConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'oracle'
    verbose_name = 'Continuous Caputo reference'

    def ready(self):
        import logging
        logging.getLogger('oracle').debug('[APP] OracleConfig.ready() called')
