from django.apps import AppConfig


class CaputoConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'caputo'
    verbose_name = 'Discrete Caputo calculus'

    def ready(self):
        import logging
        logger = logging.getLogger('caputo')
        logger.debug('[APP] CaputoConfig.ready() called')
