from django.apps import AppConfig


class CliConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'cli'
    verbose_name = 'Command line'

    def ready(self):
        import logging
        logging.getLogger('cli').debug('[APP] CliConfig.ready() called')
