from django.apps import AppConfig


class SolverAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'solver'
    verbose_name = 'Fractional porous-medium solver'

    def ready(self):
        import logging
        logging.getLogger('solver').debug('[APP] SolverAppConfig.ready() called')
