from django.apps import AppConfig


class CompactnessConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'compactness'
    verbose_name = 'Shift estimates for interpolants'

    def ready(self):
        import logging
        logging.getLogger('compactness').debug('[APP] CompactnessConfig.ready() called')
