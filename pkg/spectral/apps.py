from django.apps import AppConfig


class SpectralConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'spectral'
    verbose_name = 'Periodic spectral fields'

    def ready(self):
        import logging
        logging.getLogger('spectral').debug('[APP] SpectralConfig.ready() called')
