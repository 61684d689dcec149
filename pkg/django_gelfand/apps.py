import logging

from django.apps import AppConfig

logger = logging.getLogger(__name__)


class DjangoGelfandConfig(AppConfig):
    name = 'django_gelfand'
    label = 'django_gelfand'
    verbose_name = 'Django Gelfand'

    def ready(self):
        # Registers the built-in examples.
        from django_gelfand.catalogs import EXAMPLES
        from django_gelfand.conf import gelfand_settings

        logger.debug(
            f"{len(EXAMPLES)} built-in examples registered; graph dir: {gelfand_settings.GELFAND_GRAPH_DIR}"
        )
        return super().ready()
