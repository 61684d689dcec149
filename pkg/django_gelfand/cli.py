"""
Console entry point: `gelfand <command> ...` is `manage.py gelfand <command> ...`
without a project. A minimal settings module is configured when none is set.
"""
import os
import sys

import django

from django.conf import settings


def _configure():
    if settings.configured or os.environ.get('DJANGO_SETTINGS_MODULE'):
        return
    settings.configure(
        INSTALLED_APPS=['django_gelfand'],
        LOGGING={
            'version': 1,
            'disable_existing_loggers': False,
            'handlers': {'console': {'class': 'logging.StreamHandler'}},
            'loggers': {'django_gelfand': {'handlers': ['console'], 'level': os.environ.get('GELFAND_LOG_LEVEL', 'WARNING')}},
        },
    )


def main(argv=None):
    from django.core.management import execute_from_command_line

    argv = list(sys.argv if argv is None else argv)
    _configure()
    django.setup()
    execute_from_command_line([argv[0], 'gelfand'] + argv[1:])


if __name__ == '__main__':
    main()
