from django.apps import AppConfig


class TestAppConfig(AppConfig):
    name = 'test_app'
    label = 'test_app'
    verbose_name = 'Gelfand test suite'
