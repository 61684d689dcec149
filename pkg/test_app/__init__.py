"""
Test app for django-gelfand

This app only hosts the test suite; it has no models.
It should NOT be included in the package distribution.
"""
