# Test suite for django-gelfand
