from django.apps import AppConfig


class ValidationConfig(AppConfig):
    name = "core.validation"
    verbose_name = "Data validation"
