from django.apps import AppConfig


class SemiringConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'semiring'
    verbose_name = 'Infinitesimal semiring'
