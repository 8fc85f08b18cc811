from django.apps import AppConfig


class DesugaringConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'desugaring'
    verbose_name = 'Desugaring to distributional facts'
