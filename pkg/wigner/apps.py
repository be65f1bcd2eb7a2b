from django.apps import AppConfig


class WignerConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "wigner"
