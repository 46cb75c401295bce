from django.apps import AppConfig


class MpocConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'mpoc'
    verbose_name = 'MPOC Toolkit'
