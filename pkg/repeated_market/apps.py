from django.apps import AppConfig


class RepeatedMarketConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'repeated_market'
    verbose_name = 'Repeated market with buying rights'
