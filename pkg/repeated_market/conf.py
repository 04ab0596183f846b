"""
Settings for the repeated market app, read from the REPEATED_MARKET dict.

    REPEATED_MARKET = {
        'TOLERANCE': 1e-9,
        'STORAGE_COST': 1.0,
    }

Access them as `market_settings.TOLERANCE`; missing keys fall back to DEFAULTS.
"""
from pathlib import Path

from django.conf import settings
from django.core.signals import setting_changed

DEFAULTS = {
    'TOLERANCE': 1e-9,
    'STORAGE_COST': 1.0,
    'AUDIT_TOLERANCE': 1e-9,
    'PRESETS_DIR': Path(__file__).resolve().parent / 'presets',
    'OUTPUT_DIR': Path('output'),
    'SWEEP_SEEDS': 10,
    'SWEEP_WORKERS': 1,
}

PATH_SETTINGS = ('PRESETS_DIR', 'OUTPUT_DIR')
FLOAT_SETTINGS = ('TOLERANCE', 'STORAGE_COST', 'AUDIT_TOLERANCE')
INT_SETTINGS = ('SWEEP_SEEDS', 'SWEEP_WORKERS')


class MarketSettings:
    def __init__(self, user_settings=None, defaults=None):
        if user_settings is not None:
            self._user_settings = user_settings
        self.defaults = defaults or DEFAULTS
        self._cached_attrs = set()

    @property
    def user_settings(self):
        if not hasattr(self, '_user_settings'):
            self._user_settings = getattr(settings, 'REPEATED_MARKET', {})
        return self._user_settings

    def __getattr__(self, attr):
        if attr not in self.defaults:
            raise AttributeError(f"Invalid repeated market setting: '{attr}'")
        value = self.user_settings.get(attr, self.defaults[attr])
        if attr in PATH_SETTINGS:
            value = Path(value)
        elif attr in FLOAT_SETTINGS:
            value = float(value)
        elif attr in INT_SETTINGS:
            value = int(value)
        self._cached_attrs.add(attr)
        setattr(self, attr, value)
        return value

    def reload(self):
        for attr in self._cached_attrs:
            delattr(self, attr)
        self._cached_attrs.clear()
        if hasattr(self, '_user_settings'):
            delattr(self, '_user_settings')


market_settings = MarketSettings(None, DEFAULTS)


def reload_market_settings(*args, **kwargs):
    if kwargs['setting'] == 'REPEATED_MARKET':
        market_settings.reload()


setting_changed.connect(reload_market_settings)
