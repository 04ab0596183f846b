import os
from pathlib import Path
from dotenv import load_dotenv

base_dir = Path(__file__).resolve().parent.parent
load_dotenv(base_dir / '.env')

SECRET_KEY = os.getenv('SECRET_KEY', 'replace-me')
DEBUG = os.getenv('DEBUG', 'True') == 'True'
ALLOWED_HOSTS = os.getenv('ALLOWED_HOSTS', '127.0.0.1,localhost').split(',')

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'repeated_market',
]

# Nothing is persisted; the sqlite file only satisfies the test runner
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': base_dir / 'db.sqlite3',
    }
}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Repeated market defaults, see repeated_market/conf.py
REPEATED_MARKET = {
    'TOLERANCE': float(os.getenv('MARKET_TOLERANCE', '1e-9')),
    'STORAGE_COST': float(os.getenv('MARKET_STORAGE_COST', '1.0')),
    'AUDIT_TOLERANCE': float(os.getenv('MARKET_AUDIT_TOLERANCE', '1e-9')),
    'PRESETS_DIR': Path(os.getenv('MARKET_PRESETS_DIR', base_dir / 'repeated_market' / 'presets')),
    'OUTPUT_DIR': Path(os.getenv('MARKET_OUTPUT_DIR', base_dir / 'output')),
    'SWEEP_SEEDS': int(os.getenv('MARKET_SWEEP_SEEDS', '10')),
    'SWEEP_WORKERS': int(os.getenv('MARKET_SWEEP_WORKERS', '1')),
}

# Logging configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
            'level': os.getenv('MARKET_CONSOLE_LOG_LEVEL', 'WARNING'),
        },
        'file': {
            'class': 'logging.FileHandler',
            'filename': base_dir / 'simulation.log',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console', 'file'],
        'level': 'INFO',
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': os.getenv('DJANGO_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
        'repeated_market': {
            'handlers': ['console', 'file'],
            'level': os.getenv('MARKET_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
