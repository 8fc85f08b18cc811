from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# Management commands never sign anything, but Django refuses to start without a key.
SECRET_KEY = config('SECRET_KEY', default='dcproblog-insecure-local-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

# Application definition
LOCAL_APPS = [
    'core',
    'language',
    'grounding',
    'desugaring',
    'formulas',
    'circuits',
    'semiring',
    'sampling',
    'inference',
]

INSTALLED_APPS = LOCAL_APPS

# The engine keeps no state between runs
DATABASES = {}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_I18N = False
USE_TZ = True
TIME_ZONE = 'UTC'

# Reference programs shipped with the repository
PROGRAMS_DIR = BASE_DIR / 'programs'

# Engine configuration
DCPLP = {
    'SAMPLES': config('DCPLP_SAMPLES', default=10000, cast=int),
    'SEED': config('DCPLP_SEED', default=42, cast=int),
    'BLOCK_SIZE': config('DCPLP_BLOCK_SIZE', default=1024, cast=int),
    # 0 means one worker per available core
    'JOBS': config('DCPLP_JOBS', default=0, cast=int),
    'NODE_CAP': config('DCPLP_NODE_CAP', default=10_000_000, cast=int),
    'VARIABLE_CAP': config('DCPLP_VARIABLE_CAP', default=10_000, cast=int),
    'EXPANSION_CAP': config('DCPLP_EXPANSION_CAP', default=1_000_000, cast=int),
    'MEMO_CAP': config('DCPLP_MEMO_CAP', default=1_000_000, cast=int),
    'ENUMERATION_CAP': config('DCPLP_ENUMERATION_CAP', default=2 ** 20, cast=int),
    'VALIDATION_SAMPLES': config('DCPLP_VALIDATION_SAMPLES', default=10000, cast=int),
}

# Logging Configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': config('DCPLP_LOG_LEVEL', default='WARNING'),
            'propagate': False,
        }
        for app in LOCAL_APPS
    },
}
