from .base import *

DEBUG = False

# Logging Configuration
LOG_FILE = config('DCPLP_LOG_FILE', default='')

if LOG_FILE:
    LOGGING['handlers']['file'] = {
        'level': 'INFO',
        'class': 'logging.FileHandler',
        'filename': LOG_FILE,
        'formatter': 'verbose',
    }
    for _logger in LOGGING['loggers'].values():
        _logger['handlers'] = ['file', 'console']
