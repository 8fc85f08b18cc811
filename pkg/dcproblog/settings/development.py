from .base import *

DEBUG = True

# Tests and local runs stay in-process unless asked otherwise
DCPLP['JOBS'] = config('DCPLP_JOBS', default=1, cast=int)

for _logger in LOGGING['loggers'].values():
    _logger['level'] = config('DCPLP_LOG_LEVEL', default='INFO')
