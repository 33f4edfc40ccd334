# -*- coding: utf-8 -*-
import django
from django.conf import settings


DEFAULTS = {
    'DEFAULT_BOUND': 'fast',
    'STRICT_TI': False,
    'ALLOW_NODE_REUSE': False,
    'ORACLE_LIMIT': 10 ** 7,
    'SIMPLEX_MAX_PIVOTS': 10 ** 6,
    'SIMPLEX_TOLERANCE': 1e-9,
    'BCD_TOLERANCE': 0.01,
    'BCD_MAX_ITERATIONS': 50,
    'INITIAL_MICRO_BATCH': 20,
    'BASELINE_RETRIES': 1000,
}


def setup(**overrides):
    """
    Configures Django settings for library and command line use.

    Embedding projects that already configured settings keep theirs;
    ``overrides`` only apply on first configuration.
    """
    if not settings.configured:
        settings.configure(**overrides)
        django.setup()


def get_setting(name):
    setup()
    return getattr(settings, 'SPLITPIPE_{}'.format(name), DEFAULTS[name])


def logging_config(verbosity=1):
    level = {0: 'WARNING', 1: 'INFO', 2: 'DEBUG', 3: 'DEBUG'}.get(verbosity, 'DEBUG')
    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'plain': {'format': '%(asctime)s %(levelname)s %(name)s: %(message)s'},
        },
        'handlers': {
            'console': {
                'class': 'logging.StreamHandler',
                'formatter': 'plain',
                'stream': 'ext://sys.stderr',
            },
        },
        'loggers': {
            'splitpipe': {
                'handlers': ['console'],
                'level': level,
                'propagate': False,
            },
        },
    }
