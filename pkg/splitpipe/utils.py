# -*- coding: utf-8 -*-
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from django.utils.module_loading import import_string

from .conf import setup
from .relaxation import BaseBoundProvider
from .schemes_base import BaseScheme


DEFAULT_SPLITPIPE_SCHEME_BACKENDS = {
    'default': 'splitpipe.schemes.BcdScheme',
    'bcd': 'splitpipe.schemes.BcdScheme',
    'rc_op': 'splitpipe.schemes.RandomCutScheme',
    'rp_oc': 'splitpipe.schemes.RandomPlacementScheme',
    'no_pipeline': 'splitpipe.schemes.NoPipelineScheme',
}

DEFAULT_SPLITPIPE_BOUND_PROVIDERS = {
    'fast': 'splitpipe.relaxation.CombinatorialBoundProvider',
    'rlt': 'splitpipe.relaxation.RltBoundProvider',
}


def _load_registry(name, default, base, required=None):
    base_error_msg = 'Invalid settings.{}.'.format(name)
    setup()

    try:
        backends = getattr(settings, name)
    except AttributeError:
        backends = default

    try:
        backends = {k: import_string(v) for k, v in backends.items()}
    except ImportError as e:
        raise ImproperlyConfigured('{} {}'.format(base_error_msg, e))

    if not all(isinstance(klass, type) and issubclass(klass, base) for klass in backends.values()):
        raise ImproperlyConfigured(
            '{} All classes must derive from {}.{}'.format(base_error_msg, base.__module__, base.__name__)
        )

    if required and required not in backends.keys():
        raise ImproperlyConfigured('{} Key "{}" is missing.'.format(base_error_msg, required))

    try:
        [x() for x in backends.values()]  # check abstract base classes sanity
    except TypeError as e:
        raise ImproperlyConfigured('{} {}'.format(base_error_msg, e))
    return backends


def get_scheme_backends():
    return _load_registry(
        'SPLITPIPE_SCHEME_BACKENDS', DEFAULT_SPLITPIPE_SCHEME_BACKENDS, BaseScheme, required='default',
    )


def get_bound_providers():
    return _load_registry(
        'SPLITPIPE_BOUND_PROVIDERS', DEFAULT_SPLITPIPE_BOUND_PROVIDERS, BaseBoundProvider,
    )


def scheme_choices(*args, **kwargs):
    choices = tuple((key, klass.verbose_name) for key, klass in get_scheme_backends().items())
    return sorted(choices, key=lambda x: x[1])


def bound_choices(*args, **kwargs):
    choices = tuple((key, klass.verbose_name) for key, klass in get_bound_providers().items())
    return sorted(choices, key=lambda x: x[1])


def get_scheme(key):
    backends = get_scheme_backends()
    try:
        return backends[key]()
    except KeyError:
        raise ImproperlyConfigured('Unknown scheme "{}". Choices: {}.'.format(key, ', '.join(sorted(backends))))


def get_bound_provider(key):
    providers = get_bound_providers()
    try:
        return providers[key]()
    except KeyError:
        raise ImproperlyConfigured('Unknown bound "{}". Choices: {}.'.format(key, ', '.join(sorted(providers))))
