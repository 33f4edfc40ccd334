# -*- coding: utf-8 -*-
"""
Quantity parsing for scenario files.

Every value is converted to canonical units on load: seconds, bits, FLOPs,
FLOP/s, watts, Hz, bit/s, W/Hz and meters. Bare numbers are taken as
already canonical.
"""
import math
import re

from django.core.exceptions import ValidationError


BITS = 'bits'
FLOPS = 'flops'
FLOP_RATE = 'flop_rate'
SECONDS = 'seconds'
HERTZ = 'hertz'
WATTS = 'watts'
BIT_RATE = 'bit_rate'
NOISE_DENSITY = 'noise_density'
METERS = 'meters'


def dbm_to_watts(dbm):
    return 10 ** ((dbm - 30) / 10.0)


def watts_to_dbm(watts):
    return 10 * math.log10(watts) + 30


UNITS = {
    BITS: {
        'bit': 1, 'bits': 1, 'kbit': 1e3, 'Mbit': 1e6, 'Gbit': 1e9,
        'B': 8, 'byte': 8, 'bytes': 8, 'kB': 8e3, 'KB': 8e3, 'MB': 8e6, 'GB': 8e9, 'TB': 8e12,
        'KiB': 8 * 2 ** 10, 'MiB': 8 * 2 ** 20, 'GiB': 8 * 2 ** 30,
    },
    FLOPS: {
        'FLOP': 1, 'FLOPs': 1, 'kFLOP': 1e3, 'MFLOP': 1e6, 'GFLOP': 1e9, 'TFLOP': 1e12,
    },
    FLOP_RATE: {
        'FLOPS': 1, 'FLOP/s': 1, 'GFLOPS': 1e9, 'GFLOP/s': 1e9, 'TFLOPS': 1e12, 'TFLOP/s': 1e12,
    },
    SECONDS: {'s': 1, 'ms': 1e-3, 'us': 1e-6},
    HERTZ: {'Hz': 1, 'kHz': 1e3, 'MHz': 1e6, 'GHz': 1e9},
    WATTS: {'W': 1, 'mW': 1e-3, 'dBm': dbm_to_watts},
    BIT_RATE: {'bit/s': 1, 'bps': 1, 'kbit/s': 1e3, 'Mbit/s': 1e6, 'Gbit/s': 1e9},
    NOISE_DENSITY: {'W/Hz': 1, 'dBm/Hz': dbm_to_watts},
    METERS: {'m': 1, 'km': 1e3},
}

QUANTITY_RE = re.compile(r'^\s*(?P<number>[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)\s*(?P<unit>\S+)?\s*$')


def parse_quantity(value, dimension, field='value'):
    """
    Returns ``value`` in the canonical unit of ``dimension``.

    >>> parse_quantity('20 MHz', HERTZ)
    20000000.0
    """
    if isinstance(value, bool):
        raise ValidationError(
            '%(field)s: expected a number, got a boolean.',
            code='invalid_quantity',
            params={'field': field},
        )
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValidationError(
            '%(field)s: expected a number or a quantity string.',
            code='invalid_quantity',
            params={'field': field},
        )

    match = QUANTITY_RE.match(value)
    if not match:
        raise ValidationError(
            '%(field)s: cannot parse quantity "%(value)s".',
            code='invalid_quantity',
            params={'field': field, 'value': value},
        )

    number = float(match.group('number'))
    unit = match.group('unit')
    if unit is None:
        return number

    try:
        factor = UNITS[dimension][unit]
    except KeyError:
        raise ValidationError(
            '%(field)s: unit "%(unit)s" is not a %(dimension)s unit.',
            code='invalid_unit',
            params={'field': field, 'unit': unit, 'dimension': dimension},
        )

    if callable(factor):
        return factor(number)
    return number * factor
