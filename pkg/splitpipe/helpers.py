# -*- coding: utf-8 -*-
import os
import subprocess


def ceil_div(numerator, denominator):
    return -(-numerator // denominator)


def micro_batch_factor(minibatch, micro_batch):
    """Number of micro-batches after the first: ceil((B - b) / b)."""
    return ceil_div(minibatch - micro_batch, micro_batch)


def factor_plateaus(minibatch):
    """
    Yields ``(first, last)`` ranges of micro-batch sizes sharing the same
    ``micro_batch_factor``, in increasing order of size.
    """
    first = 1
    while first <= minibatch:
        count = ceil_div(minibatch, first)
        if count == 1:
            last = minibatch
        else:
            last = ceil_div(minibatch, count - 1) - 1
        yield first, last
        first = last + 1


def parse_values(text):
    """
    Parses ``2..10`` integer ranges and comma separated lists.
    Items stay strings when they are not numeric (topology names).
    """
    values = []
    for item in text.split(','):
        item = item.strip()
        if not item:
            continue
        if '..' in item:
            start, _, stop = item.partition('..')
            values.extend(range(int(start), int(stop) + 1))
            continue
        for cast in (int, float):
            try:
                values.append(cast(item))
                break
            except ValueError:
                pass
        else:
            values.append(item)
    return values


def git_revision():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        output = subprocess.check_output(
            ['git', 'rev-parse', '--short', 'HEAD'],
            cwd=here,
            stderr=subprocess.DEVNULL,
        )
    except (OSError, subprocess.CalledProcessError):
        return 'unknown'
    return output.decode('ascii').strip() or 'unknown'
