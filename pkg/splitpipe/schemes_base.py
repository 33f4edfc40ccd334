# -*- coding: utf-8 -*-
import abc
from collections import namedtuple


SchemeResult = namedtuple('SchemeResult', field_names=['scheme', 'solution', 'micro_batch', 'trace'])


class BaseScheme(metaclass=abc.ABCMeta):

    @abc.abstractproperty
    def verbose_name(self):
        pass  # pragma: no cover

    @abc.abstractmethod
    def solve(self, scenario, seed=None, **options):
        pass  # pragma: no cover
