# -*- coding: utf-8 -*-
from splitpipe.conf import setup

from .settings import HELPER_SETTINGS

setup(**HELPER_SETTINGS)
