# pylint: disable=undefined-variable
from .exceptions import *


__all__ = exceptions.__all__  # noqa
