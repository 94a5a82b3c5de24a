# pylint: disable=undefined-variable
from .taskspec import *

__all__ = taskspec.__all__  # noqa
