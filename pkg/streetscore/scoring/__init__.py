# pylint: disable=undefined-variable
from .answers import *
from .tasks import *
from .backends import *
from .runner import *


__all__ = answers.__all__ + tasks.__all__ + backends.__all__ + runner.__all__  # noqa
