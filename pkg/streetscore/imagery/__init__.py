# pylint: disable=undefined-variable
from .manifest import *
from .placeholder import *
from .streetview import *


__all__ = manifest.__all__ + placeholder.__all__ + streetview.__all__  # noqa
