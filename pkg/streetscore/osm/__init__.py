# pylint: disable=undefined-variable
from .parser import *
from .overpass import *
from .network import *


__all__ = parser.__all__ + overpass.__all__ + network.__all__  # noqa
