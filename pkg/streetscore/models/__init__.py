# pylint: disable=undefined-variable
from .geometry import *
from .imagery import *
from .scoring import *
from .aggregate import *
from .validation import *
from .mapping import *
from .run import *


__all__ = (
    geometry.__all__  # noqa
    + imagery.__all__  # noqa
    + scoring.__all__  # noqa
    + aggregate.__all__  # noqa
    + validation.__all__  # noqa
    + mapping.__all__  # noqa
    + run.__all__  # noqa
)
