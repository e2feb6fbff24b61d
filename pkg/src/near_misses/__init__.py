"""Rational points near hypersurfaces: counting, duality, oscillatory integrals.

The top-level namespace re-exports the library modules; desk-scale
experiments live in :mod:`near_misses.experiments`.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .surfaces import *  # noqa: F401,F403
from .counting import *  # noqa: F401,F403
from .duality import *  # noqa: F401,F403
from .oscillatory import *  # noqa: F401,F403
from .kernels import *  # noqa: F401,F403
from .bootstrap import *  # noqa: F401,F403
from . import experiments  # noqa: F401
