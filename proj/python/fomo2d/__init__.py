"""2D free orthotropic material optimization: energy-bound hierarchy, SGP
solver and laminate baseline. Thin wrapper over the C++ core."""

from fomo2d._core import *  # noqa: F401,F403
from fomo2d._core import __version__  # noqa: F401
