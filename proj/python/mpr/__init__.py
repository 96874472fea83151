"""Multi-positive dense passage retrieval."""

from ._mpr import *  # noqa: F401,F403
from ._mpr import __doc__  # noqa: F401

__version__ = "0.1.0"
