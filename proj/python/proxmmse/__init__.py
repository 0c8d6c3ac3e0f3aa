"""Conditional-mean estimators, proximity-operator checks and penalty recovery."""

from ._proxmmse import *  # noqa: F401,F403
from ._proxmmse import __version__  # noqa: F401
