"""Bit-accurate SOT-MRAM digital processing-in-memory simulator and cost model."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
