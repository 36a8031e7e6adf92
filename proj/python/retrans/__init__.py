"""Retranslation strategies for online translation."""

from ._retrans import *  # noqa: F401,F403
from ._retrans import __doc__  # noqa: F401

__version__ = "0.1.0"
