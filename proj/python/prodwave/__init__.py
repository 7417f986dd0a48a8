"""Transverse impedance resolvents and boundary-damped wave decay on product domains."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__version__ = "0.1.0"
