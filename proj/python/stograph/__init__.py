"""Self-consistent transfer operators for heterogeneous coupled maps on graphons."""

from stograph._core import *  # noqa: F401,F403
from stograph._core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
