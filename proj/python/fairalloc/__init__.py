"""Fair capital allocation under expected shortfall.

Thin wrapper over the compiled extension. The extension lives next to
this package in an installed tree; during development it can also sit
on sys.path directly (for example the CMake build directory).
"""

try:
    from fairalloc._fairalloc import *  # noqa: F401,F403
    from fairalloc._fairalloc import __doc__ as _ext_doc  # noqa: F401
except ImportError:
    from _fairalloc import *  # noqa: F401,F403

__version__ = "0.1.0"
