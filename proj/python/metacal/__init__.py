"""Tetrachoric confidence decomposition for binary judgement matrices.

The heavy lifting lives in the compiled ``metacal._core`` extension; this
package re-exports its public surface. Matrices are items x models arrays
with NaN marking missing cells.
"""

import os as _os
import sys as _sys

# Allow running the smoke tests against an in-tree CMake build without
# installing the wheel (METACAL_CORE_DIR points at the built module).
_core_dir = _os.environ.get("METACAL_CORE_DIR")
if _core_dir and _core_dir not in _sys.path:
    _sys.path.insert(0, _core_dir)

try:
    from ._core import *  # noqa: F401,F403
    from . import _core as _impl
except ImportError:  # in-tree build fallback
    import _core as _impl  # type: ignore

    _names = [n for n in dir(_impl) if not n.startswith("_")]
    globals().update({n: getattr(_impl, n) for n in _names})

__version__ = "0.1.0"
__all__ = [n for n in dir(_impl) if not n.startswith("_")]
