"""Pick the compiled tree kernel when importable, else the numpy one.

Set ``HRVSEPSIS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _tree_py

if os.environ.get("HRVSEPSIS_PURE_PYTHON"):
    _impl = _tree_py
else:
    try:
        from . import _tree_core as _impl
    except ImportError:
        _impl = _tree_py

BACKEND = "cython" if _impl is not _tree_py else "python"

build_tree = _impl.build_tree
apply_tree = _impl.apply_tree
presort = _impl.presort
