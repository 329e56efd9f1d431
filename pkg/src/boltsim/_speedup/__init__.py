"""Kernel backend selection.

The compiled extension is preferred when present; the pure-Python module
is the fallback and the reference. Set BOLTSIM_BACKEND=pure or =native to
force one (native raises if the extension is missing).
"""

import os

_requested = os.environ.get("BOLTSIM_BACKEND", "").strip().lower()

if _requested == "pure":
    from boltsim._speedup import _pure as kernels
    BACKEND = "pure"
elif _requested == "native":
    from boltsim._speedup import _native as kernels  # type: ignore[no-redef]
    BACKEND = "native"
else:
    try:
        from boltsim._speedup import _native as kernels  # type: ignore[no-redef]
        BACKEND = "native"
    except ImportError:
        from boltsim._speedup import _pure as kernels
        BACKEND = "pure"


def backend_name():
    return BACKEND
