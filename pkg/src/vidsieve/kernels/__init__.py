"""Per-pixel compute kernels with a compiled core and a pure fallback.

The compiled extension is preferred when importable; set
``VIDSIEVE_PURE_PYTHON=1`` to force the numpy/scipy backend. Both expose the
same functions with identical results.
"""

from __future__ import annotations

import os

from . import pure

if os.environ.get("VIDSIEVE_PURE_PYTHON"):
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

subtract_and_update = _impl.subtract_and_update
update_persistence = _impl.update_persistence
label_components = _impl.label_components
horn_schunck_iterate = _impl.horn_schunck_iterate


def available_backends() -> dict[str, object]:
    """Importable backend modules keyed by name (for tests and benchmarks)."""
    backends: dict[str, object] = {"pure": pure}
    try:
        from . import _native

        backends["native"] = _native
    except ImportError:
        pass
    return backends
