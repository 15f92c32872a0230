"""Backend selection for the sweep kernel.

The compiled kernel is used when it imports; ``SUBEQ_KERNEL=python`` forces
the pure-Python fallback.
"""

import os

from . import _pykernel

_forced = os.environ.get("SUBEQ_KERNEL", "").lower()

if _forced == "python":
    _impl = _pykernel
    BACKEND = "python"
else:
    try:
        from . import _ckernel as _impl
        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = _pykernel
        BACKEND = "python"

sweep = _impl.sweep
residuals = _impl.residuals
margin_code = _impl.margin_code
jacobi_eigvalsh = _impl.jacobi_eigvalsh


def get(name):
    """Return the kernel module by name (``"compiled"`` or ``"python"``)."""
    if name == "python":
        return _pykernel
    from . import _ckernel
    return _ckernel
