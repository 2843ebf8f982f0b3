"""Slotted-queue simulation kernels.

The compiled Cython extension is used when available; otherwise the pure
numpy/Python reference implementation is selected at import time.  Both
backends produce identical histograms for identical arrival streams.
"""

from . import _reference

try:
    from . import _speedups as _impl
    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on the build environment
    _impl = _reference
    BACKEND = "python"

single_class_slot_sim = _impl.single_class_slot_sim
two_class_slot_sim = _impl.two_class_slot_sim

__all__ = ["single_class_slot_sim", "two_class_slot_sim", "BACKEND",
           "_reference"]
