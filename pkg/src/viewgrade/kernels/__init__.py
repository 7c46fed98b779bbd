"""Propagation kernel backends.

The compiled extension is preferred when importable; otherwise the pure
Python twin takes over. Both produce bit-identical results, so the choice
only affects speed. ``BACKEND`` names the active one.
"""

from __future__ import annotations

from types import ModuleType

from . import propagation_py

try:
    from . import _propagation_cy
except ImportError:
    _propagation_cy = None

if _propagation_cy is not None:
    BACKEND = "compiled"
    propagate_view = _propagation_cy.propagate_view
else:
    BACKEND = "python"
    propagate_view = propagation_py.propagate_view


def available_backends() -> dict[str, ModuleType]:
    """Importable kernel modules by name (used by the parity tests and benchmark)."""
    backends: dict[str, ModuleType] = {"python": propagation_py}
    if _propagation_cy is not None:
        backends["compiled"] = _propagation_cy
    return backends
