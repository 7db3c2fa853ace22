"""Kernel backend selection.

The compiled extension is preferred; the pure-Python module is the
fallback.  Set HYPSPLIT_PURE_PYTHON=1 to force the fallback (used by the
cross-backend tests and the backend benchmark).
"""

from __future__ import annotations

import os

from . import pykernels

if os.environ.get("HYPSPLIT_PURE_PYTHON"):
    impl = pykernels
else:
    try:
        from . import _native as impl  # type: ignore[no-redef]
    except ImportError:
        impl = pykernels

BACKEND = impl.BACKEND_NAME

merge_add = impl.merge_add
merge_min = impl.merge_min
merge_min_split = impl.merge_min_split
sieve_pass = impl.sieve_pass
complete_window = impl.complete_window
combine_forms = impl.combine_forms
accumulate_exponents = impl.accumulate_exponents
count_negative = impl.count_negative


def available_backends():
    """Names of importable backends (for benchmarks and tests)."""
    names = ["python"]
    try:
        from . import _native  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return the backend module by name ('cython' or 'python')."""
    if name == "python":
        return pykernels
    if name == "cython":
        from . import _native

        return _native
    raise ValueError(f"unknown kernel backend: {name!r}")
