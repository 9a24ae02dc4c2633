"""Phase-average kernels with a compiled fast path.

The Cython extension is used when it imported cleanly; otherwise the
pure-numpy backend takes over. TRAPSYNC_KERNELS=numpy|compiled forces a
backend (the benchmark uses this), and use_backend() switches at runtime.
"""

from __future__ import annotations

import os

import numpy as np

from . import numpy_backend

try:
    from . import _phase as _compiled
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None

_FORCED = os.environ.get("TRAPSYNC_KERNELS", "").strip().lower()
if _FORCED == "numpy":
    _active = numpy_backend
elif _FORCED == "compiled":
    if _compiled is None:
        raise ImportError("TRAPSYNC_KERNELS=compiled but the extension is not built")
    _active = _compiled
else:
    _active = _compiled if _compiled is not None else numpy_backend

BACKEND = "compiled" if _active is not numpy_backend else "numpy"


def available_backends() -> tuple[str, ...]:
    return ("numpy", "compiled") if _compiled is not None else ("numpy",)


def use_backend(name: str) -> None:
    """Switch the active backend ('numpy' or 'compiled') for this process."""
    global _active, BACKEND
    if name == "numpy":
        _active = numpy_backend
    elif name == "compiled":
        if _compiled is None:
            raise ValueError("compiled kernels are not available in this install")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _i64(x):
    return np.ascontiguousarray(x, dtype=np.int64)


def ramsey_phase_average(rates, times):
    return _active.ramsey_phase_average(_f64(rates), _f64(times))


def ramsey_heated_phase_average(rates, sens, edot, jump_times, jump_sizes, offsets, times):
    return _active.ramsey_heated_phase_average(
        _f64(rates), _f64(sens), float(edot), _f64(jump_times), _f64(jump_sizes),
        _i64(offsets), _f64(times),
    )


def echo_phase_average(sens, edot, jump_times, jump_sizes, offsets, times):
    return _active.echo_phase_average(
        _f64(sens), float(edot), _f64(jump_times), _f64(jump_sizes), _i64(offsets), _f64(times)
    )
