"""Numba acceleration switch for the hot numeric kernels.

The VNELAB_NUMBA environment variable picks the backend at import time:

  auto (default)  use numba when importable, otherwise pure numpy
  0 / off         force the pure-numpy path
  1 / on          require numba; raise if it cannot be imported

Both backends run the same kernel source; the numpy path simply skips JIT
compilation, so results are reproducible within a backend.
"""

import os

_FLAG = os.environ.get("VNELAB_NUMBA", "auto").strip().lower()

if _FLAG in ("0", "off", "false", "no"):
    NUMBA_ACTIVE = False
elif _FLAG in ("1", "on", "true", "yes"):
    from numba import njit as _njit  # noqa: F401  (import error is the point)

    NUMBA_ACTIVE = True
elif _FLAG in ("auto", ""):
    try:
        from numba import njit as _njit  # noqa: F401

        NUMBA_ACTIVE = True
    except ImportError:
        NUMBA_ACTIVE = False
else:
    raise ValueError(
        f"VNELAB_NUMBA={_FLAG!r} not understood (expected auto, 0/off or 1/on)"
    )


def maybe_njit(func=None, **kwargs):
    """@njit when the numba backend is active, identity decorator otherwise."""
    if not NUMBA_ACTIVE:
        if func is not None:
            return func
        return lambda f: f
    kwargs.setdefault("cache", True)
    if func is not None:
        return _njit(**kwargs)(func)
    return _njit(**kwargs)
