"""Backend switch for the hot kernels.

Numba is used when it imports and ``JSRKIT_DISABLE_JIT`` is unset (or "0").
Setting ``JSRKIT_DISABLE_JIT=1`` forces the pure-numpy code path, which is
also the automatic fallback when numba is missing.
"""

import os

_FLAG = os.environ.get("JSRKIT_DISABLE_JIT", "0").strip().lower()
JIT_REQUESTED = _FLAG in ("", "0", "false", "no")

try:
    import numba  # noqa: F401
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and JIT_REQUESTED


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
