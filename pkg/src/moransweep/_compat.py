"""Numba toggle: hot kernels compile with @njit unless disabled by env flag.

Setting ``MORANSWEEP_DISABLE_NUMBA=1`` replaces :func:`njit` with a
decorator that runs the identical source uncompiled, silencing the
uint64 wraparound warnings the RNG relies on.  Both paths execute the
same statements in the same order, so trajectories are bit-identical.
"""

from __future__ import annotations

import functools
import os

import numpy as np

NUMBA_DISABLED = os.environ.get("MORANSWEEP_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
}

if NUMBA_DISABLED:

    def njit(*args, **kwargs):  # noqa: D103 - mirrors numba.njit signature
        def decorate(fn):
            @functools.wraps(fn)
            def wrapper(*a, **k):
                with np.errstate(over="ignore"):
                    return fn(*a, **k)

            wrapper.py_func = fn
            return wrapper

        if args and callable(args[0]):
            return decorate(args[0])
        return decorate

else:
    from numba import njit  # noqa: F401
